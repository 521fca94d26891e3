"""Does the IR parse, print, type-check and execute the way its text reads?"""

from __future__ import annotations

import pytest
from conftest import program
from hypothesis import given, settings
from hypothesis import strategies as st

from asmlift.ir.cfg import IrreducibleCFG, build_cfg, is_reducible, natural_loops, require_reducible
from asmlift.ir.dataflow import liveness, upward_exposed
from asmlift.ir.expr import BinOp, Binop, Const, Ite, Unop, UnOp, Var, mask
from asmlift.ir.interpreter import ByteMemory, MachineState, OutOfFuel, interpret, run
from asmlift.ir.semantics import DivisionByZero, UnboundVariable, evaluate
from asmlift.ir.syntax import (
    IRLabelError,
    IRSyntaxError,
    IRTypeError,
    parse_expr,
    parse_program,
    print_expr,
    print_program,
)
from asmlift.ir.wellformed import check_wellformed

SUM_LOOP = """
bb0:
  i<32> := 0<32>
  s<32> := 0<32>
  goto bb1
bb1:
  if i = n<32> then goto bb3 else goto bb2
bb2:
  i := i + 1<32>
  s := s + i
  goto bb1
bb3:
  halt
"""

MEMSET = """
bb0:
  if ecx<32> = 0<32> then goto bb2 else goto bb1
bb1:
  @[edi<32>]4 := eax<32>
  edi := edi + 4<32>
  ecx := ecx - 1<32>
  goto bb0
bb2:
  halt
"""


# ── Parsing and printing ─────────────────────────────────────────────


def test_print_then_parse_gives_the_same_program():
    p = program(SUM_LOOP)
    assert parse_program(print_program(p)) == p


def test_widths_are_printed_on_first_occurrence_only():
    text = print_program(program(SUM_LOOP))
    assert text.count("i<32>") == 1
    assert "n<32>" in text


def test_entry_directive_selects_a_later_block():
    p = parse_program(".entry start\nend:\n  halt\nstart:\n  goto end\n")
    assert p.entry == "start"
    assert print_program(p).startswith(".entry start")


def test_statements_may_share_a_line():
    p = parse_program("bb0: x<8> := 1<8>; y<8> := x + x; halt")
    assert len(p.block("bb0").body) == 2


def test_operator_precedence():
    e = parse_expr("a<8> + b<8> * c<8> = d<8>")
    assert isinstance(e, Binop) and e.op is BinOp.EQ
    assert e.lhs == Binop(BinOp.ADD, Var("a", 8), Binop(BinOp.MUL, Var("b", 8), Var("c", 8)))


def test_ternary_and_unary_forms():
    e = parse_expr("c<1> ? extract:0:7 x<32> : uext:8 y<4>")
    assert e == Ite(Var("c", 1), Unop(UnOp.EXTRACT, Var("x", 32), (0, 7)), Unop(UnOp.UEXT, Var("y", 4), (8,)))
    assert e.width == 8


def test_constants_need_a_width():
    with pytest.raises(IRSyntaxError):
        parse_expr("x<8> + 1")


def test_syntax_error_reports_line_and_column():
    with pytest.raises(IRSyntaxError) as info:
        parse_program("bb0:\n  x<8> := := 1<8>\n  halt\n")
    assert info.value.line == 2


def test_missing_terminator_is_a_syntax_error():
    with pytest.raises(IRSyntaxError):
        parse_program("bb0:\n  x<8> := 1<8>\n")


def test_width_mismatch_is_a_type_error():
    with pytest.raises(IRTypeError):
        parse_program("bb0:\n  x<8> := y<16>\n  halt\n")


def test_conflicting_widths_of_one_variable():
    with pytest.raises(IRTypeError):
        parse_program("bb0:\n  x<8> := 1<8>\n  y<16> := x<16>\n  halt\n")


def test_unknown_label_is_a_label_error():
    with pytest.raises(IRLabelError):
        parse_program("bb0:\n  goto nowhere\n")


def test_branch_condition_must_be_one_bit():
    with pytest.raises(IRTypeError):
        parse_program("bb0:\n  if x<8> then goto bb0 else goto bb1\nbb1:\n  halt\n")


def test_wellformed_program_has_no_diagnostics():
    assert check_wellformed(program(MEMSET)) == []


_VARS = st.sampled_from([Var("x", 8), Var("y", 8), Var("z", 8)])
_CONSTS = st.integers(min_value=0, max_value=255).map(lambda v: Const(v, 8))
_BINOPS = st.sampled_from([BinOp.ADD, BinOp.SUB, BinOp.MUL, BinOp.AND, BinOp.OR, BinOp.XOR, BinOp.SHL, BinOp.SAR])
_COMPARE = st.sampled_from([BinOp.EQ, BinOp.NEQ, BinOp.ULT, BinOp.SGE])


def _extend(children):
    return st.one_of(
        st.builds(Binop, _BINOPS, children, children),
        st.builds(lambda a: Unop(UnOp.NOT, a), children),
        st.builds(lambda a: Unop(UnOp.NEG, a), children),
        st.builds(lambda a: Unop(UnOp.EXTRACT, Unop(UnOp.SEXT, a, (16,)), (4, 11)), children),
        st.builds(lambda op, a, b, t, f: Ite(Binop(op, a, b), t, f), _COMPARE, children, children, children, children),
    )


_EXPRS = st.recursive(st.one_of(_VARS, _CONSTS), _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(_EXPRS)
def test_printed_expressions_parse_back(e):
    assert parse_expr(print_expr(e)) == e


# ── Interpretation ───────────────────────────────────────────────────


def test_loop_runs_to_halt():
    end = interpret(program(SUM_LOOP), MachineState({"n": 4}))
    assert end.vars["s"] == 1 + 2 + 3 + 4
    assert end.vars["i"] == 4


def test_fuel_bounds_execution():
    end = interpret(program(SUM_LOOP), MachineState({"n": 1000}), fuel=50)
    assert isinstance(end, OutOfFuel)
    assert end.steps <= 50


def test_stores_are_little_endian_and_tracked():
    end, written = run(program(MEMSET), MachineState({"ecx": 2, "edi": 0x100, "eax": 0x11223344}))
    assert end.vars["ecx"] == 0
    assert end.vars["edi"] == 0x108
    assert written == set(range(0x100, 0x108))
    assert end.mem[0x100] == 0x44
    assert end.load(0x104, 4) == 0x11223344


def test_reading_an_unbound_variable_faults():
    with pytest.raises(UnboundVariable):
        interpret(program(SUM_LOOP), MachineState({}))


def test_division_by_zero_faults():
    p = parse_program("bb0:\n  q<8> := a<8> udiv b<8>\n  halt\n")
    with pytest.raises(DivisionByZero):
        interpret(p, MachineState({"a": 7, "b": 0}))


def test_seeded_memory_is_deterministic_and_unseeded_reads_zero():
    a, b = ByteMemory(seed=3), ByteMemory(seed=3)
    assert [a.byte(i) for i in range(64)] == [b.byte(i) for i in range(64)]
    assert ByteMemory().load(0x1234, 4) == 0


@pytest.mark.parametrize(
    ("text", "values", "expected"),
    [
        ("x<8> sdiv y<8>", {"x": 0xF9, "y": 2}, 0xFD),  # -7 / 2 = -3
        ("x<8> srem y<8>", {"x": 0xF9, "y": 2}, 0xFF),  # -7 % 2 = -1
        ("x<8> sar 9<8>", {"x": 0x80}, 0xFF),
        ("x<8> shl 8<8>", {"x": 0xFF}, 0),
        ("sext:16 x<8>", {"x": 0x80}, 0xFF80),
        ("x<8> :: y<8>", {"x": 0x12, "y": 0x34}, 0x1234),
        ("x<8> <s y<8>", {"x": 0xFF, "y": 0}, 1),
        ("x<8> <u y<8>", {"x": 0xFF, "y": 0}, 0),
    ],
)
def test_operator_semantics(text, values, expected):
    assert evaluate(parse_expr(text), values) == expected


def _signed(v: int, w: int) -> int:
    return v - (1 << w) if v >= 1 << (w - 1) else v


def _truncated(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return q if (a < 0) == (b < 0) else -q


REFERENCE = {
    BinOp.ADD: lambda a, b, w: a + b,
    BinOp.SUB: lambda a, b, w: a - b,
    BinOp.MUL: lambda a, b, w: a * b,
    BinOp.UDIV: lambda a, b, w: a // b,
    BinOp.UREM: lambda a, b, w: a % b,
    BinOp.SDIV: lambda a, b, w: _truncated(_signed(a, w), _signed(b, w)),
    BinOp.SREM: lambda a, b, w: _signed(a, w) - _signed(b, w) * _truncated(_signed(a, w), _signed(b, w)),
    BinOp.AND: lambda a, b, w: a & b,
    BinOp.OR: lambda a, b, w: a | b,
    BinOp.XOR: lambda a, b, w: a ^ b,
    BinOp.SHL: lambda a, b, w: a * 2**b,
    BinOp.SHR: lambda a, b, w: a // 2**b,
    BinOp.SAR: lambda a, b, w: _signed(a, w) // 2**b,
    BinOp.EQ: lambda a, b, w: a == b,
    BinOp.NEQ: lambda a, b, w: a != b,
    BinOp.UGT: lambda a, b, w: a > b,
    BinOp.ULT: lambda a, b, w: a < b,
    BinOp.UGE: lambda a, b, w: a >= b,
    BinOp.ULE: lambda a, b, w: a <= b,
    BinOp.SGT: lambda a, b, w: _signed(a, w) > _signed(b, w),
    BinOp.SLT: lambda a, b, w: _signed(a, w) < _signed(b, w),
    BinOp.SGE: lambda a, b, w: _signed(a, w) >= _signed(b, w),
    BinOp.SLE: lambda a, b, w: _signed(a, w) <= _signed(b, w),
    BinOp.CONCAT: lambda a, b, w: a * 2**w + b,
}


@pytest.mark.parametrize("op", list(BinOp))
@pytest.mark.parametrize("w", range(1, 7))
def test_every_operator_agrees_with_integer_arithmetic_modulo_its_width(op, w):
    """Does each operator equal the integer result reduced to its width, on every pair of operands?"""
    e = Binop(op, Var("a", w), Var("b", w))
    out = mask(e.width)
    for a in range(1 << w):
        for b in range(1 << w):
            if op in (BinOp.UDIV, BinOp.UREM, BinOp.SDIV, BinOp.SREM) and b == 0:
                with pytest.raises(DivisionByZero):
                    evaluate(e, {"a": a, "b": b})
                continue
            got = evaluate(e, {"a": a, "b": b})
            assert 0 <= got <= out
            assert got == int(REFERENCE[op](a, b, w)) % (out + 1), f"{a} {op} {b} at width {w}"


def test_constants_wrap_to_their_width():
    assert Const(0x1FF, 8).value == 0xFF
    assert mask(4) == 0xF


# ── Control flow and dataflow ────────────────────────────────────────


def test_loops_and_liveness():
    p = program(SUM_LOOP)
    g = build_cfg(p)
    assert is_reducible(g, p.entry)
    loops = natural_loops(g, p.entry)
    assert [(lp.header, sorted(lp.body)) for lp in loops] == [("bb1", ["bb1", "bb2"])]
    live = liveness(p, {"s"})
    assert live["bb1"] == {"i", "n", "s"}
    assert upward_exposed(p) == {"n"}


def test_irreducible_control_flow_is_detected():
    p = parse_program(
        "bb0:\n  if c<1> then goto a else goto b\n"
        "a:\n  goto b\n"
        "b:\n  if c then goto a else goto end\n"
        "end:\n  halt\n"
    )
    with pytest.raises(IrreducibleCFG):
        require_reducible(p)
