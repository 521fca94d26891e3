"""Do the lifting passes recover the high-level forms and keep the chunk's behaviour?"""

from __future__ import annotations

import random

import pytest
from conftest import decoded, program

from asmlift.emit import emit_c
from asmlift.frontend.ctype import BOOL, Int, Ptr
from asmlift.ir.dataflow import upward_exposed
from asmlift.ir.expr import BinOp, Binop, Unop, UnOp, Var, substitute, var_names, walk
from asmlift.ir.interpreter import MachineState, OutOfFuel, interpret
from asmlift.ir.program import Assign, Branch, instr_exprs
from asmlift.ir.syntax import parse_expr
from asmlift.ledger import LoopDirection
from asmlift.models import Level
from asmlift.passes import LEVEL_PASSES, Pass, propagate_types, run_pipeline
from asmlift.passes.loops import normalize_program
from asmlift.passes.unpack import slices, unpack_program
from asmlift.validation import NarrowingChecker, SamplingChecker

# ── Types ────────────────────────────────────────────────────────────


def test_interface_types_are_fixed_and_one_bit_variables_are_bool():
    t = propagate_types(decoded("fd_zero"))
    assert t.var_types["__op4"] == Ptr(Int(False, 32), 4)
    assert t.var_types["df"] == BOOL
    assert t.type_of("__op3") == Int(False, 32)


# ── Predicates ───────────────────────────────────────────────────────


def _branches(p):
    return [b.terminator for b in p.blocks if isinstance(b.terminator, Branch)]


def test_unsigned_compare_and_jump_becomes_less_than():
    t, _ = run_pipeline(decoded("umin"), Level.O1)
    assert _branches(t.program)[0].cond == Binop(BinOp.ULT, Var("eax", 32), Var("ebx", 32))
    assert not t.program.assigned() & {"cf", "zf", "sf", "of"}


def test_decrement_and_jump_if_greater_becomes_a_signed_comparison():
    d = decoded("countdown")
    t, _ = run_pipeline(d, Level.O1)
    (branch,) = _branches(t.program)
    assert isinstance(branch.cond, Binop)
    assert branch.cond.op is BinOp.SGT
    names = sorted(upward_exposed(d.program) | upward_exposed(t.program))
    for count in range(-3, 301):
        start = MachineState({**dict.fromkeys(names, 0), "__op3": count & 0xFFFFFFFF, "__op4": 7})
        before, after = interpret(d.program, start), interpret(t.program, start)
        assert {o: after.vars[o] for o in d.observables} == {o: before.vars[o] for o in d.observables}, count
        assert before.vars[d.outputs[0].var] == 7 * max(count, 1)


def test_predicate_checks_enumerate_narrowed_values():
    rare = parse_expr("x<32> = 77<32>"), parse_expr("0<1>")
    assert SamplingChecker().equivalent(*rare) is True
    assert NarrowingChecker().equivalent(*rare) is False
    assert NarrowingChecker().equivalent(parse_expr("x<32> - y<32> = 0<32>"), parse_expr("x<32> = y<32>"))


def test_basic_level_keeps_the_flags():
    t, _ = run_pipeline(decoded("umin"), Level.BASIC)
    assert "cf" in t.program.assigned()


# ── Unpacking ────────────────────────────────────────────────────────


def test_slices_of_a_word():
    assert slices(16) == [(0, 7), (8, 15)]
    assert slices(8) == []
    assert slices(24) == []


def test_read_slices_become_fresh_variables():
    p = program("bb0:\n  x<32> := a<32>\n  y<8> := extract:0:7 x\n  z<8> := extract:8:15 x\n  halt\n")
    expected = program(
        "bb0:\n  x<32> := a<32>\n  x_0_7<8> := extract:0:7 x\n  x_8_15<8> := extract:8:15 x\n"
        "  y<8> := x_0_7\n  z<8> := x_8_15\n  halt\n"
    )
    assert unpack_program(p, frozenset({"y", "z"})) == expected


def test_register_slices_take_their_x86_names():
    p = program("bb0:\n  eax<32> := a<32>\n  y<8> := extract:8:15 eax\n  halt\n")
    body = unpack_program(p, frozenset({"y"})).block("bb0").body
    assert Assign(Var("y", 8), Var("ah", 8)) in body


def test_slices_of_an_entry_value_are_copied_before_the_container_is_overwritten():
    p = program("bb0:\n  y<8> := extract:0:7 x<32>\n  x := a<32>\n  halt\n")
    expected = program("bb0:\n  x_0_7<8> := extract:0:7 x<32>\n  y<8> := x_0_7\n  x := a<32>\n  halt\n")
    assert unpack_program(p, frozenset({"y", "x"})) == expected


def test_byte_halves_are_added_without_masking_the_register():
    d = decoded("byte_add")
    t, ledger = run_pipeline(d, Level.O4)
    exprs = [node for b in t.program.blocks for instr in b.instrs for e in instr_exprs(instr) for node in walk(e)]
    assert not any(isinstance(node, Unop) and node.op is UnOp.EXTRACT for node in exprs)
    assert not t.program.assigned() & {"eax", "ebx", "ecx", "edx"}

    text = emit_c(t, ledger, level=str(Level.O4)).text
    assert "&" not in text
    assert ">>" not in text
    assert "__lift_eax" not in text


def test_byte_add_is_exact_on_every_pair_of_bytes():
    d = decoded("byte_add")
    t, _ = run_pipeline(d, Level.O4)
    names = sorted(upward_exposed(d.program) | upward_exposed(t.program))
    for x in range(256):
        for y in range(256):
            start = MachineState({**dict.fromkeys(names, 0xA5A5A5A5), "__op1": x, "__op2": y})
            before, after = interpret(d.program, start), interpret(t.program, start)
            assert after.vars["ax"] == before.vars["ax"] == ((x + y) & 0xFF) << 8 | y, (x, y)


# ── Loops ────────────────────────────────────────────────────────────


def test_pointer_of_a_counted_loop_is_expressed_from_the_counter():
    t, ledger = run_pipeline(decoded("fd_zero"), Level.O4)
    (relation,) = ledger.of_pass("loops")
    assert (relation.derived, relation.counter, relation.scale) == ("edi", "ecx", 4)
    assert relation.direction is LoopDirection.DOWN
    assert relation.base == Var("__op4", 32)
    assert relation.counter_init == Var("__op3", 32)
    assert "edi" not in {s.lhs.name for s in t.program.block("bb2").body if isinstance(s, Assign)}


def test_two_counters_going_up_merge_into_one():
    p = program(
        "bb0:\n  i<32> := 0<32>\n  j<32> := 0<32>\n  goto bb1\n"
        "bb1:\n  if i = n<32> then goto bb3 else goto bb2\n"
        "bb2:\n  @[b<32> + j]4 := 0<32>\n  i := i + 1<32>\n  j := j + 4<32>\n  goto bb1\n"
        "bb3:\n  halt\n"
    )
    merged, ledger = normalize_program(p, frozenset({"i"}))
    (relation,) = list(ledger)
    assert (relation.derived, relation.counter, relation.direction) == ("j", "i", LoopDirection.UP)
    assert "j" not in merged.variables()


# ── Levels ───────────────────────────────────────────────────────────


def test_levels_add_passes_in_a_fixed_order():
    assert LEVEL_PASSES[Level.BASIC] == ()
    assert LEVEL_PASSES[Level.O2] == (Pass.PREDICATES, Pass.UNPACK)
    assert LEVEL_PASSES[Level.O4] == (Pass.PREDICATES, Pass.UNPACK, Pass.PROPAGATION, Pass.LOOPS)
    assert LEVEL_PASSES[Level.NO_O2] == (Pass.PREDICATES, Pass.PROPAGATION, Pass.LOOPS)


def test_every_stage_is_snapshotted():
    seen: list[str] = []
    run_pipeline(decoded("fd_zero"), Level.O4, snapshot=lambda name, _: seen.append(name))
    assert seen == ["types", "predicates", "unpack", "propagation", "loops"]


def test_propagation_shrinks_the_program():
    basic, _ = run_pipeline(decoded("abs"), Level.BASIC)
    lifted, _ = run_pipeline(decoded("abs"), Level.O3)
    assert lifted.program.stmt_count() < basic.program.stmt_count()


def test_branchless_abs_reads_as_a_conditional_negation():
    """After propagation, is eax a single ternary on the sign of the input?"""
    t, _ = run_pipeline(decoded("abs"), Level.O3)
    (value,) = [s.rhs for b in t.program.blocks for s in b.body if isinstance(s, Assign) and s.lhs.name == "eax"]
    (entry,) = var_names(value)
    assert substitute(value, {entry: Var("x", 32)}) == parse_expr("(x<32> <s 0<32>) ? neg x : x")
    assert not t.program.assigned() & {"cf", "zf", "sf", "of"}


LOOPING = {"countdown", "fd_zero"}


def _states(name: str, level: Level, widths: dict[str, int]):
    rng = random.Random(f"{name}/{level}")
    count = 10_000 if level is Level.O4 else 300
    for _ in range(count):
        values = {n: rng.getrandbits(min(w, 8) if name in LOOPING else w) for n, w in widths.items()}
        yield MachineState(values, mem_seed=rng.getrandbits(16))


@pytest.mark.parametrize("level", list(Level))
@pytest.mark.parametrize("name", ["abs", "umin", "byte_add", "countdown", "fd_zero"])
def test_lifted_chunk_behaves_like_the_decoded_one(name, level):
    """Do the observables and memory agree on random states, with loop inputs kept to a byte?"""
    d = decoded(name)
    t, _ = run_pipeline(d, level)
    widths = {**d.program.variables(), **t.program.variables()}
    names = upward_exposed(d.program) | upward_exposed(t.program)
    for start in _states(name, level, {n: widths[n] for n in sorted(names)}):
        before, after = interpret(d.program, start), interpret(t.program, start)
        assert not isinstance(before, OutOfFuel) and not isinstance(after, OutOfFuel)
        observed = {o: after.vars[o] for o in d.observables}
        assert observed == {o: before.vars[o] for o in d.observables}, start
        assert dict(after.mem) == dict(before.mem), start
