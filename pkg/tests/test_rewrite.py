"""Is every rewrite rule sound, and does the simplifier reach the forms we expect?"""

from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asmlift.errors import AsmLiftError
from asmlift.ir.expr import BinOp, Binop, Const, Expr, Ite, Unop, UnOp, Var, free_vars, has_load, mask
from asmlift.ir.interpreter import ByteMemory
from asmlift.ir.semantics import InterpreterError, evaluate
from asmlift.ir.syntax import parse_expr
from asmlift.ir.wellformed import expr_problems
from asmlift.rewrite import RULES, UNSOUND_RULES, Simplifier, simplify_expr
from asmlift.rewrite.ac import ac_equal, normalize

WIDTHS = range(1, 7)
EXHAUSTIVE_BITS = 19
SAMPLES = 1024


# ── Harness ──────────────────────────────────────────────────────────


def _placeholders(w: int) -> dict[str, int]:
    return {
        "w": w, "wp": w + 1, "w2": 2 * w, "top": w - 1, "top2": 2 * w - 1,
        "ones": mask(w), "min": 1 << (w - 1), "pow": 1 << w,
    }


def _instances(template: str):
    """Well-formed expressions the template yields over small widths."""
    for w in WIDTHS:
        try:
            e = parse_expr(template.format(**_placeholders(w)))
        except (AsmLiftError, ValueError):
            continue
        if not expr_problems(e):
            yield e


def _assignments(variables: list[Var]):
    bits = sum(v.width for v in variables)
    if bits <= EXHAUSTIVE_BITS:
        for values in itertools.product(*(range(1 << v.width) for v in variables)):
            yield dict(zip((v.name for v in variables), values, strict=True))
        return
    rng = random.Random(0)
    for _ in range(SAMPLES):
        yield {v.name: rng.getrandbits(v.width) for v in variables}


def _value(e: Expr, values: dict[str, int], memory) -> int | None:
    try:
        return evaluate(e, values, memory)
    except InterpreterError:
        return None


def mismatches(before: Expr, after: Expr) -> int:
    """Assignments where `after` differs from `before`, or faults where `before` does not."""
    variables = sorted(free_vars(before) | free_vars(after), key=lambda v: v.name)
    memory = ByteMemory(seed=7) if has_load(before) or has_load(after) else None
    bad = 0
    for values in _assignments(variables):
        old = _value(before, values, memory)
        if old is None:
            continue
        if _value(after, values, memory) != old:
            bad += 1
    return bad


# ── Catalogue soundness ──────────────────────────────────────────────


@pytest.mark.parametrize("name", sorted(RULES))
def test_rule_is_sound_on_its_witnesses(name):
    r = RULES[name]
    assert r.witnesses, f"{name} has no witness"
    fired = 0
    for template in r.witnesses:
        for e in _instances(template):
            result = r(e)
            if result is None:
                continue
            fired += 1
            assert result.width == e.width, f"{name} changed the width of {e}"
            assert expr_problems(result) == []
            assert mismatches(e, result) == 0, f"{name} is not sound on {e}"
    assert fired, f"{name} never fired on its witnesses"


@pytest.mark.parametrize("name", sorted(UNSOUND_RULES))
def test_unsound_control_rule_is_caught(name):
    r = UNSOUND_RULES[name]
    bad = 0
    for template in r.witnesses:
        for e in _instances(template):
            result = r(e)
            if result is not None:
                bad += mismatches(e, result)
    assert bad > 0


def test_unsound_rules_stay_out_of_the_catalogue():
    assert not set(UNSOUND_RULES) & set(RULES)


# ── Simplifier ───────────────────────────────────────────────────────


X8 = Var("x", 8)


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("((x<8> + 0<8>) * 1<8>) | 0<8>", X8),
        ("not (not x<8>)", X8),
        ("3<8> + 5<8>", Const(8, 8)),
        ("extract:0:7 (uext:32 x<8>)", X8),
        ("x<8> ^ x<8>", Const(0, 8)),
    ],
)
def test_simplify_reaches_the_expected_form(text, expected):
    assert simplify_expr(parse_expr(text)) == expected


def test_boolean_minus_one_becomes_a_ternary():
    e = parse_expr("(uext:32 c<1>) - 1<32>")
    result = simplify_expr(e)
    assert isinstance(result, Ite)
    assert mismatches(e, result) == 0


def test_speculative_development_is_kept_when_an_arm_simplifies():
    s = Simplifier()
    e = parse_expr("x<8> ^ (c<1> ? 255<8> : 0<8>)")
    result = s.simplify(e)
    assert result == Ite(Var("c", 1), Unop(UnOp.NOT, X8), X8)
    assert s.stats.developments_kept >= 1
    assert mismatches(e, result) == 0


def test_without_speculation_the_ternary_operand_stays():
    s = Simplifier(speculative=False)
    result = s.simplify(parse_expr("x<8> ^ (c<1> ? 255<8> : 0<8>)"))
    assert isinstance(result, Binop) and result.op is BinOp.XOR
    assert s.stats.developments_tried == 0


def test_stats_count_rule_firings():
    s = Simplifier()
    s.simplify(parse_expr("(x<8> + 0<8>) + (y<8> * 1<8>)"))
    assert s.stats.rewrites >= 1


def test_ac_normalization_folds_constants_last():
    e = normalize(parse_expr("(x<8> + 1<8>) + (a<8> + 2<8>)"))
    assert e == Binop(BinOp.ADD, Binop(BinOp.ADD, Var("a", 8), X8), Const(3, 8))
    assert ac_equal(parse_expr("(x<8> + 1<8>) + a<8>"), parse_expr("(a<8> + x<8>) + 1<8>"))


_VARS = st.sampled_from([Var("x", 8), Var("y", 8)])
_CONSTS = st.sampled_from([0, 1, 2, 7, 0x7F, 0x80, 0xFF]).map(lambda v: Const(v, 8))
_BINOPS = st.sampled_from([
    BinOp.ADD, BinOp.SUB, BinOp.MUL, BinOp.AND, BinOp.OR, BinOp.XOR, BinOp.SHL, BinOp.SHR, BinOp.SAR,
])
_COMPARE = st.sampled_from([BinOp.EQ, BinOp.NEQ, BinOp.ULT, BinOp.SLE])


def _extend(children):
    return st.one_of(
        st.builds(Binop, _BINOPS, children, children),
        st.builds(lambda a: Unop(UnOp.NOT, a), children),
        st.builds(lambda a: Unop(UnOp.NEG, a), children),
        st.builds(lambda a: Unop(UnOp.EXTRACT, Unop(UnOp.UEXT, a, (16,)), (0, 7)), children),
        st.builds(lambda op, a, b, t, f: Ite(Binop(op, a, b), t, f), _COMPARE, children, children, children, children),
    )


_EXPRS = st.recursive(st.one_of(_VARS, _CONSTS), _extend, max_leaves=10)


@settings(max_examples=150, deadline=None)
@given(_EXPRS)
def test_simplification_preserves_meaning(e):
    result = simplify_expr(e)
    assert result.width == e.width
    rng = random.Random(1)
    for _ in range(16):
        values = {"x": rng.getrandbits(8), "y": rng.getrandbits(8)}
        assert evaluate(result, values) == evaluate(e, values)
