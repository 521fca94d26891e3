"""Conditions, negation pushing and ternaries."""

from __future__ import annotations

from asmlift.ir.expr import (
    COMPARISONS,
    FALSE,
    NEGATED,
    TRUE,
    BinOp,
    Binop,
    Const,
    Expr,
    Ite,
    Unop,
    UnOp,
    bnot,
)
from asmlift.rewrite.rule import Category, is_ones, is_zero, rule

_REFLEXIVE = frozenset({BinOp.EQ, BinOp.ULE, BinOp.UGE, BinOp.SLE, BinOp.SGE})


def _is_boolean(e: Expr) -> bool:
    return e.width == 1


def _is_condition(e: Expr) -> bool:
    return (isinstance(e, Binop) and e.op in COMPARISONS) or (isinstance(e, Unop) and e.op is UnOp.NOT)


# ---------------------------------------------------------------------------
#  Conditions
# ---------------------------------------------------------------------------


@rule(Category.CONDITION, "c<1> = 1<1>", "c<1> != 0<1>", "c<1> >u 0<1>")
def _condition_is_true(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.EQ, c, Const(1, 1)) | Binop(BinOp.NEQ | BinOp.UGT, c, Const(0, 1)):
            return c
    return None


@rule(Category.CONDITION, "c<1> = 0<1>", "c<1> != 1<1>")
def _condition_is_false(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.EQ, c, Const(0, 1)) | Binop(BinOp.NEQ, c, Const(1, 1)):
            return bnot(c)
    return None


@rule(Category.CONDITION, "x<{w}> = x<{w}>", "x<{w}> <s x<{w}>", "x<{w}> >=u x<{w}>")
def _compare_with_itself(e: Expr) -> Expr | None:
    match e:
        case Binop(op, x, y) if op in COMPARISONS and x == y:
            return TRUE if op in _REFLEXIVE else FALSE
    return None


@rule(Category.CONDITION, "x<{w}> <u 0<{w}>", "x<{w}> >=u 0<{w}>", "x<{w}> >u {ones}<{w}>", "x<{w}> <=u {ones}<{w}>")
def _unsigned_bound(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.ULT, _, rhs) if is_zero(rhs):
            return FALSE
        case Binop(BinOp.UGE, _, rhs) if is_zero(rhs):
            return TRUE
        case Binop(BinOp.UGT, _, rhs) if is_ones(rhs):
            return FALSE
        case Binop(BinOp.ULE, _, rhs) if is_ones(rhs):
            return TRUE
    return None


# ---------------------------------------------------------------------------
#  Extended De Morgan
# ---------------------------------------------------------------------------


@rule(Category.DE_MORGAN, "not (x<{w}> <u y<{w}>)", "not (x<{w}> = y<{w}>)", "not (x<{w}> >s y<{w}>)")
def _negated_comparison(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.NOT, Binop(op, x, y)) if op in COMPARISONS:
            return Binop(NEGATED[op], x, y)
    return None


@rule(Category.DE_MORGAN, "x<{w}> ^ {ones}<{w}>", "{ones}<{w}> ^ x<{w}>")
def _xor_with_ones(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.XOR, x, rhs) if is_ones(rhs):
            return bnot(x)
        case Binop(BinOp.XOR, lhs, x) if is_ones(lhs):
            return bnot(x)
    return None


@rule(Category.DE_MORGAN, "not ((x<{w}> = y<{w}>) & (x<{w}> <s 0<{w}>))", "not ((x<{w}> = 0<{w}>) | not c<1>)")
def _negated_connective(e: Expr) -> Expr | None:
    """Push `not` through and/or of conditions, where each side then loses its negation."""
    match e:
        case Unop(UnOp.NOT, Binop(BinOp.AND | BinOp.OR as op, a, b)) if (
            _is_boolean(e) and _is_condition(a) and _is_condition(b)
        ):
            dual = BinOp.OR if op is BinOp.AND else BinOp.AND
            return Binop(dual, bnot(a), bnot(b))
    return None


# ---------------------------------------------------------------------------
#  Ternaries
# ---------------------------------------------------------------------------


@rule(Category.TERNARY, "c<1> ? x<{w}> : x<{w}>")
def _ternary_same_arms(e: Expr) -> Expr | None:
    match e:
        case Ite(_, then, orelse) if then == orelse:
            return then
    return None


@rule(Category.TERNARY, "1<1> ? x<{w}> : y<{w}>", "0<1> ? x<{w}> : y<{w}>")
def _ternary_constant_condition(e: Expr) -> Expr | None:
    match e:
        case Ite(Const(value, _), then, orelse):
            return then if value else orelse
    return None


@rule(Category.TERNARY, "c<1> ? 1<1> : 0<1>", "c<1> ? 0<1> : 1<1>")
def _ternary_boolean(e: Expr) -> Expr | None:
    match e:
        case Ite(c, Const(1, 1), Const(0, 1)):
            return c
        case Ite(c, Const(0, 1), Const(1, 1)):
            return bnot(c)
    return None


@rule(Category.TERNARY, "(not c<1>) ? x<{w}> : y<{w}>")
def _ternary_negated_condition(e: Expr) -> Expr | None:
    match e:
        case Ite(Unop(UnOp.NOT, c), then, orelse):
            return Ite(c, orelse, then)
    return None


@rule(Category.TERNARY, "c<1> ? (c ? x<{w}> : y<{w}>) : z<{w}>", "c<1> ? x<{w}> : (c ? y<{w}> : z<{w}>)")
def _ternary_nested_same_condition(e: Expr) -> Expr | None:
    match e:
        case Ite(c, Ite(c2, a, _), orelse) if c == c2:
            return Ite(c, a, orelse)
        case Ite(c, then, Ite(c2, _, b)) if c == c2:
            return Ite(c, then, b)
    return None


@rule(Category.TERNARY, "(c<1> ? x<{w}> : y<{w}>) - (c ? {ones}<{w}> : 0<{w}>)")
def _ternaries_on_same_condition(e: Expr) -> Expr | None:
    match e:
        case Binop(op, Ite(c, a, b), Ite(c2, x, y)) if c == c2:
            return Ite(c, Binop(op, a, x), Binop(op, b, y))
    return None


@rule(
    Category.TERNARY,
    "x<{w}> ^ (c<1> ? {ones}<{w}> : 0<{w}>)",
    "(c<1> ? x<{w}> : 0<{w}>) + y<{w}>",
    "not (c<1> ? x<{w}> : {ones}<{w}>)",
    speculative=True,
)
def _ternary_development(e: Expr) -> Expr | None:
    match e:
        case Binop(op, Ite(c, a, b), x):
            return Ite(c, Binop(op, a, x), Binop(op, b, x))
        case Binop(op, x, Ite(c, a, b)) if not isinstance(x, Ite):
            return Ite(c, Binop(op, x, a), Binop(op, x, b))
        case Unop(op, Ite(c, a, b), params):
            return Ite(c, Unop(op, a, params), Unop(op, b, params))
    return None
