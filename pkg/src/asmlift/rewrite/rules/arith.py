"""Arithmetic identities: normalization, neutral/absorbing/inverse elements, shifts, remainders and extensions."""

from __future__ import annotations

from asmlift.ir.expr import (
    COMPARISONS,
    SWAPPED,
    BinOp,
    Binop,
    Const,
    Expr,
    Unop,
    UnOp,
    binop,
    children,
    mask,
    ones,
    uext,
    zero,
)
from asmlift.ir.semantics import const_value
from asmlift.rewrite.rule import Category, is_one, is_ones, is_zero, rule

# ---------------------------------------------------------------------------
#  Normalization
# ---------------------------------------------------------------------------


@rule(Category.NORMALIZATION, "x<{w}> + neg y<{w}>", "neg y<{w}> + x<{w}>")
def _add_negation_is_sub(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.ADD, x, Unop(UnOp.NEG, y)):
            return binop(BinOp.SUB, x, y)
        case Binop(BinOp.ADD, Unop(UnOp.NEG, y), x):
            return binop(BinOp.SUB, x, y)
    return None


@rule(Category.NORMALIZATION, "x<{w}> - neg y<{w}>")
def _sub_negation_is_add(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.SUB, x, Unop(UnOp.NEG, y)):
            return binop(BinOp.ADD, x, y)
    return None


@rule(Category.NORMALIZATION, "neg (x<{w}> - y<{w}>)")
def _negated_difference(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.NEG, Binop(BinOp.SUB, x, y)):
            return binop(BinOp.SUB, y, x)
    return None


@rule(Category.NORMALIZATION, "3<{w}> <u x<{w}>", "1<{w}> >=s x<{w}>", "0<{w}> = x<{w}>")
def _constant_on_the_right(e: Expr) -> Expr | None:
    match e:
        case Binop(op, Const() as c, x) if op in COMPARISONS and not isinstance(x, Const):
            return Binop(SWAPPED[op], x, c)
    return None


@rule(Category.NORMALIZATION, "(x<{w}> + 1<{w}>) = 0<{w}>", "(x<{w}> - 1<{w}>) != 2<{w}>")
def _offset_equality(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.EQ | BinOp.NEQ as op, Binop(BinOp.ADD, x, Const(c1, w)), Const(c2, _)):
            return Binop(op, x, Const(c2 - c1, w))
        case Binop(BinOp.EQ | BinOp.NEQ as op, Binop(BinOp.SUB, x, Const(c1, w)), Const(c2, _)):
            return Binop(op, x, Const(c2 + c1, w))
    return None


# ---------------------------------------------------------------------------
#  Constant folding
# ---------------------------------------------------------------------------


@rule(Category.CONSTANT_FOLDING, "3<{w}> + 5<{w}>", "10<{w2}> * 2<{w2}>", "uext:{w2} 1<{w}>")
def _fold_constants(e: Expr) -> Expr | None:
    kids = children(e)
    if not kids or not all(isinstance(k, Const) for k in kids):
        return None
    value = const_value(e)
    return None if value is None else Const(value, e.width)


# ---------------------------------------------------------------------------
#  Neutral elements
# ---------------------------------------------------------------------------


@rule(
    Category.NEUTRAL, "x<{w}> + 0<{w}>", "0<{w}> + x<{w}>", "x<{w}> - 0<{w}>", "x<{w}> | 0<{w}>", "x<{w}> ^ 0<{w}>"
)
def _zero_is_neutral(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.ADD | BinOp.SUB | BinOp.OR | BinOp.XOR, x, rhs) if is_zero(rhs):
            return x
        case Binop(BinOp.ADD | BinOp.OR | BinOp.XOR, lhs, x) if is_zero(lhs):
            return x
    return None


@rule(Category.NEUTRAL, "x<{w}> * 1<{w}>", "1<{w}> * x<{w}>", "x<{w}> udiv 1<{w}>", "x<{w}> sdiv 1<{w}>")
def _one_is_neutral(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.MUL | BinOp.UDIV | BinOp.SDIV, x, rhs) if is_one(rhs):
            return x
        case Binop(BinOp.MUL, lhs, x) if is_one(lhs):
            return x
    return None


@rule(Category.NEUTRAL, "x<{w}> & {ones}<{w}>", "{ones}<{w}> & x<{w}>")
def _ones_is_neutral_for_and(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.AND, x, rhs) if is_ones(rhs):
            return x
        case Binop(BinOp.AND, lhs, x) if is_ones(lhs):
            return x
    return None


@rule(Category.NEUTRAL, "x<{w}> shl 0<{w}>", "x<{w}> shr 0<{w}>", "x<{w}> sar 0<{w}>")
def _shift_by_zero(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.SHL | BinOp.SHR | BinOp.SAR, x, rhs) if is_zero(rhs):
            return x
    return None


@rule(Category.NEUTRAL, "uext:{w} x<{w}>", "sext:{w} x<{w}>")
def _extension_to_same_width(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.UEXT | UnOp.SEXT, x, (n,)) if n == x.width:
            return x
    return None


# ---------------------------------------------------------------------------
#  Idempotence
# ---------------------------------------------------------------------------


@rule(Category.IDEMPOTENCE, "x<{w}> & x<{w}>", "x<{w}> | x<{w}>")
def _idempotent(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.AND | BinOp.OR, x, y) if x == y:
            return x
    return None


# ---------------------------------------------------------------------------
#  Absorbing elements
# ---------------------------------------------------------------------------


@rule(Category.ABSORBING, "x<{w}> * 0<{w}>", "0<{w}> * x<{w}>", "x<{w}> & 0<{w}>", "0<{w}> & x<{w}>")
def _zero_absorbs(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.MUL | BinOp.AND, lhs, rhs) if is_zero(lhs) or is_zero(rhs):
            return zero(e.width)
    return None


@rule(Category.ABSORBING, "x<{w}> | {ones}<{w}>", "{ones}<{w}> | x<{w}>")
def _ones_absorb_or(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.OR, lhs, rhs) if is_ones(lhs) or is_ones(rhs):
            return ones(e.width)
    return None


@rule(Category.ABSORBING, "x<{w}> urem 1<{w}>", "x<{w}> srem 1<{w}>")
def _remainder_by_one(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.UREM | BinOp.SREM, _, rhs) if is_one(rhs):
            return zero(e.width)
    return None


@rule(Category.ABSORBING, "0<{w}> shl x<{w}>", "0<{w}> shr x<{w}>", "0<{w}> sar x<{w}>")
def _shifted_zero(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.SHL | BinOp.SHR | BinOp.SAR, lhs, _) if is_zero(lhs):
            return lhs
    return None


# ---------------------------------------------------------------------------
#  Inverse elements
# ---------------------------------------------------------------------------


@rule(Category.INVERSE, "x<{w}> - x<{w}>", "x<{w}> ^ x<{w}>")
def _self_cancels(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.SUB | BinOp.XOR, x, y) if x == y:
            return zero(e.width)
    return None


@rule(Category.INVERSE, "x<{w}> + neg x<{w}>", "neg x<{w}> + x<{w}>")
def _negation_cancels(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.ADD, x, Unop(UnOp.NEG, y)) | Binop(BinOp.ADD, Unop(UnOp.NEG, y), x) if x == y:
            return zero(e.width)
    return None


@rule(Category.INVERSE, "x<{w}> & not x<{w}>", "not x<{w}> | x<{w}>")
def _complement_cancels(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.AND | BinOp.OR as op, x, Unop(UnOp.NOT, y)) if x == y:
            return zero(e.width) if op is BinOp.AND else ones(e.width)
        case Binop(BinOp.AND | BinOp.OR as op, Unop(UnOp.NOT, y), x) if x == y:
            return zero(e.width) if op is BinOp.AND else ones(e.width)
    return None


@rule(Category.INVERSE, "x<{w}> shl {w}<{w}>", "x<{w}> shr {ones}<{w}>")
def _shifted_out(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.SHL | BinOp.SHR, x, Const(k, _)) if k >= x.width:
            return zero(e.width)
    return None


# ---------------------------------------------------------------------------
#  Involutivity
# ---------------------------------------------------------------------------


@rule(Category.INVOLUTIVITY, "not not x<{w}>", "neg neg x<{w}>")
def _involution(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.NOT, Unop(UnOp.NOT, x)) | Unop(UnOp.NEG, Unop(UnOp.NEG, x)):
            return x
    return None


# ---------------------------------------------------------------------------
#  Shifts
# ---------------------------------------------------------------------------


@rule(
    Category.SHIFTS,
    "(x<{w}> shl 1<{w}>) shl 1<{w}>",
    "(x<{w}> shr 1<{w}>) shr 2<{w}>",
    "(x<{w}> sar 1<{w}>) sar 1<{w}>",
)
def _double_shift(e: Expr) -> Expr | None:
    match e:
        case Binop(op, Binop(inner, x, Const(a, wa)), Const(b, wb)) if op is inner and op in (
            BinOp.SHL, BinOp.SHR, BinOp.SAR,
        ) and wa == wb and a + b <= mask(wb):
            return Binop(op, x, Const(a + b, wb))
    return None


# ---------------------------------------------------------------------------
#  Remainders and extensions
# ---------------------------------------------------------------------------


@rule(Category.REMAINDER_EXTENSION, "(x<{w}> urem 3<{w}>) urem 3<{w}>", "(x<{w2}> urem 4<{w2}>) urem 2<{w2}>")
def _remainder_chain(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.UREM, Binop(BinOp.UREM, x, Const(k, _) as inner), Const(k2, _) as outer) if k and k2:
            if k <= k2:
                return Binop(BinOp.UREM, x, inner)
            if k % k2 == 0:
                return Binop(BinOp.UREM, x, outer)
    return None


@rule(Category.REMAINDER_EXTENSION, "uext:{w2} (uext:{wp} x<{w}>)", "sext:{w2} (sext:{wp} x<{w}>)")
def _nested_extension(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.UEXT, Unop(UnOp.UEXT, x), (n,)) | Unop(UnOp.SEXT, Unop(UnOp.SEXT, x), (n,)):
            return Unop(e.op, x, (n,))
    return None


@rule(Category.REMAINDER_EXTENSION, "sext:{w2} (uext:{wp} x<{w}>)")
def _sign_extension_of_zero_extension(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.SEXT, Unop(UnOp.UEXT, x, (m,)), (n,)) if m > x.width:
            return uext(x, n)
    return None


@rule(Category.REMAINDER_EXTENSION, "(uext:{w2} x<{w}>) urem {pow}<{w2}>")
def _remainder_above_extension(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.UREM, Unop(UnOp.UEXT, x, _) as ext, Const(c, _)) if c >= 1 << x.width:
            return ext
    return None
