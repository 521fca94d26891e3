"""Two's-complement idioms and their high-level readings."""

from __future__ import annotations

from asmlift.ir.expr import BinOp, Binop, Const, Expr, Ite, Unop, UnOp, add, neg, ones, zero
from asmlift.rewrite.rule import Category, is_min, is_one, is_ones, rule


@rule(Category.TWOS_COMPLEMENT, "not x<{w}> + 1<{w}>", "1<{w}> + not x<{w}>")
def _complement_plus_one(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.ADD, Unop(UnOp.NOT, x), rhs) if is_one(rhs):
            return neg(x)
        case Binop(BinOp.ADD, lhs, Unop(UnOp.NOT, x)) if is_one(lhs):
            return neg(x)
    return None


@rule(Category.TWOS_COMPLEMENT, "((uext:{w2} x<{w}>) ^ {min}<{w2}>) - {min}<{w2}>")
def _biased_extension(e: Expr) -> Expr | None:
    """(uext(x) ^ 2^(|x|-1)) - 2^(|x|-1) flips the sign bit and subtracts it back: a sign extension."""
    match e:
        case Binop(BinOp.SUB, Binop(BinOp.XOR, Unop(UnOp.UEXT, x, (n,)), Const(c, _)), Const(c2, _)) if (
            c == c2 == 1 << (x.width - 1)
        ):
            return Unop(UnOp.SEXT, x, (n,))
    return None


@rule(Category.TWOS_COMPLEMENT, "extract:{top}:{top} x<{w}>")
def _sign_bit_is_negative(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.EXTRACT, x, (i, j)) if i == j == x.width - 1 and x.width > 1:
            return Binop(BinOp.SLT, x, zero(x.width))
    return None


@rule(Category.TWOS_COMPLEMENT, "(uext:{w} c<1>) - 1<{w}>")
def _boolean_minus_one(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.SUB, Unop(UnOp.UEXT, c), rhs) if c.width == 1 and is_one(rhs):
            return Ite(c, zero(e.width), ones(e.width))
    return None


@rule(Category.TWOS_COMPLEMENT, "(uext:{w} c<1>) - 1<{w}>", sound=False)
def _boolean_minus_one_swapped(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.SUB, Unop(UnOp.UEXT, c), rhs) if c.width == 1 and is_one(rhs):
            return Ite(c, ones(e.width), zero(e.width))
    return None


@rule(Category.TWOS_COMPLEMENT, "sext:{wp} c<1>")
def _sign_extended_boolean(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.SEXT, c) if c.width == 1 and e.width > 1:
            return Ite(c, ones(e.width), zero(e.width))
    return None


@rule(Category.TWOS_COMPLEMENT, "x<{w}> - {ones}<{w}>")
def _minus_ones_is_increment(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.SUB, x, rhs) if is_ones(rhs) and x.width > 1:
            return add(x, 1)
    return None


@rule(Category.TWOS_COMPLEMENT, "x<{w}> sdiv {ones}<{w}>", "x<{w}> * {ones}<{w}>")
def _times_minus_one(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.MUL | BinOp.SDIV, x, rhs) if is_ones(rhs) and not is_min(rhs):
            return neg(x)
    return None
