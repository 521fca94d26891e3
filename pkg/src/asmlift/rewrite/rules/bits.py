"""Bit-field rules: splitting equalities, concatenation abstraction and extraction."""

from __future__ import annotations

from asmlift.ir.expr import (
    BinOp,
    Binop,
    Const,
    Expr,
    Load,
    Unop,
    UnOp,
    add,
    concat,
    extract,
    sext,
    uext,
    zero,
)
from asmlift.rewrite.rule import Category, is_zero, rule

_LOW_BITS_OPS = frozenset({BinOp.ADD, BinOp.SUB, BinOp.MUL})
_BITWISE_OPS = frozenset({BinOp.AND, BinOp.OR, BinOp.XOR})


# ---------------------------------------------------------------------------
#  Split elements
# ---------------------------------------------------------------------------


@rule(
    Category.SPLIT,
    "(x<{w}> :: y<{w}>) = 5<{w2}>",
    "(x<{w}> :: y<{w}>) != 1<{w2}>",
    "(x<{w}> :: y<{w}>) = (u<{w}> :: v<{w}>)",
)
def _split_concat_equality(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.EQ | BinOp.NEQ as op, Binop(BinOp.CONCAT, hi, lo), rhs):
            pass
        case _:
            return None
    match rhs:
        case Const(k, _):
            rhs_hi, rhs_lo = Const(k >> lo.width, hi.width), Const(k, lo.width)
        case Binop(BinOp.CONCAT, rhs_hi, rhs_lo) if rhs_hi.width == hi.width:
            pass
        case _:
            return None
    joint = BinOp.AND if op is BinOp.EQ else BinOp.OR
    return Binop(joint, Binop(op, hi, rhs_hi), Binop(op, lo, rhs_lo))


# ---------------------------------------------------------------------------
#  Concatenation abstraction
# ---------------------------------------------------------------------------


@rule(Category.CONCAT_ABSTRACTION, "(uext:{w2} x<{w}>) | (y<{w}> :: 0<{w}>)", "(y<{w}> :: 0<{w}>) | uext:{w2} x<{w}>")
def _disjoint_or_is_concat(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.OR, Unop(UnOp.UEXT, x), Binop(BinOp.CONCAT, y, low)) | Binop(
            BinOp.OR, Binop(BinOp.CONCAT, y, low), Unop(UnOp.UEXT, x)
        ) if is_zero(low) and low.width == x.width:
            return concat(y, x)
    return None


@rule(Category.CONCAT_ABSTRACTION, "(uext:{w2} x<{w}>) shl {w}<{w2}>")
def _shifted_extension_is_concat(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.SHL, Unop(UnOp.UEXT, x, (n,)), Const(k, _)) if 0 < k and n == x.width + k:
            return concat(x, zero(k))
    return None


@rule(Category.CONCAT_ABSTRACTION, "0<{w}> :: x<{w}>", "0<1> :: x<{w}>")
def _zero_concat_is_extension(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.CONCAT, hi, x) if is_zero(hi):
            return uext(x, e.width)
    return None


# ---------------------------------------------------------------------------
#  Extraction
# ---------------------------------------------------------------------------


@rule(Category.EXTRACTION, "extract:0:{top} x<{w}>")
def _full_extract(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.EXTRACT, x, (0, hi)) if hi == x.width - 1:
            return x
    return None


@rule(Category.EXTRACTION, "extract:0:0 (extract:1:{w} x<{w2}>)")
def _nested_extract(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.EXTRACT, Unop(UnOp.EXTRACT, x, (lo, _)), (i, j)):
            return extract(x, lo + i, lo + j)
    return None


@rule(
    Category.EXTRACTION,
    "(extract:{w}:{top2} x<{w2}>) :: extract:0:{top} x",
    "(extract:{w}:{top2} x<{w2}>) :: ((extract:0:{top} x) :: y<{w}>)",
    "(y<{w}> :: extract:{w}:{top2} x<{w2}>) :: extract:0:{top} x",
)
def _adjacent_extracts(e: Expr) -> Expr | None:
    match e:
        case Binop(BinOp.CONCAT, Unop(UnOp.EXTRACT, x, (i, k)), Unop(UnOp.EXTRACT, y, (lo, j))) if (
            x == y and j + 1 == i
        ):
            return extract(x, lo, k)
        case Binop(
            BinOp.CONCAT, Unop(UnOp.EXTRACT, x, (i, k)), Binop(BinOp.CONCAT, Unop(UnOp.EXTRACT, y, (lo, j)), rest)
        ) if x == y and j + 1 == i:
            return concat(extract(x, lo, k), rest)
        case Binop(
            BinOp.CONCAT, Binop(BinOp.CONCAT, rest, Unop(UnOp.EXTRACT, x, (i, k))), Unop(UnOp.EXTRACT, y, (lo, j))
        ) if x == y and j + 1 == i:
            return concat(rest, extract(x, lo, k))
    return None


@rule(Category.EXTRACTION, "extract:{w}:{top2} (uext:{w2} x<{w}>)")
def _extract_above_zero_extension(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.EXTRACT, Unop(UnOp.UEXT, x), (i, _)) if x.width <= i:
            return zero(e.width)
    return None


@rule(Category.EXTRACTION, "extract:0:{w} (uext:{w2} x<{w}>)", "extract:0:{w} (sext:{w2} x<{w}>)")
def _low_extract_of_extension(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.EXTRACT, Unop(UnOp.UEXT | UnOp.SEXT as op, x), (0, j)) if x.width <= j:
            return Unop(op, x, (j + 1,))
    return None


@rule(Category.EXTRACTION, "extract:0:{top} (uext:{w2} x<{w}>)", "extract:{top}:{top} (sext:{w2} x<{w}>)")
def _extract_inside_extension(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.EXTRACT, Unop(UnOp.UEXT | UnOp.SEXT, x), (i, j)) if j < x.width:
            return extract(x, i, j)
    return None


@rule(Category.EXTRACTION, "extract:{w}:{top2} (sext:{w2} x<{w}>)", "extract:{top}:{w} (sext:{w2} x<{w}>)")
def _high_extract_of_sign_extension(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.EXTRACT, Unop(UnOp.SEXT, x), (i, j)) if i >= x.width - 1 and j >= x.width:
            sign = extract(x, x.width - 1, x.width - 1)
            return sign if i == j else sext(sign, j - i + 1)
    return None


@rule(Category.EXTRACTION, "extract:0:{top} (y<{w}> :: x<{w}>)", "extract:{w}:{top2} (y<{w}> :: x<{w}>)")
def _extract_of_concat(e: Expr) -> Expr | None:
    match e:
        case Unop(UnOp.EXTRACT, Binop(BinOp.CONCAT, hi, lo), (i, j)):
            if j < lo.width:
                return extract(lo, i, j)
            if i >= lo.width:
                return extract(hi, i - lo.width, j - lo.width)
    return None


@rule(
    Category.EXTRACTION,
    "extract:0:{top} (x<{w2}> + y<{w2}>)",
    "extract:1:{w} (x<{w2}> ^ y<{w2}>)",
    "extract:0:{top} neg x<{w2}>",
    "extract:1:{w} not x<{w2}>",
)
def _extract_through_operation(e: Expr) -> Expr | None:
    """Low bits of +, -, * and any bits of bitwise operations only depend on the same bits of the operands."""
    match e:
        case Unop(UnOp.EXTRACT, Binop(op, a, b), (0, j)) if op in _LOW_BITS_OPS:
            return Binop(op, extract(a, 0, j), extract(b, 0, j))
        case Unop(UnOp.EXTRACT, Binop(op, a, b), (i, j)) if op in _BITWISE_OPS:
            return Binop(op, extract(a, i, j), extract(b, i, j))
        case Unop(UnOp.EXTRACT, Unop(UnOp.NEG, a), (0, j)):
            return Unop(UnOp.NEG, extract(a, 0, j))
        case Unop(UnOp.EXTRACT, Unop(UnOp.NOT, a), (i, j)):
            return Unop(UnOp.NOT, extract(a, i, j))
    return None


@rule(Category.EXTRACTION, "extract:0:7 @[a<32>]4", "extract:8:15 @[a<32>]2")
def _byte_extract_of_load(e: Expr) -> Expr | None:
    """Memory is little-endian: byte-aligned slices of a load are narrower loads."""
    match e:
        case Unop(UnOp.EXTRACT, Load(addr, _), (i, j)) if i % 8 == 0 and (j + 1) % 8 == 0:
            offset = i // 8
            return Load(addr if offset == 0 else add(addr, offset), (j - i + 1) // 8)
    return None
