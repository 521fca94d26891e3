"""C rendering of IR expressions.

Rendered values carry their width and whether the text is already reduced
to it (`exact`). Narrow arithmetic is left to C's integer promotion and only
reduced where the high bits would be observed: comparisons, divisions,
right shifts, extensions and conversions to wider or signed types. Byte
offsets added to a typed pointer are turned back into element offsets.
"""

from __future__ import annotations

import re
from collections.abc import Callable, Mapping
from dataclasses import dataclass

from asmlift.errors import AsmLiftError
from asmlift.frontend.ctype import CType, Int, Ptr
from asmlift.ir.expr import BinOp, Binop, Const, Expr, Ite, Load, Unop, UnOp, Var, mask, to_signed

_CONTAINERS = (8, 16, 32, 64)
_IDENT_RE = re.compile(r"[A-Za-z_]\w*|\d+[uUlL]*|0x[0-9a-fA-F]+[uUlL]*")

_COMPARE = {
    BinOp.EQ: "==", BinOp.NEQ: "!=",
    BinOp.ULT: "<", BinOp.ULE: "<=", BinOp.UGT: ">", BinOp.UGE: ">=",
    BinOp.SLT: "<", BinOp.SLE: "<=", BinOp.SGT: ">", BinOp.SGE: ">=",
}
_SIGNED_COMPARE = frozenset({BinOp.SLT, BinOp.SLE, BinOp.SGT, BinOp.SGE})
_BITWISE = {BinOp.AND: "&", BinOp.OR: "|", BinOp.XOR: "^"}


class EmitError(AsmLiftError):
    pass


def container(width: int) -> int:
    for size in _CONTAINERS:
        if width <= size:
            return size
    raise EmitError(f"no C integer type holds {width} bits")


def uint_name(width: int) -> str:
    return "_Bool" if width == 1 else f"uint{container(width)}_t"


def int_name(width: int) -> str:
    return f"int{container(width)}_t"


def ctype_name(t: CType) -> str:
    match t:
        case Ptr(pointee, _):
            inner = ctype_name(pointee)
            return f"{inner}*" if inner.endswith("*") else f"{inner} *"
        case Int(True, bits) if bits > 1:
            return int_name(bits)
        case Int(_, bits):
            return uint_name(bits)
    raise EmitError(f"no C spelling for {t}")


def wrapped(text: str) -> bool:
    """Is `text` one parenthesized group?"""
    if not text.startswith("(") or not text.endswith(")"):
        return False
    depth = 0
    for i, ch in enumerate(text):
        depth += {"(": 1, ")": -1}.get(ch, 0)
        if depth == 0 and i < len(text) - 1:
            return False
    return True


def atom(text: str) -> str:
    return text if wrapped(text) or _IDENT_RE.fullmatch(text) else f"({text})"


def bare(text: str) -> str:
    return text[1:-1] if wrapped(text) else text


def cast(type_name: str, text: str) -> str:
    return f"({type_name}){atom(text)}"


def literal(value: int, width: int) -> str:
    if width == 1:
        return str(value & 1)
    suffix = "ull" if width > 32 else "u"
    return f"{value}{suffix}" if value < 1 << 16 else f"{value:#x}{suffix}"


def fit(text: str, width: int) -> str:
    """`text` reduced modulo 2^width."""
    if width in (8, 16):
        return cast(uint_name(width), text)
    if width in (32, 64):
        return text
    return f"({atom(text)} & {literal(mask(width), container(width))})"


@dataclass(frozen=True)
class CValue:
    text: str
    width: int
    exact: bool = True
    signed: bool = False
    ptr: Ptr | None = None


# ---------------------------------------------------------------------------
#  Renderer
# ---------------------------------------------------------------------------


class ExprRenderer:
    def __init__(self, name_of: Callable[[str], str], type_of: Mapping[str, CType]):
        self.name_of = name_of
        self.type_of = type_of

    # -- views ---------------------------------------------------------------

    def unsigned(self, v: CValue) -> str:
        """Exact unsigned text."""
        if v.ptr is not None:
            return f"(uint32_t)(uintptr_t){atom(v.text)}"
        if v.signed:
            return cast(uint_name(v.width), v.text)
        return v.text if v.exact else fit(v.text, v.width)

    def low(self, v: CValue) -> str:
        """Unsigned text whose low `width` bits are right; wide signed values are made unsigned."""
        if v.ptr is not None or (v.signed and v.width >= 32):
            return self.unsigned(v)
        return v.text

    def signed(self, v: CValue) -> str:
        if v.signed and v.exact and v.ptr is None:
            return v.text
        if v.width in _CONTAINERS:
            return cast(int_name(v.width), self.unsigned(v))
        sign = literal(1 << (v.width - 1), container(v.width))
        return cast(int_name(v.width), f"(({self.unsigned(v)} ^ {sign}) - {sign})")

    def convert(self, v: CValue, target: CType) -> str:
        """Text of `v` assigned to a location of type `target`."""
        match target:
            case Ptr(pointee, _):
                if v.ptr is not None:
                    return v.text if v.ptr.pointee == pointee else cast(ctype_name(target), v.text)
                return f"({ctype_name(target)})(uintptr_t){atom(self.unsigned(v))}"
            case Int(True, bits) if bits > 1:
                if v.signed and v.exact and v.ptr is None and container(v.width) == container(bits):
                    return v.text
                return cast(int_name(bits), self.low(v))
            case Int(_, 1):
                return self.unsigned(v)
        if v.ptr is not None:
            return self.unsigned(v)
        return v.text

    # -- nodes ---------------------------------------------------------------

    def render(self, e: Expr) -> CValue:  # noqa: PLR0911
        match e:
            case Const(value, width):
                return CValue(literal(value, width), width)
            case Var(name, width):
                t = self.type_of.get(name)
                if isinstance(t, Ptr):
                    return CValue(self.name_of(name), width, ptr=t)
                signed = isinstance(t, Int) and t.signed and width > 1
                return CValue(self.name_of(name), width, signed=signed)
            case Load(addr, nbytes):
                return self.deref(addr, nbytes)
            case Unop():
                return self._unop(e)
            case Binop(op, _, _) if op in _COMPARE:
                return self._compare(e)
            case Binop():
                return self._binop(e)
            case Ite():
                raise EmitError("conditional expression reached the C renderer")
        raise EmitError(f"cannot render {e!r}")

    def deref(self, addr: Expr, nbytes: int) -> CValue:
        """`*p` for a typed pointer of matching width, a cast pointer otherwise."""
        width = 8 * nbytes
        pointer = self.render(addr)
        if pointer.ptr is not None and pointer.ptr.pointee.width == width:
            pointee = pointer.ptr.pointee
            signed = isinstance(pointee, Int) and pointee.signed
            nested = pointee if isinstance(pointee, Ptr) else None
            return CValue(f"*{atom(pointer.text)}", width, signed=signed, ptr=nested)
        if pointer.ptr is not None:
            return CValue(f"*({uint_name(width)} *){atom(pointer.text)}", width)
        return CValue(f"*({uint_name(width)} *)(uintptr_t){atom(self.unsigned(pointer))}", width)

    def store_type(self, addr: Expr, nbytes: int) -> CType:
        pointer = self.render(addr)
        if pointer.ptr is not None and pointer.ptr.pointee.width == 8 * nbytes:
            return pointer.ptr.pointee
        return Int(signed=False, bits=8 * nbytes)

    def _compare(self, e: Binop) -> CValue:
        a, b = self.render(e.lhs), self.render(e.rhs)
        if e.op in _SIGNED_COMPARE:
            return CValue(f"({self.signed(a)} {_COMPARE[e.op]} {self.signed(b)})", 1)
        if a.ptr is not None and b.ptr is not None and e.op in (BinOp.EQ, BinOp.NEQ):
            return CValue(f"({a.text} {_COMPARE[e.op]} {b.text})", 1)
        return CValue(f"({self.unsigned(a)} {_COMPARE[e.op]} {self.unsigned(b)})", 1)

    # -- pointer arithmetic ----------------------------------------------------

    def _elements(self, offset: Expr, nbytes: int) -> tuple[str, Expr] | None:
        """(sign, element count) for a byte offset that is a multiple of `nbytes`."""
        match offset:
            case Const(value, width):
                k = to_signed(value, width)
                if k % nbytes == 0:
                    return ("-" if k < 0 else "+"), Const(abs(k) // nbytes, width)
            case Binop(BinOp.MUL, Const(c, w), other) | Binop(BinOp.MUL, other, Const(c, w)) if c % nbytes == 0:
                scale = to_signed(c, w) // nbytes
                sign = "-" if scale < 0 else "+"
                return sign, other if abs(scale) == 1 else Binop(BinOp.MUL, Const(abs(scale), w), other)
            case _ if nbytes == 1:
                return "+", offset
        return None

    def _pointer_arith(self, e: Binop) -> CValue | None:
        lhs, rhs = e.lhs, e.rhs
        base = self.render(lhs)
        if e.op is BinOp.ADD and base.ptr is None:
            lhs, rhs = rhs, lhs
            base = self.render(lhs)
        offset = self.render(rhs)
        if base.ptr is None or offset.ptr is not None:
            return None
        found = self._elements(rhs, base.ptr.pointee_bytes)
        if found is None:
            op = "+" if e.op is BinOp.ADD else "-"
            moved = f"(uint8_t *){atom(base.text)} {op} {self.unsigned(offset)}"
            return CValue(cast(ctype_name(base.ptr), f"({moved})"), 32, ptr=base.ptr)
        sign, count = found
        if e.op is BinOp.SUB:
            sign = "-" if sign == "+" else "+"
        return CValue(f"({base.text} {sign} {self.unsigned(self.render(count))})", 32, ptr=base.ptr)

    # -- operators -------------------------------------------------------------

    def _binop(self, e: Binop) -> CValue:  # noqa: C901, PLR0911
        op, w = e.op, e.width
        if op in (BinOp.ADD, BinOp.SUB) and (moved := self._pointer_arith(e)) is not None:
            return moved
        a, b = self.render(e.lhs), self.render(e.rhs)
        narrow = w < 32
        if w == 1 and op in (BinOp.ADD, BinOp.SUB, BinOp.MUL):
            symbol = "&" if op is BinOp.MUL else "^"
            return CValue(f"({self.unsigned(a)} {symbol} {self.unsigned(b)})", 1)
        match op:
            case BinOp.ADD | BinOp.SUB:
                symbol = "+" if op is BinOp.ADD else "-"
                if narrow:
                    return CValue(f"({self.unsigned(a)} {symbol} {self.unsigned(b)})", w, exact=False)
                return CValue(f"({self.low(a)} {symbol} {self.low(b)})", w)
            case BinOp.MUL:
                if narrow:
                    return CValue(f"((uint32_t){atom(self.unsigned(a))} * {self.unsigned(b)})", w, exact=False)
                return CValue(f"({self.low(a)} * {self.low(b)})", w)
            case BinOp.AND | BinOp.OR | BinOp.XOR:
                view = self.unsigned if narrow else self.low
                return CValue(f"({view(a)} {_BITWISE[op]} {view(b)})", w)
            case BinOp.SHL:
                if narrow:
                    return CValue(f"((uint32_t){atom(self.unsigned(a))} << {self.unsigned(b)})", w, exact=False)
                return CValue(f"({self.low(a)} << {self.unsigned(b)})", w)
            case BinOp.SHR:
                return CValue(f"({self.unsigned(a)} >> {self.unsigned(b)})", w)
            case BinOp.SAR:
                return CValue(cast(uint_name(w), f"({self.signed(a)} >> {self.unsigned(b)})"), w)
            case BinOp.UDIV | BinOp.UREM:
                symbol = "/" if op is BinOp.UDIV else "%"
                return CValue(f"({self.unsigned(a)} {symbol} {self.unsigned(b)})", w)
            case BinOp.SDIV | BinOp.SREM:
                symbol = "/" if op is BinOp.SDIV else "%"
                return CValue(cast(uint_name(w), f"({self.signed(a)} {symbol} {self.signed(b)})"), w)
            case BinOp.CONCAT:
                hi = cast(uint_name(w), self.unsigned(a))
                return CValue(f"(({hi} << {e.rhs.width}) | {self.unsigned(b)})", w)
        raise EmitError(f"no C rendering for {op}")

    def _unop(self, e: Unop) -> CValue:  # noqa: PLR0911
        a = self.render(e.arg)
        w = e.width
        match e.op:
            case UnOp.NOT:
                if w == 1:
                    return CValue(f"!{atom(self.unsigned(a))}", 1)
                return CValue(f"~{atom(self.low(a))}", w, exact=w >= 32)
            case UnOp.NEG:
                if w == 1:
                    return a
                if w < 32:
                    return CValue(f"(0u - {self.unsigned(a)})", w, exact=False)
                return CValue(f"-{atom(self.low(a))}", w)
            case UnOp.UEXT:
                if container(w) == container(a.width) and a.ptr is None and not a.signed:
                    return CValue(self.unsigned(a), w)
                return CValue(cast(uint_name(w), self.unsigned(a)), w)
            case UnOp.SEXT:
                if a.width == 1:
                    return CValue(f"(0u - {self.unsigned(a)})", w, exact=False)
                return CValue(cast(uint_name(w), self.signed(a)), w)
            case UnOp.EXTRACT:
                lo, hi = e.params
                shifted = f"({self.unsigned(a)} >> {lo})" if lo else self.unsigned(a)
                if hi == e.arg.width - 1:
                    return CValue(shifted, w)
                if w == 1:
                    return CValue(f"({shifted} & 1u)", 1)
                return CValue(fit(shifted, w), w)
        raise EmitError(f"no C rendering for {e.op}")
