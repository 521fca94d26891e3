"""Bitvector expressions: constants, variables, byte loads, operators and ternaries.

Every node is an immutable, hashable value. Widths are computed, never stored
twice; constants are reduced modulo 2^width on construction.
"""

from __future__ import annotations

from collections.abc import Callable, Iterator, Mapping
from dataclasses import dataclass
from enum import StrEnum
from functools import cached_property


class UnOp(StrEnum):
    NOT = "not"
    NEG = "neg"
    UEXT = "uext"
    SEXT = "sext"
    EXTRACT = "extract"


class BinOp(StrEnum):
    ADD = "+"
    SUB = "-"
    MUL = "*"
    UDIV = "udiv"
    UREM = "urem"
    SDIV = "sdiv"
    SREM = "srem"
    AND = "&"
    OR = "|"
    XOR = "^"
    SHL = "shl"
    SHR = "shr"
    SAR = "sar"
    EQ = "="
    NEQ = "!="
    UGT = ">u"
    ULT = "<u"
    UGE = ">=u"
    ULE = "<=u"
    SGT = ">s"
    SLT = "<s"
    SGE = ">=s"
    SLE = "<=s"
    CONCAT = "::"


COMPARISONS = frozenset({
    BinOp.EQ, BinOp.NEQ, BinOp.UGT, BinOp.ULT, BinOp.UGE, BinOp.ULE,
    BinOp.SGT, BinOp.SLT, BinOp.SGE, BinOp.SLE,
})
SHIFTS = frozenset({BinOp.SHL, BinOp.SHR, BinOp.SAR})
DIVISIONS = frozenset({BinOp.UDIV, BinOp.UREM, BinOp.SDIV, BinOp.SREM})
ASSOCIATIVE = frozenset({BinOp.ADD, BinOp.MUL, BinOp.AND, BinOp.OR, BinOp.XOR})
COMMUTATIVE = ASSOCIATIVE | {BinOp.EQ, BinOp.NEQ}

# x op y  <=>  y swapped_op x
SWAPPED = {
    BinOp.EQ: BinOp.EQ, BinOp.NEQ: BinOp.NEQ,
    BinOp.UGT: BinOp.ULT, BinOp.ULT: BinOp.UGT, BinOp.UGE: BinOp.ULE, BinOp.ULE: BinOp.UGE,
    BinOp.SGT: BinOp.SLT, BinOp.SLT: BinOp.SGT, BinOp.SGE: BinOp.SLE, BinOp.SLE: BinOp.SGE,
}
# not (x op y)  <=>  x negated_op y
NEGATED = {
    BinOp.EQ: BinOp.NEQ, BinOp.NEQ: BinOp.EQ,
    BinOp.UGT: BinOp.ULE, BinOp.ULE: BinOp.UGT, BinOp.ULT: BinOp.UGE, BinOp.UGE: BinOp.ULT,
    BinOp.SGT: BinOp.SLE, BinOp.SLE: BinOp.SGT, BinOp.SLT: BinOp.SGE, BinOp.SGE: BinOp.SLT,
}


def mask(width: int) -> int:
    return (1 << width) - 1


def to_signed(value: int, width: int) -> int:
    value &= mask(width)
    return value - (1 << width) if value >> (width - 1) else value


# ---------------------------------------------------------------------------
#  Nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: int
    width: int

    def __post_init__(self):
        if self.width > 0:
            object.__setattr__(self, "value", self.value & mask(self.width))

    @property
    def signed(self) -> int:
        return to_signed(self.value, self.width)

    @property
    def is_ones(self) -> bool:
        return self.value == mask(self.width)


@dataclass(frozen=True)
class Var:
    name: str
    width: int


@dataclass(frozen=True)
class Load:
    addr: Expr
    nbytes: int

    @property
    def width(self) -> int:
        return 8 * self.nbytes


@dataclass(frozen=True)
class Unop:
    """Unary operator. `params` holds (n,) for uext/sext and (lo, hi) for extract."""
    op: UnOp
    arg: Expr
    params: tuple[int, ...] = ()

    @cached_property
    def width(self) -> int:
        match self.op:
            case UnOp.UEXT | UnOp.SEXT:
                return self.params[0]
            case UnOp.EXTRACT:
                lo, hi = self.params
                return hi - lo + 1
            case _:
                return self.arg.width


@dataclass(frozen=True)
class Binop:
    op: BinOp
    lhs: Expr
    rhs: Expr

    @cached_property
    def width(self) -> int:
        if self.op in COMPARISONS:
            return 1
        if self.op is BinOp.CONCAT:
            return self.lhs.width + self.rhs.width
        return self.lhs.width


@dataclass(frozen=True)
class Ite:
    cond: Expr
    then: Expr
    orelse: Expr

    @property
    def width(self) -> int:
        return self.then.width


Expr = Const | Var | Load | Unop | Binop | Ite

TRUE = Const(1, 1)
FALSE = Const(0, 1)


# ---------------------------------------------------------------------------
#  Constructors
# ---------------------------------------------------------------------------


def ones(width: int) -> Const:
    return Const(mask(width), width)


def zero(width: int) -> Const:
    return Const(0, width)


def uext(e: Expr, n: int) -> Unop:
    return Unop(UnOp.UEXT, e, (n,))


def sext(e: Expr, n: int) -> Unop:
    return Unop(UnOp.SEXT, e, (n,))


def extract(e: Expr, lo: int, hi: int) -> Unop:
    return Unop(UnOp.EXTRACT, e, (lo, hi))


def bnot(e: Expr) -> Unop:
    return Unop(UnOp.NOT, e)


def neg(e: Expr) -> Unop:
    return Unop(UnOp.NEG, e)


def msb(e: Expr) -> Unop:
    return extract(e, e.width - 1, e.width - 1)


def binop(op: BinOp, lhs: Expr, rhs: Expr | int) -> Binop:
    if isinstance(rhs, int):
        rhs = Const(rhs, lhs.width)
    return Binop(op, lhs, rhs)


def add(lhs: Expr, rhs: Expr | int) -> Binop:
    return binop(BinOp.ADD, lhs, rhs)


def sub(lhs: Expr, rhs: Expr | int) -> Binop:
    return binop(BinOp.SUB, lhs, rhs)


def eq(lhs: Expr, rhs: Expr | int) -> Binop:
    return binop(BinOp.EQ, lhs, rhs)


def concat(hi: Expr, lo: Expr) -> Binop:
    return Binop(BinOp.CONCAT, hi, lo)


# ---------------------------------------------------------------------------
#  Traversal
# ---------------------------------------------------------------------------


def children(e: Expr) -> tuple[Expr, ...]:
    match e:
        case Load(addr, _):
            return (addr,)
        case Unop(_, arg, _):
            return (arg,)
        case Binop(_, lhs, rhs):
            return (lhs, rhs)
        case Ite(cond, then, orelse):
            return (cond, then, orelse)
        case _:
            return ()


def rebuild(e: Expr, kids: tuple[Expr, ...]) -> Expr:
    """Return `e` with its children replaced, reusing `e` when nothing changed."""
    if kids == children(e):
        return e
    match e:
        case Load(_, nbytes):
            return Load(kids[0], nbytes)
        case Unop(op, _, params):
            return Unop(op, kids[0], params)
        case Binop(op, _, _):
            return Binop(op, kids[0], kids[1])
        case Ite():
            return Ite(kids[0], kids[1], kids[2])
        case _:
            return e


def transform(e: Expr, fn: Callable[[Expr], Expr]) -> Expr:
    """Bottom-up rewrite: children first, then `fn` on the rebuilt node."""
    kids = tuple(transform(k, fn) for k in children(e))
    return fn(rebuild(e, kids))


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order iteration over all sub-expressions."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(children(node)))


def free_vars(e: Expr) -> frozenset[Var]:
    return frozenset(n for n in walk(e) if isinstance(n, Var))


def var_names(e: Expr) -> frozenset[str]:
    return frozenset(v.name for v in free_vars(e))


def has_load(e: Expr) -> bool:
    return any(isinstance(n, Load) for n in walk(e))


def node_count(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    if not mapping:
        return e

    def _sub(node: Expr) -> Expr:
        if isinstance(node, Var) and node.name in mapping:
            return mapping[node.name]
        return node

    return transform(e, _sub)


def is_const(e: Expr, value: int | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)
