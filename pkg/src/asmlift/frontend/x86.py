"""x86-32 registers and AT&T operand syntax."""

from __future__ import annotations

import re
from collections.abc import Callable
from dataclasses import dataclass

from asmlift.errors import AsmLiftError
from asmlift.ir.expr import BinOp, Const, Expr, Var, add, binop

REGISTERS_32 = ("eax", "ebx", "ecx", "edx", "esi", "edi")
FLAGS = ("cf", "zf", "sf", "of", "df")

# name -> (32-bit parent, lo, hi)
SUB_REGISTERS: dict[str, tuple[str, int, int]] = {
    "al": ("eax", 0, 7), "ah": ("eax", 8, 15), "ax": ("eax", 0, 15),
    "bl": ("ebx", 0, 7), "bh": ("ebx", 8, 15), "bx": ("ebx", 0, 15),
    "cl": ("ecx", 0, 7), "ch": ("ecx", 8, 15), "cx": ("ecx", 0, 15),
    "dl": ("edx", 0, 7), "dh": ("edx", 8, 15), "dx": ("edx", 0, 15),
    "si": ("esi", 0, 15), "di": ("edi", 0, 15),
}
REGISTER_SLOTS: dict[str, tuple[str, int, int]] = {
    **{r: (r, 0, 31) for r in REGISTERS_32}, **SUB_REGISTERS,
}

_UNSUPPORTED_REGISTER_RE = re.compile(
    r"(e?sp|e?bp|spl|bpl|[c-gs]s|xmm\d+|ymm\d+|mm\d+|st(\(\d\))?|cr\d|dr\d|r\d+[dwb]?|r[a-d]x|r[sd]i|r[sb]p)"
)


class DecodeError(AsmLiftError):
    pass


class OutOfScope(AsmLiftError):
    def __init__(self, what: str):
        super().__init__(f"out of scope: {what}")
        self.what = what


def register_width(name: str) -> int:
    _, lo, hi = REGISTER_SLOTS[name]
    return hi - lo + 1


def sized_register(parent: str, bits: int, *, high: bool = False) -> str:
    """Name of the `bits`-wide slot of a 32-bit register (`high` picks ah/bh/ch/dh)."""
    if bits == 32:
        return parent
    for name, (p, lo, hi) in SUB_REGISTERS.items():
        if p == parent and hi - lo + 1 == bits and (lo == 8) == high:
            return name
    raise DecodeError(f"{parent} has no {bits}-bit{' high' if high else ''} slot")


# ---------------------------------------------------------------------------
#  Operands
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegOp:
    name: str

    @property
    def width(self) -> int:
        return register_width(self.name)


@dataclass(frozen=True)
class ImmOp:
    value: Expr

    @property
    def width(self) -> int | None:
        return None if isinstance(self.value, Const) else self.value.width


@dataclass(frozen=True)
class MemOp:
    addr: Expr
    nbytes: int | None = None

    @property
    def width(self) -> int | None:
        return None if self.nbytes is None else 8 * self.nbytes


@dataclass(frozen=True)
class LabelOp:
    name: str


Operand = RegOp | ImmOp | MemOp | LabelOp
Resolver = Callable[[int, str], Operand]

_PLACEHOLDER_RE = re.compile(r"%([bhwk]?)(\d+)")
_INT_RE = re.compile(r"-?(0[xX][0-9a-fA-F]+|\d+)")
_MEM_RE = re.compile(r"(?P<disp>[^()]*)\((?P<inner>[^()]*)\)")


def split_operands(text: str) -> list[str]:
    """Split on top-level commas (commas inside parentheses belong to memory operands)."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
            continue
        depth += (ch == "(") - (ch == ")")
        cur.append(ch)
    if "".join(cur).strip():
        parts.append("".join(cur).strip())
    return parts


def _register(text: str) -> RegOp:
    name = text.lstrip("%").lower()
    if name in REGISTER_SLOTS:
        return RegOp(name)
    if _UNSUPPORTED_REGISTER_RE.fullmatch(name):
        raise OutOfScope(f"register %{name}")
    raise DecodeError(f"unknown register %{name}")


def _atom(text: str, resolve: Resolver) -> Operand:
    if m := _PLACEHOLDER_RE.fullmatch(text):
        return resolve(int(m.group(2)), m.group(1))
    if text.startswith("%"):
        return _register(text)
    if _INT_RE.fullmatch(text):
        return ImmOp(Const(int(text, 0), 32))
    raise DecodeError(f"malformed operand {text!r}")


def _address_part(text: str, resolve: Resolver) -> Expr:
    op = _atom(text.strip(), resolve)
    if isinstance(op, RegOp) and op.width == 32:
        return Var(op.name, 32)
    if isinstance(op, RegOp):
        raise DecodeError(f"16/8-bit register %{op.name} in an address")
    if isinstance(op, ImmOp):
        return op.value
    raise DecodeError(f"{text!r} cannot be used in an address")


def _memory(text: str, resolve: Resolver) -> MemOp:
    m = _MEM_RE.fullmatch(text)
    if not m:
        raise DecodeError(f"malformed memory operand {text!r}")
    parts = [p.strip() for p in m.group("inner").split(",")]
    if len(parts) > 3:
        raise DecodeError(f"malformed memory operand {text!r}")
    terms: list[Expr] = []
    if parts[0]:
        terms.append(_address_part(parts[0], resolve))
    if len(parts) > 1 and parts[1]:
        index = _address_part(parts[1], resolve)
        scale = int(parts[2], 0) if len(parts) > 2 and parts[2] else 1
        if scale not in (1, 2, 4, 8):
            raise DecodeError(f"bad scale {scale} in {text!r}")
        terms.append(index if scale == 1 else binop(BinOp.MUL, index, scale))
    disp = m.group("disp").strip()
    if disp:
        terms.append(_address_part(disp, resolve))
    if not terms:
        raise DecodeError(f"empty address in {text!r}")
    addr = terms[0]
    for t in terms[1:]:
        addr = add(addr, t)
    return MemOp(addr)


def parse_operand(text: str, resolve: Resolver, *, is_jump: bool = False) -> Operand:
    text = text.strip().replace("%%", "%")
    if not text:
        raise DecodeError("empty operand")
    if is_jump and not text.startswith(("%", "$", "*")):
        return LabelOp(text)
    if text.startswith("*"):
        raise OutOfScope("indirect jump")
    if text.startswith("$"):
        op = _atom(text[1:], resolve)
        if not isinstance(op, ImmOp):
            raise DecodeError(f"'$' before a non-immediate: {text!r}")
        return op
    if "(" in text:
        return _memory(text, resolve)
    op = _atom(text, resolve)
    if isinstance(op, ImmOp) and isinstance(op.value, Const) and not _PLACEHOLDER_RE.fullmatch(text):
        # bare number: absolute address
        return MemOp(op.value)
    return op
