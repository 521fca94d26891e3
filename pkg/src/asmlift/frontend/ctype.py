"""C-level operand types: sized integers and typed pointers (x86-32, so pointers are 32 bits)."""

from __future__ import annotations

import re
from dataclasses import dataclass

from asmlift.errors import AsmLiftError

POINTER_BITS = 32


class CTypeSyntaxError(AsmLiftError):
    pass


@dataclass(frozen=True)
class Int:
    signed: bool
    bits: int

    @property
    def width(self) -> int:
        return self.bits

    @property
    def nbytes(self) -> int:
        return max(1, self.bits // 8)

    def c_name(self) -> str:
        if self.bits == 1:
            return "_Bool"
        bits = self.bits if self.bits in (8, 16, 32, 64) else 32
        return f"{'' if self.signed else 'u'}int{bits}_t"

    def __str__(self) -> str:
        return f"{'i' if self.signed else 'u'}{self.bits}"


@dataclass(frozen=True)
class Ptr:
    pointee: CType
    pointee_bytes: int

    @property
    def width(self) -> int:
        return POINTER_BITS

    @property
    def nbytes(self) -> int:
        return POINTER_BITS // 8

    def c_name(self) -> str:
        return f"{self.pointee.c_name()} *"

    def __str__(self) -> str:
        return f"ptr({self.pointee})"


CType = Int | Ptr

BOOL = Int(signed=False, bits=1)
U32 = Int(signed=False, bits=32)

_INT_RE = re.compile(r"([iu])(8|16|32)")


def parse_ctype(text: str) -> CType:
    """`i8|u8|i16|u16|i32|u32|ptr(CTYPE)`."""
    text = text.strip()
    if m := _INT_RE.fullmatch(text):
        return Int(signed=m.group(1) == "i", bits=int(m.group(2)))
    if text.startswith("ptr(") and text.endswith(")"):
        pointee = parse_ctype(text[4:-1])
        return Ptr(pointee, pointee.nbytes)
    raise CTypeSyntaxError(f"unknown C type {text!r}")


def unsigned_of(width: int) -> Int:
    return Int(signed=False, bits=width)


def signed_of(width: int) -> Int:
    return Int(signed=True, bits=width)
