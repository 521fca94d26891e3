"""Deterministic operand placement for chunk constraints."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from asmlift.errors import AsmLiftError
from asmlift.frontend.chunk import FIXED_REGISTERS, ChunkSpec, OperandSpec

logger = logging.getLogger(__name__)

GENERAL_REGISTERS = ("eax", "ebx", "ecx", "edx", "esi", "edi")


class AllocationError(AsmLiftError):
    pass


@dataclass(frozen=True)
class Reg:
    name: str


@dataclass(frozen=True)
class MemSym:
    """Memory operand: `symbol` names the 32-bit base address."""
    symbol: str


@dataclass(frozen=True)
class Imm:
    value: int | None
    symbol: str


Location = Reg | MemSym | Imm


def operand_symbol(index: int) -> str:
    return f"__op{index}"


def _fixed(op: OperandSpec) -> str | None:
    regs = {FIXED_REGISTERS[c] for c in op.letters if c in FIXED_REGISTERS}
    if len(regs) > 1:
        raise AllocationError(f"{op.name}: conflicting register classes {op.constraint}")
    return regs.pop() if regs else None


def allocate_operands(spec: ChunkSpec) -> dict[int, Location]:
    """Fixed classes first, then `r`/`g` in operand order, then memory and immediates, digits last."""
    placement: dict[int, Location] = {}
    taken = {r for r in GENERAL_REGISTERS if r in spec.clobbers}
    operands = spec.operands

    for i, op in enumerate(operands):
        if op.matched_output is None and (reg := _fixed(op)) is not None:
            if reg in taken:
                raise AllocationError(f"{op.name}: {reg} is already taken by another operand or a clobber")
            placement[i] = Reg(reg)
            taken.add(reg)

    for i, op in enumerate(operands):
        if i in placement or op.matched_output is not None:
            continue
        letters = set(op.letters)
        if letters & {"r", "g"}:
            free = [r for r in GENERAL_REGISTERS if r not in taken]
            if free:
                placement[i] = Reg(free[0])
                taken.add(free[0])
                continue
            if "m" not in letters and "g" not in letters:
                raise AllocationError(f"no free register for {op.name} ({op.constraint})")
        if letters & {"m", "g"}:
            placement[i] = MemSym(operand_symbol(i))
        elif "i" in letters:
            placement[i] = Imm(op.literal_init, operand_symbol(i))
        else:
            raise AllocationError(f"cannot place {op.name} ({op.constraint})")

    for i, op in enumerate(operands):
        if op.matched_output is not None:
            placement[i] = placement[op.matched_output]

    logger.debug("placement for %s: %s", spec.name, placement)
    return dict(sorted(placement.items()))
