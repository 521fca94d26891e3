"""Register unpacking: independent sub-variables hidden in a wider container.

1. after every assignment to a variable of 8*2^k bits, fresh variables are
   assigned each of its aligned 8*2^i-bit slices (i < k);
2. every extraction matching one of these slices reads the fresh variable;
3. the fresh variables nothing reads are removed.

A container live on entry also has its slices copied at the top of the entry
block, so a slice read before any assignment sees the entry value.

Expression propagation later rebuilds the wider values from the slices.
Slices of a 32-bit register take their x86 names (al, ah, ax) when they have
one, `eax_16_23` otherwise.
"""

from __future__ import annotations

import logging

from asmlift.frontend.x86 import SUB_REGISTERS
from asmlift.ir.dataflow import liveness, upward_exposed
from asmlift.ir.expr import Expr, Unop, UnOp, Var, extract, transform
from asmlift.ir.program import Assign, Program, Stmt, map_exprs
from asmlift.ledger import Alias, AssumptionLedger
from asmlift.passes.types import TypedProgram
from asmlift.rewrite.propagate import eliminate_dead_code

logger = logging.getLogger(__name__)

Slice = tuple[str, int, int]

_X86_NAMES = {slot: name for name, slot in SUB_REGISTERS.items()}


def slices(width: int) -> list[tuple[int, int]]:
    """Aligned (lo, hi) slices of every power-of-two byte granularity below `width`."""
    if width < 16 or width % 8 or (width // 8) & (width // 8 - 1):
        return []
    found = []
    size = 8
    while size < width:
        found.extend((lo, lo + size - 1) for lo in range(0, width, size))
        size *= 2
    return found


def _only_slice_copies(defs: list[Stmt], var: str, lo: int, hi: int) -> bool:
    """Is an existing variable only ever assigned that very slice (as the decoder does for narrow outputs)?"""
    if not defs:
        return False
    for stmt in defs:
        match stmt:
            case Assign(_, Unop(UnOp.EXTRACT, Var(name, _), (i, j))) if name == var and (i, j) == (lo, hi):
                continue
        return False
    return True


def _slice_names(p: Program) -> dict[Slice, str]:
    """Fresh variable per slice of every unpackable variable."""
    existing = p.variables()
    assigned: dict[str, list[Stmt]] = {}
    for b in p.blocks:
        for stmt in b.body:
            if isinstance(stmt, Assign):
                assigned.setdefault(stmt.lhs.name, []).append(stmt)

    names: dict[Slice, str] = {}
    for var in sorted(assigned):
        for lo, hi in slices(existing[var]):
            name = _X86_NAMES.get((var, lo, hi), f"{var}_{lo}_{hi}")
            if name in existing and not _only_slice_copies(assigned.get(name, []), var, lo, hi):
                name = f"{var}_{lo}_{hi}"
                if name in existing:
                    continue
            names[(var, lo, hi)] = name
    return names


def unpack_program(p: Program, observables: frozenset[str] | None = None) -> Program:
    names = _slice_names(p)
    if not names:
        return p
    by_var: dict[str, list[tuple[int, int, str]]] = {}
    for (var, lo, hi), name in names.items():
        by_var.setdefault(var, []).append((lo, hi, name))

    def _read_slices(e: Expr) -> Expr:
        def _one(node: Expr) -> Expr:
            match node:
                case Unop(UnOp.EXTRACT, Var(var, _), (lo, hi)) if (var, lo, hi) in names:
                    return Var(names[(var, lo, hi)], hi - lo + 1)
            return node
        return transform(e, _one)

    exposed = upward_exposed(p)
    blocks = {}
    for b in p.blocks:
        body: list[Stmt] = []
        if b.id == p.entry:
            for var in sorted(exposed & set(by_var)):
                container = Var(var, p.variables()[var])
                body.extend(Assign(Var(name, hi - lo + 1), extract(container, lo, hi)) for lo, hi, name in by_var[var])
        for stmt in b.body:
            stmt = map_exprs(stmt, _read_slices)
            if isinstance(stmt, Assign) and stmt.rhs == stmt.lhs:
                continue
            body.append(stmt)
            if isinstance(stmt, Assign):
                for lo, hi, name in by_var.get(stmt.lhs.name, []):
                    body.append(Assign(Var(name, hi - lo + 1), extract(stmt.lhs, lo, hi)))
        blocks[b.id] = b.with_body(body, map_exprs(b.terminator, _read_slices))
    unpacked = p.replace_blocks(blocks)
    return eliminate_dead_code(unpacked, observables, only=frozenset(names.values()))


def slice_aliases(before: Program, after: Program, observables: frozenset[str] | None = None) -> AssumptionLedger:
    """A slice read across blocks equals the extraction from its container there."""
    names = _slice_names(before)
    live = frozenset().union(*liveness(after, observables).values())
    ledger = AssumptionLedger()
    for (var, lo, hi), name in sorted(names.items()):
        if name in live and name not in before.variables():
            ledger.add(Alias(name, hi - lo + 1, extract(Var(var, before.variables()[var]), lo, hi), "unpack"))
    return ledger


def unpack_registers(t: TypedProgram) -> tuple[TypedProgram, AssumptionLedger]:
    program = unpack_program(t.program, t.chunk.observables)
    logger.debug("Unpacked %s: %d -> %d statements", t.chunk.name, t.program.stmt_count(), program.stmt_count())
    return t.with_program(program), slice_aliases(t.program, program, t.chunk.observables)
