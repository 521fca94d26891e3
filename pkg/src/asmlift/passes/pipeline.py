"""Optimization levels as compositions of the lifting passes."""

from __future__ import annotations

import logging
from collections.abc import Callable
from enum import StrEnum

from asmlift.frontend.decoder import DecodedChunk
from asmlift.ir.program import Program
from asmlift.ledger import AssumptionLedger
from asmlift.models import Level, ProgressEmitter
from asmlift.passes.loops import normalize_loops
from asmlift.passes.predicates import recover_predicates
from asmlift.passes.types import TypedProgram, propagate_types
from asmlift.passes.unpack import unpack_registers
from asmlift.rewrite.propagate import propagate_and_simplify
from asmlift.validation.brute import NarrowingChecker
from asmlift.validation.checker import ExprChecker

logger = logging.getLogger(__name__)

Snapshot = Callable[[str, Program], None]


class Pass(StrEnum):
    PREDICATES = "predicates"
    UNPACK = "unpack"
    PROPAGATION = "propagation"
    LOOPS = "loops"


_ALL = (Pass.PREDICATES, Pass.UNPACK, Pass.PROPAGATION, Pass.LOOPS)

LEVEL_PASSES: dict[Level, tuple[Pass, ...]] = {
    Level.BASIC: (),
    Level.O1: _ALL[:1],
    Level.O2: _ALL[:2],
    Level.O3: _ALL[:3],
    Level.O4: _ALL,
    Level.NO_O1: tuple(p for p in _ALL if p is not Pass.PREDICATES),
    Level.NO_O2: tuple(p for p in _ALL if p is not Pass.UNPACK),
    Level.NO_O3: tuple(p for p in _ALL if p is not Pass.PROPAGATION),
}


def _propagate(t: TypedProgram) -> tuple[TypedProgram, AssumptionLedger]:
    program, ledger = propagate_and_simplify(t.program, t.chunk.observables)
    return t.with_program(program), ledger


def run_pipeline(
    d: DecodedChunk,
    level: Level,
    *,
    checker: ExprChecker | None = None,
    snapshot: Snapshot | None = None,
    progress: ProgressEmitter | None = None,
) -> tuple[TypedProgram, AssumptionLedger]:
    """Type propagation followed by the passes of `level`, in their fixed order; ledgers are concatenated."""
    progress = progress or ProgressEmitter()
    ledger = AssumptionLedger()

    def _stage(name: str, t: TypedProgram) -> None:
        progress.emit(name, f"{t.program.stmt_count()} statement(s)")
        if snapshot:
            snapshot(name, t.program)

    t = propagate_types(d)
    _stage("types", t)
    for step in LEVEL_PASSES[level]:
        logger.debug("Running %s on %s", step, d.name)
        match step:
            case Pass.PREDICATES:
                t = recover_predicates(t, checker or NarrowingChecker())
            case Pass.UNPACK:
                t, found = unpack_registers(t)
                ledger.extend(found)
            case Pass.PROPAGATION:
                t, found = _propagate(t)
                ledger.extend(found)
            case Pass.LOOPS:
                t, found = normalize_loops(t)
                ledger.extend(found)
        _stage(str(step), t)
    return t, ledger
