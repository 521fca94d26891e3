"""Use cases: validate a lifted chunk, or a pair of IR texts with a ledger."""

from __future__ import annotations

import logging

from asmlift.commands.lift import LiftOutcome
from asmlift.infrastructure.artifact_store import ArtifactStore
from asmlift.ir.syntax import parse_program
from asmlift.ledger import AssumptionLedger
from asmlift.models import Backend, ChunkStatus, RunConfig, VerdictKind, VerdictReport
from asmlift.validation.checker import Solver
from asmlift.validation.validator import Validator

logger = logging.getLogger(__name__)


class ValidateChunk:
    """Checks the lifted program of a chunk against its decoded program."""

    def __init__(
        self, config: RunConfig | None = None, solver: Solver | None = None, store: ArtifactStore | None = None
    ):
        self.config = config or RunConfig()
        store = store or ArtifactStore()
        export = store.smtlib if store.enabled and self.config.backend is Backend.SOLVER else None
        self.validator = Validator(self.config, solver, export)

    def execute(self, outcome: LiftOutcome) -> VerdictReport:
        if not outcome.lifted:
            trivial = outcome.report.status is ChunkStatus.TRIVIAL
            return VerdictReport(
                kind=VerdictKind.TRIVIAL if trivial else VerdictKind.UNKNOWN,
                backend=self.config.backend, chunk=outcome.report.name,
                reason=outcome.report.error or str(outcome.report.status),
            )
        d = outcome.decoded
        verdict = self.validator.validate(
            d.program, outcome.typed.program, outcome.ledger, observables=d.observables, chunk=d.name
        )
        outcome.report.validated = verdict.kind
        logger.info("%s: %s (%s backend)", d.name, verdict.kind, verdict.backend)
        return verdict


class ValidateIR:
    """Checks two IR texts against each other, as supplied by the caller."""

    def __init__(
        self, config: RunConfig | None = None, solver: Solver | None = None, store: ArtifactStore | None = None
    ):
        self.chunk = ValidateChunk(config, solver, store)

    def execute(
        self,
        original: str,
        lifted: str,
        ledger: str = "",
        *,
        observables: frozenset[str] | None = None,
        name: str = "pair",
    ) -> VerdictReport:
        return self.chunk.validator.validate(
            parse_program(original), parse_program(lifted), AssumptionLedger.from_jsonl(ledger),
            observables=observables, chunk=name,
        )
