"""Use case: one chunk file from text to lifted C, with its status in the corpus taxonomy."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from asmlift.emit import CSnippet, emit_c
from asmlift.errors import AsmLiftError
from asmlift.frontend import (
    ComplianceReport,
    DecodedChunk,
    OutOfScope,
    check_interface,
    decode,
    is_trivial,
    parse_chunk,
)
from asmlift.infrastructure.artifact_store import ArtifactStore
from asmlift.ledger import AssumptionLedger
from asmlift.models import ChunkReport, ChunkStatus, Level, ProgressEmitter, RunConfig
from asmlift.passes import TypedProgram, run_pipeline
from asmlift.validation.checker import ExprChecker

logger = logging.getLogger(__name__)


@dataclass
class LiftOutcome:
    report: ChunkReport
    decoded: DecodedChunk | None = None
    typed: TypedProgram | None = None
    ledger: AssumptionLedger = field(default_factory=AssumptionLedger)
    snippet: CSnippet | None = None
    compliance: ComplianceReport | None = None

    @property
    def lifted(self) -> bool:
        return self.snippet is not None


class LiftChunk:
    """Parses, decodes, classifies and lifts a chunk.

    IR snapshots go to `store` (the dump directory), the C file and ledger to `output`.
    """

    def __init__(
        self,
        config: RunConfig | None = None,
        store: ArtifactStore | None = None,
        checker: ExprChecker | None = None,
        output: ArtifactStore | None = None,
    ):
        self.config = config or RunConfig()
        self.store = store or ArtifactStore()
        self.output = output or ArtifactStore()
        self.checker = checker

    def execute(
        self, text: str, name: str, *, level: Level | None = None, progress: ProgressEmitter | None = None
    ) -> LiftOutcome:
        level = level or self.config.level
        progress = progress or ProgressEmitter()
        outcome = LiftOutcome(ChunkReport(name=name, status=ChunkStatus.RELEVANT, level=level))
        try:
            outcome.decoded = decode(parse_chunk(text, name))
        except OutOfScope as e:
            return self._classified(outcome, ChunkStatus.OUT_OF_SCOPE, f"out of scope: {e}")
        except AsmLiftError as e:
            return self._classified(outcome, ChunkStatus.ERROR, str(e))
        d = outcome.decoded
        outcome.report.template_instructions = d.instructions
        progress.emit("decode", f"{d.instructions} instruction(s)")

        if is_trivial(d):
            return self._classified(outcome, ChunkStatus.TRIVIAL)
        outcome.compliance = check_interface(d, self.config.relaxations)
        outcome.report.findings = [str(f) for f in outcome.compliance.findings]
        if outcome.compliance.rejected:
            return self._classified(outcome, ChunkStatus.REJECTED)

        try:
            self._lift(outcome, level, progress)
        except AsmLiftError as e:
            logger.warning("%s: lifting failed at %s: %s", name, level, e)
            outcome.report.error = str(e)
        return outcome

    def _lift(self, outcome: LiftOutcome, level: Level, progress: ProgressEmitter) -> None:
        d = outcome.decoded
        snapshot = (lambda stage, program: self.store.snapshot(d.name, stage, program)) if self.store.enabled else None
        outcome.typed, outcome.ledger = run_pipeline(
            d, level, checker=self.checker, snapshot=snapshot, progress=progress
        )
        outcome.snippet = emit_c(outcome.typed, outcome.ledger, level=str(level))
        progress.emit("emit", f"{outcome.snippet.statements} statement(s)")
        outcome.report.lifted = True
        outcome.report.emitted_statements = outcome.snippet.statements
        self.output.c_source(d.name, outcome.snippet.text)
        self.output.ledger(d.name, outcome.ledger)
        logger.info(
            "%s: lifted at %s, %d instruction(s) -> %d statement(s)",
            d.name, level, d.instructions, outcome.snippet.statements,
        )

    @staticmethod
    def _classified(outcome: LiftOutcome, status: ChunkStatus, error: str = "") -> LiftOutcome:
        outcome.report.status = status
        outcome.report.error = error
        logger.info("%s: %s%s", outcome.report.name, status, f" ({error})" if error else "")
        return outcome
