"""Translation validation of a lifted program against the decoded original.

Two stages: the block graphs must be isomorphic (paired along equally tagged
edges), then every block pair must be equivalent under the assumption
ledger. A pair no backend can prove sends the whole chunk to random
differential testing, seeded with the block counterexamples, which either
finds a replayable counterexample or leaves the chunk at "fuzz passed".
"""

from __future__ import annotations

import logging
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from asmlift.ir.interpreter import MachineState
from asmlift.ir.program import Program
from asmlift.ledger import AssumptionLedger
from asmlift.models import Backend, BlockResult, FuzzSummary, RunConfig, VerdictKind, VerdictReport
from asmlift.validation.brute import brute_check
from asmlift.validation.checker import Solver
from asmlift.validation.fuzz import fuzz_fallback
from asmlift.validation.isomorphism import IsomorphismMismatch, check_isomorphism, verify_pairing
from asmlift.validation.query import EquivQuery, QueryBuilder, QueryError
from asmlift.validation.smtlib import script_name, to_smtlib

logger = logging.getLogger(__name__)

Export = Callable[[str, str], None]


@dataclass(frozen=True)
class _Subject:
    original: Program
    lifted: Program
    ledger: AssumptionLedger | None
    observables: frozenset[str] | None


def _elapsed_ms(t0: float) -> float:
    return round((time.monotonic() - t0) * 1000, 3)


class Validator:
    """Checks lifted programs with the backend chosen in `config`.

    `export` receives (file name, script) for every SMT-LIB query when given.
    """

    def __init__(self, config: RunConfig | None = None, solver: Solver | None = None, export: Export | None = None):
        self.config = config or RunConfig()
        self.solver = solver
        self.export = export

    # -- per block -----------------------------------------------------------

    def _solve(self, q: EquivQuery, script: str) -> BlockResult:
        answer = self.solver.check(script)
        kind = {"unsat": VerdictKind.EQUIVALENT, "sat": VerdictKind.NOT_EQUIVALENT}.get(answer, VerdictKind.UNKNOWN)
        return BlockResult(
            original=q.original.id, lifted=q.lifted.id, kind=kind,
            method=f"smt:{self.solver.name}", detail=str(answer),
        )

    def _brute(self, q: EquivQuery) -> BlockResult:
        c = self.config
        found = brute_check(
            q, width=c.brute_width, enum_cap=c.brute_enum_cap, vector_cap=c.brute_vector_cap,
            samples=c.brute_samples, seed=c.fuzz_seed,
        )
        return BlockResult(
            original=q.original.id, lifted=q.lifted.id,
            kind=VerdictKind.EQUIVALENT if found.equivalent else VerdictKind.NOT_EQUIVALENT,
            method=found.method, detail=found.detail or f"{found.states} state(s)",
            counterexample=dict(found.counterexample), memory=dict(found.memory),
        )

    def check_block(self, q: EquivQuery, backend: Backend, chunk: str = "chunk") -> BlockResult:
        t0 = time.monotonic()
        script = to_smtlib(q) if self.export or backend is Backend.SOLVER else ""
        if self.export:
            self.export(script_name(chunk, q.original.id), script)
        result = self._solve(q, script) if backend is Backend.SOLVER else self._brute(q)
        return result.model_copy(update={"time_ms": _elapsed_ms(t0)})

    # -- whole chunk ---------------------------------------------------------

    def _fuzz(self, s: _Subject, blocks: list[BlockResult] | None = None) -> FuzzSummary:
        hints = [
            MachineState(b.counterexample, b.memory) for b in blocks or () if b.kind is VerdictKind.NOT_EQUIVALENT
        ]
        return fuzz_fallback(
            s.original, s.lifted, s.ledger, observables=s.observables, config=self.config, hints=hints,
        )

    def _backend(self) -> tuple[Backend, str]:
        backend = self.config.backend
        if backend is Backend.SOLVER and (self.solver is None or not self.solver.available):
            logger.warning("No SMT solver available; checking block pairs by enumeration instead")
            return Backend.BRUTE, "no solver available, checked by enumeration and exported"
        return backend, ""

    def _blocks(self, queries: list[EquivQuery], backend: Backend, chunk: str) -> list[BlockResult]:
        if self.config.workers > 1 and len(queries) > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                return list(pool.map(lambda q: self.check_block(q, backend, chunk), queries))
        return [self.check_block(q, backend, chunk) for q in queries]

    def validate(  # noqa: PLR0913
        self,
        original: Program,
        lifted: Program,
        ledger: AssumptionLedger | None = None,
        *,
        observables: frozenset[str] | None = None,
        chunk: str = "chunk",
    ) -> VerdictReport:
        subject = _Subject(original, lifted, ledger, observables)
        backend = self.config.backend
        report = VerdictReport(kind=VerdictKind.UNKNOWN, backend=backend, chunk=chunk)

        pairing = check_isomorphism(original, lifted)
        if isinstance(pairing, IsomorphismMismatch) or not verify_pairing(original, lifted, pairing):
            reason = pairing.reason if isinstance(pairing, IsomorphismMismatch) else "pairing failed re-check"
            logger.info("%s: control-flow graphs differ (%s); fuzzing", chunk, reason)
            return self._settle(report.model_copy(update={"s1": "mismatch", "reason": reason}),
                                self._fuzz(subject))
        if backend is Backend.FUZZ:
            return self._settle(report, self._fuzz(subject))

        effective, note = self._backend()
        report = report.model_copy(update={"exported": bool(note), "reason": note})
        try:
            queries = QueryBuilder(original, lifted, pairing, ledger, observables).queries()
        except QueryError as e:
            logger.warning("%s: %s", chunk, e)
            return report.model_copy(update={"reason": str(e)})
        return self._conclude(report, self._blocks(queries, effective, chunk), subject)

    def _conclude(self, report: VerdictReport, blocks: list[BlockResult], subject: _Subject) -> VerdictReport:
        report = report.model_copy(update={"blocks": blocks})
        if all(b.kind is VerdictKind.EQUIVALENT for b in blocks):
            logger.info("%s: %d block pair(s) proven equivalent", report.chunk, len(blocks))
            return report.model_copy(update={"kind": VerdictKind.EQUIVALENT})
        failing = [f"{b.original}~{b.lifted}" for b in blocks if b.kind is not VerdictKind.EQUIVALENT]
        logger.info("%s: %s not proven; fuzzing", report.chunk, ", ".join(failing))
        return self._settle(report, self._fuzz(subject, blocks))

    @staticmethod
    def _settle(report: VerdictReport, fallback: FuzzSummary) -> VerdictReport:
        kind = VerdictKind.FUZZ_PASSED if fallback.passed else VerdictKind.NOT_EQUIVALENT
        return report.model_copy(update={"kind": kind, "fallback": fallback})


def validate(
    original: Program,
    lifted: Program,
    ledger: AssumptionLedger | None = None,
    *,
    observables: frozenset[str] | None = None,
    config: RunConfig | None = None,
) -> VerdictReport:
    """Validation without a solver or exports (brute and fuzz backends)."""
    return Validator(config).validate(original, lifted, ledger, observables=observables)

