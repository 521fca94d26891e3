"""File artifacts of a run: IR snapshots, ledgers, C files, SMT-LIB scripts, reports."""

from __future__ import annotations

import logging
import re
from pathlib import Path

from pydantic import BaseModel

from asmlift.ir.program import Program
from asmlift.ir.syntax import print_program
from asmlift.ledger import AssumptionLedger

logger = logging.getLogger(__name__)


def _safe(name: str) -> str:
    return re.sub(r"[^\w.-]", "_", name) or "chunk"


class ArtifactStore:
    """Writes under `root`; a store with an empty root writes nothing."""

    def __init__(self, root: str | Path = ""):
        self.root = Path(root) if root else None
        self._stage_counts: dict[str, int] = {}

    @property
    def enabled(self) -> bool:
        return self.root is not None

    def _write(self, relative: str, text: str) -> Path | None:
        if self.root is None:
            return None
        path = self.root / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.debug("Wrote %s (%d bytes)", path, len(text))
        return path

    def snapshot(self, chunk: str, stage: str, program: Program) -> Path | None:
        """One IR file per pipeline stage, numbered in order of arrival."""
        n = self._stage_counts.get(chunk, 0)
        self._stage_counts[chunk] = n + 1
        return self._write(f"{_safe(chunk)}/{n:02d}-{_safe(stage)}.ir", print_program(program))

    def ledger(self, chunk: str, ledger: AssumptionLedger) -> Path | None:
        return self._write(f"{_safe(chunk)}/ledger.jsonl", ledger.to_jsonl())

    def c_source(self, chunk: str, text: str) -> Path | None:
        return self._write(f"{_safe(chunk)}.c", text)

    def smtlib(self, name: str, script: str) -> Path | None:
        return self._write(f"smt/{_safe(name)}", script)

    def report(self, name: str, report: BaseModel) -> Path | None:
        return self._write(f"{_safe(name)}.json", report.model_dump_json(indent=2) + "\n")
