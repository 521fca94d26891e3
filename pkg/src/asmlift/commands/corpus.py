"""Use case: lift (and optionally validate) every chunk file of a run."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from asmlift.commands.lift import LiftChunk, LiftOutcome
from asmlift.commands.validate import ValidateChunk
from asmlift.errors import AsmLiftError
from asmlift.models import ChunkReport, ChunkStatus, Level, VerdictKind, VerdictReport

logger = logging.getLogger(__name__)

CHUNK_SUFFIX = ".chunk"


def chunk_files(paths: list[str]) -> list[Path]:
    """Chunk files named directly or found in the given directories, sorted by path."""
    found: set[Path] = set()
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            found.update(path.rglob(f"*{CHUNK_SUFFIX}"))
        else:
            found.add(path)
    return sorted(found)


@dataclass
class CorpusRun:
    chunks: list[ChunkReport] = field(default_factory=list)
    verdicts: list[VerdictReport] = field(default_factory=list)

    def failed(self, *, allow_fuzz: bool = False) -> bool:
        """Rejected, errored or unliftable relevant chunks, and verdicts not accepted for a lifted chunk."""
        if any(c.status in (ChunkStatus.REJECTED, ChunkStatus.ERROR) for c in self.chunks):
            return True
        if any(c.status is ChunkStatus.RELEVANT and not c.lifted for c in self.chunks):
            return True
        return any(not v.accepted(allow_fuzz=allow_fuzz) for v in self.verdicts)


class LiftCorpus:
    """Runs every file through lifting (and validation) with a bounded worker pool."""

    def __init__(self, lift: LiftChunk, validate: ValidateChunk | None = None, workers: int = 1):
        self.lift = lift
        self.validate = validate
        self.workers = max(1, workers)

    def _one(self, path: Path, level: Level) -> tuple[ChunkReport, VerdictReport | None]:
        name = path.stem
        try:
            outcome = self.lift.execute(path.read_text(encoding="utf-8"), name, level=level)
        except (OSError, AsmLiftError) as e:
            logger.warning("%s: %s", path, e)
            return ChunkReport(name=name, status=ChunkStatus.ERROR, level=level, error=str(e)), None
        except Exception as e:
            logger.exception("Unexpected failure on %s", path)
            return ChunkReport(name=name, status=ChunkStatus.ERROR, level=level, error=repr(e)), None
        return outcome.report, self._verdict(outcome)

    def _verdict(self, outcome: LiftOutcome) -> VerdictReport | None:
        if self.validate is None or not outcome.lifted:
            return None
        try:
            return self.validate.execute(outcome)
        except AsmLiftError as e:
            logger.warning("%s: validation failed: %s", outcome.report.name, e)
            return VerdictReport(
                kind=VerdictKind.UNKNOWN, backend=self.validate.config.backend, chunk=outcome.report.name,
                reason=str(e),
            )

    def execute(self, paths: list[str], *, level: Level | None = None) -> CorpusRun:
        files = chunk_files(paths)
        level = level or self.lift.config.level
        logger.info("Lifting %d chunk file(s) at %s", len(files), level)
        if self.workers > 1 and len(files) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                results = list(pool.map(lambda p: self._one(p, level), files))
        else:
            results = [self._one(p, level) for p in files]
        run = CorpusRun()
        for report, verdict in results:
            run.chunks.append(report)
            if verdict is not None:
                run.verdicts.append(verdict)
        return run
