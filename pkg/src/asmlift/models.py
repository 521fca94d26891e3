"""Shared enumerations, run settings and report records."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from enum import StrEnum

from pydantic import BaseModel, Field


class Level(StrEnum):
    BASIC = "Basic"
    O1 = "O1"
    O2 = "O2"
    O3 = "O3"
    O4 = "O4"
    NO_O1 = "no-O1"
    NO_O2 = "no-O2"
    NO_O3 = "no-O3"


class Backend(StrEnum):
    BRUTE = "brute"
    SOLVER = "solver"
    FUZZ = "fuzz"


class Direction(StrEnum):
    IN = "in"
    OUT = "out"
    INOUT = "inout"


class Relaxation(StrEnum):
    FLAGS = "flags"
    MEMORY = "memory"
    XMM = "xmm"


class ChunkStatus(StrEnum):
    TRIVIAL = "trivial"
    OUT_OF_SCOPE = "out-of-scope"
    REJECTED = "rejected"
    RELEVANT = "relevant"
    ERROR = "error"


class VerdictKind(StrEnum):
    EQUIVALENT = "EQUIVALENT"
    NOT_EQUIVALENT = "NOT_EQUIVALENT"
    FUZZ_PASSED = "FUZZ_PASSED"
    UNKNOWN = "UNKNOWN"
    TRIVIAL = "TRIVIAL"


@dataclass
class ProgressEvent:
    """A progress update emitted while a chunk moves through the pipeline."""
    stage: str
    detail: str = ""


@dataclass
class ProgressEmitter:
    """Collects progress events. Optionally calls a listener on each emit."""
    events: list[ProgressEvent] = field(default_factory=list)
    _on_event: Callable[[ProgressEvent], None] | None = None

    def emit(self, stage: str, detail: str = "") -> None:
        event = ProgressEvent(stage, detail)
        self.events.append(event)
        if self._on_event:
            self._on_event(event)


# ---------------------------------------------------------------------------
#  Run settings
# ---------------------------------------------------------------------------


class RunConfig(BaseModel):
    """Effective settings of one run: configured defaults overridden by CLI or request values."""

    inputs: list[str] = Field(default_factory=list)
    level: Level = Level.O4
    backend: Backend = Backend.BRUTE
    relaxations: frozenset[Relaxation] = frozenset()
    solver_cmd: str = ""
    solver_timeout_ms: int = 10_000
    fuel: int = 1 << 20
    fuzz_iterations: int = 10_000
    fuzz_seed: int = 0
    fuzz_fuel: int = 1 << 12
    brute_width: int = 8
    brute_enum_cap: int = 1 << 16
    brute_vector_cap: int = 1 << 24
    brute_samples: int = 4096
    allow_fuzz: bool = False
    dump_dir: str = ""
    output_dir: str = "out"
    report_path: str = ""
    workers: int = 4


# ---------------------------------------------------------------------------
#  Reports
# ---------------------------------------------------------------------------


class BlockResult(BaseModel):
    """Outcome of one block-pair equivalence query."""

    original: str
    lifted: str
    kind: VerdictKind
    method: str = ""
    detail: str = ""
    time_ms: float = 0.0
    counterexample: dict[str, int] = Field(default_factory=dict)
    memory: dict[int, int] = Field(default_factory=dict)


class FuzzSummary(BaseModel):
    iterations: int
    seed: int
    passed: bool
    vacuous: bool = False
    out_of_fuel: int = 0
    counterexample: dict[str, int] = Field(default_factory=dict)
    mem_seed: int | None = None
    memory: dict[int, int] = Field(default_factory=dict)
    detail: str = ""


class VerdictReport(BaseModel):
    kind: VerdictKind
    backend: Backend
    chunk: str = ""
    s1: str = "ok"
    blocks: list[BlockResult] = Field(default_factory=list)
    fallback: FuzzSummary | None = None
    exported: bool = False
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.kind in (VerdictKind.EQUIVALENT, VerdictKind.TRIVIAL)

    def accepted(self, *, allow_fuzz: bool = False) -> bool:
        return self.ok or (allow_fuzz and self.kind is VerdictKind.FUZZ_PASSED)


class ChunkReport(BaseModel):
    name: str
    status: ChunkStatus
    level: Level
    lifted: bool = False
    validated: VerdictKind | None = None
    template_instructions: int = 0
    emitted_statements: int = 0
    findings: list[str] = Field(default_factory=list)
    error: str = ""

    @property
    def ratio(self) -> float | None:
        if not self.lifted or self.template_instructions == 0:
            return None
        return self.emitted_statements / self.template_instructions


class LevelSummary(BaseModel):
    level: Level
    lifted: int = 0
    validated: int = 0
    ratio_min: float | None = None
    ratio_avg: float | None = None
    ratio_max: float | None = None


class CorpusReport(BaseModel):
    total: int = 0
    statuses: dict[ChunkStatus, int] = Field(default_factory=dict)
    levels: list[LevelSummary] = Field(default_factory=list)
    chunks: list[ChunkReport] = Field(default_factory=list)
