"""Composition root: settings from config, gateways and use cases built from them."""

from __future__ import annotations

from asmlift.commands.corpus import LiftCorpus
from asmlift.commands.lift import LiftChunk
from asmlift.commands.report import CorpusMetrics
from asmlift.commands.validate import ValidateChunk, ValidateIR
from asmlift.config import (
    ASMLIFT_BACKEND,
    ASMLIFT_LEVEL,
    BRUTE_ENUM_CAP,
    BRUTE_SAMPLES,
    BRUTE_VECTOR_CAP,
    BRUTE_WIDTH,
    DUMP_DIR,
    FUZZ_FUEL,
    FUZZ_ITERATIONS,
    FUZZ_SEED,
    INTERP_FUEL,
    OUTPUT_DIR,
    SOLVER_CMD,
    SOLVER_TIMEOUT_MS,
    WORKERS,
)
from asmlift.infrastructure.artifact_store import ArtifactStore
from asmlift.infrastructure.solver_gateway import SolverGateway
from asmlift.models import Backend, Level, RunConfig


def default_config() -> RunConfig:
    return RunConfig(
        level=Level(ASMLIFT_LEVEL),
        backend=Backend(ASMLIFT_BACKEND),
        solver_cmd=SOLVER_CMD,
        solver_timeout_ms=SOLVER_TIMEOUT_MS,
        fuel=INTERP_FUEL,
        fuzz_iterations=FUZZ_ITERATIONS,
        fuzz_seed=FUZZ_SEED,
        fuzz_fuel=FUZZ_FUEL,
        brute_width=BRUTE_WIDTH,
        brute_enum_cap=BRUTE_ENUM_CAP,
        brute_vector_cap=BRUTE_VECTOR_CAP,
        brute_samples=BRUTE_SAMPLES,
        dump_dir=DUMP_DIR,
        output_dir=OUTPUT_DIR,
        workers=WORKERS,
    )


def create_solver(config: RunConfig) -> SolverGateway:
    return SolverGateway(cmd=config.solver_cmd or None, timeout_ms=config.solver_timeout_ms)


def create_store(config: RunConfig) -> ArtifactStore:
    return ArtifactStore(config.dump_dir)


def create_lift_chunk(config: RunConfig) -> LiftChunk:
    return LiftChunk(config, create_store(config), output=ArtifactStore(config.output_dir))


def create_validate_chunk(config: RunConfig) -> ValidateChunk:
    return ValidateChunk(config, create_solver(config), create_store(config))


def create_validate_ir(config: RunConfig) -> ValidateIR:
    return ValidateIR(config, create_solver(config), create_store(config))


def create_corpus(config: RunConfig, *, validate: bool = False) -> LiftCorpus:
    checker = create_validate_chunk(config) if validate else None
    return LiftCorpus(create_lift_chunk(config), checker, workers=config.workers)


def create_metrics(config: RunConfig) -> CorpusMetrics:
    return CorpusMetrics(create_corpus(config, validate=True))
