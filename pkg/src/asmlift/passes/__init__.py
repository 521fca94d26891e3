"""Verifiability passes and the optimization-level pipeline."""

from asmlift.passes.loops import normalize_loops
from asmlift.passes.pipeline import LEVEL_PASSES, Pass, run_pipeline
from asmlift.passes.predicates import recover_predicates
from asmlift.passes.types import TypeConflictError, TypedProgram, propagate_types
from asmlift.passes.unpack import unpack_registers

__all__ = [
    "LEVEL_PASSES",
    "Pass",
    "TypeConflictError",
    "TypedProgram",
    "normalize_loops",
    "propagate_types",
    "recover_predicates",
    "run_pipeline",
    "unpack_registers",
]
