"""Translation validation: graph isomorphism, per-block equivalence, fuzzing."""

from asmlift.validation.brute import BruteResult, NarrowingChecker, brute_check, narrow
from asmlift.validation.checker import ExprChecker, SamplingChecker, SolverChecker
from asmlift.validation.fuzz import Differ, fuzz_fallback
from asmlift.validation.isomorphism import BlockPairing, IsomorphismMismatch, check_isomorphism, verify_pairing
from asmlift.validation.query import EquivQuery, QueryBuilder, QueryError, build_query
from asmlift.validation.smtlib import to_smtlib
from asmlift.validation.validator import Validator, validate

__all__ = [
    "BlockPairing",
    "BruteResult",
    "Differ",
    "EquivQuery",
    "ExprChecker",
    "IsomorphismMismatch",
    "NarrowingChecker",
    "QueryBuilder",
    "QueryError",
    "SamplingChecker",
    "SolverChecker",
    "Validator",
    "brute_check",
    "build_query",
    "check_isomorphism",
    "fuzz_fallback",
    "narrow",
    "to_smtlib",
    "validate",
    "verify_pairing",
]
