"""Equivalence of two expressions over their free variables.

A checker answers True (equivalent), False (a distinguishing assignment
exists) or None (it could not decide).
"""

from __future__ import annotations

import itertools
import logging
import random
from collections.abc import Iterator
from typing import Protocol

from asmlift.ir.expr import Expr, free_vars, has_load, mask
from asmlift.ir.semantics import InterpreterError, compile_expr
from asmlift.validation.smtlib import expr_query

logger = logging.getLogger(__name__)


class ExprChecker(Protocol):
    def equivalent(self, a: Expr, b: Expr) -> bool | None: ...


def edge_values(width: int) -> tuple[int, ...]:
    """Values around 0 and the signed/unsigned extremes of `width` bits."""
    top = mask(width)
    smin = 1 << (width - 1)
    candidates = (0, 1, 2, smin - 1, smin, smin + 1, top - 1, top)
    return tuple(sorted({v & top for v in candidates}))


class _ZeroMemory:
    def load(self, addr: int, nbytes: int) -> int:
        return 0


class SamplingChecker:
    """Evaluates both sides on every combination of edge values (when there are
    few enough) and on `samples` random assignments.

    Exhaustive when every variable is at most `exhaustive_bits` wide and the
    state space fits `enum_cap`; otherwise an agreement is a strong hint, not a proof.
    """

    def __init__(self, samples: int = 512, seed: int = 0, enum_cap: int = 1 << 16, exhaustive_bits: int = 8):
        self.samples = samples
        self.seed = seed
        self.enum_cap = enum_cap
        self.exhaustive_bits = exhaustive_bits

    def _assignments(self, widths: dict[str, int]) -> Iterator[dict[str, int]]:
        names = sorted(widths)
        space = 1
        for w in widths.values():
            space *= 1 << w
        if all(w <= self.exhaustive_bits for w in widths.values()) and space <= self.enum_cap:
            for values in itertools.product(*(range(1 << widths[n]) for n in names)):
                yield dict(zip(names, values, strict=True))
            return
        edges = [edge_values(widths[n]) for n in names]
        combos = 1
        for e in edges:
            combos *= len(e)
        if combos <= self.enum_cap:
            for values in itertools.product(*edges):
                yield dict(zip(names, values, strict=True))
        rng = random.Random(self.seed)
        for _ in range(self.samples):
            yield {n: rng.getrandbits(widths[n]) for n in names}

    def equivalent(self, a: Expr, b: Expr) -> bool | None:
        if a == b:
            return True
        if a.width != b.width:
            return False
        if has_load(a) or has_load(b):
            return None
        widths = {v.name: v.width for v in free_vars(a) | free_vars(b)}
        fa, fb = compile_expr(a), compile_expr(b)
        memory = _ZeroMemory()
        for values in self._assignments(widths):
            try:
                if fa(values, memory) != fb(values, memory):
                    return False
            except InterpreterError:
                return None
        return True


# ---------------------------------------------------------------------------
#  Solver-backed
# ---------------------------------------------------------------------------


class Solver(Protocol):
    @property
    def available(self) -> bool: ...

    @property
    def name(self) -> str: ...

    def check(self, script: str) -> str: ...


class SolverChecker:
    """Asks a solver whether `a != b` is satisfiable; answers None when it cannot tell."""

    def __init__(self, solver: Solver):
        self.solver = solver

    def equivalent(self, a: Expr, b: Expr) -> bool | None:
        if a == b:
            return True
        if a.width != b.width:
            return False
        answer = self.solver.check(expr_query(a, b))
        if answer == "unsat":
            return True
        return False if answer == "sat" else None
