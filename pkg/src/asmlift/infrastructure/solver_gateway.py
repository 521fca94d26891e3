"""Gateway to an SMT solver speaking SMT-LIB text: an external command or in-process z3."""

from __future__ import annotations

import logging
import shlex
import subprocess
from enum import StrEnum

from asmlift.config import SOLVER_CMD, SOLVER_TIMEOUT_MS
from asmlift.errors import AsmLiftError

logger = logging.getLogger(__name__)


class SolverUnavailable(AsmLiftError):
    pass


class SolverAnswer(StrEnum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


def _z3_module():
    try:
        import z3  # noqa: PLC0415
    except ImportError:
        return None
    return z3


class SolverGateway:
    """Answers `check` for a complete SMT-LIB script ending in `(check-sat)`."""

    def __init__(self, cmd: str | None = None, timeout_ms: int | None = None):
        self.cmd = SOLVER_CMD if cmd is None else cmd
        self.timeout_ms = SOLVER_TIMEOUT_MS if timeout_ms is None else timeout_ms
        self._z3 = None if self.cmd else _z3_module()

    @property
    def available(self) -> bool:
        return bool(self.cmd) or self._z3 is not None

    @property
    def name(self) -> str:
        if self.cmd:
            return shlex.split(self.cmd)[0]
        return "z3 (in-process)" if self._z3 is not None else "none"

    def check(self, script: str) -> SolverAnswer:
        if self.cmd:
            return self._check_external(script)
        if self._z3 is not None:
            return self._check_z3(script)
        raise SolverUnavailable("no SOLVER_CMD configured and the z3 module is not installed")

    def _check_external(self, script: str) -> SolverAnswer:
        try:
            proc = subprocess.run(
                shlex.split(self.cmd), input=script, capture_output=True, text=True,
                timeout=self.timeout_ms / 1000, check=False,
            )
        except FileNotFoundError as e:
            raise SolverUnavailable(f"solver command not found: {self.cmd}") from e
        except subprocess.TimeoutExpired:
            logger.warning("Solver timed out after %d ms", self.timeout_ms)
            return SolverAnswer.UNKNOWN
        first = proc.stdout.strip().splitlines()[0] if proc.stdout.strip() else ""
        if first in (SolverAnswer.SAT, SolverAnswer.UNSAT):
            return SolverAnswer(first)
        logger.warning("Unexpected solver output: %s %s", first or "<empty>", proc.stderr.strip()[:200])
        return SolverAnswer.UNKNOWN

    def _check_z3(self, script: str) -> SolverAnswer:
        z3 = self._z3
        solver = z3.Solver()
        solver.set("timeout", self.timeout_ms)
        solver.from_string(script)
        result = str(solver.check())
        return SolverAnswer(result) if result in (SolverAnswer.SAT, SolverAnswer.UNSAT) else SolverAnswer.UNKNOWN
