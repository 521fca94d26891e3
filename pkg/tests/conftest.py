"""Shared fixtures: corpus access, decoded chunks and a fake solver."""
# ruff: noqa: E402

from __future__ import annotations

import os
import tempfile

# Test settings before any asmlift import triggers config.py
_PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
_REQUIRED = {
    "CONFIG_DIR": os.path.join(_PROJECT_ROOT, "config"),
    "OUTPUT_DIR": tempfile.mkdtemp(prefix="asmlift-out-"),
    "DUMP_DIR": "",
    "FUZZ_ITERATIONS": "200",
    "BRUTE_ENUM_CAP": "4096",
    "BRUTE_SAMPLES": "256",
    "BRUTE_VECTOR_CAP": str(1 << 20),
    "WORKERS": "1",
}
for k, v in _REQUIRED.items():
    os.environ.setdefault(k, v)

from pathlib import Path

import pytest

from asmlift.frontend import DecodedChunk, decode, parse_chunk
from asmlift.infrastructure.solver_gateway import SolverAnswer
from asmlift.ir.program import Program
from asmlift.ir.syntax import parse_program
from asmlift.models import RunConfig

CORPUS_DIR = Path(_PROJECT_ROOT) / "corpus"


# ── Corpus ───────────────────────────────────────────────────────────


def chunk_text(name: str) -> str:
    return (CORPUS_DIR / f"{name}.chunk").read_text(encoding="utf-8")


def decoded(name: str) -> DecodedChunk:
    return decode(parse_chunk(chunk_text(name), name))


def program(text: str) -> Program:
    return parse_program(text)


# ── Fake Solver ──────────────────────────────────────────────────────


class FakeSolver:
    """Stand-in for SolverGateway: records scripts and answers with a fixed verdict."""

    def __init__(self, answer: SolverAnswer = SolverAnswer.UNSAT, *, available: bool = True):
        self.answer = answer
        self._available = available
        self.scripts: list[str] = []

    @property
    def available(self) -> bool:
        return self._available

    @property
    def name(self) -> str:
        return "fake"

    def check(self, script: str) -> SolverAnswer:
        self.scripts.append(script)
        return self.answer


# ── Fixtures ─────────────────────────────────────────────────────────


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS_DIR


@pytest.fixture
def fake_solver():
    return FakeSolver()


@pytest.fixture
def fast_config():
    """Small enough budgets that a whole chunk validates in well under a second."""
    return RunConfig(
        fuzz_iterations=100, brute_enum_cap=4096, brute_vector_cap=1 << 20, brute_samples=256, output_dir="",
        workers=1,
    )
