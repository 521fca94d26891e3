"""Does the command line map its flags onto a run and report through its exit status?"""

from __future__ import annotations

import argparse
import json

import pytest
from conftest import CORPUS_DIR

from asmlift.cli import build_parser, main, parse_level, run_config
from asmlift.models import Backend, Level, Relaxation

ORIGINAL = "bb0:\n  t<8> := a<8> ^ 255<8>\n  r<8> := t ^ 255<8>\n  halt\n"


def _chunk(name: str) -> str:
    return str(CORPUS_DIR / f"{name}.chunk")


# ── Flags ────────────────────────────────────────────────────────────


def test_levels_are_case_insensitive():
    assert parse_level("basic") is Level.BASIC
    assert parse_level("NO-O2") is Level.NO_O2
    with pytest.raises(argparse.ArgumentTypeError):
        parse_level("O9")


def test_flags_override_the_configured_defaults():
    args = build_parser().parse_args(
        ["validate", "a.chunk", "--level", "O2", "--relax", "flags", "--seed", "7",
         "--backend", "fuzz", "--workers", "2"]
    )
    config = run_config(args)
    assert config.inputs == ["a.chunk"]
    assert config.level is Level.O2
    assert config.relaxations == frozenset({Relaxation.FLAGS})
    assert config.fuzz_seed == 7
    assert config.backend is Backend.FUZZ
    assert config.workers == 2
    assert not config.allow_fuzz


def test_smtlib_export_is_the_solver_backend_writing_scripts():
    args = build_parser().parse_args(["validate", "a.chunk", "--backend", "smtlib-export", "--output-dir", "out"])
    config = run_config(args)
    assert config.backend is Backend.SOLVER
    assert config.dump_dir == "out"


# ── Exit status ──────────────────────────────────────────────────────


def test_lift_writes_c_and_exits_zero(tmp_path, capsys):
    assert main(["lift", _chunk("fd_zero"), "--output-dir", str(tmp_path)]) == 0
    assert (tmp_path / "fd_zero.c").exists()
    assert "relevant" in capsys.readouterr().out


def test_rejected_chunk_exits_one(tmp_path):
    assert main(["lift", _chunk("undeclared_write"), "--output-dir", str(tmp_path)]) == 1


def test_validate_pair_of_ir_files(tmp_path, capsys):
    (tmp_path / "orig.ir").write_text(ORIGINAL)
    (tmp_path / "lifted.ir").write_text("bb0:\n  r<8> := a<8>\n  halt\n")
    code = main([
        "validate", "--original", str(tmp_path / "orig.ir"), "--lifted", str(tmp_path / "lifted.ir"),
        "--observe", "r",
    ])
    assert code == 0
    (verdict,) = json.loads(capsys.readouterr().out)
    assert verdict["kind"] == "EQUIVALENT"
    assert verdict["chunk"] == "orig"


def test_validate_pair_that_differs_exits_one(tmp_path):
    (tmp_path / "orig.ir").write_text(ORIGINAL)
    (tmp_path / "lifted.ir").write_text("bb0:\n  r<8> := not a<8>\n  halt\n")
    code = main([
        "validate", "--original", str(tmp_path / "orig.ir"), "--lifted", str(tmp_path / "lifted.ir"),
        "--observe", "r", "--allow-fuzz",
    ])
    assert code == 1


def test_half_a_pair_is_a_usage_error(tmp_path):
    (tmp_path / "orig.ir").write_text(ORIGINAL)
    assert main(["validate", "--original", str(tmp_path / "orig.ir")]) == 2


def test_unparsable_ir_exits_two(tmp_path):
    (tmp_path / "orig.ir").write_text("bb0:\n  x<8> := := 1<8>\n  halt\n")
    (tmp_path / "lifted.ir").write_text(ORIGINAL)
    assert main(["validate", "--original", str(tmp_path / "orig.ir"), "--lifted", str(tmp_path / "lifted.ir")]) == 2


def test_report_writes_json_per_level(tmp_path, capsys):
    path = tmp_path / "report.json"
    code = main([
        "report", _chunk("abs"), _chunk("umin"), "--levels", "Basic", "O4",
        "--output-dir", str(tmp_path), "--report", str(path),
    ])
    assert code == 0
    report = json.loads(path.read_text())
    assert [s["level"] for s in report["levels"]] == ["Basic", "O4"]
    assert report["total"] == 2
    assert "avg" in capsys.readouterr().out


def test_serve_is_not_run_from_the_cli_module():
    assert main(["serve"]) == 2
