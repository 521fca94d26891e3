"""Command-line front door: lift, validate and report over chunk files."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from pydantic import BaseModel, TypeAdapter

from asmlift import wiring
from asmlift.commands.report import build_report, render_table
from asmlift.errors import AsmLiftError
from asmlift.models import Backend, Level, Relaxation, RunConfig, VerdictReport

logger = logging.getLogger(__name__)

EXPORT_BACKEND = "smtlib-export"

# Per-block timings vary between runs; written reports leave them out.
_VERDICTS = TypeAdapter(list[VerdictReport])
_NO_TIMINGS = {"__all__": {"blocks": {"__all__": {"time_ms"}}}}


def parse_level(value: str) -> Level:
    for level in Level:
        if level.value.lower() == value.lower():
            return level
    raise argparse.ArgumentTypeError(f"unknown level {value!r} (one of {', '.join(Level)})")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("inputs", nargs="*", help="chunk files or directories of *.chunk files")
    parser.add_argument("--level", type=parse_level, help="pipeline level or ablation (default from config)")
    parser.add_argument("--relax", action="append", default=[], choices=[r.value for r in Relaxation])
    parser.add_argument("--dump-dir", help="write per-stage IR snapshots and SMT-LIB scripts here")
    parser.add_argument("--output-dir", help="C files and ledgers go here")
    parser.add_argument("--workers", type=int)
    parser.add_argument("--report", metavar="PATH", help="write the JSON report to PATH")


def _checking(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=[b.value for b in Backend] + [EXPORT_BACKEND])
    parser.add_argument("--solver-cmd", help='external solver reading SMT-LIB on stdin, e.g. "z3 -in -smt2"')
    parser.add_argument("--timeout-ms", type=int)
    parser.add_argument("--seed", type=int, help="seed of every random choice (sampling, fuzzing)")
    parser.add_argument("--allow-fuzz", action="store_true", help="accept FUZZ_PASSED verdicts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="asmlift", description="Lift inline assembly chunks to validated C.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    lift = sub.add_parser("lift", help="lift chunks to C with their assumption ledgers")
    _common(lift)

    validate = sub.add_parser("validate", help="lift and validate chunks, or validate a pair of IR files")
    _common(validate)
    _checking(validate)
    validate.add_argument("--original", metavar="IR", help="original program in IR text")
    validate.add_argument("--lifted", metavar="IR", help="lifted program in IR text")
    validate.add_argument("--ledger", metavar="JSONL", help="assumption ledger of the lifted program")
    validate.add_argument("--observe", help="comma-separated observable variables (default: shared ones)")

    report = sub.add_parser("report", help="statement/instruction ratios and status tallies per level")
    _common(report)
    _checking(report)
    report.add_argument("--levels", type=parse_level, nargs="+", help="levels to compare (default: all)")

    sub.add_parser("serve", help="serve the HTTP API")
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    """Configured defaults overridden by whatever the command line sets."""
    base = wiring.default_config()
    updates: dict = {"inputs": list(args.inputs), "relaxations": frozenset(Relaxation(r) for r in args.relax)}
    flags = {
        "level": args.level,
        "dump_dir": args.dump_dir,
        "output_dir": args.output_dir,
        "workers": args.workers,
        "report_path": args.report,
        "solver_cmd": getattr(args, "solver_cmd", None),
        "solver_timeout_ms": getattr(args, "timeout_ms", None),
        "fuzz_seed": getattr(args, "seed", None),
    }
    updates.update({k: v for k, v in flags.items() if v is not None})
    backend = getattr(args, "backend", None)
    if backend == EXPORT_BACKEND:
        updates["backend"] = Backend.SOLVER
        updates.setdefault("dump_dir", base.dump_dir or updates.get("output_dir", base.output_dir))
    elif backend:
        updates["backend"] = Backend(backend)
    updates["allow_fuzz"] = bool(getattr(args, "allow_fuzz", False))
    return base.model_copy(update=updates)


def _write(path: str, text: str) -> None:
    if not path:
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    logger.info("Report written to %s", target)


def _json(model: BaseModel) -> str:
    return model.model_dump_json(indent=2) + "\n"


def _verdicts_json(verdicts: list[VerdictReport]) -> str:
    return _VERDICTS.dump_json(verdicts, indent=2, exclude=_NO_TIMINGS).decode() + "\n"


# ---------------------------------------------------------------------------
#  Subcommands
# ---------------------------------------------------------------------------


def cmd_lift(config: RunConfig) -> int:
    run = wiring.create_corpus(config).execute(config.inputs)
    report = build_report(run.chunks, [config.level])
    sys.stdout.write(render_table(report))
    _write(config.report_path, _json(report))
    return 1 if run.failed() else 0


def _validate_pair(config: RunConfig, args: argparse.Namespace) -> list[VerdictReport]:
    if not (args.original and args.lifted):
        raise AsmLiftError("--original and --lifted go together")
    ledger = Path(args.ledger).read_text(encoding="utf-8") if args.ledger else ""
    observables = frozenset(v.strip() for v in args.observe.split(",") if v.strip()) if args.observe else None
    verdict = wiring.create_validate_ir(config).execute(
        Path(args.original).read_text(encoding="utf-8"),
        Path(args.lifted).read_text(encoding="utf-8"),
        ledger,
        observables=observables,
        name=Path(args.original).stem,
    )
    return [verdict]


def cmd_validate(config: RunConfig, args: argparse.Namespace) -> int:
    if args.original or args.lifted:
        verdicts = _validate_pair(config, args)
        failed = not all(v.accepted(allow_fuzz=config.allow_fuzz) for v in verdicts)
    else:
        run = wiring.create_corpus(config, validate=True).execute(config.inputs)
        verdicts = run.verdicts
        failed = run.failed(allow_fuzz=config.allow_fuzz)
    text = _verdicts_json(verdicts)
    if config.report_path:
        _write(config.report_path, text)
    else:
        sys.stdout.write(text)
    for v in verdicts:
        logger.info("%s: %s", v.chunk, v.kind)
    return 1 if failed else 0


def cmd_report(config: RunConfig, levels: list[Level] | None) -> int:
    report = wiring.create_metrics(config).execute(config.inputs, levels or list(Level))
    sys.stdout.write(render_table(report))
    _write(config.report_path, _json(report))
    return 0


def dispatch(args: argparse.Namespace) -> int:
    config = run_config(args)
    try:
        if args.command == "lift":
            return cmd_lift(config)
        if args.command == "validate":
            return cmd_validate(config, args)
        return cmd_report(config, args.levels)
    except (AsmLiftError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 2


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        logger.error("serve is started through asmlift.run")
        return 2
    return dispatch(args)
