from asmlift.commands.corpus import CorpusRun, LiftCorpus, chunk_files
from asmlift.commands.lift import LiftChunk, LiftOutcome
from asmlift.commands.report import CorpusMetrics, build_report, render_table
from asmlift.commands.validate import ValidateChunk, ValidateIR

__all__ = [
    "CorpusMetrics",
    "CorpusRun",
    "LiftChunk",
    "LiftCorpus",
    "LiftOutcome",
    "ValidateChunk",
    "ValidateIR",
    "build_report",
    "chunk_files",
    "render_table",
]
