"""Use case: corpus metrics, the status table and the statement/instruction ratio per level."""

from __future__ import annotations

import logging
from collections import Counter
from statistics import mean

from asmlift.commands.corpus import LiftCorpus
from asmlift.models import ChunkReport, ChunkStatus, CorpusReport, Level, LevelSummary, VerdictKind

logger = logging.getLogger(__name__)

_ACCEPTED = (VerdictKind.EQUIVALENT, VerdictKind.TRIVIAL)


def summarize_level(level: Level, chunks: list[ChunkReport]) -> LevelSummary:
    ratios = [r for c in chunks if c.level == level and (r := c.ratio) is not None]
    summary = LevelSummary(
        level=level,
        lifted=sum(1 for c in chunks if c.level == level and c.lifted),
        validated=sum(1 for c in chunks if c.level == level and c.validated in _ACCEPTED),
    )
    if ratios:
        summary.ratio_min = round(min(ratios), 3)
        summary.ratio_avg = round(mean(ratios), 3)
        summary.ratio_max = round(max(ratios), 3)
    return summary


def build_report(chunks: list[ChunkReport], levels: list[Level]) -> CorpusReport:
    """Statuses are counted once per chunk (from the first level), ratios per level."""
    first = [c for c in chunks if c.level == levels[0]] if levels else []
    statuses = Counter(c.status for c in first)
    return CorpusReport(
        total=len(first),
        statuses={s: statuses.get(s, 0) for s in ChunkStatus},
        levels=[summarize_level(level, chunks) for level in levels],
        chunks=sorted(chunks, key=lambda c: (c.name, str(c.level))),
    )


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def render_table(report: CorpusReport) -> str:
    lines = [f"{'status':<14}{'chunks':>8}"]
    lines.extend(f"{str(s):<14}{n:>8}" for s, n in report.statuses.items())
    lines.append(f"{'total':<14}{report.total:>8}")
    lines.append("")
    lines.append(f"{'level':<8}{'lifted':>8}{'valid':>8}{'min':>8}{'avg':>8}{'max':>8}")
    for s in report.levels:
        lines.append(
            f"{str(s.level):<8}{s.lifted:>8}{s.validated:>8}"
            f"{_fmt(s.ratio_min):>8}{_fmt(s.ratio_avg):>8}{_fmt(s.ratio_max):>8}"
        )
    return "\n".join(lines) + "\n"


class CorpusMetrics:
    """Lifts the corpus at every requested level and aggregates the results."""

    def __init__(self, corpus: LiftCorpus):
        self.corpus = corpus

    def execute(self, paths: list[str], levels: list[Level]) -> CorpusReport:
        chunks: list[ChunkReport] = []
        for level in levels:
            run = self.corpus.execute(paths, level=level)
            chunks.extend(run.chunks)
        report = build_report(chunks, levels)
        for s in report.levels:
            logger.info("%s: %d lifted, average ratio %s", s.level, s.lifted, _fmt(s.ratio_avg))
        return report
