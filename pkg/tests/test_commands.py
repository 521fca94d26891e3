"""Do the use cases classify, lift, validate and report a corpus the way a run needs?"""

from __future__ import annotations

import pytest
from conftest import CORPUS_DIR, chunk_text

from asmlift.commands import CorpusMetrics, LiftChunk, LiftCorpus, ValidateChunk, ValidateIR, chunk_files, render_table
from asmlift.errors import AsmLiftError
from asmlift.infrastructure.artifact_store import ArtifactStore
from asmlift.ledger import AssumptionLedger
from asmlift.models import ChunkStatus, Level, ProgressEmitter, RunConfig, VerdictKind

# ── Lifting one chunk ────────────────────────────────────────────────


@pytest.mark.parametrize(
    ("name", "status"),
    [
        ("barrier", ChunkStatus.TRIVIAL),
        ("rdtsc", ChunkStatus.OUT_OF_SCOPE),
        ("undeclared_write", ChunkStatus.REJECTED),
        ("fd_zero", ChunkStatus.RELEVANT),
    ],
)
def test_chunks_are_classified(fast_config, name, status):
    outcome = LiftChunk(fast_config).execute(chunk_text(name), name)
    assert outcome.report.status is status
    assert outcome.lifted is (status is ChunkStatus.RELEVANT)


def test_malformed_chunk_is_an_error_not_an_exception(fast_config):
    outcome = LiftChunk(fast_config).execute(".arch arm\n.template\nnop\n", "arm")
    assert outcome.report.status is ChunkStatus.ERROR
    assert outcome.report.error


def test_lifting_writes_the_c_file_ledger_and_snapshots(fast_config, tmp_path):
    lift = LiftChunk(fast_config, ArtifactStore(tmp_path / "dump"), output=ArtifactStore(tmp_path / "out"))
    progress = ProgressEmitter()
    outcome = lift.execute(chunk_text("fd_zero"), "fd_zero", level=Level.O4, progress=progress)

    assert outcome.report.lifted
    assert outcome.report.emitted_statements == outcome.snippet.statements
    assert (tmp_path / "out" / "fd_zero.c").read_text() == outcome.snippet.text
    ledger = AssumptionLedger.from_jsonl((tmp_path / "out" / "fd_zero" / "ledger.jsonl").read_text())
    assert list(ledger) == list(outcome.ledger)
    snapshots = sorted(p.name for p in (tmp_path / "dump" / "fd_zero").iterdir())
    assert snapshots == ["00-types.ir", "01-predicates.ir", "02-unpack.ir", "03-propagation.ir", "04-loops.ir"]
    assert [e.stage for e in progress.events][0] == "decode"
    assert progress.events[-1].stage == "emit"


# ── Validating ───────────────────────────────────────────────────────


def test_lifted_chunk_is_validated_against_its_decoding(fast_config):
    outcome = LiftChunk(fast_config).execute(chunk_text("fd_zero"), "fd_zero", level=Level.O4)
    verdict = ValidateChunk(fast_config).execute(outcome)
    assert verdict.accepted(allow_fuzz=True)
    assert outcome.report.validated is verdict.kind


def test_unlifted_chunks_get_a_verdict_without_checking(fast_config):
    validate = ValidateChunk(fast_config)
    trivial = validate.execute(LiftChunk(fast_config).execute(chunk_text("barrier"), "barrier"))
    assert trivial.kind is VerdictKind.TRIVIAL
    rejected = validate.execute(LiftChunk(fast_config).execute(chunk_text("undeclared_write"), "undeclared_write"))
    assert rejected.kind is VerdictKind.UNKNOWN


def test_ir_texts_are_validated_with_a_ledger(fast_config):
    original = "bb0:\n  t<8> := a<8> ^ 255<8>\n  r<8> := t ^ 255<8>\n  halt\n"
    lifted = "bb0:\n  r<8> := a<8>\n  halt\n"
    verdict = ValidateIR(fast_config).execute(original, lifted, "", observables=frozenset({"r"}))
    assert verdict.kind is VerdictKind.EQUIVALENT


def test_bad_ledger_text_is_an_asmlift_error(fast_config):
    with pytest.raises(AsmLiftError):
        ValidateIR(fast_config).execute("bb0:\n  halt\n", "bb0:\n  halt\n", "{not json")


# ── Corpus ───────────────────────────────────────────────────────────


def test_chunk_files_are_found_and_sorted(corpus_dir):
    files = chunk_files([str(corpus_dir)])
    assert len(files) == 21
    assert files == sorted(files)
    assert chunk_files([str(corpus_dir / "umin.chunk")]) == [corpus_dir / "umin.chunk"]


def test_rejected_chunk_fails_the_run(fast_config, corpus_dir):
    corpus = LiftCorpus(LiftChunk(fast_config), ValidateChunk(fast_config))
    run = corpus.execute([str(corpus_dir / "undeclared_write.chunk"), str(corpus_dir / "umin.chunk")])
    assert [c.name for c in run.chunks] == ["umin", "undeclared_write"]
    assert run.failed()


def test_trivial_and_out_of_scope_chunks_do_not_fail_the_run(fast_config, corpus_dir):
    corpus = LiftCorpus(LiftChunk(fast_config), ValidateChunk(fast_config))
    run = corpus.execute([str(corpus_dir / "barrier.chunk"), str(corpus_dir / "rdtsc.chunk")])
    assert not run.failed()
    assert run.verdicts == []


def test_worker_pool_gives_the_same_reports(fast_config, corpus_dir):
    paths = [str(corpus_dir / f"{name}.chunk") for name in ("abs", "umin", "negate", "barrier")]
    serial = LiftCorpus(LiftChunk(fast_config)).execute(paths)
    pooled = LiftCorpus(LiftChunk(fast_config), workers=4).execute(paths)
    assert pooled.chunks == serial.chunks


# ── Report ───────────────────────────────────────────────────────────


@pytest.fixture(scope="module")
def corpus_report():
    config = RunConfig(fuzz_iterations=100, brute_enum_cap=4096, brute_samples=256, output_dir="", workers=1)
    corpus = LiftCorpus(LiftChunk(config), ValidateChunk(config))
    return CorpusMetrics(corpus).execute([str(CORPUS_DIR)], [Level.BASIC, Level.O4])


def test_statuses_are_counted_once_per_chunk(corpus_report):
    assert corpus_report.total == 21
    assert sum(corpus_report.statuses.values()) == 21
    assert corpus_report.statuses[ChunkStatus.TRIVIAL] >= 1
    assert corpus_report.statuses[ChunkStatus.OUT_OF_SCOPE] >= 1
    assert corpus_report.statuses[ChunkStatus.REJECTED] >= 1


def test_lifting_passes_lower_the_statement_ratio(corpus_report):
    basic, full = corpus_report.levels
    assert (basic.level, full.level) == (Level.BASIC, Level.O4)
    assert full.lifted > 0
    assert full.ratio_avg < basic.ratio_avg


def test_table_has_a_row_per_status_and_level(corpus_report):
    table = render_table(corpus_report)
    assert "out-of-scope" in table
    assert table.splitlines()[-1].startswith("O4")
