"""Does validation accept what is equivalent, reject what is not, and say how it decided?"""

from __future__ import annotations

import pytest
from conftest import FakeSolver, decoded, program

from asmlift.infrastructure.solver_gateway import SolverAnswer, SolverGateway
from asmlift.ir.expr import Const, Var
from asmlift.ir.program import Store
from asmlift.ir.syntax import parse_expr
from asmlift.ledger import AffineRelation, AssumptionLedger, LoopDirection
from asmlift.models import Backend, Level, VerdictKind
from asmlift.passes import run_pipeline
from asmlift.validation import (
    Differ,
    IsomorphismMismatch,
    QueryError,
    SamplingChecker,
    SolverChecker,
    Validator,
    brute_check,
    build_query,
    check_isomorphism,
    fuzz_fallback,
    narrow,
    to_smtlib,
    validate,
)

ORIGINAL = """
bb0:
  i<32> := 0<32>
  p<32> := base<32>
  goto bb1
bb1:
  if i = n<32> then goto bb3 else goto bb2
bb2:
  @[p]4 := v<32>
  p := p + 4<32>
  i := i + 1<32>
  goto bb1
bb3:
  halt
"""

LIFTED = """
bb0:
  i<32> := 0<32>
  goto bb1
bb1:
  if i = n<32> then goto bb3 else goto bb2
bb2:
  @[base<32> + (4<32> * i)]4 := v<32>
  i := i + 1<32>
  goto bb1
bb3:
  halt
"""

OBSERVE = frozenset({"i"})

LOADED = "bb0:\n  r<32> := @[p<32>]4\n  halt\n"
LOAD_MUTANT = "bb0:\n  r<32> := (@[p<32>]4 = 10<32>) ? 0<32> : @[p]4\n  halt\n"


def _ledger() -> AssumptionLedger:
    relation = AffineRelation("p", 32, Var("base", 32), 4, "i", Const(0, 32), LoopDirection.UP)
    return AssumptionLedger([relation])


def _mutant() -> str:
    return LIFTED.replace("4<32> * i", "8<32> * i")


# ── Isomorphism ──────────────────────────────────────────────────────


def test_blocks_pair_along_tagged_edges():
    pairing = check_isomorphism(program(ORIGINAL), program(LIFTED))
    assert not isinstance(pairing, IsomorphismMismatch)
    assert pairing.as_dict() == {"bb0": "bb0", "bb1": "bb1", "bb2": "bb2", "bb3": "bb3"}


def test_extra_block_breaks_the_isomorphism():
    lifted = program(LIFTED.replace("  goto bb1\nbb1:", "  goto extra\nextra:\n  goto bb1\nbb1:", 1))
    mismatch = check_isomorphism(program(ORIGINAL), lifted)
    assert isinstance(mismatch, IsomorphismMismatch)


def test_isomorphism_mismatch_falls_back_to_fuzzing(fast_config):
    lifted = program(LIFTED.replace("  goto bb1\nbb1:", "  goto extra\nextra:\n  goto bb1\nbb1:", 1))
    report = validate(program(ORIGINAL), lifted, _ledger(), observables=OBSERVE, config=fast_config)
    assert report.s1 == "mismatch"
    assert report.kind is VerdictKind.FUZZ_PASSED
    assert report.fallback is not None and report.fallback.passed


# ── Queries ──────────────────────────────────────────────────────────


def test_loop_body_query_restricts_the_dropped_pointer():
    q = build_query(program(ORIGINAL), program(LIFTED), ("bb2", "bb2"), _ledger(), OBSERVE)
    assert q.assumed == {"p"}
    assert q.memory
    assert "p" not in q.free_inputs


def test_query_of_unpaired_blocks_is_an_error():
    with pytest.raises(QueryError):
        build_query(program(ORIGINAL), program(LIFTED), ("bb1", "bb2"), _ledger(), OBSERVE)


def test_lifted_only_variable_without_ledger_entry_is_an_error():
    lifted = program(LIFTED.replace("@[base<32> + (4<32> * i)]4", "@[q<32>]4"))
    with pytest.raises(QueryError):
        build_query(program(ORIGINAL), lifted, ("bb2", "bb2"), AssumptionLedger(), OBSERVE)


def test_smtlib_script_declares_inputs_and_checks_sat():
    q = build_query(program(ORIGINAL), program(LIFTED), ("bb2", "bb2"), _ledger(), OBSERVE)
    script = to_smtlib(q)
    assert script.startswith("(set-logic QF_ABV)")
    assert "(declare-fun |base| () (_ BitVec 32))" in script
    assert script.rstrip().endswith("(check-sat)")


# ── Brute force ──────────────────────────────────────────────────────


def test_narrowing_scales_every_width():
    q = build_query(program(ORIGINAL), program(LIFTED), ("bb2", "bb2"), _ledger(), OBSERVE)
    narrowed = narrow(q, 8)
    assert set(narrowed.inputs.values()) == {8}


def test_brute_force_accepts_the_equivalent_body():
    q = build_query(program(ORIGINAL), program(LIFTED), ("bb2", "bb2"), _ledger(), OBSERVE)
    found = brute_check(q, enum_cap=4096, samples=256)
    assert found.equivalent
    assert found.states > 0


def test_brute_force_finds_a_counterexample_for_the_mutant():
    q = build_query(program(ORIGINAL), program(_mutant()), ("bb2", "bb2"), _ledger(), OBSERVE)
    found = brute_check(q, enum_cap=4096, samples=256)
    assert not found.equivalent
    assert "memory" in found.detail
    assert found.counterexample


def test_brute_force_without_the_ledger_cannot_relate_the_pointer():
    q = build_query(program(ORIGINAL), program(LIFTED), ("bb2", "bb2"), AssumptionLedger(), OBSERVE)
    assert not brute_check(q, enum_cap=4096, samples=256).equivalent


def test_initial_memory_is_an_input_of_the_block_query():
    q = build_query(program(LOADED), program(LOAD_MUTANT), ("bb0", "bb0"), None, frozenset({"r"}))
    assert q.inputs == {"p": 32}
    found = brute_check(q, vector_cap=1 << 20)
    assert not found.equivalent
    assert found.method == "exhaustive@8"
    assert found.memory[found.counterexample["p"]] == 10


def _counted_loop_query(ledger: AssumptionLedger | None = None):
    d = decoded("fd_zero")
    t, lifted_ledger = run_pipeline(d, Level.O4)
    pairing = check_isomorphism(d.program, t.program)
    assert not isinstance(pairing, IsomorphismMismatch)
    (pair,) = [
        (o, lifted) for o, lifted in pairing.as_dict().items()
        if any(isinstance(s, Store) for s in d.program.block(o).body)
    ]
    return build_query(d.program, t.program, pair, lifted_ledger if ledger is None else ledger, d.observables)


def test_loop_body_of_the_lifted_chunk_is_checked_on_every_narrow_state():
    q = _counted_loop_query()
    assert set(q.free_inputs) == {"ecx", "__op3", "__op4"}
    found = brute_check(q, vector_cap=1 << 24)
    assert found.equivalent
    assert found.method == "exhaustive@8"
    assert found.states == 1 << 24


def test_loop_body_without_the_pointer_relation_is_refuted():
    _, ledger = run_pipeline(decoded("fd_zero"), Level.O4)
    q = _counted_loop_query(AssumptionLedger([e for e in ledger if not isinstance(e, AffineRelation)]))
    assert "edi" in q.free_inputs
    assert not brute_check(q, vector_cap=1 << 24).equivalent


# ── Whole programs ───────────────────────────────────────────────────


def test_equivalent_programs_are_proven_block_by_block(fast_config):
    report = validate(program(ORIGINAL), program(LIFTED), _ledger(), observables=OBSERVE, config=fast_config)
    assert report.kind is VerdictKind.EQUIVALENT
    assert len(report.blocks) == 4
    assert report.fallback is None
    assert report.accepted()


def test_missing_ledger_leaves_the_chunk_at_fuzz_passed(fast_config):
    report = validate(program(ORIGINAL), program(LIFTED), observables=OBSERVE, config=fast_config)
    assert report.kind is VerdictKind.FUZZ_PASSED
    assert any(b.kind is VerdictKind.NOT_EQUIVALENT for b in report.blocks)
    assert not report.accepted()
    assert report.accepted(allow_fuzz=True)


def test_mutant_is_not_equivalent_and_its_counterexample_replays(fast_config):
    original, mutant = program(ORIGINAL), program(_mutant())
    report = validate(original, mutant, _ledger(), observables=OBSERVE, config=fast_config)
    assert report.kind is VerdictKind.NOT_EQUIVALENT
    fallback = report.fallback
    assert fallback is not None and not fallback.passed
    differ = Differ(original, mutant, _ledger(), OBSERVE)
    assert differ.replay(fallback.counterexample, fallback.mem_seed, fallback.memory) is not None


MUTANTS = {
    "stride": ("4<32> * i", "8<32> * i"),
    "offset": ("(4<32> * i)]4", "(4<32> * i) + 4<32>]4"),
    "direction": ("base<32> + (4<32> * i)", "base<32> - (4<32> * i)"),
    "stored-constant": ("]4 := v<32>", "]4 := v<32> + 1<32>"),
    "stored-variable": ("]4 := v<32>", "]4 := i"),
    "store-width": ("]4 := v<32>", "]1 := extract:0:7 v<32>"),
    "start": ("i<32> := 0<32>", "i<32> := 1<32>"),
    "bound": ("if i = n<32>", "if i = n<32> + 1<32>"),
    "comparison": ("if i = n<32>", "if i <u n<32>"),
    "swapped-targets": ("then goto bb3 else goto bb2", "then goto bb2 else goto bb3"),
    "step": ("i := i + 1<32>", "i := i + 2<32>"),
}


@pytest.mark.parametrize(("old", "new"), list(MUTANTS.values()), ids=list(MUTANTS))
def test_every_mutant_is_refuted_by_a_replayable_state(fast_config, old, new):
    assert old in LIFTED
    original, mutant = program(ORIGINAL), program(LIFTED.replace(old, new))
    report = validate(original, mutant, _ledger(), observables=OBSERVE, config=fast_config)
    assert report.kind is VerdictKind.NOT_EQUIVALENT
    fallback = report.fallback
    assert fallback is not None and not fallback.passed
    differ = Differ(original, mutant, _ledger(), OBSERVE)
    assert differ.replay(fallback.counterexample, fallback.mem_seed, fallback.memory) == fallback.detail


def test_loaded_value_mutant_is_refuted_with_a_replayable_memory_state(fast_config):
    original, mutant = program(LOADED), program(LOAD_MUTANT)
    report = validate(original, mutant, observables=frozenset({"r"}), config=fast_config)
    assert report.kind is VerdictKind.NOT_EQUIVALENT
    assert report.blocks[0].kind is VerdictKind.NOT_EQUIVALENT
    fallback = report.fallback
    assert fallback is not None and not fallback.passed
    assert fallback.memory == {0: 10}
    differ = Differ(original, mutant, observables=frozenset({"r"}))
    assert differ.replay(fallback.counterexample, fallback.mem_seed, fallback.memory) is not None
    assert differ.replay(fallback.counterexample, fallback.mem_seed) is None


def test_fuzzing_is_deterministic_for_a_seed(fast_config):
    original, mutant = program(ORIGINAL), program(_mutant())
    first = fuzz_fallback(original, mutant, _ledger(), observables=OBSERVE, config=fast_config)
    second = fuzz_fallback(original, mutant, _ledger(), observables=OBSERVE, config=fast_config)
    assert first == second


def test_zero_fuzz_iterations_pass_vacuously(fast_config):
    config = fast_config.model_copy(update={"fuzz_iterations": 0})
    summary = fuzz_fallback(program(ORIGINAL), program(_mutant()), config=config)
    assert summary.passed and summary.vacuous


def test_fuzz_backend_skips_block_queries(fast_config):
    config = fast_config.model_copy(update={"backend": Backend.FUZZ})
    report = validate(program(ORIGINAL), program(LIFTED), _ledger(), observables=OBSERVE, config=config)
    assert report.kind is VerdictKind.FUZZ_PASSED
    assert report.blocks == []


# ── Solver backend ───────────────────────────────────────────────────


def test_unsat_answers_prove_every_block(fast_config, fake_solver):
    config = fast_config.model_copy(update={"backend": Backend.SOLVER})
    report = Validator(config, fake_solver).validate(
        program(ORIGINAL), program(LIFTED), _ledger(), observables=OBSERVE
    )
    assert report.kind is VerdictKind.EQUIVALENT
    assert {b.method for b in report.blocks} == {"smt:fake"}
    assert len(fake_solver.scripts) == 4
    assert all(s.rstrip().endswith("(check-sat)") for s in fake_solver.scripts)


def test_sat_answers_send_the_chunk_to_fuzzing(fast_config):
    config = fast_config.model_copy(update={"backend": Backend.SOLVER})
    report = Validator(config, FakeSolver(SolverAnswer.SAT)).validate(
        program(ORIGINAL), program(LIFTED), _ledger(), observables=OBSERVE
    )
    assert report.kind is VerdictKind.FUZZ_PASSED


def test_unavailable_solver_degrades_to_enumeration_and_exports(fast_config):
    config = fast_config.model_copy(update={"backend": Backend.SOLVER})
    exported: list[str] = []
    validator = Validator(config, FakeSolver(available=False), export=lambda name, _: exported.append(name))
    report = validator.validate(program(ORIGINAL), program(LIFTED), _ledger(), observables=OBSERVE, chunk="loop")
    assert report.kind is VerdictKind.EQUIVALENT
    assert report.exported
    assert sorted(exported) == ["loop.bb0.smt2", "loop.bb1.smt2", "loop.bb2.smt2", "loop.bb3.smt2"]


# ── Expression checkers ──────────────────────────────────────────────


def test_sampling_checker_is_exhaustive_on_narrow_values():
    checker = SamplingChecker()
    assert checker.equivalent(parse_expr("x<8> + x<8>"), parse_expr("x<8> shl 1<8>"))
    assert checker.equivalent(parse_expr("x<8> + 1<8>"), parse_expr("x<8> | 1<8>")) is False


def test_solver_checker_reads_the_answer():
    assert SolverChecker(FakeSolver(SolverAnswer.UNSAT)).equivalent(parse_expr("a<8>"), parse_expr("b<8>"))
    assert SolverChecker(FakeSolver(SolverAnswer.SAT)).equivalent(parse_expr("a<8>"), parse_expr("b<8>")) is False
    assert SolverChecker(FakeSolver(SolverAnswer.UNKNOWN)).equivalent(parse_expr("a<8>"), parse_expr("b<8>")) is None


_SOLVER = SolverGateway()


@pytest.mark.skipif(not _SOLVER.available, reason="no SMT solver configured")
def test_real_solver_proves_the_loop(fast_config):
    config = fast_config.model_copy(update={"backend": Backend.SOLVER})
    report = Validator(config, _SOLVER).validate(program(ORIGINAL), program(LIFTED), _ledger(), observables=OBSERVE)
    assert report.kind is VerdictKind.EQUIVALENT
    assert all(b.method.startswith("smt:") for b in report.blocks)
