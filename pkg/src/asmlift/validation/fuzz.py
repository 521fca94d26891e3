"""Random differential testing of two whole programs.

Used when a proof attempt fails or is impossible. Counterexamples found for
single block pairs are replayed first as whole-program states (inputs they
do not name read 0). Then both programs run from the same random state
(lifted-only inputs derived through the ledger) with a fuel bound; observable
variables and every written byte are compared.
"""

from __future__ import annotations

import logging
import random
from collections.abc import Iterable, Mapping

from asmlift.ir.interpreter import MachineState, OutOfFuel, run
from asmlift.ir.program import Program
from asmlift.ir.semantics import InterpreterError, compile_expr
from asmlift.ledger import AssumptionLedger
from asmlift.models import FuzzSummary, RunConfig
from asmlift.validation.checker import edge_values
from asmlift.validation.query import resolve_bindings

logger = logging.getLogger(__name__)


def biased_value(rng: random.Random, width: int) -> int:
    """Small values and edge values are over-represented."""
    roll = rng.random()
    if roll < 0.3:
        return rng.randrange(min(65, 1 << width))
    if roll < 0.5:
        return rng.choice(edge_values(width))
    return rng.getrandbits(width)


class Differ:
    """Runs two programs on the same initial state and names the first observable difference."""

    def __init__(
        self,
        original: Program,
        lifted: Program,
        ledger: AssumptionLedger | None = None,
        observables: frozenset[str] | None = None,
    ):
        self.original = original
        self.lifted = lifted
        vars_o, vars_l = original.variables(), lifted.variables()
        self.observables = sorted(observables if observables is not None else set(vars_o) & set(vars_l))
        self.inputs = {**lifted.free_variables(), **original.free_variables()}
        bindings = resolve_bindings(ledger or AssumptionLedger(), vars_o)
        self.derived = {
            v: compile_expr(bindings[v]) for v in lifted.free_variables() if v not in vars_o and v in bindings
        }

    def initial(self, rng: random.Random) -> MachineState:
        values = {v: biased_value(rng, w) for v, w in sorted(self.inputs.items())}
        return MachineState(values, {}, rng.getrandbits(32))

    def lifted_state(self, state: MachineState) -> MachineState:
        if not self.derived:
            return state
        memory = state.memory()
        values = dict(state.vars)
        for v, fn in self.derived.items():
            values[v] = fn(state.vars, memory)
        return MachineState(values, state.mem, state.mem_seed)

    def difference(self, state: MachineState, fuel: int) -> str | OutOfFuel | None:
        """None when both runs agree (or both fault); OutOfFuel when either run did not finish."""
        outcomes = []
        for p, init in ((self.original, state), (self.lifted, self.lifted_state(state))):
            try:
                outcomes.append(run(p, init, fuel))
            except InterpreterError as e:
                outcomes.append(e)
        faults = [o for o in outcomes if isinstance(o, InterpreterError)]
        if len(faults) == 2:
            return None
        if faults:
            return f"only one program faults ({faults[0]})"
        (end_o, written_o), (end_l, written_l) = outcomes
        if isinstance(end_o, OutOfFuel):
            return end_o
        if isinstance(end_l, OutOfFuel):
            return end_l
        return _compare(end_o, end_l, self.observables, written_o | written_l)

    def replay(
        self,
        counterexample: Mapping[str, int],
        mem_seed: int | None,
        memory: Mapping[int, int] | None = None,
        fuel: int = 1 << 20,
    ) -> str | None:
        """The difference a recorded counterexample produces, None if it no longer does."""
        found = self.difference(MachineState(dict(counterexample), dict(memory or {}), mem_seed), fuel)
        return found if isinstance(found, str) else None


def _compare(a: MachineState, b: MachineState, observables: list[str], written: set[int]) -> str | None:
    for v in observables:
        if a.vars.get(v) != b.vars.get(v):
            return f"{v}: {a.vars.get(v)} vs {b.vars.get(v)}"
    mem_a, mem_b = a.memory(), b.memory()
    for addr in sorted(written):
        if mem_a.byte(addr) != mem_b.byte(addr):
            return f"memory at {addr:#x}: {mem_a.byte(addr):#x} vs {mem_b.byte(addr):#x}"
    return None


def fuzz_fallback(
    original: Program,
    lifted: Program,
    ledger: AssumptionLedger | None = None,
    *,
    observables: frozenset[str] | None = None,
    config: RunConfig | None = None,
    hints: Iterable[MachineState] = (),
) -> FuzzSummary:
    """Differential testing; `hints` are initial states tried before the random ones."""
    config = config or RunConfig()
    iterations, seed = config.fuzz_iterations, config.fuzz_seed
    differ = Differ(original, lifted, ledger, observables)
    for hint in hints:
        state = MachineState({**dict.fromkeys(differ.inputs, 0), **hint.vars}, hint.mem, hint.mem_seed)
        found = differ.difference(state, config.fuzz_fuel)
        if isinstance(found, str):
            logger.info("Block counterexample %s also separates the programs: %s", dict(state.vars), found)
            return FuzzSummary(
                iterations=0, seed=seed, passed=False, counterexample=dict(state.vars),
                mem_seed=state.mem_seed, memory=dict(state.mem), detail=found,
            )
    if iterations <= 0:
        return FuzzSummary(iterations=0, seed=seed, passed=True, vacuous=True, detail="no iterations")

    rng = random.Random(seed)
    out_of_fuel = 0
    for i in range(iterations):
        state = differ.initial(rng)
        found = differ.difference(state, config.fuzz_fuel)
        if isinstance(found, OutOfFuel):
            out_of_fuel += 1
            continue
        if found is not None:
            logger.info("Fuzzing found a difference at iteration %d (seed %d): %s", i, seed, found)
            return FuzzSummary(
                iterations=i + 1, seed=seed, passed=False, out_of_fuel=out_of_fuel,
                counterexample=dict(state.vars), mem_seed=state.mem_seed, detail=found,
            )
    if out_of_fuel:
        logger.warning("%d of %d fuzzing run(s) ran out of fuel", out_of_fuel, iterations)
    return FuzzSummary(
        iterations=iterations, seed=seed, passed=True, vacuous=out_of_fuel == iterations,
        out_of_fuel=out_of_fuel, detail=f"{iterations - out_of_fuel} run(s) agreed",
    )
