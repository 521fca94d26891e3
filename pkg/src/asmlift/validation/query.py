"""Per-block equivalence queries.

A query asks whether two paired blocks, started from the same values for
every variable they share, can end in different observable states. Values
that exist on one side only are tied to the other side through the
assumption ledger: at block entry as restrictions on the inputs, at block
exit as obligations on the outputs.
"""

from __future__ import annotations

import logging
from collections.abc import Collection
from dataclasses import dataclass
from enum import StrEnum

from asmlift.errors import AsmLiftError
from asmlift.ir.dataflow import liveness
from asmlift.ir.expr import Expr, substitute, var_names
from asmlift.ir.program import Assign, BasicBlock, Branch, EdgeTag, Program, Store, instr_reads
from asmlift.ledger import AssumptionLedger
from asmlift.validation.isomorphism import BlockPairing, IsomorphismMismatch, check_isomorphism

logger = logging.getLogger(__name__)


class QueryError(AsmLiftError):
    pass


class Side(StrEnum):
    ORIGINAL = "original"
    LIFTED = "lifted"


@dataclass(frozen=True)
class Restriction:
    """Input restriction: `var` equals `expr` over the other inputs."""
    var: str
    width: int
    expr: Expr


@dataclass(frozen=True)
class Obligation:
    """Output check on the successor `edge` (None for a halting block).

    With no `expected`, the lifted value of `var` must equal the original one;
    otherwise the `side` value of `var` must equal `expected` evaluated over the
    original block's final values.
    """
    edge: EdgeTag | None
    var: str
    width: int
    expected: Expr | None = None
    side: Side = Side.LIFTED


@dataclass(frozen=True)
class EquivQuery:
    original: BasicBlock
    lifted: BasicBlock
    inputs: dict[str, int]
    assumptions: tuple[Restriction, ...]
    obligations: tuple[Obligation, ...]
    memory: bool = True

    @property
    def name(self) -> str:
        return f"{self.original.id}~{self.lifted.id}"

    @property
    def assumed(self) -> frozenset[str]:
        return frozenset(r.var for r in self.assumptions)

    @property
    def free_inputs(self) -> dict[str, int]:
        return {v: w for v, w in self.inputs.items() if v not in self.assumed}

    def obligations_on(self, edge: EdgeTag | None) -> tuple[Obligation, ...]:
        return tuple(o for o in self.obligations if o.edge == edge)


def resolve_bindings(ledger: AssumptionLedger, known: Collection[str]) -> dict[str, Expr]:
    """Ledger expressions rewritten over the `known` (original-program) variables only."""
    raw = ledger.bindings()
    foreign = {v: e for v, e in raw.items() if v not in known}
    resolved: dict[str, Expr] = {}
    for var, expr in raw.items():
        for _ in range(len(raw)):
            pending = {n: foreign[n] for n in var_names(expr) if n in foreign and n != var}
            if not pending:
                break
            expr = substitute(expr, pending)
        unknown = sorted(n for n in var_names(expr) if n not in known)
        if unknown:
            raise QueryError(f"ledger entry for {var} references unknown symbol(s) {', '.join(unknown)}")
        resolved[var] = expr
    return resolved


def _read_first(b: BasicBlock) -> set[str]:
    """Names the block reads before assigning them."""
    found: set[str] = set()
    assigned: set[str] = set()
    for instr in b.instrs:
        found |= instr_reads(instr) - assigned
        if isinstance(instr, Assign):
            assigned.add(instr.lhs.name)
    return found


class QueryBuilder:
    """Builds the query of every block pair of two paired programs."""

    def __init__(  # noqa: PLR0913
        self,
        original: Program,
        lifted: Program,
        pairing: BlockPairing,
        ledger: AssumptionLedger | None = None,
        observables: frozenset[str] | None = None,
    ):
        self.original = original
        self.lifted = lifted
        self.pairing = pairing.as_dict()
        self.vars_o = original.variables()
        self.vars_l = lifted.variables()
        if observables is None:
            observables = frozenset(self.vars_o) & frozenset(self.vars_l)
        self.observables = observables
        self.live_o = liveness(original, observables)
        self.live_l = liveness(lifted, observables)
        self.halt_live = sorted(observables)
        self.widths = {**self.vars_l, **self.vars_o}
        ledger = ledger or AssumptionLedger()
        for entry in ledger:
            self.widths.setdefault(entry.var, entry.width)
        self.bindings = resolve_bindings(ledger, self.vars_o)

    def _width(self, var: str) -> int:
        return self.widths[var]

    def _entry(self, a: str, b: str) -> list[Restriction]:
        lo, ll = self.live_o[a], self.live_l[b]
        out: list[Restriction] = []
        for v in sorted(ll - lo):
            if v in self.bindings:
                out.append(Restriction(v, self._width(v), self.bindings[v]))
            elif v not in self.vars_o:
                raise QueryError(f"{v} is live into {b} but unknown to the original program")
        out.extend(Restriction(v, self._width(v), self.bindings[v]) for v in sorted(lo - ll) if v in self.bindings)
        return out

    def _exit(self, edge: EdgeTag, a_succ: str, b_succ: str) -> list[Obligation]:
        lo, ll = self.live_o[a_succ], self.live_l[b_succ]
        out: list[Obligation] = []
        for v in sorted(ll):
            if v in lo or (v in self.vars_o and v not in self.bindings):
                out.append(Obligation(edge, v, self._width(v)))
            elif v in self.bindings:
                out.append(Obligation(edge, v, self._width(v), self.bindings[v], Side.LIFTED))
            else:
                raise QueryError(f"{v} is live into {b_succ} but unknown to the original program")
        for v in sorted(lo - ll):
            if v in self.bindings:
                out.append(Obligation(edge, v, self._width(v), self.bindings[v], Side.ORIGINAL))
        return out

    def _halt(self) -> list[Obligation]:
        missing = [v for v in self.halt_live if v not in self.widths]
        if missing:
            raise QueryError(f"observable(s) {', '.join(missing)} assigned by neither program")
        return [Obligation(None, v, self._width(v)) for v in self.halt_live]

    def query(self, a: str) -> EquivQuery:
        b = self.pairing[a]
        ob, lb = self.original.block(a), self.lifted.block(b)
        assumptions = self._entry(a, b)
        succ_o, succ_l = dict(ob.successors()), dict(lb.successors())
        if set(succ_o) != set(succ_l):
            raise QueryError(f"{a} and {b} leave by different edges")
        obligations: list[Obligation] = []
        for edge in sorted(succ_o):
            obligations.extend(self._exit(edge, succ_o[edge], succ_l[edge]))
        if not succ_o:
            obligations.extend(self._halt())

        names = _read_first(ob) | _read_first(lb) | {r.var for r in assumptions}
        for r in assumptions:
            names |= var_names(r.expr)
        both = ob.assigned() & lb.assigned()
        for o in obligations:
            if o.var not in both:
                names.add(o.var)
            if o.expected is not None:
                names |= var_names(o.expected) - ob.assigned()
        inputs = {n: self._width(n) for n in sorted(names)}
        memory = any(isinstance(s, Store) for s in (*ob.body, *lb.body))
        logger.debug("Query %s~%s: %d input(s), %d obligation(s)", a, b, len(inputs), len(obligations))
        return EquivQuery(ob, lb, inputs, tuple(assumptions), tuple(obligations), memory)

    def queries(self) -> list[EquivQuery]:
        return [self.query(a) for a, _ in self.pairing.items()]


def build_query(
    original: Program,
    lifted: Program,
    pair: tuple[str, str],
    ledger: AssumptionLedger | None = None,
    observables: frozenset[str] | None = None,
) -> EquivQuery:
    pairing = check_isomorphism(original, lifted)
    if isinstance(pairing, IsomorphismMismatch):
        raise QueryError(f"no block pairing: {pairing.reason}")
    builder = QueryBuilder(original, lifted, pairing, ledger, observables)
    if builder.pairing.get(pair[0]) != pair[1]:
        raise QueryError(f"{pair[0]} is not paired with {pair[1]}")
    return builder.query(pair[0])


def branch_condition(b: BasicBlock) -> Expr | None:
    return b.terminator.cond if isinstance(b.terminator, Branch) else None
