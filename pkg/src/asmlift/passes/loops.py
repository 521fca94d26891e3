"""Loop normalization: induction variables merged into the loop counter.

An induction variable `v` is initialized once in the entry block (`v := I`,
with `I` over values nothing reassigns) and incremented once per iteration
(`v := v + k`) by a block that dominates every latch. The counter is the
induction variable of step +1 or -1 tested by the loop's branch.

Each other induction variable is rebased (`v = I + r`, `r` counts from 0),
rescaled (`r = k * n`, `n` the iterations done) and merged with the counter
(`n = init - counter` when it counts down). Its increment disappears, its
reads become the affine expression, and the relation goes to the ledger:

    edi = __op1 + 4 * (__op0 - ecx)
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

import networkx as nx

from asmlift.ir.cfg import Loop, build_cfg, dominates, dominators, natural_loops
from asmlift.ir.dataflow import liveness, predecessors
from asmlift.ir.expr import BinOp, Binop, Const, Expr, Var, has_load, substitute, to_signed, var_names
from asmlift.ir.program import Assign, BasicBlock, Branch, Program, instr_exprs, map_exprs
from asmlift.ledger import AffineRelation, AssumptionLedger, LoopDirection
from asmlift.passes.types import TypedProgram
from asmlift.rewrite.propagate import eliminate_dead_code

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Induction:
    var: str
    width: int
    init: Expr
    step: int
    block: str
    index: int


class _LoopView:
    """Dominance and iteration-order facts about one natural loop."""

    def __init__(self, p: Program, loop: Loop, g: nx.MultiDiGraph, idom: dict[str, str]):
        self.p = p
        self.loop = loop
        self.g = g
        self.idom = idom
        forward = nx.DiGraph(g.subgraph(loop.body))
        forward.remove_edges_from([(latch, loop.header) for latch in loop.latches])
        self.forward = forward

    def runs_every_iteration(self, block: str) -> bool:
        return all(dominates(self.idom, block, latch) for latch in self.loop.latches)

    def innermost(self, block: str, loops: list[Loop]) -> bool:
        return not any(
            other.header != self.loop.header and block in other.body and other.body < self.loop.body
            for other in loops
        )

    def ran_before(self, iv: Induction, block: str, index: int) -> int | None:
        """1 if the increment of `iv` already ran in this iteration at (block, index), 0 if not, None if it depends."""
        if block == iv.block:
            return int(iv.index < index)
        if block == self.loop.header:
            return 0
        if dominates(self.idom, iv.block, block):
            return 1
        if nx.has_path(self.forward, iv.block, block):
            return None
        return 0


def _step(v: str, rhs: Expr) -> int | None:
    match rhs:
        case Binop(BinOp.ADD, Var(name, w), Const(k, _)) if name == v:
            return to_signed(k, w)
        case Binop(BinOp.SUB, Var(name, w), Const(k, _)) if name == v:
            return -to_signed(k, w)
    return None


def _entry_init(p: Program, var: str, assigned: frozenset[str]) -> Expr | None:
    inits = [s.rhs for s in p.block(p.entry).body if isinstance(s, Assign) and s.lhs.name == var]
    if len(inits) != 1:
        return None
    init = inits[0]
    if has_load(init) or var_names(init) & assigned:
        return None
    return init


def induction_variables(view: _LoopView, loops: list[Loop]) -> dict[str, Induction]:
    p = view.p
    defs = Counter(s.lhs.name for _, _, s in p.instrs() if isinstance(s, Assign))
    assigned = p.assigned()
    found: dict[str, Induction] = {}
    for label in sorted(view.loop.body):
        for i, stmt in enumerate(p.block(label).body):
            if not isinstance(stmt, Assign) or defs[stmt.lhs.name] != 2:
                continue
            step = _step(stmt.lhs.name, stmt.rhs)
            if step is None or not view.runs_every_iteration(label) or not view.innermost(label, loops):
                continue
            init = _entry_init(p, stmt.lhs.name, assigned)
            if init is not None:
                found[stmt.lhs.name] = Induction(stmt.lhs.name, stmt.lhs.width, init, step, label, i)
    return found


def designate_counter(view: _LoopView, ivs: dict[str, Induction]) -> Induction | None:
    """The ±1 induction variable tested by the header's branch, or failing that by a latch's."""
    for label in (view.loop.header, *view.loop.latches):
        terminator = view.p.block(label).terminator
        if not isinstance(terminator, Branch):
            continue
        tested = sorted(n for n in var_names(terminator.cond) if n in ivs and ivs[n].step in (1, -1))
        if tested:
            return ivs[tested[0]]
    return None


# ---------------------------------------------------------------------------
#  Merging
# ---------------------------------------------------------------------------


class _Abort(Exception):
    pass


def _relation(derived: Induction, counter: Induction) -> AffineRelation:
    direction = LoopDirection.DOWN if counter.step == -1 else LoopDirection.UP
    return AffineRelation(
        derived.var, derived.width, derived.init, derived.step, counter.var, counter.init, direction
    )


def _offset(view: _LoopView, derived: Induction, counter: Induction, block: str, index: int) -> int:
    d = view.ran_before(derived, block, index)
    c = view.ran_before(counter, block, index)
    if d is None or c is None:
        raise _Abort(f"{derived.var} at {block}:{index} depends on the path taken")
    return d - c


def _rewrite_loop_block(
    view: _LoopView, b: BasicBlock, derived: Induction, counter: Induction, relation: AffineRelation
) -> BasicBlock:
    instrs = []
    for i, instr in enumerate(b.instrs):
        if b.id == derived.block and i == derived.index:
            continue
        if derived.var in {v for e in instr_exprs(instr) for v in var_names(e)}:
            value = relation.expr(_offset(view, derived, counter, b.id, i))
            instr = map_exprs(instr, lambda e, value=value: substitute(e, {derived.var: value}))
        instrs.append(instr)
    return b.with_body(instrs[:-1], instrs[-1])


def merge(
    view: _LoopView, derived: Induction, counter: Induction, observables: frozenset[str] | None
) -> tuple[Program, AffineRelation]:
    p, loop = view.p, view.loop
    relation = _relation(derived, counter)
    live_in = liveness(p, observables)
    for label in loop.body:
        if derived.var in live_in[label] and _offset(view, derived, counter, label, 0):
            raise _Abort(f"{derived.var} is out of step with {counter.var} entering {label}")

    blocks = {label: _rewrite_loop_block(view, p.block(label), derived, counter, relation) for label in loop.body}

    preds = predecessors(p)
    for src, _, dst in loop.exits(view.g):
        if derived.var not in live_in[dst]:
            continue
        if any(q not in loop.body for q in preds[dst]):
            raise _Abort(f"{dst} is reached from outside the loop")
        if any(_offset(view, derived, counter, q, len(p.block(q).body)) for q in preds[dst]):
            raise _Abort(f"{derived.var} is out of step with {counter.var} leaving for {dst}")
        if dst not in blocks:
            target = p.block(dst)
            reconstituted = Assign(Var(derived.var, derived.width), relation.expr())
            blocks[dst] = target.with_body((reconstituted, *target.body))
        logger.debug("Reconstituted %s on the exit %s -> %s", derived.var, src, dst)

    merged = p.replace_blocks(blocks)
    return eliminate_dead_code(merged, observables, only={derived.var}), relation


def _merge_one(p: Program, observables: frozenset[str] | None) -> tuple[Program, AffineRelation] | None:
    g = build_cfg(p)
    loops = natural_loops(g, p.entry)
    idom = dominators(g, p.entry)
    for loop in loops:
        if p.entry in loop.body:
            continue
        view = _LoopView(p, loop, g, idom)
        ivs = induction_variables(view, loops)
        counter = designate_counter(view, ivs)
        if counter is None:
            continue
        for name in sorted(ivs):
            if name == counter.var:
                continue
            try:
                return merge(view, ivs[name], counter, observables)
            except _Abort as e:
                logger.debug("Loop at %s: %s not merged: %s", loop.header, name, e)
    return None


def normalize_program(p: Program, observables: frozenset[str] | None = None) -> tuple[Program, AssumptionLedger]:
    ledger = AssumptionLedger()
    while (step := _merge_one(p, observables)) is not None:
        p, relation = step
        ledger.add(relation)
    return p, ledger


def normalize_loops(t: TypedProgram) -> tuple[TypedProgram, AssumptionLedger]:
    program, ledger = normalize_program(t.program, t.chunk.observables)
    if ledger:
        logger.debug("Merged %d induction variable(s) in %s", len(ledger), t.chunk.name)
    return t.with_program(program), ledger
