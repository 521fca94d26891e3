"""Eager expression propagation with a posteriori revert, then cleanup.

Phases, in order:

1. collect:   symbolic execution of every block records, for each variable
              read at each instruction, the value it holds there;
2. propagate: every recorded value is substituted into the instruction, the
              instruction as it was before is kept in a reverse map;
3. simplify:  the rule catalogue runs on every expression;
4. revert:    instructions on which propagation brought nothing (the terms
              before and after simplification are AC-equal), or that still
              need an overwritten block-entry value, go back to their
              reverse-map version;
5. cleanup:   dead-branch elimination, block-local common subexpressions,
              dead-code elimination.

Variables and constants are always propagated; only compound values are
subject to the revert. Non-final definitions inside a block are renamed
`name.N` first, so every block assigns each name at most once.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Callable, Collection
from dataclasses import dataclass, field

from asmlift.ir.cfg import IrreducibleCFG, build_cfg, reachable, require_reducible
from asmlift.ir.dataflow import liveness, live_out, upward_exposed
from asmlift.ir.expr import Const, Expr, Var, has_load, substitute, var_names
from asmlift.ir.program import (
    Assign,
    Branch,
    Goto,
    Instr,
    Program,
    Store,
    instr_exprs,
    instr_reads,
    map_exprs,
)
from asmlift.ledger import Alias, AssumptionLedger, ConstBinding
from asmlift.rewrite.ac import ac_equal
from asmlift.rewrite.simplify import Simplifier

logger = logging.getLogger(__name__)

Point = tuple[str, int]
PhaseListener = Callable[[str, Program], None]

ENTRY_SUFFIX = "@in"


@dataclass
class PropagationMap:
    bindings: dict[tuple[str, Point], Expr] = field(default_factory=dict)
    reverse: dict[Point, Instr] = field(default_factory=dict)
    reverted: set[Point] = field(default_factory=set)

    def at(self, point: Point) -> dict[str, Expr]:
        return {name: value for (name, where), value in self.bindings.items() if where == point}


def _is_atom(e: Expr) -> bool:
    return isinstance(e, Const | Var)


def _replace_instrs(p: Program, fn: Callable[[Point, Instr], Instr]) -> Program:
    blocks = {}
    for b in p.blocks:
        instrs = [fn((b.id, i), instr) for i, instr in enumerate(b.instrs)]
        blocks[b.id] = b.with_body(instrs[:-1], instrs[-1])
    return p.replace_blocks(blocks)


# ---------------------------------------------------------------------------
#  Block-local renaming
# ---------------------------------------------------------------------------


def rename_block_locals(p: Program) -> Program:
    """Rename every non-final definition of a name inside a block to a fresh `name.N`."""
    taken = set(p.variables())
    counters: Counter[str] = Counter()

    def fresh(name: str) -> str:
        while True:
            counters[name] += 1
            candidate = f"{name}.{counters[name]}"
            if candidate not in taken:
                taken.add(candidate)
                return candidate

    blocks = {}
    for b in p.blocks:
        final = {s.lhs.name: i for i, s in enumerate(b.body) if isinstance(s, Assign)}
        current: dict[str, Expr] = {}
        body = []
        for i, stmt in enumerate(b.body):
            stmt = map_exprs(stmt, lambda e: substitute(e, current))
            if isinstance(stmt, Assign) and final[stmt.lhs.name] != i:
                renamed = Var(fresh(stmt.lhs.name), stmt.lhs.width)
                current[stmt.lhs.name] = renamed
                stmt = Assign(renamed, stmt.rhs)
            elif isinstance(stmt, Assign):
                current.pop(stmt.lhs.name, None)
            body.append(stmt)
        blocks[b.id] = b.with_body(body, map_exprs(b.terminator, lambda e: substitute(e, current)))
    return p.replace_blocks(blocks)


# ---------------------------------------------------------------------------
#  Chunk-wide invariants
# ---------------------------------------------------------------------------


def chunk_invariants(p: Program, s: Simplifier) -> dict[str, Expr]:
    """Variables defined once, in the entry block, from values nothing reassigns.

    Such a variable holds the same value at every block boundary after its definition.
    """
    defs = Counter(stmt.lhs.name for _, _, stmt in p.instrs() if isinstance(stmt, Assign))
    assigned = p.assigned()
    exposed = upward_exposed(p)
    found: dict[str, Expr] = {}
    for stmt in p.block(p.entry).body:
        if not isinstance(stmt, Assign) or defs[stmt.lhs.name] != 1 or stmt.lhs.name in exposed:
            continue
        value = s.simplify(substitute(stmt.rhs, found))
        if has_load(value) or var_names(value) & assigned:
            continue
        found[stmt.lhs.name] = value
    return found


# ---------------------------------------------------------------------------
#  Phases 1-4
# ---------------------------------------------------------------------------


def _entry(name: str) -> str:
    return f"{name}{ENTRY_SUFFIX}"


def _mentions_entry(e: Expr) -> bool:
    return any(n.endswith(ENTRY_SUFFIX) for n in var_names(e))


def _redefine(env: dict[str, Expr], lhs: Var, value: Expr) -> None:
    """Record `lhs := value`; earlier values reading `lhs` now refer to its block-entry value."""
    inbound = {lhs.name: Var(_entry(lhs.name), lhs.width)}
    for key in [k for k, v in env.items() if lhs.name in var_names(v)]:
        env[key] = substitute(env[key], inbound)
    env[lhs.name] = substitute(value, inbound)


def collect(p: Program, invariants: dict[str, Expr], s: Simplifier) -> PropagationMap:
    """Value of every variable read at every instruction, in terms of block-entry values.

    A value that still needs the overwritten entry value of some variable holds
    it as `name@in`; such values are only kept where simplification removes it.
    """
    pmap = PropagationMap()
    for b in p.blocks:
        env = {} if b.id == p.entry else dict(invariants)
        for i, instr in enumerate(b.instrs):
            point = (b.id, i)
            for name in instr_reads(instr):
                if name in env:
                    pmap.bindings[(name, point)] = env[name]
            match instr:
                case Assign(lhs, rhs):
                    _redefine(env, lhs, s.simplify(substitute(rhs, env)))
                case Store():
                    for key in [k for k, v in env.items() if has_load(v)]:
                        del env[key]
    return pmap


def propagate(p: Program, pmap: PropagationMap) -> Program:
    def _at(point: Point, instr: Instr) -> Instr:
        values = pmap.at(point)
        if not values:
            return instr
        atoms = {k: v for k, v in values.items() if _is_atom(v) and not _mentions_entry(v)}
        if len(atoms) < len(values):
            pmap.reverse[point] = map_exprs(instr, lambda e: substitute(e, atoms))
        return map_exprs(instr, lambda e: substitute(e, values))

    return _replace_instrs(p, _at)


def simplify_all(p: Program, s: Simplifier) -> Program:
    return _replace_instrs(p, lambda _, instr: map_exprs(instr, s.simplify))


def revert(propagated: Program, simplified: Program, pmap: PropagationMap, s: Simplifier) -> Program:
    def _at(point: Point, instr: Instr) -> Instr:
        original = pmap.reverse.get(point)
        if original is None:
            return instr
        if any(_mentions_entry(e) for e in instr_exprs(instr)):
            pmap.reverted.add(point)
            safe = {k: v for k, v in pmap.at(point).items() if not _mentions_entry(v)}
            return map_exprs(original, lambda e: s.simplify(substitute(e, safe)))
        before = propagated.block(point[0]).instrs[point[1]]
        if all(ac_equal(a, b) for a, b in zip(instr_exprs(before), instr_exprs(instr), strict=True)):
            pmap.reverted.add(point)
            return map_exprs(original, s.simplify)
        return instr

    return _replace_instrs(simplified, _at)


# ---------------------------------------------------------------------------
#  Phase 5: cleanup
# ---------------------------------------------------------------------------


def eliminate_dead_branches(p: Program) -> Program:
    """Branches on a constant become gotos; blocks no longer reachable are dropped."""
    blocks = []
    for b in p.blocks:
        match b.terminator:
            case Branch(Const(value, _), then_target, else_target):
                b = b.with_body(b.body, Goto(then_target if value else else_target))
        blocks.append(b)
    folded = Program(tuple(blocks), p.entry)
    live = reachable(build_cfg(folded), p.entry)
    return Program(tuple(b for b in folded.blocks if b.id in live), p.entry)


def common_subexpressions(p: Program) -> Program:
    """A compound right-hand side already held by a variable in the same block becomes that variable."""
    blocks = {}
    for b in p.blocks:
        available: dict[Expr, Var] = {}
        body = []
        for stmt in b.body:
            if isinstance(stmt, Assign) and not _is_atom(stmt.rhs) and stmt.rhs in available:
                stmt = Assign(stmt.lhs, available[stmt.rhs])
            body.append(stmt)
            if isinstance(stmt, Store):
                available = {e: v for e, v in available.items() if not has_load(e)}
            elif isinstance(stmt, Assign):
                name = stmt.lhs.name
                available = {e: v for e, v in available.items() if v.name != name and name not in var_names(e)}
                if not _is_atom(stmt.rhs) and name not in var_names(stmt.rhs):
                    available.setdefault(stmt.rhs, stmt.lhs)
        blocks[b.id] = b.with_body(body)
    return p.replace_blocks(blocks)


def eliminate_dead_code(
    p: Program, observables: Collection[str] | None = None, *, only: Collection[str] | None = None
) -> Program:
    """Drop assignments whose value is never read; `observables` are live at halt (all variables when None).

    With `only`, assignments to other names are kept even when dead.
    """
    while True:
        live_in = liveness(p, observables)
        blocks = {}
        removed = 0
        for b in p.blocks:
            live = set(live_out(p, b, live_in, observables)) | instr_reads(b.terminator)
            body = []
            for stmt in reversed(b.body):
                if isinstance(stmt, Assign) and stmt.lhs.name not in live and (only is None or stmt.lhs.name in only):
                    removed += 1
                    continue
                if isinstance(stmt, Assign):
                    live.discard(stmt.lhs.name)
                live |= instr_reads(stmt)
                body.append(stmt)
            blocks[b.id] = b.with_body(reversed(body))
        p = p.replace_blocks(blocks)
        if not removed:
            return p


def cleanup(p: Program, observables: Collection[str] | None = None) -> Program:
    return eliminate_dead_code(common_subexpressions(eliminate_dead_branches(p)), observables)


# ---------------------------------------------------------------------------
#  Driver
# ---------------------------------------------------------------------------


def _ledger(original: Program, invariants: dict[str, Expr], result: Program) -> AssumptionLedger:
    ledger = AssumptionLedger()
    known = original.variables()
    still_assigned = result.assigned()
    for name, value in invariants.items():
        if name not in known or name in still_assigned:
            continue
        if isinstance(value, Const):
            ledger.add(ConstBinding(name, value.width, value.value))
        else:
            ledger.add(Alias(name, value.width, value))
    return ledger


def propagate_and_simplify(
    p: Program,
    observables: Collection[str] | None = None,
    *,
    simplifier: Simplifier | None = None,
    on_phase: PhaseListener | None = None,
) -> tuple[Program, AssumptionLedger]:
    """Run the five phases; an irreducible CFG leaves `p` as it is with an empty ledger."""
    try:
        require_reducible(p)
    except IrreducibleCFG as e:
        logger.warning("Propagation skipped: %s", e)
        return p, AssumptionLedger()

    def _phase(name: str, program: Program) -> Program:
        if on_phase:
            on_phase(name, program)
        return program

    s = simplifier or Simplifier()
    renamed = _phase("renamed", rename_block_locals(p))
    invariants = chunk_invariants(renamed, s)
    pmap = collect(renamed, invariants, s)
    propagated = _phase("propagated", propagate(renamed, pmap))
    simplified = _phase("simplified", simplify_all(propagated, s))
    reverted = _phase("reverted", revert(propagated, simplified, pmap, s))
    result = _phase("cleaned", cleanup(reverted, observables))
    ledger = _ledger(p, invariants, result)
    logger.debug(
        "Propagation: %d -> %d statements, %d reverted, %d rewrites, %d ledger entries",
        p.stmt_count(), result.stmt_count(), len(pmap.reverted), s.stats.rewrites, len(ledger),
    )
    return result, ledger
