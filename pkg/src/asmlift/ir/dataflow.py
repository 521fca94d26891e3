"""Classic bit-set style dataflow over block ids: predecessors, upward-exposed reads, liveness."""

from __future__ import annotations

from collections.abc import Iterable

from asmlift.ir.program import Assign, BasicBlock, Program, instr_reads


def predecessors(p: Program) -> dict[str, list[str]]:
    preds: dict[str, list[str]] = {b.id: [] for b in p.blocks}
    for b in p.blocks:
        for _, target in b.successors():
            if target in preds and b.id not in preds[target]:
                preds[target].append(b.id)
    return preds


def block_use_def(b: BasicBlock) -> tuple[frozenset[str], frozenset[str]]:
    """(read before written in the block, written in the block)."""
    use: set[str] = set()
    defs: set[str] = set()
    for instr in b.instrs:
        use.update(instr_reads(instr) - defs)
        if isinstance(instr, Assign):
            defs.add(instr.lhs.name)
    return frozenset(use), frozenset(defs)


def upward_exposed(p: Program) -> frozenset[str]:
    """Names read at a point where some path from the entry has not assigned them."""
    preds = predecessors(p)
    universe = frozenset(p.variables())
    use_def = {b.id: block_use_def(b) for b in p.blocks}
    must_in: dict[str, frozenset[str]] = {b.id: universe for b in p.blocks}
    must_in[p.entry] = frozenset()

    changed = True
    while changed:
        changed = False
        for b in p.blocks:
            if b.id == p.entry or not preds[b.id]:
                new_in = frozenset()
            else:
                outs = [must_in[q] | use_def[q][1] for q in preds[b.id]]
                new_in = frozenset.intersection(*outs)
            if new_in != must_in[b.id]:
                must_in[b.id] = new_in
                changed = True

    exposed: set[str] = set()
    for b in p.blocks:
        exposed.update(use_def[b.id][0] - must_in[b.id])
    return frozenset(exposed)


def liveness(p: Program, live_at_halt: Iterable[str] | None = None) -> dict[str, frozenset[str]]:
    """Live-in sets per block. `live_at_halt=None` treats every variable as observed at halt."""
    halt_live = frozenset(p.variables()) if live_at_halt is None else frozenset(live_at_halt)
    use_def = {b.id: block_use_def(b) for b in p.blocks}
    live_in: dict[str, frozenset[str]] = {b.id: frozenset() for b in p.blocks}

    changed = True
    while changed:
        changed = False
        for b in reversed(p.blocks):
            succs = [t for _, t in b.successors() if t in live_in]
            out = halt_live if not succs else frozenset().union(*(live_in[s] for s in succs))
            use, defs = use_def[b.id]
            new_in = use | (out - defs)
            if new_in != live_in[b.id]:
                live_in[b.id] = new_in
                changed = True
    return live_in


def live_out(p: Program, b: BasicBlock, live_in: dict[str, frozenset[str]],
             live_at_halt: Iterable[str] | None = None) -> frozenset[str]:
    succs = [t for _, t in b.successors() if t in live_in]
    if not succs:
        return frozenset(p.variables()) if live_at_halt is None else frozenset(live_at_halt)
    return frozenset().union(*(live_in[s] for s in succs))
