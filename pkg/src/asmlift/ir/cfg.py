"""Control-flow graphs over block ids, built on networkx.

Edges carry their `EdgeTag` as the multigraph key, so a branch whose two
arms reach the same block still yields two distinguishable edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx

from asmlift.errors import AsmLiftError
from asmlift.ir.program import EdgeTag, Program


class IrreducibleCFG(AsmLiftError):
    pass


def build_cfg(p: Program) -> nx.MultiDiGraph:
    g = nx.MultiDiGraph(entry=p.entry)
    g.add_nodes_from(p.labels)
    for b in p.blocks:
        for tag, target in b.successors():
            g.add_edge(b.id, target, key=tag, tag=tag)
    return g


def out_edges(g: nx.MultiDiGraph, node: str) -> dict[EdgeTag, str]:
    return {tag: dst for _, dst, tag in g.out_edges(node, keys=True)}


def reachable(g: nx.MultiDiGraph, entry: str) -> set[str]:
    return {entry} | nx.descendants(g, entry)


def dominators(g: nx.MultiDiGraph, entry: str) -> dict[str, str]:
    """Immediate dominators of the blocks reachable from `entry` (entry maps to itself)."""
    return nx.immediate_dominators(nx.DiGraph(g), entry)


def dominates(idom: dict[str, str], a: str, b: str) -> bool:
    """Does `a` dominate `b`? Unreachable blocks are dominated by nothing."""
    if b not in idom:
        return False
    node = b
    while True:
        if node == a:
            return True
        parent = idom[node]
        if parent == node:
            return False
        node = parent


def back_edges(g: nx.MultiDiGraph, entry: str) -> list[tuple[str, str]]:
    idom = dominators(g, entry)
    return sorted({(u, v) for u, v in g.edges() if u in idom and dominates(idom, v, u)})


def is_reducible(g: nx.MultiDiGraph, entry: str) -> bool:
    """Removing back edges (target dominates source) must leave the reachable part acyclic."""
    live = reachable(g, entry)
    forward = nx.DiGraph(g.subgraph(live))
    forward.remove_edges_from(back_edges(g, entry))
    return nx.is_directed_acyclic_graph(forward)


def require_reducible(p: Program) -> nx.MultiDiGraph:
    g = build_cfg(p)
    if not is_reducible(g, p.entry):
        raise IrreducibleCFG(f"control flow from {p.entry} is irreducible")
    return g


@dataclass(frozen=True)
class Loop:
    header: str
    body: frozenset[str]
    latches: tuple[str, ...]

    def exits(self, g: nx.MultiDiGraph) -> list[tuple[str, EdgeTag, str]]:
        return sorted(
            (src, tag, dst)
            for src in self.body
            for _, dst, tag in g.out_edges(src, keys=True)
            if dst not in self.body
        )


def natural_loops(g: nx.MultiDiGraph, entry: str) -> list[Loop]:
    """One loop per header, merging the bodies of all its back edges."""
    live = reachable(g, entry)
    by_header: dict[str, tuple[set[str], list[str]]] = {}
    for latch, header in back_edges(g, entry):
        body, latches = by_header.setdefault(header, ({header}, []))
        latches.append(latch)
        stack = [latch]
        while stack:
            node = stack.pop()
            if node in body:
                continue
            body.add(node)
            stack.extend(q for q in g.predecessors(node) if q in live)
    return [
        Loop(header, frozenset(body), tuple(sorted(latches)))
        for header, (body, latches) in sorted(by_header.items())
    ]
