"""Block pairing by simultaneous walk of two control-flow graphs."""

from __future__ import annotations

from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass

from asmlift.ir.program import Program


@dataclass(frozen=True)
class BlockPairing:
    pairs: tuple[tuple[str, str], ...]
    edge_consistent: bool = True

    def lifted_of(self, original: str) -> str:
        return dict(self.pairs)[original]

    def as_dict(self) -> dict[str, str]:
        return dict(self.pairs)


@dataclass(frozen=True)
class IsomorphismMismatch:
    original: str
    lifted: str
    reason: str


def check_isomorphism(
    original: Program, lifted: Program, anchors: Mapping[str, str] | None = None
) -> BlockPairing | IsomorphismMismatch:
    """Pair blocks from the entries along equally tagged edges.

    `anchors` seeds the pairing (for instance from the block comments of
    emitted C); the walk must agree with every anchor it reaches.
    """
    forward: dict[str, str] = {}
    backward: dict[str, str] = {}
    order: list[tuple[str, str]] = []
    queue: deque[tuple[str, str]] = deque()
    anchors = dict(anchors or {})

    def _pair(a: str, b: str) -> str | None:
        if forward.get(a, b) != b or backward.get(b, a) != a:
            return f"{a} would pair with both {forward.get(a)} and {b}"
        if anchors.get(a, b) != b:
            return f"{a} is anchored to {anchors[a]}, not {b}"
        if a not in forward:
            forward[a], backward[b] = b, a
            order.append((a, b))
            queue.append((a, b))
        return None

    if (problem := _pair(original.entry, lifted.entry)) is not None:
        return IsomorphismMismatch(original.entry, lifted.entry, problem)

    while queue:
        a, b = queue.popleft()
        succ_a = dict(original.block(a).successors())
        succ_b = dict(lifted.block(b).successors())
        if set(succ_a) != set(succ_b):
            return IsomorphismMismatch(a, b, f"edges {sorted(succ_a)} vs {sorted(succ_b)}")
        for tag in sorted(succ_a):
            if (problem := _pair(succ_a[tag], succ_b[tag])) is not None:
                return IsomorphismMismatch(succ_a[tag], succ_b[tag], problem)
    return BlockPairing(tuple(order))


def verify_pairing(original: Program, lifted: Program, pairing: BlockPairing) -> bool:
    """Independent re-walk: is `pairing` a bijection that maps tagged edges onto tagged edges?"""
    forward = pairing.as_dict()
    if len(set(forward.values())) != len(forward) or forward.get(original.entry) != lifted.entry:
        return False
    for a, b in forward.items():
        succ_a = dict(original.block(a).successors())
        succ_b = dict(lifted.block(b).successors())
        if set(succ_a) != set(succ_b):
            return False
        if any(forward.get(succ_a[tag]) != succ_b[tag] for tag in succ_a):
            return False
    return True
