"""Innermost-first rewriting to a fixpoint of the rule catalogue."""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Iterable
from dataclasses import dataclass, field

import asmlift.rewrite.rules  # noqa: F401  (fills RULES)
from asmlift.ir.expr import Expr, Ite, children, node_count, rebuild
from asmlift.ir.program import Assign, BasicBlock, Branch, Program, Store
from asmlift.rewrite.ac import normalize_root
from asmlift.rewrite.rule import RULES, RewriteRule

logger = logging.getLogger(__name__)

STEPS_PER_NODE = 50
BASE_STEPS = 1000


@dataclass
class SimplifyStats:
    fired: Counter[str] = field(default_factory=Counter)
    developments_tried: int = 0
    developments_kept: int = 0
    capped: bool = False

    @property
    def rewrites(self) -> int:
        return sum(self.fired.values())


class Simplifier:
    """Applies `rules` bottom-up; results are memoized for the lifetime of the instance.

    Speculative rules are tried last and their result is kept only when one of
    the developed arms of the produced ternary simplifies further.
    """

    def __init__(self, rules: Iterable[RewriteRule] | None = None, *, speculative: bool = True):
        catalogue = list(RULES.values() if rules is None else rules)
        self.rules = [r for r in catalogue if not r.speculative]
        self.speculative = [r for r in catalogue if r.speculative] if speculative else []
        self.stats = SimplifyStats()
        self._memo: dict[Expr, Expr] = {}
        self._budget = 0

    def simplify(self, e: Expr) -> Expr:
        self._budget = STEPS_PER_NODE * node_count(e) + BASE_STEPS
        result = self._simplify(e)
        if self._budget <= 0 and not self.stats.capped:
            self.stats.capped = True
            logger.warning("Rewrite step cap reached on a %d-node expression", node_count(e))
        return result

    def _simplify(self, e: Expr) -> Expr:
        cached = self._memo.get(e)
        if cached is not None:
            return cached
        node = rebuild(e, tuple(self._simplify(k) for k in children(e)))
        result = self._at_root(node)
        self._memo[e] = result
        self._memo[result] = result
        return result

    def _at_root(self, node: Expr) -> Expr:
        while self._budget > 0:
            self._budget -= 1
            rewritten = self._rewrite_once(node)
            if rewritten is None:
                return node
            node = rebuild(rewritten, tuple(self._simplify(k) for k in children(rewritten)))
        return node

    def _rewrite_once(self, node: Expr) -> Expr | None:
        reordered = normalize_root(node)
        if reordered != node:
            return reordered
        for r in self.rules:
            result = r(node)
            if result is not None and result != node:
                self.stats.fired[r.name] += 1
                return result
        for r in self.speculative:
            result = self._develop(r, node)
            if result is not None:
                return result
        return None

    def _develop(self, r: RewriteRule, node: Expr) -> Expr | None:
        candidate = r(node)
        if not isinstance(candidate, Ite):
            return None
        self.stats.developments_tried += 1
        then, orelse = self._simplify(candidate.then), self._simplify(candidate.orelse)
        if then == candidate.then and orelse == candidate.orelse:
            return None
        self.stats.developments_kept += 1
        self.stats.fired[r.name] += 1
        return Ite(candidate.cond, then, orelse)


def simplify_expr(e: Expr) -> Expr:
    return Simplifier().simplify(e)


def simplify_program(p: Program, simplifier: Simplifier | None = None) -> Program:
    """Simplify every expression of every instruction; the control flow is untouched."""
    s = simplifier or Simplifier()
    blocks: dict[str, BasicBlock] = {}
    for b in p.blocks:
        body = []
        for stmt in b.body:
            match stmt:
                case Assign(lhs, rhs):
                    body.append(Assign(lhs, s.simplify(rhs)))
                case Store(addr, nbytes, value):
                    body.append(Store(s.simplify(addr), nbytes, s.simplify(value)))
        terminator = b.terminator
        if isinstance(terminator, Branch):
            terminator = Branch(s.simplify(terminator.cond), terminator.then_target, terminator.else_target)
        blocks[b.id] = b.with_body(body, terminator)
    return p.replace_blocks(blocks)
