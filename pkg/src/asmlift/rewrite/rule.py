"""Rewrite rules and their registry.

A rule looks at the root of an expression only and returns the rewritten
expression, or None when it does not apply. The simplifier takes care of
traversal and of re-simplifying the result.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from enum import StrEnum

from asmlift.ir.expr import Const, Expr, mask


class Category(StrEnum):
    NORMALIZATION = "normalization"
    CONSTANT_FOLDING = "constant-folding"
    NEUTRAL = "neutral"
    IDEMPOTENCE = "idempotence"
    ABSORBING = "absorbing"
    INVERSE = "inverse"
    INVOLUTIVITY = "involutivity"
    SHIFTS = "shifts"
    REMAINDER_EXTENSION = "remainder-extension"
    CONDITION = "condition"
    DE_MORGAN = "de-morgan"
    TERNARY = "ternary"
    SPLIT = "split"
    CONCAT_ABSTRACTION = "concat-abstraction"
    EXTRACTION = "extraction"
    TWOS_COMPLEMENT = "twos-complement"


Apply = Callable[[Expr], Expr | None]


@dataclass(frozen=True)
class RewriteRule:
    """`witnesses` are IR expression templates the rule fires on, formatted with
    `w` (a variable width), `wp` (w+1), `w2` (2w), `top` (w-1), `top2` (2w-1), `ones` (all-ones
    at w), `min` (2^(w-1)) and `pow` (2^w); the soundness suite checks the rule
    on each of them.
    """
    name: str
    category: Category
    apply: Apply
    witnesses: tuple[str, ...] = ()
    speculative: bool = False

    def __call__(self, e: Expr) -> Expr | None:
        return self.apply(e)


RULES: dict[str, RewriteRule] = {}
UNSOUND_RULES: dict[str, RewriteRule] = {}


def rule(
    category: Category, *witnesses: str, speculative: bool = False, sound: bool = True
) -> Callable[[Apply], Apply]:
    def decorator(fn: Apply) -> Apply:
        name = fn.__name__.lstrip("_")
        registry = RULES if sound else UNSOUND_RULES
        if name in registry:
            raise ValueError(f"duplicate rule {name}")
        registry[name] = RewriteRule(name, category, fn, tuple(witnesses), speculative)
        return fn
    return decorator


def rules_of(category: Category) -> list[RewriteRule]:
    return [r for r in RULES.values() if r.category is category]


# ---------------------------------------------------------------------------
#  Matching helpers
# ---------------------------------------------------------------------------


def const(e: Expr) -> int | None:
    return e.value if isinstance(e, Const) else None


def is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0


def is_one(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 1


def is_ones(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == mask(e.width)


def is_min(e: Expr) -> bool:
    """Signed minimum of its width."""
    return isinstance(e, Const) and e.value == 1 << (e.width - 1)
