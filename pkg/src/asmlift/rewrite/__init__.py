"""Rule-based simplification and expression propagation."""

from asmlift.rewrite.propagate import PropagationMap, propagate_and_simplify
from asmlift.rewrite.rule import RULES, UNSOUND_RULES, Category, RewriteRule
from asmlift.rewrite.simplify import Simplifier, SimplifyStats, simplify_expr, simplify_program

__all__ = [
    "RULES",
    "UNSOUND_RULES",
    "Category",
    "PropagationMap",
    "RewriteRule",
    "Simplifier",
    "SimplifyStats",
    "propagate_and_simplify",
    "simplify_expr",
    "simplify_program",
]
