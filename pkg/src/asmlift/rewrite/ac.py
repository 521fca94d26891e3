"""Associativity-commutativity re-ordering.

A chain of one associative operator is flattened, its non-constant operands
are sorted by their printed form, the constants are folded into a single one
placed last, and the chain is rebuilt left-associated:

    (x + 1) + a   becomes   (a + x) + 1
"""

from __future__ import annotations

from functools import lru_cache

from asmlift.ir.expr import ASSOCIATIVE, Binop, Const, Expr, transform
from asmlift.ir.semantics import fold
from asmlift.ir.syntax import print_expr


@lru_cache(maxsize=65536)
def sort_key(e: Expr) -> str:
    return print_expr(e)


def flatten(e: Binop) -> list[Expr]:
    """Operands of the maximal same-operator chain rooted at `e`, left to right."""
    operands: list[Expr] = []
    stack: list[Expr] = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Binop) and node.op is e.op and node.width == e.width:
            stack.extend((node.rhs, node.lhs))
        else:
            operands.append(node)
    return operands


def normalize_root(e: Expr) -> Expr:
    """Re-order the chain at the root of `e` only; other nodes are left as they are."""
    if not (isinstance(e, Binop) and e.op in ASSOCIATIVE):
        return e
    operands = flatten(e)
    terms = sorted((o for o in operands if not isinstance(o, Const)), key=sort_key)
    folded: Const | None = None
    for c in (o for o in operands if isinstance(o, Const)):
        folded = c if folded is None else fold(e.op, folded, c)
    if folded is not None:
        terms.append(folded)
    result = terms[0]
    for term in terms[1:]:
        result = Binop(e.op, result, term)
    return result


def normalize(e: Expr) -> Expr:
    """AC normal form of every chain in `e`."""
    return transform(e, normalize_root)


def ac_equal(a: Expr, b: Expr) -> bool:
    return a == b or normalize(a) == normalize(b)
