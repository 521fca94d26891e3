"""High-level predicate recovery.

A branch on flags is replaced by a comparison over the operands of the last
flag-setting instruction of its block, restated at the end of the block:

    decl ecx; jg L      ->  if ecx + 1 >s 1 then goto L
    cmpl %ebx, %eax; jb L  ->  if eax <u ebx then goto L

Candidates are checked against the flag condition after symbolic execution
of the whole block, so a candidate is kept only if it holds whatever the
block did after the flag-setting instruction.
"""

from __future__ import annotations

import logging

from asmlift.frontend.decoder import FlagSite
from asmlift.frontend.x86 import FLAGS
from asmlift.ir.expr import BinOp, Binop, Const, Expr, has_load, substitute, var_names
from asmlift.ir.program import Assign, BasicBlock, Branch, Store
from asmlift.passes.types import TypedProgram
from asmlift.rewrite.propagate import eliminate_dead_code
from asmlift.validation.checker import ExprChecker

logger = logging.getLogger(__name__)

_EQUALITIES = (BinOp.EQ, BinOp.NEQ)
_ORDERS = (
    BinOp.ULT, BinOp.ULE, BinOp.UGT, BinOp.UGE,
    BinOp.SLT, BinOp.SLE, BinOp.SGT, BinOp.SGE,
)
_FLAG_NAMES = frozenset(FLAGS)


def candidates(site: FlagSite) -> list[Expr]:
    """Equalities first (on the result, then on the operands), then unsigned, then signed orders."""
    by_result = (site.result, Const(0, site.width))
    pairs = [by_result] if site.lhs is None or site.rhs is None else [(site.lhs, site.rhs), by_result]
    found = [Binop(op, a, b) for op in _EQUALITIES for a, b in reversed(pairs)]
    found += [Binop(op, a, b) for op in _ORDERS for a, b in pairs]
    return found


def block_state(b: BasicBlock) -> dict[str, Expr] | None:
    """Symbolic values at the end of the block, over its entry values; None when memory is written."""
    if any(isinstance(s, Store) for s in b.body):
        return None
    state: dict[str, Expr] = {}
    for stmt in b.body:
        if isinstance(stmt, Assign):
            state[stmt.lhs.name] = substitute(stmt.rhs, state)
    return state


def recover_branch(b: BasicBlock, sites: list[FlagSite], checker: ExprChecker) -> Expr | None:
    assert isinstance(b.terminator, Branch)
    state = block_state(b)
    if state is None or not sites:
        return None
    cond = substitute(b.terminator.cond, state)
    if has_load(cond):
        return None
    for candidate in candidates(sites[-1]):
        verdict = checker.equivalent(substitute(candidate, state), cond)
        if verdict is None:
            logger.warning("Predicate check undecided in %s, keeping the flag condition", b.id)
            return None
        if verdict:
            return candidate
    return None


def recover_predicates(t: TypedProgram, checker: ExprChecker) -> TypedProgram:
    sites_by_block: dict[str, list[FlagSite]] = {}
    for site in t.chunk.flag_sites:
        sites_by_block.setdefault(site.block, []).append(site)

    blocks: dict[str, BasicBlock] = {}
    recovered = 0
    for b in t.program.blocks:
        if not isinstance(b.terminator, Branch) or not var_names(b.terminator.cond) & _FLAG_NAMES:
            continue
        found = recover_branch(b, sites_by_block.get(b.id, []), checker)
        if found is None:
            logger.debug("No predicate recovered for %s", b.id)
            continue
        blocks[b.id] = b.with_body(b.body, Branch(found, b.terminator.then_target, b.terminator.else_target))
        recovered += 1

    program = t.program.replace_blocks(blocks)
    program = eliminate_dead_code(program, t.chunk.observables, only=_FLAG_NAMES)
    logger.debug("Recovered %d predicate(s) in %s", recovered, t.chunk.name)
    return t.with_program(program)
