"""Structured control flow from a block graph.

Natural loops become `while` loops (with the header test as condition when
the header only tests), two-way branches become `if`/`else` joined at their
immediate post-dominator, and conditional expressions become `if`/`else`
assignment pairs. Whatever does not fit these shapes is reached with a
labeled `goto`, so structuring always succeeds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import count

import networkx as nx

from asmlift.ir.cfg import Loop, back_edges, build_cfg, natural_loops, reachable
from asmlift.ir.expr import NEGATED, BinOp, Binop, Const, Expr, Ite, Var, children, rebuild, var_names, walk
from asmlift.ir.program import Assign, BasicBlock, Branch, Goto, Halt, Program, Store

logger = logging.getLogger(__name__)

SINK = "<sink>"


# ---------------------------------------------------------------------------
#  Tree
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SStmt:
    block: str
    instr: Assign | Store


@dataclass(frozen=True)
class SIf:
    block: str
    cond: Expr
    then: tuple[Node, ...]
    orelse: tuple[Node, ...] = ()


@dataclass(frozen=True)
class SLoop:
    """`while (cond) body`; `cond` None loops until a break. `step` turns it into a `for`."""
    block: str
    cond: Expr | None
    body: tuple[Node, ...]
    step: SStmt | None = None


@dataclass(frozen=True)
class SBreak:
    block: str


@dataclass(frozen=True)
class SContinue:
    block: str


@dataclass(frozen=True)
class SGoto:
    block: str
    target: str


@dataclass(frozen=True)
class SLabel:
    target: str


@dataclass(frozen=True)
class SHalt:
    block: str


Node = SStmt | SIf | SLoop | SBreak | SContinue | SGoto | SLabel | SHalt


@dataclass(frozen=True)
class Structured:
    body: tuple[Node, ...]
    goto_targets: frozenset[str] = frozenset()
    temporaries: dict[str, int] = field(default_factory=dict)

    @property
    def unstructured(self) -> bool:
        return bool(self.goto_targets)


def negate(cond: Expr) -> Expr:
    if isinstance(cond, Binop) and cond.op in NEGATED:
        return Binop(NEGATED[cond.op], cond.lhs, cond.rhs)
    return Binop(BinOp.EQ, cond, Const(0, 1))


def iter_nodes(nodes: tuple[Node, ...]):
    for node in nodes:
        yield node
        match node:
            case SIf(_, _, then, orelse):
                yield from iter_nodes(then)
                yield from iter_nodes(orelse)
            case SLoop(_, _, body, step):
                yield from iter_nodes(body)
                if step is not None:
                    yield step


# ---------------------------------------------------------------------------
#  Structuring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Context:
    loop: Loop | None = None
    follow: str | None = None
    stop: str | None = None
    outer: frozenset[str] = frozenset()


def _post_dominators(nodes: set[str], edges: list[tuple[str, str]]) -> dict[str, str]:
    """Immediate post-dominators in the region, with every way out reaching SINK."""
    rev = nx.DiGraph()
    rev.add_node(SINK)
    rev.add_nodes_from(nodes)
    rev.add_edges_from((v if v in nodes else SINK, u) for u, v in edges)
    return nx.immediate_dominators(rev, SINK)


class _Structurer:
    def __init__(self, p: Program):
        self.p = p
        self.g = build_cfg(p)
        self.live = reachable(self.g, p.entry)
        self.loops = {loop.header: loop for loop in natural_loops(self.g, p.entry)}
        self.back = set(back_edges(self.g, p.entry))
        self.emitted: set[str] = set()
        self.gotos: set[str] = set()
        self.temporaries: dict[str, int] = {}
        self._temps = count()
        self._ipdom: dict[str | None, dict[str, str]] = {}

    # -- joins ---------------------------------------------------------------

    def _region_ipdom(self, loop: Loop | None) -> dict[str, str]:
        key = loop.header if loop else None
        if key not in self._ipdom:
            nodes = set(loop.body) if loop else set(self.live)
            edges: list[tuple[str, str]] = []
            for u in nodes:
                succs = [dst for _, dst in self.p.block(u).successors()]
                if not succs:
                    edges.append((u, SINK))
                for v in succs:
                    inside = v in nodes and (u, v) not in self.back
                    if loop is not None and v == loop.header:
                        inside = False
                    edges.append((u, v if inside else SINK))
            self._ipdom[key] = _post_dominators(nodes, edges)
        return self._ipdom[key]

    def _join(self, label: str, ctx: _Context) -> str | None:
        found = self._region_ipdom(ctx.loop).get(label)
        return None if found in (None, SINK) else found

    # -- expressions ---------------------------------------------------------

    def _temp(self, width: int) -> Var:
        name = f"ite.{next(self._temps)}"
        self.temporaries[name] = width
        return Var(name, width)

    def _hoist(self, block: str, e: Expr) -> tuple[list[Node], Expr]:
        """Outermost conditional sub-expressions moved into temporaries assigned by if/else.

        Conditionals nested in an arm are lowered inside that arm, so their
        loads stay under the guard.
        """
        pre: list[Node] = []

        def _one(node: Expr) -> Expr:
            if isinstance(node, Ite):
                temp = self._temp(node.width)
                pre.extend(self._assign(block, temp, node))
                return temp
            return rebuild(node, tuple(_one(k) for k in children(node)))

        return pre, _one(e)

    def _assign(self, block: str, lhs: Var, rhs: Expr) -> list[Node]:
        if isinstance(rhs, Ite):
            pre, cond = self._hoist(block, rhs.cond)
            then = tuple(self._assign(block, lhs, rhs.then))
            orelse = tuple(self._assign(block, lhs, rhs.orelse))
            return [*pre, SIf(block, cond, then, orelse)]
        pre, rhs = self._hoist(block, rhs)
        return [*pre, SStmt(block, Assign(lhs, rhs))]

    def _lower(self, b: BasicBlock) -> list[Node]:
        out: list[Node] = []
        for stmt in b.body:
            match stmt:
                case Assign(lhs, rhs):
                    out.extend(self._assign(b.id, lhs, rhs))
                case Store(addr, nbytes, value):
                    pre_addr, addr = self._hoist(b.id, addr)
                    pre_value, value = self._hoist(b.id, value)
                    out.extend([*pre_addr, *pre_value, SStmt(b.id, Store(addr, nbytes, value))])
        return out

    # -- control -------------------------------------------------------------

    def _goto(self, src: str, target: str) -> SGoto:
        self.gotos.add(target)
        return SGoto(src, target)

    def _special(self, src: str, target: str, ctx: _Context) -> Node | None:
        if ctx.loop is not None and target == ctx.loop.header:
            return SContinue(src)
        if target == ctx.follow:
            return SBreak(src)
        if target in self.emitted or target in ctx.outer:
            return self._goto(src, target)
        return None

    def _arm(self, src: str, target: str, ctx: _Context) -> tuple[Node, ...]:
        if target == ctx.stop:
            return ()
        special = self._special(src, target, ctx)
        if special is not None:
            return (special,)
        return tuple(self._seq(target, ctx))

    def _seq(self, label: str | None, ctx: _Context, *, enter_loop: bool = True) -> list[Node]:
        out: list[Node] = []
        src = label
        while label is not None and label != ctx.stop:
            if enter_loop:
                special = self._special(src or label, label, ctx)
                if special is not None:
                    out.append(special)
                    break
                if label in self.loops:
                    out.append(SLabel(label))
                    node, label = self._loop(self.loops[label], ctx)
                    out.append(node)
                    continue
                out.append(SLabel(label))
            enter_loop = True
            self.emitted.add(label)
            b = self.p.block(label)
            out.extend(self._lower(b))
            src, label = label, self._terminator(b, ctx, out)
        return out

    def _terminator(self, b: BasicBlock, ctx: _Context, out: list[Node]) -> str | None:
        match b.terminator:
            case Halt():
                out.append(SHalt(b.id))
                return None
            case Goto(target):
                return target
            case Branch(cond, then_target, else_target):
                join = self._join(b.id, ctx)
                inner = _Context(ctx.loop, ctx.follow, join if join is not None else ctx.stop, ctx.outer)
                pre, cond = self._hoist(b.id, cond)
                out.extend(pre)
                then = self._arm(b.id, then_target, inner)
                orelse = self._arm(b.id, else_target, inner)
                if not then and orelse:
                    cond, then, orelse = negate(cond), orelse, then
                if then or orelse:
                    out.append(SIf(b.id, cond, then, orelse))
                return join
        return None

    def _follow(self, loop: Loop) -> str | None:
        targets = sorted({dst for _, _, dst in loop.exits(self.g)})
        return targets[0] if targets else None

    def _loop(self, loop: Loop, ctx: _Context) -> tuple[SLoop, str | None]:
        follow = self._follow(loop)
        outer = ctx.outer | {ctx.follow} if ctx.follow is not None else ctx.outer
        inner = _Context(loop, follow, None, outer)
        header = self.p.block(loop.header)
        term = header.terminator

        cond: Expr | None = None
        if not header.body and isinstance(term, Branch):
            if term.else_target == follow and term.then_target in loop.body:
                cond, inside = term.cond, term.then_target
            elif term.then_target == follow and term.else_target in loop.body:
                cond, inside = negate(term.cond), term.else_target

        if cond is not None and not _has_ite(cond):
            self.emitted.add(loop.header)
            body = list(self._arm(loop.header, inside, inner))
        else:
            cond = None
            body = self._seq(loop.header, inner, enter_loop=False)
        while body and isinstance(body[-1], SContinue):
            body.pop()
        return _as_for(SLoop(loop.header, cond, tuple(body))), follow

    def run(self) -> Structured:
        body = self._seq(self.p.entry, _Context())
        while pending := sorted(self.gotos - self.emitted):
            logger.debug("Emitting %s out of line", pending[0])
            body.extend(self._seq(pending[0], _Context()))
        return Structured(tuple(body), frozenset(self.gotos), dict(self.temporaries))


def _has_ite(e: Expr) -> bool:
    return any(isinstance(n, Ite) for n in walk(e))


def _as_for(loop: SLoop) -> SLoop:
    """A tested loop whose body ends by stepping a tested variable by a constant."""
    if loop.cond is None or not loop.body:
        return loop
    last = loop.body[-1]
    if not isinstance(last, SStmt) or not isinstance(last.instr, Assign):
        return loop
    lhs, rhs = last.instr.lhs, last.instr.rhs
    stepping = (
        isinstance(rhs, Binop) and rhs.op in (BinOp.ADD, BinOp.SUB)
        and rhs.lhs == lhs and isinstance(rhs.rhs, Const)
    )
    if not stepping or lhs.name not in var_names(loop.cond):
        return loop
    if any(isinstance(n, SContinue) for n in _same_loop_nodes(loop.body)):
        return loop
    return SLoop(loop.block, loop.cond, loop.body[:-1], last)


def _same_loop_nodes(nodes: tuple[Node, ...]):
    for node in nodes:
        yield node
        if isinstance(node, SIf):
            yield from _same_loop_nodes(node.then)
            yield from _same_loop_nodes(node.orelse)


def structure_cfg(p: Program) -> Structured:
    structured = _Structurer(p).run()
    if structured.unstructured:
        logger.warning("Control flow of %d block(s) kept as goto", len(structured.goto_targets))
    return structured
