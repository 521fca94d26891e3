"""Enumerative checking of block queries at a reduced bit width.

Every width is divided by the same factor (32-bit values become `width`-bit
values), extraction indices and shift amounts are scaled with it, and the
narrowed query is run over all its input states when they fit the cap, over
edge values and seeded random states otherwise. Initial memory is an input
too: every byte a block reads before writing it takes all 256 values when
enumerating, a random one when sampling. A query using constants or
bit positions that do not survive the scaling is checked unnarrowed by
sampling. Agreement at a narrow width is evidence, not proof; a mismatch is
a real counterexample at that width.
"""

from __future__ import annotations

import itertools
import logging
import random
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field

from asmlift.ir.expr import SHIFTS, Binop, Const, Expr, Ite, Load, Unop, UnOp, Var, mask
from asmlift.ir.interpreter import ADDRESS_BITS, ByteMemory, CompiledBlock, compile_block
from asmlift.ir.program import BasicBlock, EdgeTag, Store, map_exprs
from asmlift.ir.semantics import Evaluator, InterpreterError, compile_expr
from asmlift.validation.checker import SamplingChecker, edge_values
from asmlift.validation.query import EquivQuery, Obligation, Restriction, Side
from asmlift.validation.vector import Unvectorizable, VectorRunner

logger = logging.getLogger(__name__)

FULL_WIDTH = 32


class NotNarrowable(Exception):
    pass


# ---------------------------------------------------------------------------
#  Narrowing
# ---------------------------------------------------------------------------


class Narrower:
    def __init__(self, factor: int):
        self.factor = factor

    def width(self, w: int) -> int:
        if w == 1 or self.factor == 1:
            return w
        if w % self.factor:
            raise NotNarrowable(f"{w}-bit value")
        return w // self.factor

    def nbytes(self, nbytes: int) -> int:
        bits = self.width(8 * nbytes)
        if bits % 8:
            raise NotNarrowable(f"{nbytes}-byte access")
        return bits // 8

    def const(self, c: Const) -> Const:
        nw = self.width(c.width)
        if nw == c.width:
            return c
        if c.value < 1 << (nw - 1):
            return Const(c.value, nw)
        if -c.signed <= 1 << (nw - 1):
            return Const(c.signed, nw)
        raise NotNarrowable(f"constant {c.value:#x}")

    def bits(self, width: int, lo: int, hi: int) -> tuple[int, int]:
        f = self.factor
        if width == 1 or f == 1:
            return lo, hi
        if lo % f == 0 and (hi + 1) % f == 0:
            return lo // f, (hi + 1) // f - 1
        if lo == hi == width - 1:
            top = self.width(width) - 1
            return top, top
        if lo == hi == 0:
            return 0, 0
        raise NotNarrowable(f"bits {lo}..{hi} of a {width}-bit value")

    def shift(self, k: Const) -> Const:
        if k.value % self.factor:
            raise NotNarrowable(f"shift by {k.value}")
        return Const(k.value // self.factor, self.width(k.width))

    def expr(self, e: Expr) -> Expr:  # noqa: PLR0911
        match e:
            case Const():
                return self.const(e)
            case Var(name, w):
                return Var(name, self.width(w))
            case Load(addr, nbytes):
                return Load(self.expr(addr), self.nbytes(nbytes))
            case Unop(UnOp.EXTRACT, arg, (lo, hi)):
                return Unop(UnOp.EXTRACT, self.expr(arg), self.bits(arg.width, lo, hi))
            case Unop(UnOp.UEXT | UnOp.SEXT as op, arg, (n,)):
                return Unop(op, self.expr(arg), (self.width(n),))
            case Unop(op, arg, params):
                return Unop(op, self.expr(arg), params)
            case Binop(op, lhs, Const() as k) if op in SHIFTS:
                return Binop(op, self.expr(lhs), self.shift(k))
            case Binop(op, lhs, rhs):
                return Binop(op, self.expr(lhs), self.expr(rhs))
            case Ite(cond, then, orelse):
                return Ite(self.expr(cond), self.expr(then), self.expr(orelse))
        raise TypeError(e)

    def block(self, b: BasicBlock) -> BasicBlock:
        body = []
        for stmt in b.body:
            if isinstance(stmt, Store):
                stmt = Store(stmt.addr, self.nbytes(stmt.nbytes), stmt.value)
            body.append(map_exprs(stmt, self.expr))
        return b.with_body(body, map_exprs(b.terminator, self.expr))

    def query(self, q: EquivQuery) -> EquivQuery:
        return EquivQuery(
            original=self.block(q.original),
            lifted=self.block(q.lifted),
            inputs={v: self.width(w) for v, w in q.inputs.items()},
            assumptions=tuple(Restriction(r.var, self.width(r.width), self.expr(r.expr)) for r in q.assumptions),
            obligations=tuple(
                Obligation(o.edge, o.var, self.width(o.width),
                           None if o.expected is None else self.expr(o.expected), o.side)
                for o in q.obligations
            ),
            memory=q.memory,
        )


def narrow(q: EquivQuery, width: int) -> EquivQuery:
    """`q` with every 32-bit quantity scaled down to `width` bits; raises NotNarrowable."""
    if width >= FULL_WIDTH:
        return q
    if FULL_WIDTH % width:
        raise NotNarrowable(f"width {width} does not divide {FULL_WIDTH}")
    return Narrower(FULL_WIDTH // width).query(q)


class NarrowingChecker:
    """Expression equivalence checked on narrowed values first, then sampled at full width.

    Both expressions are scaled down to `width` bits the way block queries are
    and enumerated when their inputs fit `enum_cap`. Expressions that do not
    narrow are only sampled.
    """

    def __init__(self, width: int = 8, samples: int = 512, seed: int = 0, enum_cap: int = 1 << 16):
        self.width = width
        self.narrowed = SamplingChecker(samples, seed, enum_cap, exhaustive_bits=width)
        self.full = SamplingChecker(samples, seed, enum_cap)

    def equivalent(self, a: Expr, b: Expr) -> bool | None:
        if a == b:
            return True
        if FULL_WIDTH % self.width:
            return self.full.equivalent(a, b)
        narrower = Narrower(FULL_WIDTH // self.width)
        try:
            na, nb = narrower.expr(a), narrower.expr(b)
        except NotNarrowable as e:
            logger.debug("Sampling at full width, %s", e)
            return self.full.equivalent(a, b)
        verdict = self.narrowed.equivalent(na, nb)
        return self.full.equivalent(a, b) if verdict else verdict


# ---------------------------------------------------------------------------
#  Execution
# ---------------------------------------------------------------------------


class UnboundCell(Exception):
    """A byte of initial memory the state does not fix yet."""

    def __init__(self, addr: int):
        super().__init__(f"initial byte at {addr:#x}")
        self.addr = addr


class InitialMemory(ByteMemory):
    """Memory over initial contents shared by both sides of a query.

    An initial byte missing from `initial` is drawn by `fill` and kept there,
    or raises UnboundCell when there is no `fill`.
    """

    def __init__(self, initial: dict[int, int], fill: Callable[[int], int] | None = None):
        super().__init__()
        self.initial = initial
        self.fill = fill

    def byte(self, addr: int) -> int:
        addr &= mask(ADDRESS_BITS)
        if addr in self.data:
            return self.data[addr]
        if addr not in self.initial:
            if self.fill is None:
                raise UnboundCell(addr)
            self.initial[addr] = self.fill(addr)
        return self.initial[addr]


@dataclass(frozen=True)
class BruteResult:
    equivalent: bool
    method: str
    states: int
    counterexample: dict[str, int] = field(default_factory=dict)
    memory: dict[int, int] = field(default_factory=dict)
    detail: str = ""


def _outcome(cb: CompiledBlock, b: BasicBlock, values: dict[str, int], memory: ByteMemory) -> EdgeTag | None:
    for step in cb.steps:
        step(values, memory)
    label = cb.next_label(values, memory)
    if label is None:
        return None
    return next(tag for tag, target in b.successors() if target == label)


Fill = Callable[[int], int] | None


class QueryRunner:
    """A query compiled once and checked on any number of input states."""

    def __init__(self, q: EquivQuery):
        self.q = q
        self.original = compile_block(q.original)
        self.lifted = compile_block(q.lifted)
        self.assumptions = [(r.var, compile_expr(r.expr)) for r in q.assumptions]
        self.obligations: dict[EdgeTag | None, list[tuple[Obligation, Evaluator | None]]] = {}
        for o in q.obligations:
            fn = None if o.expected is None else compile_expr(o.expected)
            self.obligations.setdefault(o.edge, []).append((o, fn))

    def complete(self, state: dict[str, int], initial: dict[int, int], fill: Fill = None) -> dict[str, int]:
        """The input state with every assumed variable computed from the others."""
        values = dict(state)
        memory = InitialMemory(initial, fill)
        for var, fn in self.assumptions:
            values[var] = fn(values, memory) & mask(self.q.inputs[var])
        return values

    def mismatch(self, values: dict[str, int], initial: dict[int, int], fill: Fill = None) -> str | None:
        mem_o, mem_l = InitialMemory(initial, fill), InitialMemory(initial, fill)
        final_o, final_l = dict(values), dict(values)
        faults = []
        edges: list[EdgeTag | None] = []
        for cb, b, final, mem in ((self.original, self.q.original, final_o, mem_o),
                                  (self.lifted, self.q.lifted, final_l, mem_l)):
            try:
                edges.append(_outcome(cb, b, final, mem))
            except InterpreterError as e:
                faults.append(f"{b.id}: {e}")
        if len(faults) == 2:
            return None
        if faults:
            return f"only one side faults ({faults[0]})"
        if edges[0] != edges[1]:
            return f"original leaves by {edges[0] or 'halt'}, lifted by {edges[1] or 'halt'}"

        for o, fn in self.obligations.get(edges[0], []):
            actual = (final_l if o.side is Side.LIFTED else final_o)[o.var]
            expected = final_o[o.var] if fn is None else fn(final_o, mem_o) & mask(o.width)
            if actual != expected:
                return f"{o.side} {o.var} is {actual:#x}, expected {expected:#x}"
        if self.q.memory:
            for addr in sorted(mem_o.written | mem_l.written):
                if mem_o.byte(addr) != mem_l.byte(addr):
                    return f"memory at {addr:#x}: {mem_o.byte(addr):#x} vs {mem_l.byte(addr):#x}"
        return None

    def check(
        self, state: dict[str, int], initial: dict[int, int], fill: Fill = None
    ) -> tuple[dict[str, int], str | None]:
        values = self.complete(state, initial, fill)
        return values, self.mismatch(values, initial, fill)


def _space(widths: dict[str, int]) -> int:
    total = 1
    for w in widths.values():
        total <<= w
    return total


def _sampled(widths: dict[str, int], enum_cap: int, samples: int, rng: random.Random) -> Iterator[dict[str, int]]:
    names = sorted(widths)
    edges = [edge_values(widths[n]) for n in names]
    combos = 1
    for e in edges:
        combos *= len(e)
    if combos <= enum_cap:
        for values in itertools.product(*edges):
            yield dict(zip(names, values, strict=True))
    for _ in range(samples):
        yield {n: rng.getrandbits(widths[n]) for n in names}


def _vectorized(q: EquivQuery, method: str, cap: int) -> BruteResult | None:
    """Every state at once, when the query has a vector form and its states fit `cap`."""
    try:
        runner = VectorRunner(q)
        if runner.space > cap:
            return None
        found = runner.check()
    except Unvectorizable as e:
        logger.debug("Query %s has no vector form (%s)", q.name, e)
        return None
    if found.counterexample is None:
        return BruteResult(True, method, found.states)
    return BruteResult(False, method, found.states, found.counterexample, found.memory, found.detail)


def _enumerated(runner: QueryRunner, free: dict[str, int], method: str, cap: int) -> BruteResult | None:
    """Every input state with every initial memory byte it reads; None past `cap` states."""
    names = sorted(free)
    checked = 0
    for vs in itertools.product(*(range(1 << free[n]) for n in names)):
        state = dict(zip(names, vs, strict=True))
        pending: list[dict[int, int]] = [{}]
        while pending:
            initial = pending.pop()
            try:
                values, problem = runner.check(state, initial)
            except UnboundCell as e:
                pending.extend({**initial, e.addr: byte} for byte in range(0xFF, -1, -1))
                continue
            checked += 1
            if checked > cap:
                return None
            if problem is not None:
                return BruteResult(False, method, checked, values, initial, problem)
    return BruteResult(True, method, checked)


def brute_check(  # noqa: PLR0913
    q: EquivQuery,
    *,
    width: int = 8,
    enum_cap: int = 1 << 16,
    vector_cap: int = 1 << 24,
    samples: int = 4096,
    seed: int = 0,
) -> BruteResult:
    """Look for an input state and initial memory on which the two blocks of `q` disagree.

    Narrowed queries are enumerated in full when their states fit `vector_cap`
    (all at once) or `enum_cap` (one by one); everything else is sampled.
    """
    try:
        checked, bits = narrow(q, width), min(width, FULL_WIDTH)
    except NotNarrowable as e:
        logger.warning("Query %s is not narrowable (%s); sampling at full width", q.name, e)
        checked, bits = q, FULL_WIDTH

    runner = QueryRunner(checked)
    free = checked.free_inputs
    if bits < FULL_WIDTH:
        method = f"exhaustive@{bits}"
        found = _vectorized(checked, method, vector_cap)
        if found is None and _space(free) <= enum_cap:
            found = _enumerated(runner, free, method, enum_cap)
        if found is not None:
            _log(q, found)
            return found

    method = f"sampled@{bits}"
    rng = random.Random(seed)
    states = 0
    for state in _sampled(free, enum_cap, samples, rng):
        initial: dict[int, int] = {}
        values, problem = runner.check(state, initial, lambda _addr: rng.getrandbits(8))
        states += 1
        if problem is not None:
            found = BruteResult(False, method, states, values, initial, problem)
            _log(q, found)
            return found
    found = BruteResult(True, method, states)
    _log(q, found)
    return found


def _log(q: EquivQuery, found: BruteResult) -> None:
    if found.equivalent:
        logger.debug("Query %s: %d state(s) agree (%s)", q.name, found.states, found.method)
    else:
        logger.info("Query %s: counterexample after %d state(s) (%s): %s", q.name, found.states, found.method,
                    found.detail)
