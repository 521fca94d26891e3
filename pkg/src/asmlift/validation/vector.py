"""Exhaustive checking of a narrowed block query over all its states at once.

A state is an index whose bit fields hold the free inputs, then one byte of
initial memory for every byte the loads of the query can read. Those bytes
are the only initial memory the query observes: states where two of them
sit at the same address with different contents are not states and are
skipped. A byte stored by one side only is compared with initial memory,
which differs from it in some state unless a load pinned it down.

States are evaluated with numpy in chunks; the verdict is the same as
running every state through the block interpreter.
"""

from __future__ import annotations

import logging
from collections import Counter
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field

import numpy as np

from asmlift.ir.expr import BinOp, Binop, Const, Expr, Ite, Load, Unop, UnOp, Var, mask, var_names, walk
from asmlift.ir.interpreter import ADDRESS_BITS
from asmlift.ir.program import Assign, BasicBlock, Branch, EdgeTag, Goto, Store, instr_exprs
from asmlift.validation.query import EquivQuery, Side

logger = logging.getLogger(__name__)

U64 = np.uint64
MAX_WIDTH = 32
CHUNK_BITS = 16
ADDRESS_MASK = U64(mask(ADDRESS_BITS))

Lanes = np.ndarray

_EDGE_CODES: dict[EdgeTag | None, int] = {None: 0, **{tag: i + 1 for i, tag in enumerate(EdgeTag)}}
_EDGE_NAMES = {code: str(tag or "halt") for tag, code in _EDGE_CODES.items()}


class Unvectorizable(Exception):
    pass


@dataclass(frozen=True)
class VectorOutcome:
    states: int
    counterexample: dict[str, int] | None = None
    memory: dict[int, int] = field(default_factory=dict)
    detail: str = ""


@dataclass
class _Side:
    tag: str
    values: dict[str, Lanes]
    fault: Lanes
    stores: list[tuple[Lanes, Lanes]] = field(default_factory=list)
    versions: Counter[str] = field(default_factory=Counter)

    def assign(self, name: str, value: Lanes) -> None:
        self.values[name] = value
        self.versions[name] += 1

    def version(self, name: str) -> object:
        """Version of `name`; 0 is the input value both blocks start from."""
        n = self.versions[name]
        return 0 if n == 0 and self.tag != "pre" else (self.tag, n)

    def byte(self, addr: Lanes, initial: Lanes) -> Lanes:
        found = initial
        for where, value in self.stores:
            found = np.where(addr == where, value, found)
        return found

    def written(self, addr: Lanes) -> Lanes:
        hit = np.zeros(addr.shape, dtype=bool)
        for where, _ in self.stores:
            hit |= addr == where
        return hit


def _signed(a: Lanes, width: int) -> Lanes:
    half = U64(1 << (width - 1))
    return ((a ^ half) - half).view(np.int64)


def _unsigned(a: Lanes, width: int) -> Lanes:
    return a.view(U64) & U64(mask(width))


_COMPARE: dict[BinOp, Callable[[Lanes, Lanes], Lanes]] = {
    BinOp.EQ: np.equal, BinOp.NEQ: np.not_equal,
    BinOp.UGT: np.greater, BinOp.ULT: np.less, BinOp.UGE: np.greater_equal, BinOp.ULE: np.less_equal,
}
_SIGNED_COMPARE = {
    BinOp.SGT: np.greater, BinOp.SLT: np.less, BinOp.SGE: np.greater_equal, BinOp.SLE: np.less_equal,
}
_DIVISIONS = (BinOp.UDIV, BinOp.UREM, BinOp.SDIV, BinOp.SREM)


class _Chunk:
    """One chunk of states: field extraction and expression evaluation.

    An initial memory byte is keyed by the address expression, the byte offset
    and the versions of the variables the address reads, so loads that must
    read the same byte share one field. With `cells` None the chunk only
    collects keys and reads every initial byte as 0.
    """

    def __init__(self, index: Lanes, offset: int, cells: int | None = None):
        self.index = index
        self.size = index.shape[0]
        self.offset = offset
        self.limit = cells
        self.keys: dict[tuple, int] = {}
        self.cell_values: list[Lanes] = []
        self.cell_addresses: list[Lanes] = []

    def field(self, offset: int, width: int) -> Lanes:
        return (self.index >> U64(offset)) & U64(mask(width))

    def everywhere(self) -> Lanes:
        return np.ones(self.size, dtype=bool)

    def full(self, value: int) -> Lanes:
        return np.full(self.size, value, dtype=U64)

    # -- memory ---------------------------------------------------------------

    def cell(self, key: tuple, at: Lanes) -> Lanes:
        n = self.keys.get(key)
        if n is None:
            n = self.keys[key] = len(self.cell_values)
            if self.limit is None:
                self.cell_values.append(self.full(0))
            elif n < self.limit:
                self.cell_values.append(self.field(self.offset + 8 * n, 8))
            else:
                raise Unvectorizable("more initial bytes than counted")
            self.cell_addresses.append(at)
        return self.cell_values[n]

    def load(self, addr: Expr, nbytes: int, side: _Side, active: Lanes) -> Lanes:
        where = self.eval(addr, side, active)
        versions = tuple(sorted((name, side.version(name)) for name in var_names(addr)))
        value = self.full(0)
        for i in range(nbytes):
            at = (where + U64(i)) & ADDRESS_MASK
            initial = self.cell((addr, i, versions), at)
            value |= side.byte(at, initial) << U64(8 * i)
        return value

    def consistent(self) -> Lanes:
        ok = self.everywhere()
        pairs = list(zip(self.cell_addresses, self.cell_values, strict=True))
        for j, (a, x) in enumerate(pairs):
            for b, y in pairs[j + 1:]:
                ok &= (a != b) | (x == y)
        return ok

    def initial(self, addr: Lanes) -> tuple[Lanes, Lanes]:
        """(known, value) of initial memory at `addr`."""
        known = np.zeros(self.size, dtype=bool)
        value = self.full(0)
        for a, x in zip(self.cell_addresses, self.cell_values, strict=True):
            hit = (a == addr) & ~known
            value = np.where(hit, x, value)
            known |= hit
        return known, value

    # -- expressions ----------------------------------------------------------

    def eval(self, e: Expr, side: _Side, active: Lanes) -> Lanes:  # noqa: PLR0911
        match e:
            case Const(value, _):
                return self.full(value)
            case Var(name, _):
                try:
                    return side.values[name]
                except KeyError:
                    raise Unvectorizable(f"unbound variable {name}") from None
            case Load(addr, nbytes):
                return self.load(addr, nbytes, side, active)
            case Unop(op, arg, params):
                return self._unop(op, params, self.eval(arg, side, active), arg.width)
            case Binop(op, lhs, rhs):
                a, b = self.eval(lhs, side, active), self.eval(rhs, side, active)
                return self._binop(op, a, b, lhs.width, rhs.width, side, active)
            case Ite(cond, then, orelse):
                taken = self.eval(cond, side, active) != 0
                yes = self.eval(then, side, active & taken)
                no = self.eval(orelse, side, active & ~taken)
                return np.where(taken, yes, no)
        raise Unvectorizable(f"not an expression: {e!r}")

    @staticmethod
    def _unop(op: UnOp, params: tuple[int, ...], a: Lanes, width: int) -> Lanes:
        m = U64(mask(width))
        match op:
            case UnOp.NOT:
                return ~a & m
            case UnOp.NEG:
                return (U64(1 << width) - a) & m
            case UnOp.UEXT:
                return a
            case UnOp.SEXT:
                return _unsigned(_signed(a, width), params[0])
            case UnOp.EXTRACT:
                lo, hi = params
                return (a >> U64(lo)) & U64(mask(hi - lo + 1))
        raise Unvectorizable(str(op))

    @staticmethod
    def _binop(  # noqa: C901, PLR0911, PLR0913
        op: BinOp, a: Lanes, b: Lanes, width: int, rhs_width: int, side: _Side, active: Lanes
    ) -> Lanes:
        m = U64(mask(width))
        match op:
            case BinOp.ADD:
                return (a + b) & m
            case BinOp.SUB:
                return (a - b) & m
            case BinOp.MUL:
                return (a * b) & m
            case BinOp.AND:
                return a & b
            case BinOp.OR:
                return a | b
            case BinOp.XOR:
                return a ^ b
            case BinOp.CONCAT:
                return (a << U64(rhs_width)) | b
            case BinOp.SHL:
                return np.where(b < U64(width), (a << np.minimum(b, U64(63))) & m, U64(0))
            case BinOp.SHR:
                return np.where(b < U64(width), a >> np.minimum(b, U64(63)), U64(0))
            case BinOp.SAR:
                amount = np.minimum(b, U64(width - 1)).astype(np.int64)
                return _unsigned(_signed(a, width) >> amount, width)
        if op in _COMPARE:
            return _COMPARE[op](a, b).astype(U64)
        if op in _SIGNED_COMPARE:
            return _SIGNED_COMPARE[op](_signed(a, width), _signed(b, width)).astype(U64)
        if op not in _DIVISIONS:
            raise Unvectorizable(str(op))
        zero = b == U64(0)
        side.fault |= active & zero
        b = np.where(zero, U64(1), b)
        match op:
            case BinOp.UDIV:
                return a // b
            case BinOp.UREM:
                return a % b
        sa, sb = _signed(a, width), _signed(b, width)
        if op is BinOp.SDIV:
            q = np.abs(sa) // np.abs(sb)
            return _unsigned(np.where((sa < 0) == (sb < 0), q, -q), width)
        r = np.abs(sa) % np.abs(sb)
        return _unsigned(np.where(sa < 0, -r, r), width)

    # -- blocks ---------------------------------------------------------------

    def run(self, b: BasicBlock, side: _Side) -> Lanes:
        """Execute the body on `side`; returns the code of the edge taken."""
        everywhere = self.everywhere()
        for stmt in b.body:
            match stmt:
                case Assign(lhs, rhs):
                    side.assign(lhs.name, self.eval(rhs, side, everywhere))
                case Store(addr, nbytes, value):
                    at, v = self.eval(addr, side, everywhere), self.eval(value, side, everywhere)
                    for i in range(nbytes):
                        side.stores.append(((at + U64(i)) & ADDRESS_MASK, (v >> U64(8 * i)) & U64(0xFF)))
        match b.terminator:
            case Branch(cond, _, _):
                taken = self.eval(cond, side, everywhere) != 0
                return np.where(taken, _EDGE_CODES[EdgeTag.THEN], _EDGE_CODES[EdgeTag.ELSE])
            case Goto():
                return np.full(self.size, _EDGE_CODES[EdgeTag.GOTO])
        return np.full(self.size, _EDGE_CODES[None])


Problem = tuple[Lanes, Callable[[int], str]]


@dataclass
class _Run:
    chunk: _Chunk
    initial: dict[str, Lanes]
    problems: list[Problem]


class VectorRunner:
    """A narrowed query checked on every one of its states."""

    def __init__(self, q: EquivQuery):
        self.q = q
        for e in self._exprs():
            if any(node.width > MAX_WIDTH for node in walk(e)):
                raise Unvectorizable(f"values wider than {MAX_WIDTH} bits")
        self.free = dict(sorted(q.free_inputs.items()))
        self.input_bits = sum(self.free.values())
        self.cells = len(self._run(np.zeros(1, dtype=U64), None).chunk.keys)
        self.bits = self.input_bits + 8 * self.cells

    def _exprs(self) -> Iterator[Expr]:
        yield from (r.expr for r in self.q.assumptions)
        for b in (self.q.original, self.q.lifted):
            for instr in b.instrs:
                yield from instr_exprs(instr)
        yield from (o.expected for o in self.q.obligations if o.expected is not None)

    @property
    def space(self) -> int:
        return 1 << self.bits

    def check(self) -> VectorOutcome:
        """Count the states and stop at the first one on which the two blocks disagree."""
        step = 1 << CHUNK_BITS
        states = 0
        for start in range(0, self.space, step):
            index = np.arange(start, min(start + step, self.space), dtype=U64)
            found = self._verdict(self._run(index, self.cells))
            if isinstance(found, VectorOutcome):
                return VectorOutcome(states + found.states, found.counterexample, found.memory, found.detail)
            states += found
        return VectorOutcome(states)

    def _run(self, index: Lanes, cells: int | None) -> _Run:
        chunk = _Chunk(index, self.input_bits, cells)
        values: dict[str, Lanes] = {}
        offset = 0
        for name, width in self.free.items():
            values[name] = chunk.field(offset, width) if cells is not None else chunk.full(0)
            offset += width
        before = _Side("pre", values, np.zeros(chunk.size, dtype=bool))
        for r in self.q.assumptions:
            before.assign(r.var, chunk.eval(r.expr, before, chunk.everywhere()) & U64(mask(r.width)))
        initial = dict(values)

        orig = _Side("original", dict(values), np.zeros(chunk.size, dtype=bool))
        lifted = _Side("lifted", dict(values), np.zeros(chunk.size, dtype=bool))
        edge_o, edge_l = chunk.run(self.q.original, orig), chunk.run(self.q.lifted, lifted)
        return _Run(chunk, initial, self._problems(chunk, orig, lifted, edge_o, edge_l))

    def _verdict(self, run: _Run) -> int | VectorOutcome:
        chunk = run.chunk
        valid = chunk.consistent()
        for bad, describe in run.problems:
            hits = np.flatnonzero(bad & valid)
            if hits.size:
                k = int(hits[0])
                counterexample = {n: int(v[k]) for n, v in run.initial.items() if n in self.q.inputs}
                cells = zip(chunk.cell_addresses, chunk.cell_values, strict=True)
                memory = {int(a[k]): int(x[k]) for a, x in cells}
                return VectorOutcome(int(np.count_nonzero(valid[:k])) + 1, counterexample, memory, describe(k))
        return int(np.count_nonzero(valid))

    def _problems(self, chunk: _Chunk, orig: _Side, lifted: _Side, edge_o: Lanes, edge_l: Lanes) -> list[Problem]:
        faulty = "original", "lifted"
        problems: list[Problem] = [
            (orig.fault ^ lifted.fault, lambda k: f"only one side faults ({faulty[0 if orig.fault[k] else 1]})"),
        ]
        ran = ~(orig.fault | lifted.fault)
        problems.append((
            ran & (edge_o != edge_l),
            lambda k: f"original leaves by {_EDGE_NAMES[int(edge_o[k])]}, lifted by {_EDGE_NAMES[int(edge_l[k])]}",
        ))
        same = ran & (edge_o == edge_l)
        for o in self.q.obligations:
            on_edge = same & (edge_o == _EDGE_CODES[o.edge])
            try:
                actual = (lifted if o.side is Side.LIFTED else orig).values[o.var]
                expected = orig.values[o.var] if o.expected is None else chunk.eval(o.expected, orig, on_edge)
            except KeyError:
                raise Unvectorizable(f"{o.var} has no value at exit") from None
            expected = expected & U64(mask(o.width))
            problems.append((on_edge & (actual != expected), _describe(o.side, o.var, actual, expected)))
        if self.q.memory:
            problems.extend(self._memory(chunk, orig, lifted, same))
        return problems

    @staticmethod
    def _memory(chunk: _Chunk, orig: _Side, lifted: _Side, same: Lanes) -> list[Problem]:
        problems: list[Problem] = []
        for addr, _ in orig.stores + lifted.stores:
            known, initial = chunk.initial(addr)
            byte_o, byte_l = orig.byte(addr, initial), lifted.byte(addr, initial)
            pinned = (orig.written(addr) | known) & (lifted.written(addr) | known)
            differs = same & (~pinned | (byte_o != byte_l))

            def describe(k: int, addr=addr, byte_o=byte_o, byte_l=byte_l, pinned=pinned) -> str:
                if not pinned[k]:
                    return f"memory at {int(addr[k]):#x}: written by one side only"
                return f"memory at {int(addr[k]):#x}: {int(byte_o[k]):#x} vs {int(byte_l[k]):#x}"

            problems.append((differs, describe))
        return problems


def _describe(side: Side, var: str, actual: Lanes, expected: Lanes) -> Callable[[int], str]:
    return lambda k: f"{side} {var} is {int(actual[k]):#x}, expected {int(expected[k]):#x}"
