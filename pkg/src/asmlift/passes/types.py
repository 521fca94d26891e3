"""Type propagation from the C interface into the IR.

Types flow forward through assignments until nothing changes. Load and store
addresses are pointers, `sar`/`sdiv`/`srem` and sign extensions are signed,
`shr`/`udiv`/`urem` and zero extensions unsigned. Two incompatible types met
on the same variable fall back to unsigned of its width.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping
from dataclasses import dataclass, field

from asmlift.errors import AsmLiftError
from asmlift.frontend.ctype import BOOL, CType, Int, Ptr, signed_of, unsigned_of
from asmlift.frontend.decoder import DecodedChunk
from asmlift.ir.expr import COMPARISONS, BinOp, Binop, Const, Expr, Ite, Load, Unop, UnOp, Var, walk
from asmlift.ir.program import Assign, Program, Store, instr_exprs

logger = logging.getLogger(__name__)

Point = tuple[str, int]

MAX_ROUNDS = 16

_SIGNED_OPS = frozenset({BinOp.SDIV, BinOp.SREM, BinOp.SAR})
_UNSIGNED_OPS = frozenset({BinOp.UDIV, BinOp.UREM, BinOp.SHR, BinOp.CONCAT})


class TypeConflictError(AsmLiftError):
    pass


@dataclass(frozen=True)
class TypedProgram:
    program: Program
    chunk: DecodedChunk
    var_types: Mapping[str, CType] = field(default_factory=dict)
    types: Mapping[tuple[str, Point], CType] = field(default_factory=dict)
    memtypes: Mapping[Point, CType] = field(default_factory=dict)
    diagnostics: tuple[str, ...] = ()

    def type_of(self, name: str, width: int | None = None) -> CType:
        found = self.var_types.get(name)
        if found is not None:
            return found
        return unsigned_of(width or self.program.variables().get(name, 32))

    def with_program(self, program: Program) -> TypedProgram:
        """Re-run inference on a transformed program, keeping what is known so far."""
        return infer_types(program, self.chunk, seed=self.var_types)


def _join(a: CType | None, b: CType | None) -> tuple[CType | None, bool]:
    """Least common type and whether the two conflicted."""
    if a is None or a == b:
        return b, False
    if b is None:
        return a, False
    if isinstance(a, Int) and isinstance(b, Int) and a.bits == b.bits:
        return unsigned_of(a.bits), False
    return unsigned_of(a.width), True


class _Inference:
    def __init__(self, program: Program, fixed: Mapping[str, CType], seed: Mapping[str, CType]):
        self.program = program
        self.fixed = dict(fixed)
        self.env: dict[str, CType] = {**seed, **fixed}
        self.memtypes: dict[Point, CType] = {}
        self.diagnostics: list[str] = []
        self.conflicted: set[str] = set()

    def of(self, e: Expr) -> CType | None:  # noqa: C901, PLR0911
        match e:
            case Var(name, _):
                return self.env.get(name)
            case Const():
                return None
            case Load(addr, nbytes):
                pointer = self.of(addr)
                if isinstance(pointer, Ptr) and pointer.pointee.width == 8 * nbytes:
                    return pointer.pointee
                return unsigned_of(8 * nbytes)
            case Unop(UnOp.SEXT, _, (n,)):
                return signed_of(n)
            case Unop(UnOp.UEXT, _, (n,)):
                return unsigned_of(n)
            case Unop(UnOp.EXTRACT, arg, (lo, _)):
                inner = self.of(arg)
                if lo == 0 and isinstance(inner, Int) and inner.signed:
                    return signed_of(e.width)
                return unsigned_of(e.width)
            case Unop(_, arg, _):
                inner = self.of(arg)
                return inner if isinstance(inner, Int) else unsigned_of(e.width)
            case Binop(op, _, _) if op in COMPARISONS:
                return BOOL
            case Binop(op, _, _) if op in _SIGNED_OPS:
                return signed_of(e.width)
            case Binop(op, _, _) if op in _UNSIGNED_OPS:
                return unsigned_of(e.width)
            case Binop(op, lhs, rhs):
                return self._arith(op, self.of(lhs), self.of(rhs), e.width)
            case Ite(_, then, orelse):
                return _join(self.of(then), self.of(orelse))[0]
        return None

    def _arith(self, op: BinOp, a: CType | None, b: CType | None, width: int) -> CType | None:
        if op in (BinOp.ADD, BinOp.SUB):
            if isinstance(a, Ptr) and isinstance(b, Ptr):
                return signed_of(width) if op is BinOp.SUB else unsigned_of(width)
            if isinstance(a, Ptr):
                return a
            if isinstance(b, Ptr) and op is BinOp.ADD:
                return b
        if isinstance(a, Ptr) or isinstance(b, Ptr):
            return unsigned_of(width)
        if a is None or b is None:
            return a or b
        return _join(a, b)[0]

    def _address(self, addr: Expr, nbytes: int, point: Point) -> None:
        pointer = self.of(addr)
        if isinstance(addr, Var) and pointer is None and addr.name not in self.fixed:
            pointer = Ptr(unsigned_of(8 * nbytes), nbytes)
            self.env[addr.name] = pointer
        pointee = pointer.pointee if isinstance(pointer, Ptr) and pointer.pointee.width == 8 * nbytes else None
        self.memtypes[point] = pointee or unsigned_of(8 * nbytes)

    def _define(self, var: Var, found: CType | None) -> bool:
        name = var.name
        if found is None or name in self.fixed:
            return False
        if var.width == 1:
            found = BOOL
        elif found.width != var.width:
            found = unsigned_of(var.width)
        joined, conflict = _join(self.env.get(name), found)
        if conflict and name not in self.conflicted:
            self.conflicted.add(name)
            self.diagnostics.append(f"{name}: {self.env.get(name)} meets {found}, using {joined}")
            logger.warning("Type conflict on %s: %s vs %s", name, self.env.get(name), found)
        if joined == self.env.get(name):
            return False
        self.env[name] = joined
        return True

    def round(self) -> bool:
        changed = False
        for label, i, instr in self.program.instrs():
            for e in instr_exprs(instr):
                for node in walk(e):
                    if isinstance(node, Load):
                        self._address(node.addr, node.nbytes, (label, i))
            match instr:
                case Assign(lhs, rhs):
                    changed |= self._define(lhs, self.of(rhs))
                case Store(addr, nbytes, _):
                    self._address(addr, nbytes, (label, i))
        return changed


def _interface_types(d: DecodedChunk) -> tuple[dict[str, CType], dict[str, CType]]:
    """(types fixed by the interface, types of output variables to check)."""
    fixed: dict[str, CType] = {}
    outputs: dict[str, CType] = {}
    for b in d.interface:
        match b.kind:
            case "mem":
                fixed[b.var] = Ptr(b.ctype, b.ctype.nbytes)
            case "reg" if b.var in d.observables and b in d.outputs:
                outputs[b.var] = b.ctype
            case _:
                fixed[b.var] = b.ctype
    return fixed, outputs


def infer_types(program: Program, d: DecodedChunk, seed: Mapping[str, CType] | None = None) -> TypedProgram:
    fixed, outputs = _interface_types(d)
    inference = _Inference(program, fixed, seed or {})
    for _ in range(MAX_ROUNDS):
        if not inference.round():
            break

    for name, declared in outputs.items():
        found = inference.env.get(name)
        if isinstance(declared, Int) and isinstance(found, Ptr):
            raise TypeConflictError(f"output {name} is declared {declared} but holds a pointer")
        inference.env[name] = declared

    widths = program.variables()
    var_types = {name: inference.env.get(name) or unsigned_of(w) for name, w in widths.items()}
    for name, w in widths.items():
        if w == 1:
            var_types[name] = BOOL
    types: dict[tuple[str, Point], CType] = {}
    for label, i, instr in program.instrs():
        names = {v.name for e in instr_exprs(instr) for v in walk(e) if isinstance(v, Var)}
        if isinstance(instr, Assign):
            names.add(instr.lhs.name)
        for name in names:
            types[(name, (label, i))] = var_types[name]
    return TypedProgram(program, d, var_types, types, inference.memtypes, tuple(inference.diagnostics))


def propagate_types(d: DecodedChunk) -> TypedProgram:
    typed = infer_types(d.program, d)
    logger.debug("Typed %s: %d variable(s), %d diagnostic(s)", d.name, len(typed.var_types), len(typed.diagnostics))
    return typed
