"""Instructions, basic blocks and programs."""

from __future__ import annotations

from collections.abc import Callable, Iterator
from dataclasses import dataclass, replace
from enum import StrEnum

from asmlift.ir.expr import Expr, Var, free_vars


class EdgeTag(StrEnum):
    GOTO = "goto"
    THEN = "then"
    ELSE = "else"


@dataclass(frozen=True)
class Assign:
    lhs: Var
    rhs: Expr


@dataclass(frozen=True)
class Store:
    addr: Expr
    nbytes: int
    value: Expr


@dataclass(frozen=True)
class Goto:
    target: str


@dataclass(frozen=True)
class Branch:
    cond: Expr
    then_target: str
    else_target: str


@dataclass(frozen=True)
class Halt:
    pass


Stmt = Assign | Store
Terminator = Goto | Branch | Halt
Instr = Stmt | Terminator


def instr_exprs(instr: Instr) -> tuple[Expr, ...]:
    """Expressions read by an instruction (the assigned variable is not read)."""
    match instr:
        case Assign(_, rhs):
            return (rhs,)
        case Store(addr, _, value):
            return (addr, value)
        case Branch(cond, _, _):
            return (cond,)
        case _:
            return ()


def instr_reads(instr: Instr) -> frozenset[str]:
    names: set[str] = set()
    for e in instr_exprs(instr):
        names.update(v.name for v in free_vars(e))
    return frozenset(names)


@dataclass(frozen=True)
class BasicBlock:
    id: str
    body: tuple[Stmt, ...]
    terminator: Terminator

    def __post_init__(self):
        if not isinstance(self.body, tuple):
            object.__setattr__(self, "body", tuple(self.body))

    @property
    def instrs(self) -> tuple[Instr, ...]:
        return (*self.body, self.terminator)

    def successors(self) -> tuple[tuple[EdgeTag, str], ...]:
        match self.terminator:
            case Goto(target):
                return ((EdgeTag.GOTO, target),)
            case Branch(_, then_target, else_target):
                return ((EdgeTag.THEN, then_target), (EdgeTag.ELSE, else_target))
            case _:
                return ()

    def assigned(self) -> frozenset[str]:
        return frozenset(s.lhs.name for s in self.body if isinstance(s, Assign))

    def with_body(self, body, terminator: Terminator | None = None) -> BasicBlock:
        return replace(self, body=tuple(body), terminator=terminator or self.terminator)


@dataclass(frozen=True)
class Program:
    blocks: tuple[BasicBlock, ...]
    entry: str

    def __post_init__(self):
        if not isinstance(self.blocks, tuple):
            object.__setattr__(self, "blocks", tuple(self.blocks))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(b.id for b in self.blocks)

    def block(self, label: str) -> BasicBlock:
        for b in self.blocks:
            if b.id == label:
                return b
        raise KeyError(label)

    def has_block(self, label: str) -> bool:
        return any(b.id == label for b in self.blocks)

    def replace_blocks(self, blocks: dict[str, BasicBlock]) -> Program:
        return replace(self, blocks=tuple(blocks.get(b.id, b) for b in self.blocks))

    def instrs(self) -> Iterator[tuple[str, int, Instr]]:
        for b in self.blocks:
            for i, instr in enumerate(b.instrs):
                yield b.id, i, instr

    def variables(self) -> dict[str, int]:
        """Every variable mentioned anywhere, with its width."""
        found: dict[str, int] = {}
        for _, _, instr in self.instrs():
            if isinstance(instr, Assign):
                found.setdefault(instr.lhs.name, instr.lhs.width)
            for e in instr_exprs(instr):
                for v in free_vars(e):
                    found.setdefault(v.name, v.width)
        return found

    def assigned(self) -> frozenset[str]:
        return frozenset().union(*(b.assigned() for b in self.blocks))

    def free_variables(self) -> dict[str, int]:
        """Variables that may be read before any assignment on some path."""
        from asmlift.ir.dataflow import upward_exposed  # noqa: PLC0415

        exposed = upward_exposed(self)
        return {n: w for n, w in self.variables().items() if n in exposed}

    def stmt_count(self) -> int:
        return sum(len(b.body) for b in self.blocks)


def map_exprs(instr: Instr, fn: Callable[[Expr], Expr]) -> Instr:
    """Apply `fn` to every expression the instruction reads."""
    match instr:
        case Assign(lhs, rhs):
            return Assign(lhs, fn(rhs))
        case Store(addr, nbytes, value):
            return Store(fn(addr), nbytes, fn(value))
        case Branch(cond, then_target, else_target):
            return Branch(fn(cond), then_target, else_target)
    return instr
