"""Reference interpreter: the semantic oracle for every pass and checker.

Programs are compiled once into per-block closures (cached per program), then
executed instruction by instruction against a dict of variable values and a
sparse little-endian byte memory. Every executed instruction costs one unit
of fuel; running dry yields `OutOfFuel` instead of raising.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from functools import lru_cache

from asmlift.ir.expr import mask
from asmlift.ir.program import Assign, BasicBlock, Branch, Goto, Program, Store
from asmlift.ir.semantics import Evaluator, compile_expr

DEFAULT_FUEL = 1 << 20
ADDRESS_BITS = 32


def _seeded_byte(seed: int, addr: int) -> int:
    h = (addr * 0x9E3779B1 + seed * 0x85EBCA6B) & 0xFFFFFFFF
    h ^= h >> 15
    h = (h * 0x2C1B3C6D) & 0xFFFFFFFF
    return (h ^ (h >> 12)) & 0xFF


class ByteMemory:
    """Sparse byte-addressed memory. Unwritten bytes read 0, or a seeded pseudo-random byte."""

    def __init__(self, data: Mapping[int, int] | None = None, seed: int | None = None):
        self.data: dict[int, int] = dict(data or {})
        self.seed = seed
        self.written: set[int] = set()

    def byte(self, addr: int) -> int:
        addr &= mask(ADDRESS_BITS)
        if addr in self.data:
            return self.data[addr]
        return 0 if self.seed is None else _seeded_byte(self.seed, addr)

    def load(self, addr: int, nbytes: int) -> int:
        return sum(self.byte(addr + i) << (8 * i) for i in range(nbytes))

    def store(self, addr: int, nbytes: int, value: int):
        for i in range(nbytes):
            a = (addr + i) & mask(ADDRESS_BITS)
            self.data[a] = (value >> (8 * i)) & 0xFF
            self.written.add(a)


@dataclass(frozen=True)
class MachineState:
    vars: Mapping[str, int] = field(default_factory=dict)
    mem: Mapping[int, int] = field(default_factory=dict)
    mem_seed: int | None = None

    def memory(self) -> ByteMemory:
        return ByteMemory(self.mem, self.mem_seed)

    def load(self, addr: int, nbytes: int) -> int:
        return self.memory().load(addr, nbytes)


@dataclass(frozen=True)
class OutOfFuel:
    steps: int
    label: str
    state: MachineState


# ---------------------------------------------------------------------------
#  Compilation
# ---------------------------------------------------------------------------

Step = Callable[[dict[str, int], ByteMemory], None]


@dataclass(frozen=True)
class CompiledBlock:
    steps: tuple[Step, ...]
    next_label: Callable[[dict[str, int], ByteMemory], str | None]


def _assign_step(name: str, fn: Evaluator) -> Step:
    def step(values, memory):
        values[name] = fn(values, memory)
    return step


def _store_step(addr_fn: Evaluator, nbytes: int, value_fn: Evaluator) -> Step:
    def step(values, memory):
        memory.store(addr_fn(values, memory), nbytes, value_fn(values, memory))
    return step


def compile_block(b: BasicBlock) -> CompiledBlock:
    steps: list[Step] = []
    for s in b.body:
        if isinstance(s, Assign):
            steps.append(_assign_step(s.lhs.name, compile_expr(s.rhs)))
        else:
            steps.append(_store_step(compile_expr(s.addr), s.nbytes, compile_expr(s.value)))

    return CompiledBlock(tuple(steps), _successor(b))


def _successor(b: BasicBlock) -> Callable[[dict[str, int], ByteMemory], str | None]:
    match b.terminator:
        case Goto(target):
            return lambda _v, _m: target
        case Branch(cond, then_target, else_target):
            cond_fn = compile_expr(cond)
            return lambda v, m: then_target if cond_fn(v, m) else else_target
    return lambda _v, _m: None


@lru_cache(maxsize=512)
def compile_program(p: Program) -> dict[str, CompiledBlock]:
    return {b.id: compile_block(b) for b in p.blocks}


def run_block(b: BasicBlock, values: dict[str, int], memory: ByteMemory) -> str | None:
    """Execute one block in place; returns the successor label, None at halt."""
    compiled = compile_block(b)
    for step in compiled.steps:
        step(values, memory)
    return compiled.next_label(values, memory)


# ---------------------------------------------------------------------------
#  Execution
# ---------------------------------------------------------------------------


def run(p: Program, init: MachineState, fuel: int = DEFAULT_FUEL) -> tuple[MachineState | OutOfFuel, set[int]]:
    """Run `p` from its entry until halt, also returning the set of written addresses.

    Raises InterpreterError subclasses on faults (division by zero, unbound variable).
    """
    blocks = compile_program(p)
    values = dict(init.vars)
    memory = init.memory()
    label: str | None = p.entry
    remaining = fuel

    while label is not None:
        block = blocks[label]
        cost = len(block.steps) + 1
        if remaining < cost:
            return OutOfFuel(fuel - remaining, label, MachineState(values, memory.data, init.mem_seed)), memory.written
        for step in block.steps:
            step(values, memory)
        label = block.next_label(values, memory)
        remaining -= cost

    return MachineState(values, memory.data, init.mem_seed), memory.written


def interpret(p: Program, init: MachineState, fuel: int = DEFAULT_FUEL) -> MachineState | OutOfFuel:
    return run(p, init, fuel)[0]
