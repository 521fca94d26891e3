"""Assumption ledger: facts a pass relied on when it removed something from the code.

Validation assumes every entry on the original program at the entry of each
block where the named variable is live, so an entry must describe the value
the variable holds at those points of the pre-pass program.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Literal

from pydantic import BaseModel, ValidationError

from asmlift.errors import AsmLiftError
from asmlift.ir.expr import BinOp, Binop, Const, Expr, Var, add, mask, sub
from asmlift.ir.syntax import parse_expr, print_expr


class LedgerFormatError(AsmLiftError):
    pass


class LoopDirection(StrEnum):
    UP = "up"
    DOWN = "down"


@dataclass(frozen=True)
class ConstBinding:
    var: str
    width: int
    value: int
    pass_name: str = "propagation"

    def expr(self) -> Expr:
        return Const(self.value, self.width)


@dataclass(frozen=True)
class Alias:
    var: str
    width: int
    value: Expr
    pass_name: str = "propagation"

    def expr(self) -> Expr:
        return self.value


@dataclass(frozen=True)
class AffineRelation:
    """derived = base + scale * (init - counter) when counting down, base + scale * (counter - init) when up."""
    derived: str
    width: int
    base: Expr
    scale: int
    counter: str
    counter_init: Expr
    direction: LoopDirection = LoopDirection.DOWN
    pass_name: str = "loops"

    def expr(self, offset: int = 0) -> Expr:
        """The derived value; `offset` counts increments of the derived variable not yet matched by the counter."""
        counter = Var(self.counter, self.counter_init.width)
        if self.direction is LoopDirection.DOWN:
            steps = sub(self.counter_init, counter)
        else:
            steps = sub(counter, self.counter_init)
        if offset:
            steps = add(steps, offset)
        scaled = Binop(BinOp.MUL, Const(self.scale & mask(self.width), self.width), steps)
        return Binop(BinOp.ADD, self.base, scaled)

    @property
    def var(self) -> str:
        return self.derived


Entry = ConstBinding | Alias | AffineRelation


# ---------------------------------------------------------------------------
#  JSON lines
# ---------------------------------------------------------------------------


class LedgerLine(BaseModel):
    kind: Literal["const", "alias", "affine"]
    var: str
    width: int
    expr: str
    pass_name: str
    scale: int | None = None
    counter: str | None = None
    counter_init: str | None = None
    direction: LoopDirection | None = None


def _to_line(entry: Entry) -> LedgerLine:
    match entry:
        case ConstBinding(var, width, value, pass_name):
            return LedgerLine(kind="const", var=var, width=width, expr=str(value), pass_name=pass_name)
        case Alias(var, width, value, pass_name):
            return LedgerLine(kind="alias", var=var, width=width, expr=print_expr(value), pass_name=pass_name)
        case AffineRelation():
            return LedgerLine(
                kind="affine", var=entry.derived, width=entry.width, expr=print_expr(entry.base),
                pass_name=entry.pass_name, scale=entry.scale, counter=entry.counter,
                counter_init=print_expr(entry.counter_init), direction=entry.direction,
            )
    raise TypeError(entry)


def _from_line(line: LedgerLine) -> Entry:
    match line.kind:
        case "const":
            return ConstBinding(line.var, line.width, int(line.expr), line.pass_name)
        case "alias":
            return Alias(line.var, line.width, parse_expr(line.expr), line.pass_name)
    return AffineRelation(
        line.var, line.width, parse_expr(line.expr), line.scale or 0, line.counter or "",
        parse_expr(line.counter_init or "0<32>"), line.direction or LoopDirection.DOWN, line.pass_name,
    )


@dataclass
class AssumptionLedger:
    entries: list[Entry] = field(default_factory=list)

    def __iter__(self) -> Iterator[Entry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, entry: Entry) -> None:
        self.entries.append(entry)

    def extend(self, other: Iterable[Entry]) -> AssumptionLedger:
        self.entries.extend(other)
        return self

    def of_pass(self, pass_name: str) -> list[Entry]:
        return [e for e in self.entries if e.pass_name == pass_name]

    def bindings(self) -> dict[str, Expr]:
        """Variable -> the expression it equals where it is live at a block entry."""
        return {e.var: e.expr() for e in self.entries}

    def to_jsonl(self) -> str:
        return "".join(_to_line(e).model_dump_json(exclude_none=True) + "\n" for e in self.entries)

    @classmethod
    def from_jsonl(cls, text: str) -> AssumptionLedger:
        try:
            lines = [LedgerLine.model_validate_json(raw) for raw in text.splitlines() if raw.strip()]
        except ValidationError as e:
            raise LedgerFormatError(f"malformed ledger line: {e.errors()[0]['msg']}") from e
        return cls([_from_line(line) for line in lines])
