"""Well-formedness diagnostics for expressions, instructions and programs."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from asmlift.ir.expr import SHIFTS, BinOp, Binop, Const, Expr, Ite, Load, Unop, UnOp, Var, walk
from asmlift.ir.program import Assign, Branch, Instr, Program, Store, instr_exprs


@dataclass(frozen=True)
class Diagnostic:
    kind: str  # "label" | "width" | "var"
    message: str
    where: str


def expr_problems(e: Expr) -> list[str]:
    """Width problems of every node of `e`, outermost last."""
    problems: list[str] = []
    for node in walk(e):
        match node:
            case Const(_, width) | Var(_, width) if width < 1:
                problems.append(f"{node} has width {width}")
            case Load(_, nbytes) if nbytes < 1:
                problems.append(f"load of {nbytes} bytes")
            case Unop(UnOp.UEXT | UnOp.SEXT, arg, (n,)) if n < arg.width:
                problems.append(f"{node.op}:{n} narrower than its {arg.width}-bit argument")
            case Unop(UnOp.EXTRACT, arg, (lo, hi)) if not 0 <= lo <= hi < arg.width:
                problems.append(f"extract:{lo}:{hi} out of range for width {arg.width}")
            case Binop(op, lhs, rhs) if op is not BinOp.CONCAT and op not in SHIFTS and lhs.width != rhs.width:
                problems.append(f"{op.value} over widths {lhs.width} and {rhs.width}")
            case Ite(cond, then, orelse) if cond.width != 1 or then.width != orelse.width:
                problems.append(f"ternary with condition width {cond.width} over {then.width}/{orelse.width}")
    return problems


def _instr_problems(instr: Instr) -> list[str]:
    problems = [p for e in instr_exprs(instr) for p in expr_problems(e)]
    match instr:
        case Assign(lhs, rhs) if lhs.width != rhs.width:
            problems.append(f"assignment of {rhs.width} bits to {lhs.name}<{lhs.width}>")
        case Store(_, nbytes, value) if value.width != 8 * nbytes:
            problems.append(f"store of {value.width} bits into {nbytes} bytes")
        case Store(_, nbytes, _) if nbytes < 1:
            problems.append(f"store of {nbytes} bytes")
        case Branch(cond, _, _) if cond.width != 1:
            problems.append(f"branch condition has width {cond.width}")
    return problems


def check_wellformed(p: Program) -> list[Diagnostic]:
    diagnostics: list[Diagnostic] = []

    counts = Counter(p.labels)
    diagnostics.extend(
        Diagnostic("label", f"duplicate block label {label}", label) for label, n in counts.items() if n > 1
    )
    if p.entry not in counts:
        diagnostics.append(Diagnostic("label", f"entry {p.entry} is not a block", p.entry))
    for b in p.blocks:
        diagnostics.extend(
            Diagnostic("label", f"unknown label {target}", b.id)
            for _, target in b.successors() if target not in counts
        )

    widths: dict[str, int] = {}
    for label, index, instr in p.instrs():
        where = f"{label}[{index}]"
        diagnostics.extend(Diagnostic("width", msg, where) for msg in _instr_problems(instr))
        named = [instr.lhs] if isinstance(instr, Assign) else []
        named += [n for e in instr_exprs(instr) for n in walk(e) if isinstance(n, Var)]
        for v in named:
            known = widths.setdefault(v.name, v.width)
            if known != v.width:
                diagnostics.append(Diagnostic("var", f"{v.name} used at widths {known} and {v.width}", where))

    return diagnostics
