"""Lifted C for one chunk: a single function over the chunk's interface.

Inputs become parameters, register outputs become pointer parameters
written at the end, every other IR variable becomes a local. All emitted
identifiers carry the `__lift_` prefix. Each statement line ends with a
`/*@block ID*/` comment naming the IR block it comes from.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from asmlift.emit.cexpr import EmitError, ExprRenderer, bare, ctype_name
from asmlift.emit.structure import (
    Node,
    SBreak,
    SContinue,
    SGoto,
    SHalt,
    SIf,
    SLabel,
    SLoop,
    SStmt,
    Structured,
    iter_nodes,
    structure_cfg,
)
from asmlift.frontend.ctype import CType, Ptr, unsigned_of
from asmlift.frontend.decoder import Binding
from asmlift.ir.expr import Expr, Var
from asmlift.ir.program import Assign, Store
from asmlift.ir.syntax import print_expr
from asmlift.ledger import AssumptionLedger
from asmlift.passes.types import TypedProgram

logger = logging.getLogger(__name__)

PREFIX = "__lift_"
INDENT = "    "
DONE = f"{PREFIX}done"


def block_comment(block: str) -> str:
    return f"/*@block {block}*/"


_BLOCK_COMMENT_RE = re.compile(r"/\*@block (\S+)\*/")


def blocks_of(source: str) -> list[str]:
    """Block ids in order of first mention in emitted C."""
    seen: dict[str, None] = {}
    for m in _BLOCK_COMMENT_RE.finditer(source):
        seen.setdefault(m.group(1))
    return list(seen)


def _sanitize(name: str) -> str:
    return re.sub(r"\W", "_", name.lstrip("_")) or "v"


class Namer:
    """Collision-free prefixed C identifiers, stable for a given order of requests."""

    def __init__(self, reserved: set[str] | None = None):
        self.taken = set(reserved or ())
        self.names: dict[str, str] = {}

    def __call__(self, name: str) -> str:
        if name not in self.names:
            base = PREFIX + _sanitize(name)
            found, n = base, 1
            while found in self.taken:
                found, n = f"{base}_{n}", n + 1
            self.taken.add(found)
            self.names[name] = found
        return self.names[name]


@dataclass(frozen=True)
class CSnippet:
    function: str
    parameters: tuple[tuple[str, CType], ...]
    declarations: tuple[tuple[str, CType], ...]
    structured: Structured
    bindings: dict[str, str]
    statements: int
    text: str


def function_name(chunk_name: str) -> str:
    return PREFIX + (re.sub(r"\W", "_", chunk_name) or "chunk")


def _provenance(b: Binding, constraint: str) -> str:
    return f'%{b.index} "{constraint}" ({b.operand}), {b.direction}'


class _Writer:
    def __init__(self, t: TypedProgram, structured: Structured):
        self.t = t
        self.structured = structured
        self.lines: list[str] = []
        self.done_used = False
        self.outputs = [b for b in t.chunk.outputs if b.kind == "reg"]
        widths = {**t.program.variables(), **structured.temporaries}
        unset = {b.var: b.width for b in self.outputs if b.var not in widths}
        widths.update(unset)
        self.free = {**t.program.free_variables(), **unset}
        self.types: dict[str, CType] = {
            name: t.var_types.get(name) or unsigned_of(w) for name, w in widths.items()
        }
        self.widths = widths
        self.namer = Namer({f"{PREFIX}out{b.index}" for b in self.outputs} | {DONE})
        for name in sorted(widths):
            self.namer(name)
        self.render = ExprRenderer(self.namer, self.types)

    def label(self, block: str) -> str:
        return f"{PREFIX}L_{_sanitize(block)}"

    # -- statements ------------------------------------------------------------

    def emit(self, depth: int, text: str, block: str | None = None) -> None:
        suffix = f" {block_comment(block)}" if block is not None else ""
        self.lines.append(f"{INDENT * depth}{text}{suffix}")

    def statement(self, node: SStmt) -> str:
        match node.instr:
            case Assign(lhs, rhs):
                value = self.render.convert(self.render.render(rhs), self.types[lhs.name])
                return f"{self.namer(lhs.name)} = {bare(value)};"
            case Store(addr, nbytes, value):
                target = self.render.deref(addr, nbytes)
                stored = self.render.convert(self.render.render(value), self.render.store_type(addr, nbytes))
                return f"{target.text} = {bare(stored)};"
        raise EmitError(f"cannot emit {node.instr!r}")

    def condition(self, cond: Expr) -> str:
        return bare(self.render.unsigned(self.render.render(cond)))

    def nodes(self, nodes: tuple[Node, ...], depth: int, *, top: bool = False) -> None:
        for i, node in enumerate(nodes):
            self.node(node, depth, last=top and i == len(nodes) - 1)

    def node(self, node: Node, depth: int, *, last: bool = False) -> None:  # noqa: C901
        match node:
            case SStmt():
                self.emit(depth, self.statement(node), node.block)
            case SIf(block, cond, then, orelse):
                self.emit(depth, f"if ({self.condition(cond)}) {{", block)
                self.nodes(then, depth + 1)
                if orelse:
                    self.emit(depth, "} else {")
                    self.nodes(orelse, depth + 1)
                self.emit(depth, "}")
            case SLoop(block, cond, body, step):
                if cond is None:
                    head = "while (1) {"
                elif step is None:
                    head = f"while ({self.condition(cond)}) {{"
                else:
                    head = f"for (; {self.condition(cond)}; {self.statement(step)[:-1]}) {{"
                self.emit(depth, head, block)
                self.nodes(body, depth + 1)
                self.emit(depth, "}")
            case SBreak(block):
                self.emit(depth, "break;", block)
            case SContinue(block):
                self.emit(depth, "continue;", block)
            case SGoto(block, target):
                self.emit(depth, f"goto {self.label(target)};", block)
            case SLabel(target) if target in self.structured.goto_targets:
                self.lines.append(f"{INDENT * max(depth - 1, 0)}{self.label(target)}: ;")
            case SHalt(block) if not last:
                self.done_used = True
                self.emit(depth, f"goto {DONE};", block)

    # -- function --------------------------------------------------------------

    def parameters(self) -> list[tuple[str, CType, str]]:
        spec = self.t.chunk.spec
        by_var = {b.var: b for b in self.t.chunk.inputs}
        params: list[tuple[str, CType, str]] = []
        ordered = sorted(self.free, key=lambda n: (by_var[n].index if n in by_var else len(spec.operands), n))
        for name in ordered:
            b = by_var.get(name)
            note = _provenance(b, spec.operand(b.index).constraint) if b else "initial state"
            params.append((self.namer(name), self.types[name], note))
        for b in self.outputs:
            note = _provenance(b, spec.operand(b.index).constraint)
            params.append((f"{PREFIX}out{b.index}", _pointer_to(b.ctype), note))
        return params

    def write(self, function: str, header: list[str]) -> CSnippet:
        params = self.parameters()
        param_names = {name for name, _, _ in params}
        locals_ = [
            (self.namer(name), self.types[name])
            for name in sorted(self.widths)
            if self.namer(name) not in param_names
        ]

        self.lines = [*header, "#include <stdint.h>", ""]
        if params:
            self.lines.append(f"void {function}(")
            for i, (name, ctype, note) in enumerate(params):
                sep = "," if i < len(params) - 1 else ""
                self.lines.append(f"{INDENT}{_declare(name, ctype)}{sep} /* {note} */")
            self.lines.append(")")
        else:
            self.lines.append(f"void {function}(void)")
        self.lines.append("{")
        for name, ctype in locals_:
            self.emit(1, f"{_declare(name, ctype)};")
        if locals_:
            self.lines.append("")

        self.nodes(self.structured.body, 1, top=True)
        if self.done_used:
            self.lines.append(f"{DONE}: ;")
        for b in self.outputs:
            value = self.render.convert(self.render.render(Var(b.var, b.width)), b.ctype)
            self.emit(1, f"*{PREFIX}out{b.index} = {bare(value)};")
        self.lines.append("}")

        bindings = {self.namer(b.var): _provenance(b, self.t.chunk.spec.operand(b.index).constraint)
                    for b in self.t.chunk.interface if b.var in self.widths}
        return CSnippet(
            function=function,
            parameters=tuple((name, ctype) for name, ctype, _ in params),
            declarations=tuple(locals_),
            structured=self.structured,
            bindings=bindings,
            statements=count_statements(self.structured),
            text="\n".join(self.lines) + "\n",
        )


def _pointer_to(ctype: CType) -> Ptr:
    return Ptr(ctype, ctype.nbytes)


def _declare(name: str, ctype: CType) -> str:
    spelled = ctype_name(ctype)
    return f"{spelled}{name}" if spelled.endswith("*") else f"{spelled} {name}"


def count_statements(structured: Structured) -> int:
    """Assignments and stores, the unit of the statement/instruction ratio."""
    return sum(1 for node in iter_nodes(structured.body) if isinstance(node, SStmt))


def _header(t: TypedProgram, ledger: AssumptionLedger | None, level: str | None) -> list[str]:
    lines = [f"/* asmlift: chunk {t.chunk.name}{f', level {level}' if level else ''} */"]
    for entry in ledger or ():
        lines.append(f"/* assumes {entry.var} == {print_expr(entry.expr())} ({entry.pass_name}) */")
    return lines


def emit_c(
    t: TypedProgram,
    ledger: AssumptionLedger | None = None,
    *,
    level: str | None = None,
    strict: bool = False,
) -> CSnippet:
    structured = structure_cfg(t.program)
    if strict and structured.unstructured:
        raise EmitError(f"{t.chunk.name}: {len(structured.goto_targets)} block(s) need goto")
    snippet = _Writer(t, structured).write(function_name(t.chunk.name), _header(t, ledger, level))
    logger.debug("Emitted %s: %d statement(s)", snippet.function, snippet.statements)
    return snippet


