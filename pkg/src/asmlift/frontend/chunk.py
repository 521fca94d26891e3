"""Extended-asm chunk files: template plus input/output/clobber constraints.

    .arch x86-32
    .template
    cld
    rep stosl
    .outputs
    =c __d0 : u32
    =D __d1 : ptr(u32)
    .inputs
    a : u32 = 0
    0 : u32 = sizeof(fd_set) / sizeof(__fd_mask)
    1 : ptr(u32) = &((read_set)->__fds_bits)[0]
    .clobbers
    memory

Operands are numbered outputs first, then inputs, as `%N` in the template.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from asmlift.errors import AsmLiftError
from asmlift.frontend.ctype import CType, CTypeSyntaxError, parse_ctype


class ChunkSyntaxError(AsmLiftError):
    pass


class ConstraintError(AsmLiftError):
    pass


CONSTRAINT_LETTERS = frozenset("rmigabcdSD")
FIXED_REGISTERS = {"a": "eax", "b": "ebx", "c": "ecx", "d": "edx", "S": "esi", "D": "edi"}
SUPPORTED_ARCHES = frozenset({"x86-32"})

_PLACEHOLDER_RE = re.compile(r"%[bhwk]?(\d+)")
_INT_RE = re.compile(r"-?(0[xX][0-9a-fA-F]+|\d+)")


@dataclass(frozen=True)
class OperandSpec:
    constraint: str
    name: str
    ctype: CType
    init: str | None = None

    @property
    def modifier(self) -> str:
        return self.constraint[0] if self.constraint[:1] in ("=", "+") else ""

    @property
    def letters(self) -> str:
        return self.constraint.lstrip("=+")

    @property
    def matched_output(self) -> int | None:
        """Index of the output this operand shares a location with (digit constraint)."""
        return int(self.letters) if self.letters.isdigit() else None

    @property
    def literal_init(self) -> int | None:
        if self.init is not None and _INT_RE.fullmatch(self.init.strip()):
            return int(self.init.strip(), 0)
        return None


@dataclass(frozen=True)
class ChunkSpec:
    arch: str
    template: tuple[str, ...]
    outputs: tuple[OperandSpec, ...] = ()
    inputs: tuple[OperandSpec, ...] = ()
    clobbers: frozenset[str] = field(default_factory=frozenset)
    name: str = "chunk"

    @property
    def operands(self) -> tuple[OperandSpec, ...]:
        return self.outputs + self.inputs

    def operand(self, index: int) -> OperandSpec:
        return self.operands[index]

    def is_input(self, index: int) -> bool:
        return index >= len(self.outputs)

    @property
    def clobbers_memory(self) -> bool:
        return "memory" in self.clobbers

    @property
    def clobbers_flags(self) -> bool:
        return "cc" in self.clobbers


# ---------------------------------------------------------------------------
#  Parsing
# ---------------------------------------------------------------------------


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].rstrip()


def _parse_operand(line: str, index: int, *, output: bool) -> OperandSpec:
    head, sep, rest = line.partition(":")
    if not sep:
        raise ChunkSyntaxError(f"operand {index}: expected 'CONSTRAINT [NAME] : CTYPE', got {line!r}")
    words = head.split()
    if not words or len(words) > 2:
        raise ChunkSyntaxError(f"operand {index}: malformed head {head!r}")
    constraint = words[0].strip('"')
    name = words[1] if len(words) == 2 else f"op{index}"
    ctype_text, eq, init = rest.partition("=")
    try:
        ctype = parse_ctype(ctype_text)
    except CTypeSyntaxError as exc:
        raise ChunkSyntaxError(f"operand {index}: {exc}") from exc
    if output and eq:
        raise ChunkSyntaxError(f"operand {index}: outputs take no initializer")
    return OperandSpec(constraint, name, ctype, init.strip() if eq else None)


def _validate_constraint(op: OperandSpec, index: int, n_outputs: int, *, output: bool):
    if output and op.modifier not in ("=", "+"):
        raise ConstraintError(f"output {index} ({op.constraint}) needs '=' or '+'")
    if not output and op.modifier:
        raise ConstraintError(f"input {index} ({op.constraint}) cannot carry '{op.modifier}'")
    letters = op.letters
    if not letters:
        raise ConstraintError(f"operand {index} has an empty constraint")
    if letters.isdigit():
        if output:
            raise ConstraintError(f"output {index} cannot use a matching constraint")
        if int(letters) >= n_outputs:
            raise ConstraintError(f"input {index} matches missing output {letters}")
        return
    unknown = set(letters) - CONSTRAINT_LETTERS
    if unknown:
        raise ConstraintError(f"operand {index}: unknown constraint letter(s) {''.join(sorted(unknown))}")


def split_template(lines: list[str]) -> tuple[str, ...]:
    """One instruction per entry; `;` and newlines both separate instructions."""
    out: list[str] = []
    for line in lines:
        out.extend(part.strip() for part in line.replace("\\n", "\n").replace("\\t", " ").splitlines())
    instrs: list[str] = []
    for line in out:
        instrs.extend(p.strip() for p in line.split(";") if p.strip())
    return tuple(instrs)


def parse_chunk(text: str, name: str = "chunk") -> ChunkSpec:
    sections: dict[str, list[str]] = {}
    arch = "x86-32"
    current: str | None = None
    for raw in text.splitlines():
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith(".arch"):
            arch = line.split(None, 1)[1].strip() if len(line.split()) > 1 else ""
            current = None
        elif line in (".template", ".outputs", ".inputs", ".clobbers"):
            current = line[1:]
            if current in sections:
                raise ChunkSyntaxError(f"duplicate section .{current}")
            sections[current] = []
        elif line.startswith("."):
            raise ChunkSyntaxError(f"unknown directive {line.split()[0]}")
        elif current is None:
            raise ChunkSyntaxError(f"line outside any section: {line!r}")
        else:
            sections[current].append(line)

    if arch not in SUPPORTED_ARCHES:
        raise ChunkSyntaxError(f"unsupported architecture {arch!r}")

    outputs = tuple(_parse_operand(line, i, output=True) for i, line in enumerate(sections.get("outputs", [])))
    inputs = tuple(
        _parse_operand(line, len(outputs) + i, output=False) for i, line in enumerate(sections.get("inputs", []))
    )
    for i, op in enumerate(outputs):
        _validate_constraint(op, i, len(outputs), output=True)
    for i, op in enumerate(inputs):
        _validate_constraint(op, len(outputs) + i, len(outputs), output=False)

    clobbers = frozenset(
        c.strip().strip('"').lstrip("%")
        for line in sections.get("clobbers", []) for c in line.split(",") if c.strip()
    )

    template = split_template(sections.get("template", []))
    n_operands = len(outputs) + len(inputs)
    for instr in template:
        for m in _PLACEHOLDER_RE.finditer(instr.replace("%%", "")):
            if int(m.group(1)) >= n_operands:
                raise ConstraintError(f"placeholder %{m.group(1)} out of range in {instr!r}")

    return ChunkSpec(arch, template, outputs, inputs, clobbers, name)
