"""Interface compliance: does the decoded template stay inside its declared outputs and clobbers?"""

from __future__ import annotations

import logging
from collections.abc import Iterable
from dataclasses import dataclass
from enum import StrEnum

from asmlift.frontend.decoder import DecodedChunk
from asmlift.ir.expr import Var
from asmlift.models import Direction, Relaxation

logger = logging.getLogger(__name__)


class Severity(StrEnum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


@dataclass(frozen=True)
class Finding:
    kind: str  # "register" | "memory" | "flags" | "unused-input"
    severity: Severity
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.message}"


@dataclass(frozen=True)
class ComplianceReport:
    findings: tuple[Finding, ...] = ()
    relaxations: frozenset[Relaxation] = frozenset()

    @property
    def rejected(self) -> bool:
        return any(f.severity is Severity.ERROR for f in self.findings)

    def of_severity(self, severity: Severity) -> list[Finding]:
        return [f for f in self.findings if f.severity is severity]


def _declared_stores(d: DecodedChunk) -> set[Var]:
    return {Var(b.var, 32) for b in d.outputs if b.kind == "mem"}


def check_interface(d: DecodedChunk, relaxations: Iterable[Relaxation] = ()) -> ComplianceReport:
    """List interface violations of `d`; the chunk is rejected iff an error remains after relaxation."""
    relax = frozenset(relaxations)
    findings: list[Finding] = []
    effects = d.effects

    outputs = {b.register for b in d.outputs if b.register}
    for reg in sorted(effects.registers_written - outputs - d.clobbered):
        findings.append(Finding("register", Severity.ERROR, f"%{reg} is written but neither an output nor clobbered"))

    if not d.spec.clobbers_memory:
        declared = _declared_stores(d)
        severity = Severity.WARNING if Relaxation.MEMORY in relax else Severity.ERROR
        for addr in effects.stores:
            if addr not in declared:
                findings.append(Finding("memory", severity, "memory is written without a \"memory\" clobber"))
                break

    if effects.flags_written and not d.spec.clobbers_flags:
        severity = Severity.INFO if Relaxation.FLAGS in relax else Severity.WARNING
        flags = ", ".join(sorted(effects.flags_written))
        findings.append(Finding("flags", severity, f"flags {flags} are written without a \"cc\" clobber"))

    for b in d.interface:
        if b.direction is not Direction.IN:
            continue
        used = b.index in effects.operands_used or (b.register is not None and b.register in effects.registers_read)
        if not used:
            findings.append(Finding("unused-input", Severity.WARNING, f"input {b.operand} is never read"))

    report = ComplianceReport(tuple(findings), relax)
    if report.rejected:
        logger.info("%s rejected: %s", d.name, "; ".join(str(f) for f in report.of_severity(Severity.ERROR)))
    return report


def is_trivial(d: DecodedChunk) -> bool:
    """Empty template, or nothing observable: no output register written and no memory written."""
    if not d.spec.template or d.instructions == 0:
        return True
    outputs = {b.register for b in d.outputs if b.register}
    return not (d.effects.registers_written & outputs) and not d.effects.stores
