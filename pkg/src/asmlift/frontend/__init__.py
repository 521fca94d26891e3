"""Extended-asm chunks: parsing, operand placement, decoding and interface checks."""

from asmlift.frontend.allocate import AllocationError, allocate_operands
from asmlift.frontend.chunk import ChunkSpec, ChunkSyntaxError, ConstraintError, OperandSpec, parse_chunk
from asmlift.frontend.compliance import ComplianceReport, Finding, Severity, check_interface, is_trivial
from asmlift.frontend.decoder import Binding, DecodedChunk, FlagSite, decode
from asmlift.frontend.x86 import DecodeError, OutOfScope

__all__ = [
    "AllocationError",
    "Binding",
    "ChunkSpec",
    "ChunkSyntaxError",
    "ComplianceReport",
    "ConstraintError",
    "DecodeError",
    "DecodedChunk",
    "Finding",
    "FlagSite",
    "OperandSpec",
    "OutOfScope",
    "Severity",
    "allocate_operands",
    "check_interface",
    "decode",
    "is_trivial",
    "parse_chunk",
]
