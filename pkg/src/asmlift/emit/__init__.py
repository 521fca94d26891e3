"""C emission: structured control flow and expression rendering."""

from asmlift.emit.c_emitter import CSnippet, blocks_of, count_statements, emit_c
from asmlift.emit.cexpr import EmitError
from asmlift.emit.structure import Structured, structure_cfg

__all__ = ["CSnippet", "EmitError", "Structured", "blocks_of", "count_statements", "emit_c", "structure_cfg"]
