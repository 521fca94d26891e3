"""Bitvector IR: expressions, programs, text format, interpreter and CFGs."""

from asmlift.ir.cfg import IrreducibleCFG, build_cfg
from asmlift.ir.interpreter import MachineState, OutOfFuel, interpret
from asmlift.ir.program import Assign, BasicBlock, Branch, EdgeTag, Goto, Halt, Program, Store
from asmlift.ir.syntax import IRLabelError, IRSyntaxError, IRTypeError, parse_program, print_program
from asmlift.ir.wellformed import Diagnostic, check_wellformed

__all__ = [
    "Assign",
    "BasicBlock",
    "Branch",
    "Diagnostic",
    "EdgeTag",
    "Goto",
    "Halt",
    "IRLabelError",
    "IRSyntaxError",
    "IRTypeError",
    "IrreducibleCFG",
    "MachineState",
    "OutOfFuel",
    "Program",
    "Store",
    "build_cfg",
    "check_wellformed",
    "interpret",
    "parse_program",
    "print_program",
]
