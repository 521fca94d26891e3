"""Reference semantics of the IR operators, and closure compilation of expressions.

All arithmetic is modular in the operand width. Division by zero raises
`DivisionByZero`; shift amounts at or beyond the width give 0 (shl, shr) or the
sign fill (sar). sdiv/srem truncate toward zero.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping
from typing import Protocol

from asmlift.errors import AsmLiftError
from asmlift.ir.expr import BinOp, Binop, Const, Expr, Ite, Load, Unop, UnOp, Var, mask, to_signed


class InterpreterError(AsmLiftError):
    pass


class DivisionByZero(InterpreterError):
    pass


class UnboundVariable(InterpreterError):
    def __init__(self, name: str):
        super().__init__(f"unbound variable {name}")
        self.name = name


class Memory(Protocol):
    def load(self, addr: int, nbytes: int) -> int: ...


def eval_unop(op: UnOp, params: tuple[int, ...], value: int, width: int) -> int:
    match op:
        case UnOp.NOT:
            return ~value & mask(width)
        case UnOp.NEG:
            return -value & mask(width)
        case UnOp.UEXT:
            return value
        case UnOp.SEXT:
            return to_signed(value, width) & mask(params[0])
        case UnOp.EXTRACT:
            lo, hi = params
            return (value >> lo) & mask(hi - lo + 1)
    raise ValueError(op)


def _sdiv(a: int, b: int, width: int) -> int:
    sa, sb = to_signed(a, width), to_signed(b, width)
    q = abs(sa) // abs(sb)
    return (q if (sa < 0) == (sb < 0) else -q) & mask(width)


def _srem(a: int, b: int, width: int) -> int:
    sa, sb = to_signed(a, width), to_signed(b, width)
    r = abs(sa) % abs(sb)
    return (-r if sa < 0 else r) & mask(width)


def _shift(op: BinOp, a: int, amount: int, width: int) -> int:
    if op is BinOp.SHL:
        return (a << amount) & mask(width) if amount < width else 0
    if op is BinOp.SHR:
        return a >> amount if amount < width else 0
    sa = to_signed(a, width)
    return (sa >> min(amount, width - 1)) & mask(width)


_COMPARE: dict[BinOp, Callable[[int, int], bool]] = {
    BinOp.EQ: lambda a, b: a == b,
    BinOp.NEQ: lambda a, b: a != b,
    BinOp.UGT: lambda a, b: a > b,
    BinOp.ULT: lambda a, b: a < b,
    BinOp.UGE: lambda a, b: a >= b,
    BinOp.ULE: lambda a, b: a <= b,
}
_SIGNED_COMPARE = {
    BinOp.SGT: BinOp.UGT, BinOp.SLT: BinOp.ULT, BinOp.SGE: BinOp.UGE, BinOp.SLE: BinOp.ULE,
}


def eval_binop(op: BinOp, a: int, b: int, width: int, rhs_width: int) -> int:  # noqa: C901, PLR0911
    """Evaluate `a op b`; `width` is the lhs width, `rhs_width` matters for concat only."""
    match op:
        case BinOp.ADD:
            return (a + b) & mask(width)
        case BinOp.SUB:
            return (a - b) & mask(width)
        case BinOp.MUL:
            return (a * b) & mask(width)
        case BinOp.AND:
            return a & b
        case BinOp.OR:
            return a | b
        case BinOp.XOR:
            return a ^ b
        case BinOp.CONCAT:
            return (a << rhs_width) | b
        case BinOp.SHL | BinOp.SHR | BinOp.SAR:
            return _shift(op, a, b, width)
    if op in _COMPARE:
        return int(_COMPARE[op](a, b))
    if op in _SIGNED_COMPARE:
        return int(_COMPARE[_SIGNED_COMPARE[op]](to_signed(a, width), to_signed(b, width)))
    if b == 0:
        raise DivisionByZero(f"{op} by zero")
    match op:
        case BinOp.UDIV:
            return a // b
        case BinOp.UREM:
            return a % b
        case BinOp.SDIV:
            return _sdiv(a, b, width)
        case BinOp.SREM:
            return _srem(a, b, width)
    raise ValueError(op)


# ---------------------------------------------------------------------------
#  Closure compilation
# ---------------------------------------------------------------------------

Evaluator = Callable[[Mapping[str, int], Memory], int]


def compile_expr(e: Expr) -> Evaluator:  # noqa: C901
    """Turn an expression into a closure `(values, memory) -> int`."""
    match e:
        case Const(value, _):
            return lambda _v, _m: value
        case Var(name, _):
            def _var(values, _m):
                try:
                    return values[name]
                except KeyError:
                    raise UnboundVariable(name) from None
            return _var
        case Load(addr, nbytes):
            addr_fn = compile_expr(addr)
            return lambda v, m: m.load(addr_fn(v, m), nbytes)
        case Unop(op, arg, params):
            arg_fn, w = compile_expr(arg), arg.width
            return lambda v, m: eval_unop(op, params, arg_fn(v, m), w)
        case Binop(op, lhs, rhs):
            lhs_fn, rhs_fn = compile_expr(lhs), compile_expr(rhs)
            lw, rw = lhs.width, rhs.width
            return lambda v, m: eval_binop(op, lhs_fn(v, m), rhs_fn(v, m), lw, rw)
        case Ite(cond, then, orelse):
            c_fn, t_fn, e_fn = compile_expr(cond), compile_expr(then), compile_expr(orelse)
            return lambda v, m: t_fn(v, m) if c_fn(v, m) else e_fn(v, m)
    raise TypeError(f"not an expression: {e!r}")


class _NoMemory:
    def load(self, addr: int, nbytes: int) -> int:
        raise InterpreterError(f"load of {nbytes} bytes at {addr:#x} without memory")


def evaluate(e: Expr, values: Mapping[str, int], memory: Memory | None = None) -> int:
    return compile_expr(e)(values, memory or _NoMemory())


def const_value(e: Expr) -> int | None:
    """Fold an expression with no free variables and no loads; None otherwise."""
    try:
        return evaluate(e, {})
    except InterpreterError:
        return None


def fold(op: BinOp, lhs: Const, rhs: Const) -> Const | None:
    try:
        value = eval_binop(op, lhs.value, rhs.value, lhs.width, rhs.width)
    except DivisionByZero:
        return None
    return Const(value, Binop(op, lhs, rhs).width)
