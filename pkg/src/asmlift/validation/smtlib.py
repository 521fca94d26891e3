"""SMT-LIB 2 rendering of block queries (logic QF_ABV).

Memory is an array from 32-bit addresses to bytes, read and written
little-endian through explicit select/store chains. Each block is put in SSA
form with one `define-fun` per assignment; the script is satisfiable iff the
two blocks can disagree, so `unsat` means the pair is equivalent.
"""

from __future__ import annotations

from collections import Counter
from collections.abc import Mapping

from asmlift.ir.expr import COMPARISONS, BinOp, Binop, Const, Expr, Ite, Load, Unop, UnOp, Var, free_vars
from asmlift.ir.program import Assign, BasicBlock, Branch, EdgeTag, Store
from asmlift.validation.query import EquivQuery, QueryError, Side

ADDRESS_BITS = 32
MEMORY_SORT = "(Array (_ BitVec 32) (_ BitVec 8))"
MEMORY = "|mem!in|"

_BINOPS = {
    BinOp.ADD: "bvadd", BinOp.SUB: "bvsub", BinOp.MUL: "bvmul",
    BinOp.UDIV: "bvudiv", BinOp.UREM: "bvurem", BinOp.SDIV: "bvsdiv", BinOp.SREM: "bvsrem",
    BinOp.AND: "bvand", BinOp.OR: "bvor", BinOp.XOR: "bvxor",
    BinOp.SHL: "bvshl", BinOp.SHR: "bvlshr", BinOp.SAR: "bvashr", BinOp.CONCAT: "concat",
}
_COMPARE = {
    BinOp.EQ: "=", BinOp.UGT: "bvugt", BinOp.ULT: "bvult", BinOp.UGE: "bvuge", BinOp.ULE: "bvule",
    BinOp.SGT: "bvsgt", BinOp.SLT: "bvslt", BinOp.SGE: "bvsge", BinOp.SLE: "bvsle",
}


def symbol(name: str) -> str:
    return f"|{name}|"


def sort(width: int) -> str:
    return f"(_ BitVec {width})"


def _resize(term: str, have: int, want: int) -> str:
    if have == want:
        return term
    if have < want:
        return f"((_ zero_extend {want - have}) {term})"
    return f"((_ extract {want - 1} 0) {term})"


def _address(term: str, width: int, offset: int = 0) -> str:
    term = _resize(term, width, ADDRESS_BITS)
    return term if offset == 0 else f"(bvadd {term} (_ bv{offset} {ADDRESS_BITS}))"


def term(e: Expr, env: Mapping[str, str], mem: str) -> str:  # noqa: C901, PLR0911
    """`e` as an SMT-LIB term; `env` names the current symbol of every variable."""
    match e:
        case Const(value, width):
            return f"(_ bv{value} {width})"
        case Var(name, _):
            if name not in env:
                raise QueryError(f"unbound symbol {name}")
            return env[name]
        case Load(addr, nbytes):
            a = term(addr, env, mem)
            parts = [f"(select {mem} {_address(a, addr.width, i)})" for i in reversed(range(nbytes))]
            return parts[0] if nbytes == 1 else f"(concat {' '.join(parts)})"
        case Unop(UnOp.NOT, arg, _):
            return f"(bvnot {term(arg, env, mem)})"
        case Unop(UnOp.NEG, arg, _):
            return f"(bvneg {term(arg, env, mem)})"
        case Unop(UnOp.UEXT, arg, (n,)):
            return _resize(term(arg, env, mem), arg.width, n)
        case Unop(UnOp.SEXT, arg, (n,)):
            inner = term(arg, env, mem)
            return inner if n == arg.width else f"((_ sign_extend {n - arg.width}) {inner})"
        case Unop(UnOp.EXTRACT, arg, (lo, hi)):
            return f"((_ extract {hi} {lo}) {term(arg, env, mem)})"
        case Binop(op, lhs, rhs):
            return _binop(op, lhs, rhs, env, mem)
        case Ite(cond, then, orelse):
            return f"(ite (= {term(cond, env, mem)} #b1) {term(then, env, mem)} {term(orelse, env, mem)})"
    raise QueryError(f"cannot render {e!r}")


def _binop(op: BinOp, lhs: Expr, rhs: Expr, env: Mapping[str, str], mem: str) -> str:
    a, b = term(lhs, env, mem), term(rhs, env, mem)
    if op in COMPARISONS:
        test = f"(not (= {a} {b}))" if op is BinOp.NEQ else f"({_COMPARE[op]} {a} {b})"
        return f"(ite {test} #b1 #b0)"
    if op in (BinOp.SHL, BinOp.SHR, BinOp.SAR):
        b = _resize(b, rhs.width, lhs.width)
    return f"({_BINOPS[op]} {a} {b})"


def _store(mem: str, addr: str, addr_width: int, nbytes: int, value: str) -> str:
    for i in range(nbytes):
        byte = f"((_ extract {8 * i + 7} {8 * i}) {value})"
        mem = f"(store {mem} {_address(addr, addr_width, i)} {byte})"
    return mem


class _SSA:
    """One block in SSA form: every assignment and store becomes a define-fun."""

    def __init__(self, prefix: str, inputs: Mapping[str, int]):
        self.prefix = prefix
        self.env = {name: symbol(name) for name in inputs}
        self.mem = MEMORY
        self.versions: Counter[str] = Counter()
        self.lines: list[str] = []

    def define(self, name: str, sort_text: str, body: str) -> str:
        self.versions[name] += 1
        sym = symbol(f"{self.prefix}{name}!{self.versions[name]}")
        self.lines.append(f"(define-fun {sym} () {sort_text} {body})")
        return sym

    def run(self, b: BasicBlock) -> str | None:
        """Translate the body; returns the branch condition term, if any."""
        for stmt in b.body:
            match stmt:
                case Assign(lhs, rhs):
                    self.env[lhs.name] = self.define(lhs.name, sort(lhs.width), term(rhs, self.env, self.mem))
                case Store(addr, nbytes, value):
                    a, v = term(addr, self.env, self.mem), term(value, self.env, self.mem)
                    self.mem = self.define("@mem", MEMORY_SORT, _store(self.mem, a, addr.width, nbytes, v))
        if isinstance(b.terminator, Branch):
            return self.define("@cond", sort(1), term(b.terminator.cond, self.env, self.mem))
        return None


def _guard(edge: EdgeTag | None, cond: str | None) -> str | None:
    if edge is EdgeTag.THEN and cond is not None:
        return f"(= {cond} #b1)"
    if edge is EdgeTag.ELSE and cond is not None:
        return f"(= {cond} #b0)"
    return None


def to_smtlib(q: EquivQuery) -> str:
    """Script asserting that the paired blocks of `q` disagree somewhere."""
    lines = ["(set-logic QF_ABV)", f"; blocks {q.original.id} and {q.lifted.id}"]
    lines.extend(f"(declare-fun {symbol(name)} () {sort(w)})" for name, w in q.inputs.items())
    lines.append(f"(declare-fun {MEMORY} () {MEMORY_SORT})")
    inputs = {name: symbol(name) for name in q.inputs}
    for r in q.assumptions:
        lines.append(f"(assert (= {symbol(r.var)} {term(r.expr, inputs, MEMORY)}))")

    orig, lifted = _SSA("o.", q.inputs), _SSA("l.", q.inputs)
    cond_o, cond_l = orig.run(q.original), lifted.run(q.lifted)
    lines.extend(orig.lines)
    lines.extend(lifted.lines)

    goals: list[str] = []
    if cond_o is not None and cond_l is not None:
        goals.append(f"(not (= {cond_o} {cond_l}))")
    for o in q.obligations:
        actual = (lifted if o.side is Side.LIFTED else orig).env[o.var]
        expected = orig.env[o.var] if o.expected is None else term(o.expected, orig.env, orig.mem)
        diff = f"(not (= {actual} {expected}))"
        guard = _guard(o.edge, cond_o)
        goals.append(diff if guard is None else f"(and {guard} {diff})")
    if q.memory:
        goals.append(f"(not (= {orig.mem} {lifted.mem}))")

    if not goals:
        lines.append("(assert false)")
    elif len(goals) == 1:
        lines.append(f"(assert {goals[0]})")
    else:
        lines.append("(assert (or")
        lines.extend(f"  {g}" for g in goals)
        lines.append("))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def script_name(chunk: str, block: str) -> str:
    return f"{chunk}.{block}.smt2"


def expr_query(a: Expr, b: Expr) -> str:
    """Script satisfiable iff `a` and `b` differ for some values of their variables."""
    widths = {v.name: v.width for v in free_vars(a) | free_vars(b)}
    env = {name: symbol(name) for name in widths}
    lines = ["(set-logic QF_ABV)"]
    lines.extend(f"(declare-fun {symbol(name)} () {sort(w)})" for name, w in sorted(widths.items()))
    lines.append(f"(declare-fun {MEMORY} () {MEMORY_SORT})")
    lines.append(f"(assert (not (= {term(a, env, MEMORY)} {term(b, env, MEMORY)})))")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
