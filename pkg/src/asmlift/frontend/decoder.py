"""Decode an allocated chunk template into an IR program.

The program reads and writes the six 32-bit general registers, the flags
`cf zf sf of df` (width 1) and memory. Inputs are bound in a prologue of the
entry block, narrow outputs are extracted in an epilogue of the single
halting block, and `rep` string instructions expand to a head/body/exit loop.
"""

from __future__ import annotations

import logging
import re
from collections.abc import Callable
from dataclasses import dataclass, field

from asmlift.frontend.allocate import Imm, Location, MemSym, Reg, allocate_operands, operand_symbol
from asmlift.frontend.chunk import ChunkSpec, OperandSpec
from asmlift.frontend.ctype import CType
from asmlift.frontend.x86 import (
    FLAGS,
    REGISTER_SLOTS,
    REGISTERS_32,
    DecodeError,
    ImmOp,
    LabelOp,
    MemOp,
    Operand,
    OutOfScope,
    RegOp,
    parse_operand,
    sized_register,
    split_operands,
)
from asmlift.ir.expr import (
    FALSE,
    TRUE,
    BinOp,
    Const,
    Expr,
    Ite,
    Load,
    Var,
    add,
    binop,
    bnot,
    concat,
    eq,
    extract,
    msb,
    neg,
    sext,
    sub,
    uext,
    var_names,
)
from asmlift.ir.program import Assign, BasicBlock, Branch, Goto, Halt, Program, Stmt, Store
from asmlift.models import Direction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Binding:
    """One operand of the C interface and the IR variable carrying it."""
    operand: str
    index: int
    var: str
    width: int
    direction: Direction
    ctype: CType
    kind: str  # "reg" | "mem" | "imm"
    init: str | None = None
    source: str | None = None  # input symbol of a read-write register operand
    register: str | None = None


@dataclass(frozen=True)
class FlagSite:
    """A flag-setting instruction, with operands restated at its end.

    `lhs`/`rhs` are None when the instruction's operands cannot be recovered
    from its result (logic ops, negation); `result` is the value the flags
    describe.
    """
    block: str
    op: str
    lhs: Expr | None
    rhs: Expr | None
    result: Expr
    width: int


@dataclass(frozen=True)
class Effects:
    registers_written: frozenset[str] = frozenset()
    registers_read: frozenset[str] = frozenset()
    flags_written: frozenset[str] = frozenset()
    stores: tuple[Expr, ...] = ()
    operands_used: frozenset[int] = frozenset()


@dataclass(frozen=True)
class DecodedChunk:
    spec: ChunkSpec
    program: Program
    interface: tuple[Binding, ...]
    clobbered: frozenset[str]
    flag_sites: tuple[FlagSite, ...] = ()
    effects: Effects = field(default_factory=Effects)
    instructions: int = 0

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def inputs(self) -> tuple[Binding, ...]:
        return tuple(b for b in self.interface if b.direction is not Direction.OUT)

    @property
    def outputs(self) -> tuple[Binding, ...]:
        return tuple(b for b in self.interface if b.direction is not Direction.IN)

    @property
    def observables(self) -> frozenset[str]:
        """Variables whose final value the C side reads (register outputs)."""
        return frozenset(b.var for b in self.outputs if b.kind == "reg")


# ---------------------------------------------------------------------------
#  Instructions and the semantics registry
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Instruction:
    text: str
    mnemonic: str
    operands: tuple[Operand, ...] = ()
    size: int | None = None
    src_size: int | None = None
    condition: str | None = None
    rep: bool = False


Handler = Callable[["_Builder", Instruction], None]


@dataclass(frozen=True)
class Semantics:
    mnemonic: str
    arity: frozenset[int]
    handler: Handler
    string_op: bool = False


SEMANTICS: dict[str, Semantics] = {}


def semantics(*names: str, arity: tuple[int, ...] = (2,), string_op: bool = False) -> Callable[[Handler], Handler]:
    def decorator(fn: Handler) -> Handler:
        for name in names:
            SEMANTICS[name] = Semantics(name, frozenset(arity), fn, string_op)
        return fn
    return decorator


CONDITION_ALIASES = {
    "z": "e", "nz": "ne", "nle": "g", "nl": "ge", "nge": "l", "ng": "le",
    "nbe": "a", "nb": "ae", "nc": "ae", "nae": "b", "c": "b", "na": "be",
}
CONDITIONS = ("e", "ne", "g", "ge", "l", "le", "a", "ae", "b", "be", "s", "ns")

_SUFFIX_BITS = {"b": 8, "w": 16, "l": 32}
_STRING_SUFFIX_BITS = {"b": 8, "w": 16, "l": 32, "d": 32}
_EXTEND_RE = re.compile(r"mov([zs])(?:x|([bw])([wl]))")
_LABEL_RE = re.compile(r"([A-Za-z_.$][\w.$]*|\d+):\s*(.*)")
_LOCAL_REF_RE = re.compile(r"(\d+)([fb])")


def _flag(name: str) -> Var:
    return Var(name, 1)


def condition(cc: str) -> Expr:
    """Branch condition of `j<cc>` over the flag variables."""
    cc = CONDITION_ALIASES.get(cc, cc)
    zf, sf, cf, of = _flag("zf"), _flag("sf"), _flag("cf"), _flag("of")
    signed_eq = eq(sf, of)
    match cc:
        case "e":
            return zf
        case "ne":
            return eq(zf, 0)
        case "g":
            return binop(BinOp.AND, eq(zf, 0), signed_eq)
        case "ge":
            return signed_eq
        case "l":
            return binop(BinOp.NEQ, sf, of)
        case "le":
            return binop(BinOp.OR, zf, binop(BinOp.NEQ, sf, of))
        case "a":
            return eq(binop(BinOp.OR, cf, zf), 0)
        case "ae":
            return eq(cf, 0)
        case "b":
            return cf
        case "be":
            return binop(BinOp.OR, cf, zf)
        case "s":
            return sf
        case "ns":
            return eq(sf, 0)
    raise OutOfScope(f"j{cc}")


def split_mnemonic(text: str) -> tuple[str, int | None, int | None, str | None]:
    """`(base, size, source size, condition)` for a GAS mnemonic."""
    mn = text.lower()
    if mn in ("cltd", "cdq"):
        return "cdq", 32, None, None
    if mn in SEMANTICS and mn != "jcc":
        return mn, None, None, None
    if mn.startswith("j"):
        cc = CONDITION_ALIASES.get(mn[1:], mn[1:])
        if cc in CONDITIONS:
            return "jcc", None, None, cc
    if m := _EXTEND_RE.fullmatch(mn):
        base = "movzx" if m.group(1) == "z" else "movsx"
        if m.group(2):
            return base, _SUFFIX_BITS[m.group(3)], _SUFFIX_BITS[m.group(2)], None
        return base, None, None, None
    stem, suffix = mn[:-1], mn[-1:]
    if stem in SEMANTICS and SEMANTICS[stem].string_op and suffix in _STRING_SUFFIX_BITS:
        return stem, _STRING_SUFFIX_BITS[suffix], None, None
    if stem in SEMANTICS and not SEMANTICS[stem].string_op and suffix in _SUFFIX_BITS:
        return stem, _SUFFIX_BITS[suffix], None, None
    raise OutOfScope(mn)


# ---------------------------------------------------------------------------
#  Labels
# ---------------------------------------------------------------------------


@dataclass
class _Line:
    labels: list[str]
    text: str


class _LabelTable:
    """Named labels plus numeric local labels (`1:` referenced as `1f`/`1b`)."""

    def __init__(self, lines: list[_Line]):
        self.named: set[str] = set()
        self.local: dict[str, list[int]] = {}
        for pos, line in enumerate(lines):
            keys = []
            for name in line.labels:
                if name.isdigit():
                    self.local.setdefault(name, []).append(pos)
                    keys.append(f"{name}#{pos}")
                elif name in self.named:
                    raise DecodeError(f"label {name} defined twice")
                else:
                    self.named.add(name)
                    keys.append(name)
            line.labels = keys

    def resolve(self, ref: str, pos: int) -> str:
        if m := _LOCAL_REF_RE.fullmatch(ref):
            defs = self.local.get(m.group(1), [])
            if m.group(2) == "f":
                found = [p for p in defs if p > pos]
                if found:
                    return f"{m.group(1)}#{found[0]}"
            else:
                found = [p for p in defs if p <= pos]
                if found:
                    return f"{m.group(1)}#{found[-1]}"
            raise DecodeError(f"no local label for {ref}")
        if ref not in self.named:
            raise DecodeError(f"undefined label {ref}")
        return ref


def _split_lines(template: tuple[str, ...]) -> list[_Line]:
    lines: list[_Line] = []
    pending: list[str] = []
    for raw in template:
        text = raw.strip()
        while m := _LABEL_RE.fullmatch(text):
            pending.append(m.group(1))
            text = m.group(2).strip()
        if text:
            lines.append(_Line(pending, text))
            pending = []
    if pending:
        lines.append(_Line(pending, ""))
    return lines


# ---------------------------------------------------------------------------
#  Block builder
# ---------------------------------------------------------------------------


_LABEL_TARGET = "label:"


@dataclass
class _Draft:
    id: str
    body: list[Stmt] = field(default_factory=list)
    terminator: tuple | None = None
    fresh: bool = False


class _Builder:
    def __init__(self, spec: ChunkSpec, placement: dict[int, Location]):
        self.spec = spec
        self.placement = placement
        self.blocks: list[_Draft] = []
        self.label_blocks: dict[str, str] = {}
        self.current = self._new_block()
        self.sites: list[FlagSite] = []
        self.written: set[str] = set()
        self.read: set[str] = set()
        self.flags: set[str] = set()
        self.stores: list[Expr] = []
        self.used: set[int] = set()
        self.labels: _LabelTable | None = None
        self.position = 0

    # -- blocks --

    def _new_block(self, *, fresh: bool = False) -> _Draft:
        draft = _Draft(f"bb{len(self.blocks)}", fresh=fresh)
        self.blocks.append(draft)
        return draft

    def place_label(self, key: str) -> None:
        cur = self.current
        if not (cur.fresh and not cur.body and cur is not self.blocks[0]):
            nxt = self._new_block()
            cur.terminator = ("goto", nxt.id)
            self.current = nxt
        self.label_blocks[key] = self.current.id

    def target(self, op: Operand) -> str:
        if not isinstance(op, LabelOp):
            raise DecodeError(f"jump target must be a label, got {op}")
        assert self.labels is not None
        return _LABEL_TARGET + self.labels.resolve(op.name, self.position)

    def jump(self, target: str) -> None:
        self.current.terminator = ("goto", target)
        self.current = self._new_block(fresh=True)

    def branch(self, cond: Expr, target: str) -> None:
        fallthrough = self._new_block(fresh=True)
        self.current.terminator = ("branch", cond, target, fallthrough.id)
        self.current = fallthrough

    def open_rep(self) -> tuple[_Draft, _Draft]:
        head, body, exit_ = self._new_block(), self._new_block(), self._new_block(fresh=True)
        self.current.terminator = ("goto", head.id)
        head.terminator = ("branch", eq(self.reg32("ecx"), 0), exit_.id, body.id)
        self.current = body
        return head, exit_

    def close_rep(self, head: _Draft, exit_: _Draft) -> None:
        self.assign("ecx", sub(self.reg32("ecx"), 1))
        self.current.terminator = ("goto", head.id)
        self.current = exit_

    # -- statements --

    def emit(self, stmt: Stmt) -> None:
        self.current.body.append(stmt)

    def assign(self, name: str, value: Expr) -> None:
        if name in REGISTERS_32:
            self.written.add(name)
        elif name in FLAGS:
            self.flags.add(name)
        self.emit(Assign(Var(name, value.width), value))

    def set_flag(self, name: str, value: Expr) -> None:
        self.assign(name, value)

    def reg32(self, name: str) -> Var:
        self.read.add(name)
        return Var(name, 32)

    def note_address(self, addr: Expr) -> None:
        self.read.update(n for n in var_names(addr) if n in REGISTERS_32)

    def read_op(self, op: Operand, width: int) -> Expr:
        match op:
            case RegOp(name):
                if op.width != width:
                    raise DecodeError(f"%{name} used as a {width}-bit operand")
                parent, lo, hi = REGISTER_SLOTS[name]
                whole = self.reg32(parent)
                return whole if width == 32 else extract(whole, lo, hi)
            case ImmOp(Const(value, _)):
                return Const(value, width)
            case ImmOp(value):
                if value.width < width:
                    return uext(value, width)
                return value if value.width == width else extract(value, 0, width - 1)
            case MemOp(addr):
                self.note_address(addr)
                return Load(addr, width // 8)
        raise DecodeError(f"{op} cannot be read as a value")

    def write_op(self, op: Operand, value: Expr) -> None:
        width = value.width
        match op:
            case RegOp(name):
                if op.width != width:
                    raise DecodeError(f"%{name} written with a {width}-bit value")
                parent, lo, hi = REGISTER_SLOTS[name]
                self.assign(parent, _insert(Var(parent, 32), lo, hi, value))
            case MemOp(addr):
                self.note_address(addr)
                self.stores.append(addr)
                self.emit(Store(addr, width // 8, value))
            case _:
                raise DecodeError(f"{op} is not writable")

    def site(self, op: str, lhs: Expr | None, rhs: Expr | None, result: Expr) -> None:
        self.sites.append(FlagSite(self.current.id, op, lhs, rhs, result, result.width))

    # -- operands --

    def resolve(self, index: int, modifier: str) -> Operand:
        self.used.add(index)
        spec = self.spec.operand(index)
        loc = self.placement[index]
        match loc:
            case Reg(name):
                bits = {"b": 8, "h": 8, "w": 16, "k": 32}.get(modifier, spec.ctype.width)
                return RegOp(sized_register(name, bits, high=modifier == "h"))
            case MemSym(symbol):
                return MemOp(Var(symbol, 32), spec.ctype.nbytes)
            case Imm(value, symbol):
                if value is not None:
                    return ImmOp(Const(value, 32))
                return ImmOp(Var(symbol, spec.ctype.width))
        raise DecodeError(f"operand {index} has no location")

    def finish(self, epilogue: list[Stmt]) -> Program:
        for stmt in epilogue:
            self.emit(stmt)
        self.current.terminator = ("halt",)
        blocks = []
        for draft in self.blocks:
            blocks.append(BasicBlock(draft.id, tuple(draft.body), self._terminator(draft.terminator)))
        return Program(tuple(blocks), "bb0")

    def _resolve_target(self, target: str) -> str:
        if target.startswith(_LABEL_TARGET):
            key = target.removeprefix(_LABEL_TARGET)
            if key not in self.label_blocks:
                raise DecodeError(f"label {key.split('#')[0]} is never placed")
            return self.label_blocks[key]
        return target

    def _terminator(self, term: tuple | None):
        match term:
            case ("goto", target):
                return Goto(self._resolve_target(target))
            case ("branch", cond, then_target, else_target):
                return Branch(cond, self._resolve_target(then_target), self._resolve_target(else_target))
            case ("halt",):
                return Halt()
        raise DecodeError(f"block without terminator: {term}")


def _insert(whole: Var, lo: int, hi: int, value: Expr) -> Expr:
    """`whole` with bits lo..hi replaced by `value`."""
    if (lo, hi) == (0, 31):
        return value
    if lo == 0:
        return concat(extract(whole, hi + 1, 31), value)
    return concat(extract(whole, hi + 1, 31), concat(value, extract(whole, 0, lo - 1)))


# ---------------------------------------------------------------------------
#  Instruction semantics
# ---------------------------------------------------------------------------


def _width(ins: Instruction, *ops: Operand) -> int:
    if ins.size:
        return ins.size
    for op in ops:
        if isinstance(op, RegOp):
            return op.width
    for op in ops:
        if isinstance(op, MemOp | ImmOp) and op.width:
            return op.width
    raise DecodeError(f"operand size of {ins.text!r} is ambiguous")


def _min_signed(width: int) -> Const:
    return Const(1 << (width - 1), width)


def _max_signed(width: int) -> Const:
    return Const((1 << (width - 1)) - 1, width)


def _result_flags(b: _Builder, result: Expr) -> None:
    b.set_flag("zf", eq(result, 0))
    b.set_flag("sf", binop(BinOp.SLT, result, 0))


@semantics("mov")
def _mov(b: _Builder, ins: Instruction) -> None:
    src, dst = ins.operands
    b.write_op(dst, b.read_op(src, _width(ins, dst, src)))


@semantics("movzx", "movsx")
def _extend(b: _Builder, ins: Instruction) -> None:
    src, dst = ins.operands
    if not isinstance(dst, RegOp):
        raise DecodeError(f"{ins.mnemonic} needs a register destination")
    dst_bits = ins.size or dst.width
    src_bits = ins.src_size or (src.width if isinstance(src, RegOp | MemOp) else None)
    if not src_bits or src_bits >= dst_bits:
        raise DecodeError(f"bad operand sizes in {ins.text!r}")
    value = b.read_op(src, src_bits)
    b.write_op(dst, uext(value, dst_bits) if ins.mnemonic == "movzx" else sext(value, dst_bits))


@semantics("lea")
def _lea(b: _Builder, ins: Instruction) -> None:
    src, dst = ins.operands
    if not isinstance(src, MemOp) or not isinstance(dst, RegOp):
        raise DecodeError(f"lea needs a memory source and a register destination: {ins.text!r}")
    b.note_address(src.addr)
    width = _width(ins, dst)
    b.write_op(dst, src.addr if width == 32 else extract(src.addr, 0, width - 1))


@semantics("add", "sub", "cmp")
def _add_sub(b: _Builder, ins: Instruction) -> None:
    src, dst = ins.operands
    width = _width(ins, dst, src)
    a, c = b.read_op(dst, width), b.read_op(src, width)
    if ins.mnemonic == "add":
        r = add(a, c)
        b.set_flag("cf", binop(BinOp.ULT, r, a))
        b.set_flag("of", msb(binop(BinOp.AND, binop(BinOp.XOR, a, r), binop(BinOp.XOR, c, r))))
    else:
        r = sub(a, c)
        b.set_flag("cf", binop(BinOp.ULT, a, c))
        b.set_flag("of", msb(binop(BinOp.AND, binop(BinOp.XOR, a, c), binop(BinOp.XOR, a, r))))
    if ins.mnemonic == "cmp":
        _result_flags(b, r)
        b.site("cmp", a, c, r)
        return
    b.write_op(dst, r)
    d = b.read_op(dst, width)
    _result_flags(b, d)
    restated = sub(d, c) if ins.mnemonic == "add" else add(d, c)
    b.site(ins.mnemonic, restated, c, d)


@semantics("adc", "sbb")
def _with_carry(b: _Builder, ins: Instruction) -> None:
    src, dst = ins.operands
    width = _width(ins, dst, src)
    a, c = b.read_op(dst, width), b.read_op(src, width)
    cin = _flag("cf")
    tmp = Var(f"tmp{width}", width)
    if ins.mnemonic == "adc":
        b.emit(Assign(tmp, add(add(a, c), uext(cin, width))))
        b.set_flag("of", msb(binop(BinOp.AND, binop(BinOp.XOR, a, tmp), binop(BinOp.XOR, c, tmp))))
        carry_in_case = eq(tmp, a)
        b.set_flag("cf", binop(BinOp.OR, binop(BinOp.ULT, tmp, a), binop(BinOp.AND, cin, carry_in_case)))
    else:
        b.emit(Assign(tmp, sub(sub(a, c), uext(cin, width))))
        b.set_flag("of", msb(binop(BinOp.AND, binop(BinOp.XOR, a, c), binop(BinOp.XOR, a, tmp))))
        b.set_flag("cf", binop(BinOp.OR, binop(BinOp.ULT, a, c), binop(BinOp.AND, cin, eq(a, c))))
    b.write_op(dst, tmp)
    d = b.read_op(dst, width)
    _result_flags(b, d)
    b.site(ins.mnemonic, None, None, d)


@semantics("inc", "dec", arity=(1,))
def _inc_dec(b: _Builder, ins: Instruction) -> None:
    (dst,) = ins.operands
    width = _width(ins, dst)
    a = b.read_op(dst, width)
    if ins.mnemonic == "inc":
        b.set_flag("of", eq(a, _max_signed(width)))
        b.write_op(dst, add(a, 1))
    else:
        b.set_flag("of", eq(a, _min_signed(width)))
        b.write_op(dst, sub(a, 1))
    d = b.read_op(dst, width)
    _result_flags(b, d)
    restated = sub(d, 1) if ins.mnemonic == "inc" else add(d, 1)
    b.site(ins.mnemonic, restated, Const(1, width), d)


@semantics("neg", arity=(1,))
def _neg(b: _Builder, ins: Instruction) -> None:
    (dst,) = ins.operands
    width = _width(ins, dst)
    a = b.read_op(dst, width)
    b.set_flag("cf", binop(BinOp.NEQ, a, 0))
    b.set_flag("of", eq(a, _min_signed(width)))
    b.write_op(dst, neg(a))
    d = b.read_op(dst, width)
    _result_flags(b, d)
    b.site("neg", None, None, d)


@semantics("not", arity=(1,))
def _not(b: _Builder, ins: Instruction) -> None:
    (dst,) = ins.operands
    width = _width(ins, dst)
    b.write_op(dst, bnot(b.read_op(dst, width)))


_LOGIC = {"and": BinOp.AND, "or": BinOp.OR, "xor": BinOp.XOR, "test": BinOp.AND}


@semantics("and", "or", "xor", "test")
def _logic(b: _Builder, ins: Instruction) -> None:
    src, dst = ins.operands
    width = _width(ins, dst, src)
    r = binop(_LOGIC[ins.mnemonic], b.read_op(dst, width), b.read_op(src, width))
    b.set_flag("cf", FALSE)
    b.set_flag("of", FALSE)
    if ins.mnemonic != "test":
        b.write_op(dst, r)
        r = b.read_op(dst, width)
    _result_flags(b, r)
    b.site(ins.mnemonic, None, None, r)


_SHIFTS = {"shl": BinOp.SHL, "sal": BinOp.SHL, "shr": BinOp.SHR, "sar": BinOp.SAR}


def _shift_flags_const(b: _Builder, kind: BinOp, a: Expr, k: int, width: int) -> None:
    if k <= width:
        bit = width - k if kind is BinOp.SHL else k - 1
        b.set_flag("cf", extract(a, bit, bit))
    elif kind is BinOp.SAR:
        b.set_flag("cf", msb(a))
    if k == 1:
        if kind is BinOp.SHL:
            b.set_flag("of", binop(BinOp.XOR, msb(a), extract(a, width - 2, width - 2)))
        else:
            b.set_flag("of", msb(a) if kind is BinOp.SHR else FALSE)


def _shift_flags_variable(b: _Builder, kind: BinOp, a: Expr, count: Expr, r: Expr, width: int) -> None:
    unchanged = eq(count, 0)
    if kind is BinOp.SHL:
        out = extract(binop(BinOp.SHR, a, sub(Const(width, width), count)), 0, 0)
        of1 = binop(BinOp.XOR, msb(a), extract(a, width - 2, width - 2))
    else:
        out = extract(binop(kind, a, sub(count, 1)), 0, 0)
        of1 = msb(a) if kind is BinOp.SHR else FALSE
    b.set_flag("cf", Ite(unchanged, _flag("cf"), out))
    b.set_flag("of", Ite(eq(count, 1), of1, _flag("of")))
    b.set_flag("zf", Ite(unchanged, _flag("zf"), eq(r, 0)))
    b.set_flag("sf", Ite(unchanged, _flag("sf"), binop(BinOp.SLT, r, 0)))


@semantics("shl", "sal", "shr", "sar", arity=(1, 2))
def _shift(b: _Builder, ins: Instruction) -> None:
    if len(ins.operands) == 1:
        count_op, dst = ImmOp(Const(1, 32)), ins.operands[0]
    else:
        count_op, dst = ins.operands
    if isinstance(count_op, RegOp) and count_op.name != "cl":
        raise DecodeError(f"shift count must be an immediate or %cl: {ins.text!r}")
    width = _width(ins, dst)
    kind = _SHIFTS[ins.mnemonic]
    a = b.read_op(dst, width)
    if isinstance(count_op, ImmOp) and isinstance(count_op.value, Const):
        k = count_op.value.value & 31
        if k == 0:
            return
        _shift_flags_const(b, kind, a, k, width)
        b.write_op(dst, binop(kind, a, Const(k, width)))
        d = b.read_op(dst, width)
        _result_flags(b, d)
        b.site(ins.mnemonic, None, None, d)
        return
    count = uext(extract(b.read_op(count_op, 8), 0, 4), width)
    r = binop(kind, a, count)
    _shift_flags_variable(b, kind, a, count, r, width)
    b.write_op(dst, r)


@semantics("imul", arity=(1, 2, 3))
def _imul(b: _Builder, ins: Instruction) -> None:
    if len(ins.operands) != 2:
        raise OutOfScope(f"imul with {len(ins.operands)} operands")
    src, dst = ins.operands
    width = _width(ins, dst, src)
    a, c = b.read_op(dst, width), b.read_op(src, width)
    r = binop(BinOp.MUL, a, c)
    wide = binop(BinOp.MUL, sext(a, 2 * width), sext(c, 2 * width))
    b.set_flag("cf", binop(BinOp.NEQ, sext(r, 2 * width), wide))
    b.set_flag("of", _flag("cf"))
    b.write_op(dst, r)


def _wide_operand(b: _Builder, ins: Instruction) -> Expr:
    (src,) = ins.operands
    width = _width(ins, src)
    if width != 32:
        raise OutOfScope(f"{ins.mnemonic} on {width} bits")
    return b.read_op(src, 32)


@semantics("mul", arity=(1,))
def _mul(b: _Builder, ins: Instruction) -> None:
    src = _wide_operand(b, ins)
    tmp = Var("tmp64", 64)
    b.emit(Assign(tmp, binop(BinOp.MUL, uext(b.reg32("eax"), 64), uext(src, 64))))
    b.assign("edx", extract(tmp, 32, 63))
    b.assign("eax", extract(tmp, 0, 31))
    b.set_flag("cf", binop(BinOp.NEQ, Var("edx", 32), 0))
    b.set_flag("of", _flag("cf"))


@semantics("div", arity=(1,))
def _div(b: _Builder, ins: Instruction) -> None:
    src = _wide_operand(b, ins)
    dividend, divisor = Var("tmp64", 64), Var("tmp32", 32)
    b.emit(Assign(dividend, concat(b.reg32("edx"), b.reg32("eax"))))
    b.emit(Assign(divisor, src))
    b.assign("eax", extract(binop(BinOp.UDIV, dividend, uext(divisor, 64)), 0, 31))
    b.assign("edx", extract(binop(BinOp.UREM, dividend, uext(divisor, 64)), 0, 31))


@semantics("cdq", arity=(0,))
def _cdq(b: _Builder, _ins: Instruction) -> None:
    b.assign("edx", extract(sext(b.reg32("eax"), 64), 32, 63))


@semantics("cld", "std", arity=(0,))
def _direction(b: _Builder, ins: Instruction) -> None:
    b.set_flag("df", FALSE if ins.mnemonic == "cld" else TRUE)


def _advance(b: _Builder, pointer: str, nbytes: int) -> None:
    p = b.reg32(pointer)
    b.assign(pointer, Ite(_flag("df"), sub(p, nbytes), add(p, nbytes)))


def _string_width(ins: Instruction) -> int:
    if ins.size is None:
        raise DecodeError(f"{ins.text!r} needs a size suffix")
    return ins.size


@semantics("stos", arity=(0,), string_op=True)
def _stos(b: _Builder, ins: Instruction) -> None:
    width = _string_width(ins)
    value = b.read_op(RegOp(sized_register("eax", width)), width)
    b.write_op(MemOp(b.reg32("edi")), value)
    _advance(b, "edi", width // 8)


@semantics("lods", arity=(0,), string_op=True)
def _lods(b: _Builder, ins: Instruction) -> None:
    width = _string_width(ins)
    b.write_op(RegOp(sized_register("eax", width)), Load(b.reg32("esi"), width // 8))
    _advance(b, "esi", width // 8)


@semantics("jmp", arity=(1,))
def _jmp(b: _Builder, ins: Instruction) -> None:
    b.jump(b.target(ins.operands[0]))


@semantics("jcc", arity=(1,))
def _jcc(b: _Builder, ins: Instruction) -> None:
    assert ins.condition is not None
    b.branch(condition(ins.condition), b.target(ins.operands[0]))


SUPPORTED_MNEMONICS = frozenset(SEMANTICS) - {"jcc"}


# ---------------------------------------------------------------------------
#  Interface
# ---------------------------------------------------------------------------


def _bind_register(name: str, op: OperandSpec, value: Expr) -> Assign:
    width = op.ctype.width
    target = sized_register(name, width)
    _, lo, hi = REGISTER_SLOTS[target]
    return Assign(Var(name, 32), _insert(Var(name, 32), lo, hi, value))


def _prologue(spec: ChunkSpec, placement: dict[int, Location]) -> tuple[list[Stmt], list[Binding]]:
    stmts: list[Stmt] = []
    bindings: list[Binding] = []
    for i, op in enumerate(spec.operands):
        loc = placement[i]
        symbol = operand_symbol(i)
        width = op.ctype.width
        is_input = spec.is_input(i)
        if not is_input and op.modifier != "+":
            continue
        direction = Direction.IN if is_input else Direction.INOUT
        match loc:
            case Reg(name):
                literal = op.literal_init
                value: Expr = Const(literal, width) if literal is not None else Var(symbol, width)
                stmts.append(_bind_register(name, op, value))
                if is_input:
                    var = name if literal is not None else symbol
                    bindings.append(Binding(op.name, i, var, width, direction, op.ctype, "reg", op.init, register=name))
            case MemSym():
                if is_input:
                    bindings.append(Binding(op.name, i, symbol, 32, direction, op.ctype, "mem", op.init))
            case Imm():
                bindings.append(Binding(op.name, i, symbol, width, direction, op.ctype, "imm", op.init))
    return stmts, bindings


def _epilogue(spec: ChunkSpec, placement: dict[int, Location]) -> tuple[list[Stmt], list[Binding]]:
    stmts: list[Stmt] = []
    bindings: list[Binding] = []
    for i, op in enumerate(spec.outputs):
        direction = Direction.INOUT if op.modifier == "+" else Direction.OUT
        match placement[i]:
            case Reg(name):
                width = op.ctype.width
                var = sized_register(name, width)
                if width != 32:
                    _, lo, hi = REGISTER_SLOTS[var]
                    stmts.append(Assign(Var(var, width), extract(Var(name, 32), lo, hi)))
                source = operand_symbol(i) if direction is Direction.INOUT else None
                bindings.append(
                    Binding(op.name, i, var, width, direction, op.ctype, "reg", source=source, register=name)
                )
            case MemSym(symbol):
                bindings.append(Binding(op.name, i, symbol, 32, direction, op.ctype, "mem"))
            case _:
                raise DecodeError(f"output {op.name} cannot be an immediate")
    return stmts, bindings


def _clobbered(spec: ChunkSpec) -> frozenset[str]:
    names = {REGISTER_SLOTS[c][0] for c in spec.clobbers if c in REGISTER_SLOTS}
    if spec.clobbers_flags:
        names.update(FLAGS)
    return frozenset(names)


# ---------------------------------------------------------------------------
#  Entry point
# ---------------------------------------------------------------------------


def _parse_instruction(b: _Builder, text: str, *, rep: bool) -> Instruction:
    mnemonic, _, rest = text.partition(" ")
    base, size, src_size, cc = split_mnemonic(mnemonic.strip())
    sem = SEMANTICS[base]
    is_jump = base in ("jmp", "jcc")
    operands = tuple(parse_operand(t, b.resolve, is_jump=is_jump) for t in split_operands(rest.strip()))
    if len(operands) not in sem.arity:
        raise DecodeError(f"{mnemonic} takes {'/'.join(map(str, sorted(sem.arity)))} operand(s), got {len(operands)}")
    if rep and not sem.string_op:
        raise OutOfScope(f"rep {mnemonic}")
    return Instruction(text, base, operands, size, src_size, cc, rep)


_REP_PREFIXES = ("rep", "repe", "repz", "repne", "repnz")


def _strip_rep(text: str) -> tuple[str, bool]:
    head, _, rest = text.partition(" ")
    if head.lower() not in _REP_PREFIXES:
        return text, False
    if head.lower() != "rep":
        raise OutOfScope(head.lower())
    return rest.strip(), True


def _execute(b: _Builder, ins: Instruction) -> None:
    handler = SEMANTICS[ins.mnemonic].handler
    if not ins.rep:
        handler(b, ins)
        return
    head, exit_ = b.open_rep()
    handler(b, ins)
    b.close_rep(head, exit_)


def decode(spec: ChunkSpec, placement: dict[int, Location] | None = None) -> DecodedChunk:
    """Decode `spec` with `placement` (computed when omitted).

    Raises OutOfScope for mnemonics outside the supported subset and
    DecodeError for malformed instructions or operands.
    """
    if placement is None:
        placement = allocate_operands(spec)
    b = _Builder(spec, placement)
    prologue, in_bindings = _prologue(spec, placement)
    for stmt in prologue:
        b.emit(stmt)
    epilogue, out_bindings = _epilogue(spec, placement)

    lines = _split_lines(spec.template)
    b.labels = _LabelTable(lines)
    count = 0
    rep_pending = False
    for pos, line in enumerate(lines):
        b.position = pos
        for key in line.labels:
            b.place_label(key)
        if not line.text:
            continue
        text, rep = _strip_rep(line.text)
        if not text:
            rep_pending = True
            continue
        _execute(b, _parse_instruction(b, text, rep=rep or rep_pending))
        rep_pending = False
        count += 1
    if rep_pending:
        raise DecodeError("rep prefix without an instruction")

    program = b.finish(epilogue)
    interface = tuple(sorted(in_bindings + out_bindings, key=lambda x: (x.index, x.direction is Direction.IN)))
    effects = Effects(
        registers_written=frozenset(b.written),
        registers_read=frozenset(b.read),
        flags_written=frozenset(b.flags),
        stores=tuple(b.stores),
        operands_used=frozenset(b.used),
    )
    logger.debug("decoded %s: %d instruction(s), %d block(s)", spec.name, count, len(program.blocks))
    return DecodedChunk(spec, program, interface, _clobbered(spec), tuple(b.sites), effects, count)
