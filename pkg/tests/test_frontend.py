"""Are chunks parsed, placed, decoded and checked against their interface correctly?"""

from __future__ import annotations

import random

import pytest
from conftest import chunk_text, decoded, program

from asmlift.frontend import (
    AllocationError,
    ChunkSyntaxError,
    ConstraintError,
    OutOfScope,
    Severity,
    allocate_operands,
    check_interface,
    decode,
    is_trivial,
    parse_chunk,
)
from asmlift.frontend.allocate import Reg
from asmlift.frontend.ctype import Int, Ptr, parse_ctype
from asmlift.frontend.decoder import split_mnemonic
from asmlift.ir.interpreter import MachineState, interpret
from asmlift.models import Direction, Relaxation

FD_ZERO_IR = """
bb0:
  eax<32> := 0<32>
  ecx<32> := __op3<32>
  edi<32> := __op4<32>
  df<1> := 0<1>
  goto bb1
bb1:
  if ecx = 0<32> then goto bb3 else goto bb2
bb2:
  @[edi]4 := eax
  edi := df ? (edi - 4<32>) : (edi + 4<32>)
  ecx := ecx - 1<32>
  goto bb1
bb3:
  halt
"""


def _chunk(template: str, outputs: str = "=r r : u32", inputs: str = "r x : u32", clobbers: str = "") -> str:
    text = f".arch x86-32\n.template\n{template}\n.outputs\n{outputs}\n.inputs\n{inputs}\n"
    return text + (f".clobbers\n{clobbers}\n" if clobbers else "")


# ── Chunk files ──────────────────────────────────────────────────────


def test_fd_zero_spec():
    spec = parse_chunk(chunk_text("fd_zero"), "fd_zero")
    assert spec.template == ("cld", "rep stosl")
    assert [op.constraint for op in spec.operands] == ["=c", "=D", "a", "0", "1"]
    assert spec.operand(2).literal_init == 0
    assert spec.operand(3).matched_output == 0
    assert spec.clobbers_memory and not spec.clobbers_flags
    assert spec.operand(4).ctype == Ptr(Int(False, 32), 4)


def test_template_lines_split_on_semicolons_and_escaped_newlines():
    spec = parse_chunk(_chunk("movl %1, %0; addl $1, %0\\n\\tnegl %0"))
    assert spec.template == ("movl %1, %0", "addl $1, %0", "negl %0")


@pytest.mark.parametrize(
    ("text", "error"),
    [
        (".arch arm\n.template\nnop\n", ChunkSyntaxError),
        (".template\nnop\n.bogus\n", ChunkSyntaxError),
        ("movl %0, %1\n", ChunkSyntaxError),
        (_chunk("movl %5, %0"), ConstraintError),
        (_chunk("movl %1, %0", outputs="r r : u32"), ConstraintError),
        (_chunk("movl %1, %0", inputs="3 x : u32"), ConstraintError),
        (_chunk("movl %1, %0", inputs="r x : f64"), ChunkSyntaxError),
    ],
)
def test_malformed_chunks_are_rejected(text, error):
    with pytest.raises(error):
        parse_chunk(text)


def test_ctypes():
    assert parse_ctype("i16") == Int(True, 16)
    assert parse_ctype("ptr(u8)").c_name() == "uint8_t *"
    assert Int(False, 32).c_name() == "uint32_t"


# ── Operand placement ────────────────────────────────────────────────


def test_fixed_registers_and_matching_constraints():
    spec = parse_chunk(chunk_text("fd_zero"), "fd_zero")
    placement = allocate_operands(spec)
    assert placement == {0: Reg("ecx"), 1: Reg("edi"), 2: Reg("eax"), 3: Reg("ecx"), 4: Reg("edi")}


def test_general_registers_are_handed_out_in_order():
    spec = parse_chunk(chunk_text("umin"), "umin")
    assert allocate_operands(spec) == {0: Reg("eax"), 1: Reg("eax"), 2: Reg("ebx")}


def test_clobbered_registers_are_not_handed_out():
    spec = parse_chunk(_chunk("movl %1, %0", clobbers="eax, ebx"))
    assert allocate_operands(spec) == {0: Reg("ecx"), 1: Reg("edx")}


def test_register_taken_twice_is_an_allocation_error():
    spec = parse_chunk(_chunk("movl %1, %0", outputs="=a r : u32", inputs="a x : u32"))
    with pytest.raises(AllocationError):
        allocate_operands(spec)


# ── Decoding ─────────────────────────────────────────────────────────


def test_rep_stos_decodes_to_a_counted_loop():
    d = decoded("fd_zero")
    assert d.program == program(FD_ZERO_IR)
    assert d.instructions == 2
    assert d.observables == {"ecx", "edi"}


def test_interface_bindings():
    d = decoded("fd_zero")
    by_index = {(b.index, b.direction): b for b in d.interface}
    assert by_index[(2, Direction.IN)].var == "eax"
    assert by_index[(3, Direction.IN)].var == "__op3"
    assert by_index[(0, Direction.OUT)].register == "ecx"
    assert [b.index for b in d.outputs] == [0, 1]


def test_decoded_loop_clears_memory():
    d = decoded("fd_zero")
    end = interpret(d.program, MachineState({"__op3": 3, "__op4": 0x40}, {0x40 + i: 0xAA for i in range(16)}))
    assert end.vars["ecx"] == 0
    assert end.vars["edi"] == 0x4C
    assert [end.mem[0x40 + i] for i in range(12)] == [0] * 12
    assert end.mem[0x4C] == 0xAA


def test_conditional_jump_splits_blocks_and_records_flag_sites():
    d = decoded("umin")
    assert len(d.program.blocks) >= 3
    assert [s.op for s in d.flag_sites] == ["cmp"]
    end = interpret(d.program, MachineState({"__op1": 9, "__op2": 4}))
    assert end.vars["eax"] == 4


def test_narrow_outputs_are_extracted_in_the_epilogue():
    d = decode(parse_chunk(_chunk("movw %1, %0", outputs="=r r : u16", inputs="r x : u16")))
    assert "ax" in d.observables
    end = interpret(d.program, MachineState({"__op1": 0xBEEF, "eax": 0, "ebx": 0}))
    assert end.vars["ax"] == 0xBEEF


@pytest.mark.parametrize(
    ("mnemonic", "expected"),
    [
        ("addl", ("add", 32, None, None)),
        ("jnz", ("jcc", None, None, "ne")),
        ("movzbl", ("movzx", 32, 8, None)),
        ("stosb", ("stos", 8, None, None)),
    ],
)
def test_mnemonic_suffixes(mnemonic, expected):
    assert split_mnemonic(mnemonic) == expected


def test_unsupported_instruction_is_out_of_scope():
    with pytest.raises(OutOfScope):
        decoded("rdtsc")


def test_only_plain_rep_is_supported():
    with pytest.raises(OutOfScope):
        decode(parse_chunk(_chunk("repne scasb", outputs="=c r : u32", inputs="D p : u32")))


def test_rep_stos_zeroes_exactly_the_counted_dwords_in_either_direction():
    """Does the expanded loop step edi by 4 per dword, clear ecx, and leave the neighbouring bytes alone?"""
    base = 0x100
    for direction, step in (("cld", 4), ("std", -4)):
        d = decode(parse_chunk(chunk_text("fd_zero").replace("cld", direction), "fd_zero"))
        for n in range(9):
            area = range(base - 48, base + 48)
            end = interpret(d.program, MachineState({"__op3": n, "__op4": base}, dict.fromkeys(area, 0xAA)))
            assert end.vars["ecx"] == 0
            assert end.vars["edi"] == (base + step * n) & 0xFFFFFFFF
            cleared = {base + step * i + j for i in range(n) for j in range(4)}
            for addr in area:
                assert end.mem[addr] == (0 if addr in cleared else 0xAA), f"{direction} n={n} byte {addr:#x}"


# ── Instruction semantics ────────────────────────────────────────────

M32 = 0xFFFFFFFF
EDGES = (0, 1, 2, 31, 32, 33, 0x7FFFFFFF, 0x80000000, 0x80000001, 0xFFFFFFFE, M32)
STATES_PER_MNEMONIC = 1000


def _s(v: int) -> int:
    return v - (1 << 32) if v & 0x80000000 else v


def _result(r: int, cf: int, of: int) -> tuple[int, int, int, int, int]:
    r &= M32
    return r, int(cf), int(r == 0), r >> 31, int(of)


def _add(a, c, f):
    return _result(a + c, a + c > M32, _s(a) + _s(c) != _s((a + c) & M32))


def _sub(a, c, f):
    return _result(a - c, a < c, _s(a) - _s(c) != _s((a - c) & M32))


def _cmp(a, c, f):
    return (a, *_sub(a, c, f)[1:])


def _adc(a, c, f):
    t = a + c + f["cf"]
    return _result(t, t > M32, _s(a) + _s(c) + f["cf"] != _s(t & M32))


def _sbb(a, c, f):
    t = a - c - f["cf"]
    return _result(t, t < 0, _s(a) - _s(c) - f["cf"] != _s(t & M32))


def _logic(fn):
    return lambda a, c, f: _result(fn(a, c), 0, 0)


def _test(a, c, f):
    return (a, *_result(a & c, 0, 0)[1:])


def _imul(a, c, f):
    r = (a * c) & M32
    overflow = int(_s(a) * _s(c) != _s(r))
    return r, overflow, f["zf"], f["sf"], overflow


BINARY = {
    "add": _add, "sub": _sub, "cmp": _cmp, "adc": _adc, "sbb": _sbb,
    "and": _logic(lambda a, c: a & c), "or": _logic(lambda a, c: a | c), "xor": _logic(lambda a, c: a ^ c),
    "test": _test, "imul": _imul,
}

UNARY = {
    "inc": lambda a, f: _result(a + 1, f["cf"], a == 0x7FFFFFFF),
    "dec": lambda a, f: _result(a - 1, f["cf"], a == 0x80000000),
    "neg": lambda a, f: _result(-a, a != 0, a == 0x80000000),
    "not": lambda a, f: (~a & M32, f["cf"], f["zf"], f["sf"], f["of"]),
}


def _shifted(mn: str, a: int, k: int, f: dict[str, int]) -> tuple[int, int, int, int, int]:
    if k == 0:
        return a, f["cf"], f["zf"], f["sf"], f["of"]
    if mn == "shl":
        r, cf, of1 = a << k, (a >> (32 - k)) & 1, (a >> 31) ^ ((a >> 30) & 1)
    elif mn == "shr":
        r, cf, of1 = a >> k, (a >> (k - 1)) & 1, a >> 31
    else:
        r, cf, of1 = _s(a) >> k, (_s(a) >> (k - 1)) & 1, 0
    return _result(r, cf, of1 if k == 1 else f["of"])


def _states(key: str):
    rng = random.Random(key)

    def value() -> int:
        return rng.choice(EDGES) if rng.random() < 0.3 else rng.getrandbits(32)

    for _ in range(STATES_PER_MNEMONIC):
        yield value(), value(), {flag: rng.getrandbits(1) for flag in ("cf", "zf", "sf", "of")}


def _observed(d, a: int, c: int, flags: dict[str, int]) -> tuple[int, ...]:
    end = interpret(d.program, MachineState({"__op1": a, "__op2": c, **flags}))
    return end.vars["eax"], end.vars["cf"], end.vars["zf"], end.vars["sf"], end.vars["of"]


@pytest.mark.parametrize("mn", sorted(BINARY))
def test_two_operand_instruction_matches_its_reference(mn):
    """Do eax and the four status flags match the reference on edge-biased random states?"""
    d = decode(parse_chunk(_chunk(f"{mn}l %2, %0", outputs="=a r : u32", inputs="0 : u32 = x\nb y : u32",
                                  clobbers="cc")))
    for a, c, flags in _states(mn):
        assert _observed(d, a, c, flags) == BINARY[mn](a, c, flags), f"{mn} a={a:#x} c={c:#x} {flags}"


@pytest.mark.parametrize("mn", sorted(UNARY))
def test_one_operand_instruction_matches_its_reference(mn):
    d = decode(parse_chunk(_chunk(f"{mn}l %0", outputs="=a r : u32", inputs="0 : u32 = x\nb y : u32",
                                  clobbers="cc")))
    for a, c, flags in _states(mn):
        assert _observed(d, a, c, flags) == UNARY[mn](a, flags), f"{mn} a={a:#x} {flags}"


@pytest.mark.parametrize("count", ["$1", "$7", "$31", "%%cl"])
@pytest.mark.parametrize("mn", ["shl", "shr", "sar"])
def test_shift_matches_its_reference(mn, count):
    """Is the count masked to five bits, and does a zero count leave every flag alone?"""
    d = decode(parse_chunk(_chunk(f"{mn}l {count}, %0", outputs="=a r : u32", inputs="0 : u32 = x\nc k : u32",
                                  clobbers="cc")))
    for a, c, flags in _states(f"{mn}/{count}"):
        k = c & 31 if count == "%%cl" else int(count[1:])
        assert _observed(d, a, c, flags) == _shifted(mn, a, k, flags), f"{mn} {count} a={a:#x} c={c:#x}"


# ── Interface compliance ─────────────────────────────────────────────


def test_undeclared_register_write_rejects_the_chunk():
    report = check_interface(decoded("undeclared_write"))
    assert report.rejected
    assert any("%edx" in f.message for f in report.of_severity(Severity.ERROR))


def test_flags_without_cc_clobber_warn_unless_relaxed():
    d = decoded("fd_zero")
    strict = check_interface(d)
    assert not strict.rejected
    assert [f.kind for f in strict.of_severity(Severity.WARNING)] == ["flags"]
    relaxed = check_interface(d, [Relaxation.FLAGS])
    assert [f.kind for f in relaxed.of_severity(Severity.INFO)] == ["flags"]


def test_store_without_memory_clobber_is_an_error_unless_relaxed():
    d = decode(parse_chunk(".arch x86-32\n.template\nmovl %1, (%0)\n.inputs\nr p : ptr(u32)\nr x : u32\n"))
    assert check_interface(d).rejected
    assert not check_interface(d, [Relaxation.MEMORY]).rejected


def test_empty_template_is_trivial():
    assert is_trivial(decoded("barrier"))
    assert not is_trivial(decoded("fd_zero"))
