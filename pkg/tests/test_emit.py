"""Does the emitted C keep the chunk's interface, its control flow and its block provenance?"""

from __future__ import annotations

import shutil
import subprocess

import pytest
from conftest import CORPUS_DIR, chunk_text, decoded, program

from asmlift.emit import EmitError, blocks_of, count_statements, emit_c, structure_cfg
from asmlift.emit.c_emitter import PREFIX, function_name
from asmlift.emit.cexpr import ExprRenderer, ctype_name
from asmlift.emit.structure import SIf, SLoop, SStmt, iter_nodes
from asmlift.errors import AsmLiftError
from asmlift.frontend import decode, parse_chunk
from asmlift.frontend.ctype import Int, Ptr
from asmlift.ir.expr import Ite, Load, Var, walk
from asmlift.ir.program import instr_exprs
from asmlift.ir.syntax import parse_expr
from asmlift.models import Level
from asmlift.passes import run_pipeline

# ── Expressions ──────────────────────────────────────────────────────


def _renderer() -> ExprRenderer:
    types = {
        "x": Int(False, 32), "y": Int(False, 32),
        "a": Int(False, 8), "b": Int(False, 8), "c": Int(False, 8),
        "p": Ptr(Int(False, 32), 4),
    }
    return ExprRenderer(lambda name: PREFIX + name, types)


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("x<32> + 1<32>", "(__lift_x + 1u)"),
        ("x<32> <s y<32>", "((int32_t)__lift_x < (int32_t)__lift_y)"),
        ("a<8> + b<8> = c<8>", "((uint8_t)(__lift_a + __lift_b) == __lift_c)"),
        ("p<32> + 8<32>", "(__lift_p + 2u)"),
    ],
)
def test_expression_rendering(text, expected):
    assert _renderer().render(parse_expr(text)).text == expected


def test_loads_through_a_typed_pointer_dereference_it():
    e = Load(parse_expr("p<32> + 8<32>"), 4)
    assert _renderer().render(e).text == "*(__lift_p + 2u)"


def test_conditional_expressions_never_reach_the_renderer():
    with pytest.raises(EmitError):
        _renderer().render(Ite(Var("k", 1), Var("x", 32), Var("y", 32)))


# ── Structuring ──────────────────────────────────────────────────────


def test_diamond_becomes_if_else():
    p = program(
        "bb0:\n  if c<1> then goto a else goto b\n"
        "a:\n  x<8> := 1<8>\n  goto end\n"
        "b:\n  x := 2<8>\n  goto end\n"
        "end:\n  halt\n"
    )
    structured = structure_cfg(p)
    assert not structured.unstructured
    assert any(isinstance(n, SIf) and n.then and n.orelse for n in iter_nodes(structured.body))
    assert count_statements(structured) == 2


def test_conditional_assignment_becomes_if_else():
    structured = structure_cfg(program("bb0:\n  x<8> := c<1> ? a<8> : b<8>\n  halt\n"))
    assert isinstance(structured.body[-2], SIf)
    assert count_statements(structured) == 2


def test_load_in_a_nested_conditional_stays_under_both_guards():
    p = program("bb0:\n  x<32> := 1<32> + (c<1> ? (d<1> ? @[p<32>]4 : 0<32>) : 2<32>)\n  halt\n")
    structured = structure_cfg(p)

    def loads(node) -> bool:
        return isinstance(node, SStmt) and any(
            isinstance(n, Load) for e in instr_exprs(node.instr) for n in walk(e)
        )

    assert not any(loads(n) for n in structured.body)
    (outer,) = [n for n in structured.body if isinstance(n, SIf)]
    assert outer.cond == Var("c", 1)
    (inner,) = [n for n in outer.then if isinstance(n, SIf)]
    assert inner.cond == Var("d", 1)
    assert any(loads(n) for n in inner.then)
    assert not any(loads(n) for n in outer.orelse)


def test_counted_loop_becomes_a_for_loop():
    t, _ = run_pipeline(decoded("fd_zero"), Level.O4)
    loops = [n for n in iter_nodes(structure_cfg(t.program).body) if isinstance(n, SLoop)]
    assert len(loops) == 1
    assert loops[0].step is not None
    assert loops[0].step.instr.lhs.name == "ecx"


def test_irreducible_flow_is_reached_with_goto():
    p = program(
        "bb0:\n  if c<1> then goto a else goto b\n"
        "a:\n  x<8> := 1<8>\n  goto b\n"
        "b:\n  if c then goto a else goto end\n"
        "end:\n  halt\n"
    )
    assert structure_cfg(p).unstructured


# ── Functions ────────────────────────────────────────────────────────


@pytest.fixture(scope="module")
def fd_zero_c():
    t, ledger = run_pipeline(decoded("fd_zero"), Level.O4)
    return t, emit_c(t, ledger, level=str(Level.O4))


def test_function_is_named_after_the_chunk():
    assert function_name("fd_zero") == "__lift_fd_zero"
    assert function_name("fd-zero") == "__lift_fd_zero"
    assert function_name("abs") == "__lift_abs"
    assert function_name("1st") == "__lift_1st"


def test_inputs_are_parameters_and_outputs_are_written_through_pointers(fd_zero_c):
    _, snippet = fd_zero_c
    names = [name for name, _ in snippet.parameters]
    assert names == ["__lift_op3", "__lift_op4", "__lift_out0", "__lift_out1"]
    assert dict(snippet.parameters)["__lift_op4"] == Ptr(Int(False, 32), 4)
    assert "*__lift_out0 = __lift_ecx;" in snippet.text
    assert "void __lift_fd_zero(" in snippet.text
    assert "uint32_t **__lift_out1 /*" in snippet.text


def test_every_identifier_is_prefixed(fd_zero_c):
    _, snippet = fd_zero_c
    assert all(name.startswith(PREFIX) for name, _ in snippet.parameters + snippet.declarations)


def test_pointer_stepping_is_rendered_as_an_index(fd_zero_c):
    _, snippet = fd_zero_c
    assert "*(__lift_op4 + (__lift_op3 - __lift_ecx)) = 0u;" in snippet.text
    assert any(line.lstrip().startswith("for (;") for line in snippet.text.splitlines())


def test_downward_pointer_stepping_subtracts_the_index():
    spec = parse_chunk(chunk_text("fd_zero").replace("cld", "std"), "fd_zero_down")
    t, ledger = run_pipeline(decode(spec), Level.O4)
    text = emit_c(t, ledger, level=str(Level.O4)).text
    assert "*(__lift_op4 - (__lift_op3 - __lift_ecx)) = 0u;" in text
    assert "0x3fffffff" not in text


def test_pointer_to_pointer_is_spelled_without_a_gap():
    assert ctype_name(Ptr(Ptr(Int(False, 32), 4), 4)) == "uint32_t **"
    assert ctype_name(Ptr(Int(True, 8), 1)) == "int8_t *"


def test_statements_carry_their_block(fd_zero_c):
    t, snippet = fd_zero_c
    found = blocks_of(snippet.text)
    assert found[0] == "bb0"
    assert set(found) <= {b.id for b in t.program.blocks}
    assert snippet.statements == count_statements(snippet.structured)


def test_header_lists_the_assumptions(fd_zero_c):
    _, snippet = fd_zero_c
    assert snippet.text.startswith("/* asmlift: chunk fd_zero, level O4 */")
    assert "/* assumes edi == " in snippet.text


# ── Compilation ──────────────────────────────────────────────────────


@pytest.mark.skipif(shutil.which("gcc") is None, reason="gcc is not installed")
@pytest.mark.parametrize("name", sorted(p.stem for p in CORPUS_DIR.glob("*.chunk")))
def test_emitted_c_is_accepted_by_a_c99_compiler(name, tmp_path):
    try:
        d = decode(parse_chunk(chunk_text(name), name))
        t, ledger = run_pipeline(d, Level.O4)
        text = emit_c(t, ledger, level=str(Level.O4)).text
    except AsmLiftError:
        pytest.skip(f"{name} is not lifted")
    source = tmp_path / f"{name}.c"
    source.write_text(text, encoding="utf-8")
    done = subprocess.run(
        ["gcc", "-std=c99", "-fsyntax-only", str(source)], capture_output=True, text=True, check=False
    )
    assert done.returncode == 0, done.stderr
    assert "conflicting types" not in done.stderr
