"""Textual IR: tokenizer, precedence-climbing parser and canonical printer.

    bb0:
      eax<32> := 0<32>
      if ecx<32> = 0<32> then goto bb2 else goto bb1
    bb1:
      @[edi<32>]4 := eax
      ...

Widths appear in angle brackets on constants and on the first textual
occurrence of each variable. Statements are separated by newlines or `;`,
`#` starts a comment. A leading `.entry LABEL` directive is only needed when
the entry block is not the first one.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from asmlift.errors import AsmLiftError
from asmlift.ir.expr import BinOp, Binop, Const, Expr, Ite, Load, Unop, UnOp, Var
from asmlift.ir.program import Assign, BasicBlock, Branch, Goto, Halt, Instr, Program, Store


class IRSyntaxError(AsmLiftError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


class IRTypeError(AsmLiftError):
    pass


class IRLabelError(AsmLiftError):
    pass


# ---------------------------------------------------------------------------
#  Tokens
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<sep>[\n;])
  | (?P<width><\d+>)
  | (?P<int>0[xX][0-9a-fA-F]+|\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<op>:=|::|<=u|<=s|>=u|>=s|<u|<s|>u|>s|!=|@\[|[\]()+\-*&|^=?:])
  | (?P<directive>\.entry\b)
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise IRSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup or ""
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        if m.group() == "\n":
            line += 1
            line_start = m.end()
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# ---------------------------------------------------------------------------
#  Parser
# ---------------------------------------------------------------------------

_KEYWORDS = frozenset({
    "goto", "if", "then", "else", "halt",
    "not", "neg", "uext", "sext", "extract",
    "udiv", "urem", "sdiv", "srem", "shl", "shr", "sar",
})

# Binary precedence levels, loosest first.
_LEVELS: tuple[frozenset[str], ...] = (
    frozenset({"|"}),
    frozenset({"^"}),
    frozenset({"&"}),
    frozenset({"=", "!=", ">u", "<u", ">=u", "<=u", ">s", "<s", ">=s", "<=s"}),
    frozenset({"::"}),
    frozenset({"shl", "shr", "sar"}),
    frozenset({"+", "-"}),
    frozenset({"*", "udiv", "urem", "sdiv", "srem"}),
)


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0
        self.widths: dict[str, int] = {}

    # -- token helpers --

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def error(self, message: str, tok: Token | None = None) -> IRSyntaxError:
        t = tok or self.tok
        return IRSyntaxError(message, t.line, t.col)

    def expect(self, text: str) -> Token:
        if self.tok.text != text:
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def expect_int(self) -> int:
        if self.tok.kind != "int":
            raise self.error(f"expected integer, found {self.tok.text or 'end of input'!r}")
        return int(self.advance().text, 0)

    def expect_label(self) -> str:
        if self.tok.kind != "ident" or self.tok.text in _KEYWORDS:
            raise self.error(f"expected label, found {self.tok.text or 'end of input'!r}")
        return self.advance().text

    def skip_separators(self):
        while self.tok.kind == "sep":
            self.advance()

    def at_label(self) -> bool:
        return self.tok.kind == "ident" and self.tok.text not in _KEYWORDS and self.peek().text == ":"

    # -- program structure --

    def program(self) -> Program:
        self.skip_separators()
        entry = None
        if self.tok.kind == "directive":
            self.advance()
            entry = self.expect_label()
        blocks: list[BasicBlock] = []
        self.skip_separators()
        while self.tok.kind != "eof":
            blocks.append(self.block())
            self.skip_separators()
        if not blocks:
            raise self.error("program has no blocks")
        return Program(tuple(blocks), entry or blocks[0].id)

    def block(self) -> BasicBlock:
        if not self.at_label():
            raise self.error("expected block label")
        label = self.advance().text
        self.expect(":")
        body = []
        while True:
            self.skip_separators()
            instr = self.instruction()
            if isinstance(instr, Goto | Branch | Halt):
                return BasicBlock(label, tuple(body), instr)
            body.append(instr)

    def instruction(self) -> Instr:
        t = self.tok
        if t.text == "halt":
            self.advance()
            return Halt()
        if t.text == "goto":
            self.advance()
            return Goto(self.expect_label())
        if t.text == "if":
            self.advance()
            cond = self.expr()
            self.expect("then")
            self.expect("goto")
            then_target = self.expect_label()
            self.expect("else")
            self.expect("goto")
            return Branch(cond, then_target, self.expect_label())
        if t.text == "@[":
            self.advance()
            addr = self.expr()
            self.expect("]")
            nbytes = self.expect_int()
            self.expect(":=")
            return Store(addr, nbytes, self.expr())
        if t.kind == "eof" or self.at_label():
            raise self.error("block is missing a terminator")
        if t.kind == "ident" and t.text not in _KEYWORDS:
            lhs = self.variable()
            self.expect(":=")
            return Assign(lhs, self.expr())
        raise self.error(f"unexpected {t.text!r}")

    # -- expressions --

    def expr(self) -> Expr:
        cond = self.binary(0)
        if self.tok.text != "?":
            return cond
        self.advance()
        then = self.expr()
        self.expect(":")
        return Ite(cond, then, self.expr())

    def binary(self, level: int) -> Expr:
        if level == len(_LEVELS):
            return self.unary()
        lhs = self.binary(level + 1)
        while self.tok.text in _LEVELS[level] and self.tok.kind in ("op", "ident"):
            op = BinOp(self.advance().text)
            lhs = Binop(op, lhs, self.binary(level + 1))
        return lhs

    def unary(self) -> Expr:
        t = self.tok
        match t.text:
            case "not" | "neg":
                self.advance()
                return Unop(UnOp(t.text), self.unary())
            case "uext" | "sext":
                self.advance()
                self.expect(":")
                n = self.expect_int()
                return Unop(UnOp(t.text), self.unary(), (n,))
            case "extract":
                self.advance()
                self.expect(":")
                lo = self.expect_int()
                self.expect(":")
                hi = self.expect_int()
                return Unop(UnOp.EXTRACT, self.unary(), (lo, hi))
        return self.primary()

    def primary(self) -> Expr:
        t = self.tok
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.text == "@[":
            self.advance()
            addr = self.expr()
            self.expect("]")
            return Load(addr, self.expect_int())
        if t.kind == "int":
            value = int(self.advance().text, 0)
            if self.tok.kind != "width":
                raise self.error("constant needs a width, as in 0<32>")
            return Const(value, self._width())
        if t.kind == "ident" and t.text not in _KEYWORDS:
            return self.variable()
        raise self.error(f"expected expression, found {t.text or 'end of input'!r}")

    def variable(self) -> Var:
        t = self.advance()
        if self.tok.kind == "width":
            width = self._width()
            known = self.widths.setdefault(t.text, width)
            if known != width:
                raise IRTypeError(f"{t.line}:{t.col}: {t.text} declared <{width}> but was <{known}>")
            return Var(t.text, width)
        if t.text not in self.widths:
            raise self.error(f"first occurrence of {t.text} needs a width", t)
        return Var(t.text, self.widths[t.text])

    def _width(self) -> int:
        return int(self.advance().text[1:-1])


def parse_program(text: str) -> Program:
    """Parse IR text; raises IRSyntaxError, IRTypeError or IRLabelError."""
    from asmlift.ir.wellformed import check_wellformed  # noqa: PLC0415

    program = _Parser(text).program()
    diagnostics = check_wellformed(program)
    for d in diagnostics:
        if d.kind == "label":
            raise IRLabelError(f"{d.where}: {d.message}")
    if diagnostics:
        raise IRTypeError(f"{diagnostics[0].where}: {diagnostics[0].message}")
    return program


def parse_expr(text: str, widths: dict[str, int] | None = None) -> Expr:
    """Parse a single expression; `widths` pre-declares variables used bare."""
    parser = _Parser(text)
    parser.widths.update(widths or {})
    parser.skip_separators()
    e = parser.expr()
    parser.skip_separators()
    if parser.tok.kind != "eof":
        raise parser.error(f"trailing input {parser.tok.text!r}")
    return e


# ---------------------------------------------------------------------------
#  Printer
# ---------------------------------------------------------------------------


class _Printer:
    def __init__(self, declared: set[str] | None = None):
        self.declared: set[str] = declared if declared is not None else set()

    def var(self, v: Var) -> str:
        if v.name in self.declared:
            return v.name
        self.declared.add(v.name)
        return f"{v.name}<{v.width}>"

    def operand(self, e: Expr) -> str:
        text = self.expr(e)
        return f"({text})" if isinstance(e, Binop | Ite) else text

    def expr(self, e: Expr) -> str:
        match e:
            case Const(value, width):
                return f"{value}<{width}>"
            case Var():
                return self.var(e)
            case Load(addr, nbytes):
                return f"@[{self.expr(addr)}]{nbytes}"
            case Unop(op, arg, params):
                head = ":".join([op.value, *map(str, params)])
                return f"{head} {self.operand(arg)}"
            case Binop(op, lhs, rhs):
                return f"{self.operand(lhs)} {op.value} {self.operand(rhs)}"
            case Ite(cond, then, orelse):
                return f"{self.operand(cond)} ? {self.operand(then)} : {self.operand(orelse)}"
        raise TypeError(f"not an expression: {e!r}")

    def instr(self, i: Instr) -> str:
        match i:
            case Assign(lhs, rhs):
                lhs_text = self.var(lhs)
                return f"{lhs_text} := {self.expr(rhs)}"
            case Store(addr, nbytes, value):
                return f"@[{self.expr(addr)}]{nbytes} := {self.expr(value)}"
            case Goto(target):
                return f"goto {target}"
            case Branch(cond, then_target, else_target):
                return f"if {self.expr(cond)} then goto {then_target} else goto {else_target}"
            case Halt():
                return "halt"
        raise TypeError(f"not an instruction: {i!r}")


def print_expr(e: Expr, *, declared: set[str] | None = None) -> str:
    """Print an expression; names in `declared` are printed without their width."""
    return _Printer(declared).expr(e)


def print_program(p: Program) -> str:
    printer = _Printer()
    lines: list[str] = []
    if p.blocks and p.blocks[0].id != p.entry:
        lines.append(f".entry {p.entry}")
    for b in p.blocks:
        lines.append(f"{b.id}:")
        lines.extend(f"  {printer.instr(i)}" for i in b.instrs)
    return "\n".join(lines) + "\n"
