"""Parser for the canonical rule text format (inverse of emit_rbr).

Rejects anything outside the grammar; on success the parsed rules compare
structurally equal to the rules the text was emitted from.  The layout
header comments (``-- lmap:`` / ``-- md:``) are read back so the address
tables survive the round trip.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import RbrSyntaxError
from .rbr import (
    Assign,
    Atom,
    BinOp,
    BitOp,
    Call,
    Expr,
    Guard,
    Nop,
    Not,
    Num,
    RELATIONS,
    Rule,
    Statement,
    Var,
    VarLayout,
)

_BIN_OPS = "+-*/%^"
_ASSIGN_TARGET = re.compile(r"^(?:[sgl]\d+|gl|ll|gs[12]|ls[12]|fresh_\d+)$")
_LMAP_LINE = re.compile(r"^--\s*lmap:\s*(.*?)\s*$", re.M)
_LMAP_ENTRY = re.compile(r"^(\d+)\s*->\s*l(\d+)$")
_MD_LINE = re.compile(r"^--\s*md:\s*(.*?)\s*$", re.M)
_MD_ENTRY = re.compile(r"^md(\d+)\s*=\s*calldata\[(\d+)\]$")

_TOKEN = re.compile(
    r"(?P<ws>\s+)|(?P<comment>--[^\n]*)|(?P<arrow>=>)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<num>\d+)"
    r"|(?P<punct>[(),|=+\-*/%^])"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "name", "num", "=>", or the punctuation character
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        match = _TOKEN.match(text, pos)
        if match is None:
            raise RbrSyntaxError(line, col, f"a token (found {text[pos]!r})")
        group = match.lastgroup
        value = match.group()
        if group == "name":
            tokens.append(_Token("name", value, line, col))
        elif group == "num":
            tokens.append(_Token("num", value, line, col))
        elif group == "arrow":
            tokens.append(_Token("=>", value, line, col))
        elif group == "punct":
            tokens.append(_Token(value, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = match.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


def _parse_headers(text: str) -> tuple[dict[int, int], tuple[int, ...]]:
    lmap: dict[int, int] = {}
    match = _LMAP_LINE.search(text)
    if match and match.group(1):
        for part in match.group(1).split(","):
            entry = _LMAP_ENTRY.match(part.strip())
            if entry:
                lmap[int(entry.group(1))] = int(entry.group(2))
    offsets: list[int] = []
    match = _MD_LINE.search(text)
    if match and match.group(1):
        for part in match.group(1).split(","):
            entry = _MD_ENTRY.match(part.strip())
            if entry:
                offsets.append(int(entry.group(2)))
    return lmap, tuple(offsets)


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, what: str | None = None) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise RbrSyntaxError(tok.line, tok.col, what or repr(kind))
        return self.advance()

    def fail(self, what: str) -> RbrSyntaxError:
        tok = self.peek()
        return RbrSyntaxError(tok.line, tok.col, what)


def parse_rbr(text: str) -> list[Rule]:
    """Parse rule text; raises RbrSyntaxError outside the grammar."""
    lmap, md_offsets = _parse_headers(text)
    parser = _Parser(_tokenize(text))
    rules: list[Rule] = []
    layout: VarLayout | None = None
    while parser.peek().kind != "eof":
        rule, layout = _parse_rule(parser, layout, lmap, md_offsets)
        rules.append(rule)
    return rules


def _parse_rule(parser, layout, lmap, md_offsets):
    name_tok = parser.expect("name", "a rule name")
    name = name_tok.text
    if not (name.startswith("block_") or name.startswith("jump_")):
        raise RbrSyntaxError(name_tok.line, name_tok.col, "block_* or jump_* rule name")
    params = _parse_name_list(parser)
    parser.expect("=>", "'=>'")

    stack_count, rest = _split_stack_run(params)
    if layout is None:
        layout = _layout_from_params(rest, lmap, md_offsets, name_tok)
    elif rest != layout.param_names():
        raise RbrSyntaxError(
            name_tok.line, name_tok.col, "parameters consistent across rules"
        )

    if name.startswith("jump_"):
        guard = _parse_guard(parser)
        parser.expect("|", "'|'")
        call = _parse_call(parser, layout)
        rule = Rule(name, stack_count, layout, guard, [], call)
    else:
        body, call = _parse_body(parser, layout)
        rule = Rule(name, stack_count, layout, None, body, call)
    return rule, layout


def _parse_name_list(parser) -> list[str]:
    parser.expect("(", "'('")
    names = []
    if parser.peek().kind != ")":
        while True:
            names.append(parser.expect("name", "a variable name").text)
            if parser.peek().kind != ",":
                break
            parser.advance()
    parser.expect(")", "')'")
    return names


def _split_stack_run(params: list[str]) -> tuple[int, list[str]]:
    count = 0
    for name in params:
        if name == f"s{count}":
            count += 1
        else:
            break
    return count, params[count:]


def _layout_from_params(rest, lmap, md_offsets, tok) -> VarLayout:
    pos = 0

    def run(prefix: str) -> int:
        nonlocal pos
        n = 0
        while pos < len(rest) and rest[pos] == f"{prefix}{n}":
            n += 1
            pos += 1
        return n

    g = run("g")
    locals_ = run("l")
    md = run("md")
    named = tuple(rest[pos:])
    if any(n.startswith(("s", "g", "l", "md")) and n[-1].isdigit() for n in named):
        raise RbrSyntaxError(tok.line, tok.col, "parameters in canonical order")
    if lmap:
        if sorted(lmap.values()) != list(range(locals_)):
            raise RbrSyntaxError(tok.line, tok.col, "lmap header matching l parameters")
    if md_offsets and len(md_offsets) != md:
        raise RbrSyntaxError(tok.line, tok.col, "md header matching md parameters")
    return VarLayout(
        k=g - 1,
        r=locals_ - 1,
        lmap=lmap,
        md_offsets=md_offsets,
        md_count=md,
        named_bc=named,
    )


def _parse_body(parser, layout) -> tuple[list[Statement], Call | None]:
    body: list[Statement] = []
    call: Call | None = None

    def parse_item(required: bool) -> bool:
        nonlocal call
        tok = parser.peek()
        if tok.kind == "name":
            if tok.text == "call" and parser.peek(1).kind == "(":
                call = _parse_call(parser, layout)
                return True
            if tok.text == "nop" and parser.peek(1).kind == "(":
                parser.advance()
                parser.expect("(", "'('")
                body.append(Nop(parser.expect("name", "a mnemonic").text))
                parser.expect(")", "')'")
                return True
            if parser.peek(1).kind == "=":
                body.append(_parse_assign(parser))
                return True
        if required:
            raise parser.fail("a statement or call")
        return False  # empty body: here starts the next rule (or eof)

    if not parse_item(required=False):
        return body, call
    while parser.peek().kind == ",":
        if call is not None:
            raise parser.fail("the call to end the rule")
        parser.advance()
        parse_item(required=True)
    return body, call


def _parse_assign(parser) -> Assign:
    target_tok = parser.expect("name", "an assignment target")
    if not _ASSIGN_TARGET.match(target_tok.text):
        raise RbrSyntaxError(
            target_tok.line, target_tok.col, "a stack/field/local/rule-local target"
        )
    parser.expect("=", "'='")
    return Assign(target_tok.text, _parse_expr(parser))


def _parse_expr(parser) -> Expr:
    tok = parser.peek()
    if tok.kind == "name" and tok.text in ("and", "or", "xor") and parser.peek(1).kind == "(":
        parser.advance()
        parser.expect("(", "'('")
        lhs = _parse_atom(parser)
        parser.expect(",", "','")
        rhs = _parse_atom(parser)
        parser.expect(")", "')'")
        return BitOp(tok.text, lhs, rhs)
    if tok.kind == "name" and tok.text == "not" and parser.peek(1).kind == "(":
        parser.advance()
        parser.expect("(", "'('")
        operand = _parse_atom(parser)
        parser.expect(")", "')'")
        return Not(operand)
    lhs = _parse_atom(parser)
    if parser.peek().kind in _BIN_OPS:
        op = parser.advance().text
        return BinOp(op, lhs, _parse_atom(parser))
    return lhs


def _parse_atom(parser) -> Atom:
    tok = parser.peek()
    if tok.kind == "num":
        parser.advance()
        return Num(int(tok.text))
    if tok.kind == "name":
        parser.advance()
        return Var(tok.text)
    raise parser.fail("a number or variable")


def _parse_guard(parser) -> Guard:
    tok = parser.expect("name", "a guard relation")
    if tok.text not in RELATIONS:
        raise RbrSyntaxError(tok.line, tok.col, "one of " + "/".join(RELATIONS))
    parser.expect("(", "'('")
    lhs = _parse_atom(parser)
    parser.expect(",", "','")
    rhs = _parse_atom(parser)
    parser.expect(")", "')'")
    return Guard(tok.text, lhs, rhs)


def _parse_call(parser, layout) -> Call:
    tok = parser.expect("name", "'call'")
    if tok.text != "call":
        raise RbrSyntaxError(tok.line, tok.col, "'call'")
    parser.expect("(", "'('")
    target_tok = parser.expect("name", "a callee name")
    if not (target_tok.text.startswith("block_") or target_tok.text.startswith("jump_")):
        raise RbrSyntaxError(target_tok.line, target_tok.col, "a block_/jump_ callee")
    args = _parse_name_list(parser)
    parser.expect(")", "')'")
    stack_count, rest = _split_stack_run(args)
    if rest != layout.param_names():
        raise RbrSyntaxError(
            target_tok.line, target_tok.col, "canonical call arguments"
        )
    return Call(target_tok.text, stack_count)
