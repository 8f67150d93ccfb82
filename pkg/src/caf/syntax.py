"""Text syntax for data constraints, terms and data commands.

Shared by the automaton file format, the compiled-document format and the
command-line tools:

    'm      pre-step value of memory cell m
    m'      post-step value of memory cell m
    ==      equality,  !  negation,  &  conjunction,  E x .  quantifier
    true / false, integers as constants, f(t1,t2) applications, R(t) relations
"""

from __future__ import annotations

from dataclasses import dataclass

from .constraints import (
    App,
    BOT,
    Const,
    DataConstraint,
    DataLiteral,
    DataTerm,
    DataVariable,
    Eq,
    Neg,
    Rel,
    TOP,
    Var,
    port,
    post,
    pre,
)


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Token:
    kind: str  # NAME INT PUNCT PRE POST EOF
    text: str
    line: int
    column: int


_PUNCT = ("==", "->", ":=", "{", "}", "(", ")", "[", "]", ";", ",", ".", "&", "!", "=")


def _is_name_first(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_name_rest(c: str) -> bool:
    # `|` appears inside joined state names like q0|q1
    return c.isalnum() or c in "_$|"


def tokenize(text: str) -> list[Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if c.isspace():
            i, col = i + 1, col + 1
            continue
        if c == "#":  # comment to end of line
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_col = col
        if c == "'":
            j = i + 1
            if j >= n or not _is_name_first(text[j]):
                raise ParseError("expected name after '", line, start_col)
            while j < n and _is_name_rest(text[j]):
                j += 1
            tokens.append(Token("PRE", text[i + 1 : j], line, start_col))
            col += j - i
            i = j
            continue
        if _is_name_first(c):
            j = i
            while j < n and _is_name_rest(text[j]):
                j += 1
            name = text[i:j]
            if j < n and text[j] == "'":
                tokens.append(Token("POST", name, line, start_col))
                j += 1
            else:
                tokens.append(Token("NAME", name, line, start_col))
            col += j - i
            i = j
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("INT", text[i:j], line, start_col))
            col += j - i
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("PUNCT", p, line, start_col))
                i += len(p)
                col += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, start_col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


class TokenStream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def error(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.column)

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind == "EOF":
            raise self.error(f"expected {text!r}, found {tok.text!r}")
        return self.next()

    def expect_name(self) -> str:
        tok = self.peek()
        if tok.kind != "NAME":
            raise self.error(f"expected a name, found {tok.text!r}")
        self.next()
        return tok.text

    def at(self, text: str) -> bool:
        return self.peek().text == text and self.peek().kind != "EOF"


def _parse_variable(ts: TokenStream) -> DataVariable:
    tok = ts.peek()
    if tok.kind == "PRE":
        ts.next()
        return pre(tok.text)
    if tok.kind == "POST":
        ts.next()
        return post(tok.text)
    if tok.kind == "NAME":
        ts.next()
        return port(tok.text)
    raise ts.error(f"expected a data variable, found {tok.text!r}")


def parse_term(ts: TokenStream) -> DataTerm:
    tok = ts.peek()
    if tok.kind == "INT":
        ts.next()
        return Const(int(tok.text))
    if tok.kind in ("PRE", "POST"):
        return Var(_parse_variable(ts))
    if tok.kind == "NAME":
        if ts.peek(1).text == "(":
            ts.next()
            ts.expect("(")
            args = [parse_term(ts)]
            while ts.at(","):
                ts.next()
                args.append(parse_term(ts))
            ts.expect(")")
            return App(tok.text, tuple(args))
        ts.next()
        return Var(port(tok.text))
    raise ts.error(f"expected a term, found {tok.text!r}")


def _parse_atom(ts: TokenStream):
    tok = ts.peek()
    if tok.kind == "NAME" and tok.text == "true":
        ts.next()
        return TOP
    if tok.kind == "NAME" and tok.text == "false":
        ts.next()
        return BOT
    left = parse_term(ts)
    if ts.at("=="):
        ts.next()
        return Eq(left, parse_term(ts))
    # A bare application in literal position is a relation atom.
    if isinstance(left, App):
        return Rel(left.fn, left.args)
    raise ts.error("expected '==' or a relation atom")


def parse_literal(ts: TokenStream) -> DataLiteral:
    if ts.at("!"):
        ts.next()
        return Neg(_parse_atom(ts))
    return _parse_atom(ts)


def parse_constraint_tokens(ts: TokenStream) -> DataConstraint:
    quantified = []
    while ts.peek().kind == "NAME" and ts.peek().text == "E" and ts.peek(2).text == ".":
        ts.next()
        quantified.append(_parse_variable(ts))
        ts.expect(".")
    kernel = [parse_literal(ts)]
    while ts.at("&"):
        ts.next()
        kernel.append(parse_literal(ts))
    return DataConstraint(tuple(quantified), tuple(kernel))


def parse_constraint(text: str) -> DataConstraint:
    ts = TokenStream(tokenize(text))
    phi = parse_constraint_tokens(ts)
    if ts.peek().kind != "EOF":
        raise ts.error(f"unexpected trailing input {ts.peek().text!r}")
    return phi


def parse_term_text(text: str) -> DataTerm:
    ts = TokenStream(tokenize(text))
    t = parse_term(ts)
    if ts.peek().kind != "EOF":
        raise ts.error(f"unexpected trailing input {ts.peek().text!r}")
    return t
