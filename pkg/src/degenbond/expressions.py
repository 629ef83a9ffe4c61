"""Tiny arithmetic expression grammar for config-supplied coefficients.

Supported: + - * / ^ (right-associative power), parentheses, unary sign,
numeric literals, the functions exp(...) and ln(...), and the identifiers
r, t and R (R is bound to the problem's rate bound at compile time).  Any
other identifier is rejected, so a run is fully reproducible from the
config text alone.

Compiled expressions evaluate through numpy and therefore accept scalar or
array arguments for r.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ParseError

_FUNCTIONS = {"exp": np.exp, "ln": np.log}


@dataclass(frozen=True)
class _Token:
    kind: str   # num | ident | op | end
    text: str
    column: int   # 1-based


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        col = i + 1
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            tokens.append(_Token("num", text[i:j], col))
            i = j
        elif ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("ident", text[i:j], col))
            i = j
        elif ch in "+-*/^()":
            tokens.append(_Token("op", ch, col))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", column=col)
    tokens.append(_Token("end", "", n + 1))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], variables: set[str], bindings: dict[str, float]):
        self.tokens = tokens
        self.pos = 0
        self.variables = variables
        self.bindings = bindings

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def take(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.take()
        if tok.kind != "op" or tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text or 'end of expression'!r}",
                             column=tok.column)

    # expr := term (('+'|'-') term)*
    def expr(self):
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            rhs = self.term()
            node = (lambda a, b: (lambda env: a(env) + b(env)))(node, rhs) if op == "+" \
                else (lambda a, b: (lambda env: a(env) - b(env)))(node, rhs)
        return node

    # term := unary (('*'|'/') unary)*
    def term(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.take().text
            rhs = self.unary()
            node = (lambda a, b: (lambda env: a(env) * b(env)))(node, rhs) if op == "*" \
                else (lambda a, b: (lambda env: a(env) / b(env)))(node, rhs)
        return node

    # unary := ('+'|'-')* power
    def unary(self):
        sign = 1.0
        while self.peek().kind == "op" and self.peek().text in "+-":
            if self.take().text == "-":
                sign = -sign
        node = self.power()
        if sign < 0:
            inner = node
            node = lambda env: -inner(env)
        return node

    # power := atom ('^' unary)?   (right-associative, exponent may be signed)
    def power(self):
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            exponent = self.unary()
            return (lambda a, b: (lambda env: a(env) ** b(env)))(base, exponent)
        return base

    def atom(self):
        tok = self.take()
        if tok.kind == "num":
            value = float(tok.text)
            return lambda env: value
        if tok.kind == "ident":
            name = tok.text
            if name in _FUNCTIONS:
                fn = _FUNCTIONS[name]
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return (lambda f, a: (lambda env: f(a(env))))(fn, arg)
            if name in self.bindings:
                value = self.bindings[name]
                return lambda env: value
            if name in self.variables:
                return (lambda nm: (lambda env: env[nm]))(name)
            raise ParseError(f"unknown identifier {name!r}", column=tok.column)
        if tok.kind == "op" and tok.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(
            f"expected a value, found {tok.text or 'end of expression'!r}", column=tok.column
        )


def compile_expression(
    text: str,
    variables: set[str],
    bindings: Optional[dict[str, float]] = None,
) -> Callable:
    """Compile to a callable over the named variables.

    variables == {'r'} yields f(r); {'t'} yields f(t); {'r','t'} yields
    f(r, t).  Raises ParseError (with column) on malformed input or unknown
    identifiers.
    """
    if not text.strip():
        raise ParseError("empty expression")
    parser = _Parser(_tokenize(text), variables, bindings or {})
    node = parser.expr()
    tail = parser.peek()
    if tail.kind != "end":
        raise ParseError(f"unexpected trailing {tail.text!r}", column=tail.column)

    if variables == {"r"}:
        return lambda r: node({"r": r})
    if variables == {"t"}:
        return lambda t: node({"t": t})
    if variables == {"r", "t"}:
        return lambda r, t: node({"r": r, "t": t})
    raise ValueError(f"unsupported variable set {variables}")
