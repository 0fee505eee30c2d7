"""Recursive-descent parser for the temporal spec surface syntax.

Grammar, loosest to tightest binding: implication (right-associative),
disjunction, conjunction, until (right-associative), then the unary
operators !, X, F, G. Atoms match [A-Za-z_][A-Za-z0-9_]*; the single letters
X, U, F, G are reserved as operators. Whitespace is insignificant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .formulas import Always, And, Atom, Eventually, Formula, Implies, Next, Not, Or, Until

__all__ = ["ParseError", "parse_spec"]

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<implies>->)"
    r"|(?P<not>!)"
    r"|(?P<and>&)"
    r"|(?P<or>\|)"
    r"|(?P<lparen>\()"
    r"|(?P<rparen>\))"
)

_KEYWORDS = {"X": "next", "U": "until", "F": "eventually", "G": "always"}

_TERM_STARTERS = "an atom, '(', '!', 'X', 'F', or 'G'"


class ParseError(ValueError):
    """Syntax error with the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"syntax error at offset {offset}: {message}")
        self.offset = offset


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise ParseError(f"unknown operator or character {text[pos]!r}", pos)
        kind = match.lastgroup
        value = match.group()
        if kind == "ident":
            kind = _KEYWORDS.get(value, "atom")
        if kind != "ws":
            tokens.append(_Token(kind, value, pos))
        pos = match.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def describe(self, token: _Token) -> str:
        if token.kind == "end":
            return "end of input"
        return repr(token.text)

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.peek().kind == "implies":
            self.advance()
            return Implies(left, self.parse_implies())
        return left

    def parse_or(self) -> Formula:
        node = self.parse_and()
        while self.peek().kind == "or":
            self.advance()
            node = Or(node, self.parse_and())
        return node

    def parse_and(self) -> Formula:
        node = self.parse_until()
        while self.peek().kind == "and":
            self.advance()
            node = And(node, self.parse_until())
        return node

    def parse_until(self) -> Formula:
        left = self.parse_unary()
        if self.peek().kind == "until":
            self.advance()
            return Until(left, self.parse_until())
        return left

    def parse_unary(self) -> Formula:
        token = self.peek()
        if token.kind == "not":
            self.advance()
            return Not(self.parse_unary())
        if token.kind == "next":
            self.advance()
            return Next(self.parse_unary())
        if token.kind == "eventually":
            self.advance()
            return Eventually(self.parse_unary())
        if token.kind == "always":
            self.advance()
            return Always(self.parse_unary())
        if token.kind == "atom":
            self.advance()
            return Atom(token.text)
        if token.kind == "lparen":
            self.advance()
            inner = self.parse_implies()
            closing = self.peek()
            if closing.kind != "rparen":
                raise ParseError(
                    f"expected ')', got {self.describe(closing)}", closing.offset
                )
            self.advance()
            return inner
        raise ParseError(
            f"expected {_TERM_STARTERS}, got {self.describe(token)}", token.offset
        )


def parse_spec(text: str) -> Formula:
    """Parse one formula; the whole input must be consumed."""
    parser = _Parser(_tokenize(text))
    formula = parser.parse_implies()
    trailing = parser.peek()
    if trailing.kind != "end":
        raise ParseError(
            f"expected an operator or end of input, got {parser.describe(trailing)}",
            trailing.offset,
        )
    return formula
