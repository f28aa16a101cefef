"""Tokenizer and recursive-descent machinery shared by ``.cal`` and ``.scn``."""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import CalSyntaxError
from ..formula import (FALSE, TRUE, Atom, Compare, Implies, Shift, Var, conj,
                       disj, neg)

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<string>"[^"\n]*")
  | (?P<int>\d+)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<op>:=|->|!=|<=|>=|\.\.|[-&|()<>{},.;:=+])
""", re.VERBOSE)

KEYWORDS = {"caused", "if", "after", "true", "false", "where"}


@dataclass(frozen=True)
class Token:
    kind: str  # ident, var, int, string, op, kw, eof
    value: str
    line: int
    col: int


def tokenize(text: str, filename=None) -> list:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise CalSyntaxError(f"unexpected character {text[pos]!r}",
                                 line, pos - line_start + 1, filename)
        kind = m.lastgroup
        value = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident" and value in KEYWORDS:
            tokens.append(Token("kw", value, line, col))
        elif kind == "string":
            tokens.append(Token("string", value[1:-1], line, col))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, value, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class TokenParser:
    """Cursor over a token list plus the formula grammar.

    Precedence from loosest to tightest: ``->`` (right associative),
    ``|``, ``&``, unary ``-``.
    """

    def __init__(self, text: str, filename=None):
        self.filename = filename
        self.tokens = tokenize(text, filename)
        self.i = 0

    # -- cursor --
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset=1) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, message, tok=None, cls=CalSyntaxError):
        tok = tok or self.tok
        return cls(message, tok.line, tok.col, self.filename)

    def at(self, value, kind=None) -> bool:
        t = self.tok
        return t.value == value and (kind is None or t.kind == kind) and t.kind != "string"

    def accept(self, value) -> bool:
        if self.at(value):
            self.advance()
            return True
        return False

    def expect(self, value) -> Token:
        if not self.at(value):
            shown = self.tok.value or "end of input"
            raise self.error(f"expected {value!r}, found {shown!r}")
        return self.advance()

    def expect_kind(self, kind, what=None) -> Token:
        if self.tok.kind != kind:
            shown = self.tok.value or "end of input"
            raise self.error(f"expected {what or kind}, found {shown!r}")
        return self.advance()

    def end_statement(self):
        if not (self.accept(".") or self.accept(";")):
            shown = self.tok.value or "end of input"
            raise self.error(f"expected '.' at end of statement, found {shown!r}")

    # -- formulas --
    def formula(self, allow_or=True):
        left = self._or() if allow_or else self._and()
        if self.accept("->"):
            return Implies(left, self.formula(allow_or))
        return left

    def _or(self):
        items = [self._and()]
        while self.accept("|"):
            items.append(self._and())
        return disj(*items) if len(items) > 1 else items[0]

    def _and(self):
        items = [self._unary()]
        while self.accept("&"):
            items.append(self._unary())
        return conj(*items) if len(items) > 1 else items[0]

    def _unary(self):
        if self.accept("-"):
            return neg(self._unary())
        if self.accept("("):
            f = self.formula()
            self.expect(")")
            return f
        t = self.tok
        if t.kind == "kw" and t.value in ("true", "false"):
            self.advance()
            return TRUE if t.value == "true" else FALSE
        if t.kind in ("var", "int"):
            return self._comparison()
        if t.kind == "ident":
            if self.peek().value in ("=", "!=", "<", "<=", ">", ">="):
                return self._comparison()
            return self.atom()
        raise self.error(f"expected a formula, found {t.value or 'end of input'!r}")

    def _comparison(self):
        left = self.term()
        op = self.tok
        if op.value not in ("=", "!=", "<", "<=", ">", ">="):
            raise self.error("expected a comparison operator")
        self.advance()
        return Compare(op.value, left, self.term())

    def term(self):
        t = self.tok
        if t.kind == "var":
            self.advance()
            v = Var(t.value)
            if self.tok.value in ("+", "-") and self.peek().kind == "int":
                sign = 1 if self.advance().value == "+" else -1
                return Shift(v, sign * int(self.advance().value))
            return v
        if t.kind in ("ident", "int"):
            self.advance()
            return t.value
        raise self.error(f"expected a term, found {t.value or 'end of input'!r}")

    def atom(self) -> Atom:
        name = self.expect_kind("ident", "an identifier")
        args = []
        if self.accept("("):
            args.append(self.term())
            while self.accept(","):
                args.append(self.term())
            self.expect(")")
        return Atom(name.value, tuple(args))
