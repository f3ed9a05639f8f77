"""Recursive-descent parser for the expression grammar.

Precedence, tightest first: ``^`` (right-associative, integer literal
exponent), unary ``-``, ``* /``, ``+ -``.  Identifiers ``q<i>_<A>`` and
``p<i>_<A>`` are jet coordinates and momenta; any other identifier must be a
declared parameter.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import FUNCTIONS, Expr, VarId, add, const, div, func, mul, neg, power, sub, var


class ParseError(ValueError):
    def __init__(self, message: str, text: str = "", pos: int | None = None):
        self.message = message
        self.text = text
        self.pos = pos
        if pos is not None:
            message = f"{message} at position {pos}"
            if text:
                message += f"\n  {text}\n  {' ' * pos}^"
        super().__init__(message)


class UnknownIdentifierError(ParseError):
    pass


class CoordinateRangeError(ParseError):
    pass


COORD_RE = re.compile(r"([qp])(\d+)_(\d+)\Z")
NAME_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*\Z")

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*|\.\d+|\d+)|(?P<name>[a-zA-Z_][a-zA-Z0-9_]*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class ParseContext:
    """Identifier resolution rules.

    ``max_q`` / ``max_p`` bound the order index of coordinate tokens and ``n``
    bounds the component index; ``None`` disables the check.
    """

    params: frozenset[str] = field(default_factory=frozenset)
    n: int | None = None
    max_q: int | None = None
    max_p: int | None = None

    @classmethod
    def for_atlas(cls, atlas, params=(), formal_top: bool = False) -> "ParseContext":
        top = 2 * atlas.k if formal_top else 2 * atlas.k - 1
        return cls(frozenset(params), atlas.n, top, atlas.k - 1)


def is_parameter_name(name: str) -> bool:
    return bool(NAME_RE.match(name)) and not COORD_RE.match(name) and name not in FUNCTIONS


def parse_token(name: str, ctx: ParseContext | None = None, pos: int | None = None, text: str = "") -> VarId:
    """Resolve one identifier to a :class:`VarId`."""
    ctx = ctx or ParseContext()
    m = COORD_RE.match(name)
    if m:
        kind, order, index = m.group(1), int(m.group(2)), int(m.group(3))
        top = ctx.max_q if kind == "q" else ctx.max_p
        if index < 1 or (ctx.n is not None and index > ctx.n):
            raise CoordinateRangeError(f"component index out of range in {name!r}", text, pos)
        if top is not None and order > top:
            raise CoordinateRangeError(f"coordinate {name!r} exceeds order {top}", text, pos)
        return VarId(kind, order, index)
    if name in ctx.params:
        return VarId("param", name=name)
    raise UnknownIdentifierError(f"unknown identifier {name!r}", text, pos)


class _Parser:
    def __init__(self, text: str, ctx: ParseContext):
        self.text = text
        self.ctx = ctx
        self.tokens = self._tokenize(text)
        self.i = 0

    def _tokenize(self, text):
        out = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            m = _TOKEN_RE.match(text, pos)
            if not m:
                raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
            kind = m.lastgroup
            start = m.start(kind)
            out.append((kind, m.group(kind), start))
            pos = m.end()
        out.append(("end", "", len(text)))
        return out

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}, found {val or 'end of input'!r}", self.text, pos)

    def fail(self, msg):
        raise ParseError(msg, self.text, self.peek()[2])

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", self.text, pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                e = mul(e, rhs)
            else:
                if rhs.is_const(0):
                    raise ParseError("division by zero", self.text, pos)
                e = div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return neg(self.unary())
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            n = self.exponent()
            if n < 0 and base.is_const(0):
                self.fail("division by zero")
            return power(base, n)
        return base

    def exponent(self) -> int:
        kind, val, pos = self.peek()
        if (kind, val) == ("op", "("):
            self.take()
            n = self.exponent()
            self.expect(")")
        else:
            sign = 1
            if (kind, val) == ("op", "-"):
                self.take()
                sign = -1
                kind, val, pos = self.peek()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be an integer literal", self.text, pos)
            self.take()
            n = sign * int(val)
        if self.peek()[:2] == ("op", "^"):
            self.take()
            m = self.exponent()
            r = Fraction(n) ** m
            if r.denominator != 1:
                raise ParseError("exponent must be an integer", self.text, pos)
            n = int(r)
        return n

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return const(Fraction(val))
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return func(val, arg)
            return var(parse_token(val, self.ctx, pos, self.text))
        if (kind, val) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {val or 'end of input'!r}", self.text, pos)


def parse_expr(text: str, atlas=None, params=(), *, context: ParseContext | None = None,
               formal_top: bool = False) -> Expr:
    """Parse ``text`` into a normalized expression.

    When ``atlas`` is given, coordinate tokens are range-checked against it
    (jet orders up to ``2k-1``, momenta up to ``k-1``).
    """
    if context is None:
        if atlas is not None:
            context = ParseContext.for_atlas(atlas, params, formal_top)
        else:
            context = ParseContext(frozenset(params))
    return _Parser(text, context).parse()
