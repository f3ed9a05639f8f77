"""Immutable expression trees over jet coordinates, momenta and parameters.

Every node is built through the normalizing constructors in this module
(:func:`add`, :func:`mul`, :func:`power`, :func:`func`), so two expressions
that normalize to the same tree compare equal and hash equal.  Negation and
quotients have no node of their own: ``-e`` is ``(-1)*e`` and ``a/b`` is
``a*b^-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")

_KIND_RANK = {"param": 0, "q": 1, "p": 2}


class SymbolicError(ValueError):
    """Raised when an expression cannot be formed (e.g. an exact ``1/0``)."""


@dataclass(frozen=True)
class VarId:
    """Identity of a symbol.

    ``kind`` is ``"q"`` (jet coordinate q_order^index), ``"p"`` (momentum
    p_index^order) or ``"param"`` (named parameter).
    """

    kind: str
    order: int = 0
    index: int = 0
    name: str = ""

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise ValueError(f"unknown variable kind {self.kind!r}")
        if self.kind == "param":
            if not self.name:
                raise ValueError("parameter needs a name")
        elif self.order < 0 or self.index < 1:
            raise ValueError(f"bad coordinate indices ({self.order}, {self.index})")

    @property
    def token(self) -> str:
        if self.kind == "param":
            return self.name
        return f"{self.kind}{self.order}_{self.index}"

    @property
    def is_jet(self) -> bool:
        return self.kind == "q"

    @property
    def is_momentum(self) -> bool:
        return self.kind == "p"

    @property
    def is_param(self) -> bool:
        return self.kind == "param"

    def sort_key(self):
        return (_KIND_RANK[self.kind], self.order, self.index, self.name)

    def __lt__(self, other: "VarId") -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return self.token


def q(order: int, index: int = 1) -> VarId:
    return VarId("q", order, index)


def p(order: int, index: int = 1) -> VarId:
    return VarId("p", order, index)


def param(name: str) -> VarId:
    return VarId("param", name=name)


class Expr:
    __slots__ = ("_key", "_hash", "_free")

    def _init(self, key):
        self._key = key
        self._hash = hash(key)
        self._free = None

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Expr):
            return NotImplemented
        return self._hash == other._hash and self._key == other._key

    def __hash__(self):
        return self._hash

    def __lt__(self, other: "Expr") -> bool:
        return self._key < other._key

    @property
    def key(self):
        return self._key

    def children(self) -> tuple["Expr", ...]:
        return ()

    def free_vars(self) -> frozenset[VarId]:
        if self._free is None:
            acc: set[VarId] = set()
            for c in self.children():
                acc |= c.free_vars()
            self._free = frozenset(acc)
        return self._free

    def is_const(self, value=None) -> bool:
        return False

    # arithmetic sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        if isinstance(n, Const) and n.value.denominator == 1:
            n = int(n.value)
        if not isinstance(n, int):
            raise SymbolicError("only integer exponents are supported")
        return power(self, n)

    def __str__(self):
        from .printer import to_string

        return to_string(self)

    def __repr__(self):
        return f"Expr({self})"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: Fraction):
        self.value = value
        self._init((0, value))

    def is_const(self, value=None) -> bool:
        return value is None or self.value == value

    def free_vars(self):
        return frozenset()


class Var(Expr):
    __slots__ = ("var",)

    def __init__(self, var: VarId):
        self.var = var
        self._init((1, var.sort_key()))

    def free_vars(self):
        if self._free is None:
            self._free = frozenset((self.var,))
        return self._free


class Pow(Expr):
    __slots__ = ("base", "exp")

    def __init__(self, base: Expr, exp: int):
        self.base = base
        self.exp = exp
        self._init((2, base._key, exp))

    def children(self):
        return (self.base,)


class Mul(Expr):
    __slots__ = ("factors",)

    def __init__(self, factors: tuple[Expr, ...]):
        self.factors = factors
        self._init((3, tuple(f._key for f in factors)))

    def children(self):
        return self.factors


class Add(Expr):
    __slots__ = ("terms",)

    def __init__(self, terms: tuple[Expr, ...]):
        self.terms = terms
        self._init((4, tuple(t._key for t in terms)))

    def children(self):
        return self.terms


class Func(Expr):
    __slots__ = ("name", "arg")

    def __init__(self, name: str, arg: Expr):
        self.name = name
        self.arg = arg
        self._init((5, name, arg._key))

    def children(self):
        return (self.arg,)


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
MINUS_ONE = Const(Fraction(-1))


def const(value) -> Const:
    if isinstance(value, Const):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not a numeric constant")
    if isinstance(value, (int, Rational)):
        return Const(Fraction(value))
    if isinstance(value, float):
        # decimal-exact: 0.1 -> 1/10, not the binary expansion
        return Const(Fraction(repr(value)))
    if isinstance(value, str):
        return Const(Fraction(value))
    raise TypeError(f"cannot make a constant from {value!r}")


def var(v: VarId | str) -> Var:
    if isinstance(v, str):
        v = param(v)
    return Var(v)


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, VarId):
        return Var(x)
    return const(x)


def _split_coeff(t: Expr) -> tuple[Fraction, Expr]:
    if isinstance(t, Mul) and isinstance(t.factors[0], Const):
        rest = t.factors[1:]
        return t.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), t


def _scale(rest: Expr, c: Fraction) -> Expr:
    if c == 1:
        return rest
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.factors)
    if isinstance(rest, Add):
        # numeric coefficients distribute over a bare sum
        return add(*(_scale_term(t, c) for t in rest.terms))
    return Mul((Const(c), rest))


def _scale_term(t: Expr, c: Fraction) -> Expr:
    if isinstance(t, Const):
        return Const(t.value * c)
    tc, rest = _split_coeff(t)
    return _scale(rest, tc * c)


def _term_order(t: Expr):
    if isinstance(t, Const):
        return (1,)
    c, rest = _split_coeff(t)
    return (0, rest._key, c)


def add(*args) -> Expr:
    flat: list[Expr] = []
    for a in args:
        a = as_expr(a)
        if isinstance(a, Add):
            flat.extend(a.terms)
        else:
            flat.append(a)
    constant = Fraction(0)
    coeffs: dict[Expr, Fraction] = {}
    for t in flat:
        if isinstance(t, Const):
            constant += t.value
            continue
        c, rest = _split_coeff(t)
        coeffs[rest] = coeffs.get(rest, Fraction(0)) + c
    out: list[Expr] = []
    for rest, c in coeffs.items():
        if c != 0:
            out.append(_scale(rest, c))
    if constant != 0:
        out.append(Const(constant))
    if any(isinstance(t, Add) for t in out):
        return add(*out)
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    out.sort(key=_term_order)
    return Add(tuple(out))


def _factor_order(f: Expr):
    if isinstance(f, Pow):
        return (f.base._key, f.exp)
    return (f._key, 1)


def mul(*args) -> Expr:
    flat: list[Expr] = []
    for a in args:
        a = as_expr(a)
        if isinstance(a, Mul):
            flat.extend(a.factors)
        else:
            flat.append(a)
    coeff = Fraction(1)
    bases: dict[Expr, int] = {}
    for f in flat:
        if isinstance(f, Const):
            coeff *= f.value
        elif isinstance(f, Pow):
            bases[f.base] = bases.get(f.base, 0) + f.exp
        else:
            bases[f] = bases.get(f, 0) + 1
    if coeff == 0:
        return ZERO
    factors = [b if e == 1 else Pow(b, e) for b, e in bases.items() if e != 0]
    if not factors:
        return Const(coeff)
    if len(factors) == 1:
        return _scale(factors[0], coeff)
    factors.sort(key=_factor_order)
    if coeff != 1:
        return Mul((Const(coeff),) + tuple(factors))
    return Mul(tuple(factors))


def power(base, n: int) -> Expr:
    base = as_expr(base)
    if not isinstance(n, int) or isinstance(n, bool):
        raise SymbolicError(f"exponent must be an integer, got {n!r}")
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and n < 0:
            raise SymbolicError("division by zero")
        return Const(base.value**n)
    if isinstance(base, Pow):
        return power(base.base, base.exp * n)
    if isinstance(base, Mul):
        return mul(*(power(f, n) for f in base.factors))
    return Pow(base, n)


def neg(e) -> Expr:
    return mul(MINUS_ONE, e)


def sub(a, b) -> Expr:
    return add(a, neg(b))


def div(a, b) -> Expr:
    return mul(a, power(as_expr(b), -1))


def _exact_sqrt(v: Fraction) -> Fraction | None:
    if v < 0:
        return None
    from math import isqrt

    num, den = isqrt(v.numerator), isqrt(v.denominator)
    if num * num == v.numerator and den * den == v.denominator:
        return Fraction(num, den)
    return None


def func(name: str, arg) -> Expr:
    if name not in FUNCTIONS:
        raise SymbolicError(f"unknown function {name!r}")
    arg = as_expr(arg)
    if isinstance(arg, Const):
        v = arg.value
        if v == 0 and name in ("sin", "sqrt"):
            return ZERO
        if v == 0 and name in ("cos", "exp"):
            return ONE
        if v == 1 and name == "log":
            return ZERO
        if name == "sqrt":
            r = _exact_sqrt(v)
            if r is not None:
                return Const(r)
    return Func(name, arg)


def sin(e) -> Expr:
    return func("sin", e)


def cos(e) -> Expr:
    return func("cos", e)


def exp(e) -> Expr:
    return func("exp", e)


def log(e) -> Expr:
    return func("log", e)


def sqrt(e) -> Expr:
    return func("sqrt", e)


def rebuild(e: Expr, children: Iterable[Expr]) -> Expr:
    """Reconstruct a node of ``e``'s kind from new children."""
    children = tuple(children)
    if isinstance(e, Add):
        return add(*children)
    if isinstance(e, Mul):
        return mul(*children)
    if isinstance(e, Pow):
        return power(children[0], e.exp)
    if isinstance(e, Func):
        return func(e.name, children[0])
    return e


def subs(e: Expr, mapping: Mapping[VarId, object]) -> Expr:
    """Simultaneous substitution of variables by expressions (or numbers)."""
    if not mapping:
        return e
    table = {k: as_expr(v) for k, v in mapping.items()}
    keys = frozenset(table)
    memo: dict[Expr, Expr] = {}

    def go(x: Expr) -> Expr:
        if not (x.free_vars() & keys):
            return x
        hit = memo.get(x)
        if hit is not None:
            return hit
        if isinstance(x, Var):
            out = table[x.var]
        else:
            out = rebuild(x, (go(c) for c in x.children()))
        memo[x] = out
        return out

    return go(e)


def count_nodes(e: Expr) -> int:
    return 1 + sum(count_nodes(c) for c in e.children())
