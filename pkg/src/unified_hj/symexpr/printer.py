"""Text rendering that the parser reads back to the identical tree."""

from __future__ import annotations

from fractions import Fraction

from .expr import Add, Const, Expr, Func, Mul, Pow, Var, power


def format_const(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _is_negative(t: Expr) -> bool:
    if isinstance(t, Const):
        return t.value < 0
    return isinstance(t, Mul) and isinstance(t.factors[0], Const) and t.factors[0].value < 0


def _base(b: Expr) -> str:
    if isinstance(b, (Var, Func)):
        return to_string(b)
    return f"({to_string(b)})"


def _factor(f: Expr) -> str:
    if isinstance(f, Pow):
        return f"{_base(f.base)}^{f.exp}"
    if isinstance(f, Add):
        return f"({to_string(f)})"
    return to_string(f)


def _product(coeff: Fraction, factors: tuple[Expr, ...]) -> str:
    num = [f for f in factors if not (isinstance(f, Pow) and f.exp < 0)]
    den = [power(f.base, -f.exp) for f in factors if isinstance(f, Pow) and f.exp < 0]
    sign = "-" if coeff < 0 else ""
    c = abs(coeff)
    pieces = []
    if c != 1 or not num:
        pieces.append(format_const(c))
    pieces.extend(_factor(f) for f in num)
    out = sign + "*".join(pieces)
    for d in den:
        out += "/" + _factor(d)
    return out


def to_string(e: Expr) -> str:
    if isinstance(e, Const):
        return format_const(e.value)
    if isinstance(e, Var):
        return e.var.token
    if isinstance(e, Func):
        return f"{e.name}({to_string(e.arg)})"
    if isinstance(e, Pow):
        if e.exp < 0:
            return _product(Fraction(1), (e,))
        return _factor(e)
    if isinstance(e, Mul):
        if isinstance(e.factors[0], Const):
            return _product(e.factors[0].value, e.factors[1:])
        return _product(Fraction(1), e.factors)
    if isinstance(e, Add):
        out = to_string(e.terms[0])
        for t in e.terms[1:]:
            if _is_negative(t):
                out += " - " + to_string(-t)
            else:
                out += " + " + to_string(t)
        return out
    raise TypeError(f"not an expression: {e!r}")
