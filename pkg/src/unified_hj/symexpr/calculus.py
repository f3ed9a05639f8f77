"""Differentiation, expansion and zero testing."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

from .expr import (
    ONE,
    ZERO,
    Add,
    Const,
    Expr,
    Func,
    Mul,
    Pow,
    Var,
    VarId,
    add,
    cos,
    func,
    mul,
    neg,
    power,
    rebuild,
    sin,
)

_HALF = Const(Fraction(1, 2))


def diff(e: Expr, v: VarId) -> Expr:
    """Partial derivative of ``e`` with respect to ``v``."""
    return _diff(e, v)


@lru_cache(maxsize=65536)
def _diff(e: Expr, v: VarId) -> Expr:
    if v not in e.free_vars():
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return add(*(_diff(t, v) for t in e.terms))
    if isinstance(e, Mul):
        fs = e.factors
        terms = []
        for i, f in enumerate(fs):
            df = _diff(f, v)
            if df.is_const(0):
                continue
            terms.append(mul(*fs[:i], df, *fs[i + 1:]))
        return add(*terms)
    if isinstance(e, Pow):
        return mul(e.exp, power(e.base, e.exp - 1), _diff(e.base, v))
    if isinstance(e, Func):
        u = e.arg
        du = _diff(u, v)
        if e.name == "sin":
            outer = cos(u)
        elif e.name == "cos":
            outer = neg(sin(u))
        elif e.name == "exp":
            outer = e
        elif e.name == "log":
            outer = power(u, -1)
        else:  # sqrt
            outer = mul(_HALF, power(e, -1))
        return mul(outer, du)
    raise TypeError(f"cannot differentiate {e!r}")


def _expand_product(factors) -> Expr:
    terms: list[Expr] = [ONE]
    for f in factors:
        parts = f.terms if isinstance(f, Add) else (f,)
        acc = add(*(mul(a, b) for a in terms for b in parts))
        terms = list(acc.terms) if isinstance(acc, Add) else [acc]
    return add(*terms)


@lru_cache(maxsize=65536)
def expand(e: Expr) -> Expr:
    """Distribute products over sums and multiply out positive powers of sums.

    Negative powers keep their (expanded) base as an opaque denominator.
    """
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Add):
        return add(*(expand(t) for t in e.terms))
    if isinstance(e, Pow):
        b = expand(e.base)
        if isinstance(b, Add) and e.exp > 0:
            return _expand_product([b] * e.exp)
        return power(b, e.exp)
    if isinstance(e, Mul):
        fs = [expand(f) for f in e.factors]
        # a factor may itself have expanded into a product containing sums
        flat = []
        for f in fs:
            flat.extend(f.factors if isinstance(f, Mul) else (f,))
        return _expand_product(flat)
    if isinstance(e, Func):
        return func(e.name, expand(e.arg))
    raise TypeError(f"cannot expand {e!r}")


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the normalizing constructors."""
    if isinstance(e, (Const, Var)):
        return e
    return rebuild(e, (simplify(c) for c in e.children()))


def _denominators(e: Expr) -> dict[Expr, int]:
    out: dict[Expr, int] = {}
    for t in e.terms if isinstance(e, Add) else (e,):
        for f in t.factors if isinstance(t, Mul) else (t,):
            if isinstance(f, Pow) and f.exp < 0:
                out[f.base] = max(out.get(f.base, 0), -f.exp)
    return out


def clear_denominators(e: Expr, rounds: int = 4) -> Expr:
    """Multiply an expanded sum through by its denominators.

    The result vanishes exactly where ``e`` does, wherever the denominators
    are nonzero.
    """
    e = expand(e)
    for _ in range(rounds):
        dens = _denominators(e)
        if not dens or not isinstance(e, Add):
            break
        scale = [power(b, n) for b, n in dens.items()]
        # multiply termwise so each denominator cancels before distribution
        e = add(*(expand(mul(t, *scale)) for t in e.terms))
    return e


def is_zero(e: Expr) -> bool:
    """Structural zero test after expansion (sound, incomplete).

    Sums of rational terms are brought over their common denominators first.
    """
    x = expand(e)
    return x.is_const(0) or clear_denominators(x).is_const(0)


def depends_on(e: Expr, vs) -> bool:
    return bool(e.free_vars() & frozenset(vs))
