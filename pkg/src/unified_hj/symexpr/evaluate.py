"""Numeric evaluation: a checked tree walker plus compiled fast paths."""

from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np

from .expr import Add, Const, Expr, Func, Mul, Pow, Var, VarId


class EvaluationError(ValueError):
    def __init__(self, message: str, subexpr: Expr | None = None):
        self.subexpr = subexpr
        if subexpr is not None:
            message = f"{message} in subexpression {subexpr}"
        super().__init__(message)


class UnassignedVariableError(EvaluationError):
    pass


class DomainError(EvaluationError):
    pass


_MATH = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "log": math.log, "sqrt": math.sqrt}


def eval_expr(e: Expr, point: Mapping[VarId, float]) -> float:
    """Evaluate ``e`` in double precision.

    Raises :class:`UnassignedVariableError` for a missing variable and
    :class:`DomainError` (carrying the offending subexpression) for
    log/sqrt of an invalid argument, division by zero or overflow.
    """
    if isinstance(e, Const):
        return float(e.value)
    if isinstance(e, Var):
        try:
            return float(point[e.var])
        except KeyError:
            raise UnassignedVariableError(f"variable {e.var.token} is not assigned", e) from None
    if isinstance(e, Add):
        return math.fsum(eval_expr(t, point) for t in e.terms)
    if isinstance(e, Mul):
        out = 1.0
        for f in e.factors:
            out *= eval_expr(f, point)
        return out
    if isinstance(e, Pow):
        b = eval_expr(e.base, point)
        if b == 0.0 and e.exp < 0:
            raise DomainError("division by zero", e)
        try:
            return b**e.exp
        except OverflowError:
            raise DomainError("overflow", e) from None
    if isinstance(e, Func):
        u = eval_expr(e.arg, point)
        if e.name == "log" and u <= 0:
            raise DomainError(f"log of non-positive value {u!r}", e)
        if e.name == "sqrt" and u < 0:
            raise DomainError(f"sqrt of negative value {u!r}", e)
        try:
            return _MATH[e.name](u)
        except OverflowError:
            raise DomainError("overflow", e) from None
    raise TypeError(f"cannot evaluate {e!r}")


def _code(e: Expr, names: Mapping[VarId, str], lib: str) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Var):
        return names[e.var]
    if isinstance(e, Add):
        return "(" + " + ".join(_code(t, names, lib) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(" + "*".join(_code(f, names, lib) for f in e.factors) + ")"
    if isinstance(e, Pow):
        base = _code(e.base, names, lib)
        if e.exp == 2:
            return f"({base}*{base})"
        if e.exp == -1:
            return f"(1.0/{base})"
        return f"({base}**{e.exp})"
    if isinstance(e, Func):
        return f"{lib}.{e.name}({_code(e.arg, names, lib)})"
    raise TypeError(f"cannot compile {e!r}")


def compile_exprs(exprs: Sequence[Expr], variables: Sequence[VarId], backend: str = "math") -> Callable:
    """Compile ``exprs`` into ``f(*values) -> tuple`` over ``variables``.

    With ``backend="numpy"`` the arguments may be arrays; domain errors
    then surface as NaN/inf rather than exceptions.
    """
    variables = list(variables)
    names = {v: f"x{i}" for i, v in enumerate(variables)}
    missing = set().union(*(e.free_vars() for e in exprs)) - set(variables) if exprs else set()
    if missing:
        raise UnassignedVariableError(
            "variables not bound: " + ", ".join(sorted(v.token for v in missing))
        )
    lib = "_np" if backend == "numpy" else "_m"
    body = ", ".join(_code(e, names, lib) for e in exprs)
    args = ", ".join(names[v] for v in variables)
    src = f"def _f({args}):\n    return ({body}{',' if len(exprs) == 1 else ''})\n"
    ns = {"_np": np, "_m": math}
    exec(compile(src, "<symexpr>", "exec"), ns)
    return ns["_f"]


def compile_expr(e: Expr, variables: Sequence[VarId], backend: str = "math") -> Callable:
    f = compile_exprs([e], variables, backend)
    return lambda *xs: f(*xs)[0]


def sample_points(variables: Sequence[VarId], samples: int, seed: int,
                  ranges: Mapping[VarId, tuple[float, float]] | None = None,
                  default_range: tuple[float, float] = (-1.0, 1.0)) -> list[dict[VarId, float]]:
    """Reproducible uniform samples, one dict per point."""
    rng = np.random.default_rng(seed)
    ranges = ranges or {}
    variables = sorted(variables)
    cols = {}
    for v in variables:
        lo, hi = ranges.get(v, default_range)
        cols[v] = rng.uniform(lo, hi, samples)
    return [{v: float(cols[v][i]) for v in variables} for i in range(samples)]


def equivalent_numeric(a: Expr, b: Expr, samples: int = 100, tol: float = 1e-10, seed: int = 0,
                       ranges: Mapping[VarId, tuple[float, float]] | None = None,
                       default_range: tuple[float, float] = (-1.0, 1.0)) -> bool:
    """Randomized check that ``a`` and ``b`` agree as functions.

    Points where either side hits a domain error are skipped; if every point
    is skipped an :class:`EvaluationError` is raised.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    variables = a.free_vars() | b.free_vars()
    used = 0
    for pt in sample_points(variables, samples, seed, ranges, default_range):
        try:
            x = eval_expr(a, pt)
            y = eval_expr(b, pt)
        except DomainError:
            continue
        used += 1
        if not abs(x - y) <= tol * (1 + abs(x) + abs(y)):
            return False
    if used == 0:
        raise EvaluationError("every sample point hit a domain error")
    return True
