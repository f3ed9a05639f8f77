"""Unified-formalism objects derived from a regular higher-order Lagrangian."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np

from .jetspace import JetAtlas, max_order, total_derivative, total_derivative_n
from .linsolve import SingularSystemError, solve_linear
from .symexpr import (
    ZERO,
    DomainError,
    Expr,
    VarId,
    add,
    compile_exprs,
    const,
    diff,
    eval_expr,
    expand,
    is_zero,
    mul,
    neg,
    param,
    parse_expr,
    q,
    sample_points,
    sub,
    subs,
    var,
)


class RegularityError(ValueError):
    """The Hessian with respect to the top jet level is singular."""


class TangencyError(RuntimeError):
    """X_LH failed to be tangent to graph(FL); indicates an internal bug."""


def bind_params(e: Expr, params: Mapping[str, float]) -> Expr:
    """Replace parameters by their values as exact decimal rationals."""
    table = {param(k): const(v) for k, v in params.items()}
    return subs(e, table)


@dataclass(frozen=True)
class VectorField:
    """Components of a vector field, one expression per coordinate.

    When ``implicit_symbols`` is non-empty the components may reference those
    formal symbols; they are fixed per point by solving
    ``implicit_matrix @ symbols = implicit_rhs`` numerically.
    """

    coords: tuple[VarId, ...]
    components: Mapping[VarId, Expr]
    implicit_symbols: tuple[VarId, ...] = ()
    implicit_matrix: tuple[tuple[Expr, ...], ...] = ()
    implicit_rhs: tuple[Expr, ...] = ()

    def __post_init__(self):
        if set(self.components) != set(self.coords):
            raise ValueError("vector field needs exactly one component per coordinate")

    def __getitem__(self, v: VarId) -> Expr:
        return self.components[v]

    @property
    def is_symbolic(self) -> bool:
        return not self.implicit_symbols

    def apply(self, f: Expr) -> Expr:
        """Lie derivative X(f)."""
        if not self.is_symbolic:
            raise ValueError("cannot differentiate symbolically along an implicitly solved field")
        return add(*(mul(self.components[c], diff(f, c)) for c in self.coords))

    def as_strings(self) -> dict[str, str]:
        return {c.token: str(self.components[c]) for c in self.coords}

    def __str__(self) -> str:
        parts = []
        for c in self.coords:
            e = self.components[c]
            if not e.is_const(0):
                parts.append(f"({e})*d/d{c.token}")
        return " + ".join(parts) or "0"

    def compile(self, params: Mapping[str, float] | None = None) -> Callable[[np.ndarray], np.ndarray]:
        """Numeric ``f(x) -> dx/dt`` with ``x`` ordered like ``coords``."""
        params = params or {}
        pvars = [param(k) for k in sorted(params)]
        pvals = [float(params[k]) for k in sorted(params)]
        comps = [self.components[c] for c in self.coords]
        if self.is_symbolic:
            f = compile_exprs(comps, list(self.coords) + pvars)

            def rhs(x):
                return np.array(f(*x, *pvals), dtype=float)

            return rhs
        m = len(self.implicit_symbols)
        flat = [e for row in self.implicit_matrix for e in row] + list(self.implicit_rhs)
        fm = compile_exprs(flat, list(self.coords) + pvars)
        fc = compile_exprs(comps, list(self.coords) + list(self.implicit_symbols) + pvars)

        def rhs_implicit(x):
            vals = np.array(fm(*x, *pvals), dtype=float)
            top = np.linalg.solve(vals[: m * m].reshape(m, m), vals[m * m:])
            return np.array(fc(*x, *top, *pvals), dtype=float)

        return rhs_implicit


@dataclass(frozen=True)
class HessianResult:
    matrix: tuple[tuple[Expr, ...], ...]
    regular: bool
    min_abs_det: float

    def __iter__(self):
        return iter((self.matrix, self.regular))


@dataclass(frozen=True)
class LegendreMap:
    """Jacobi-Ostrogradsky momenta: one expression per momentum coordinate."""

    atlas: JetAtlas
    components: Mapping[VarId, Expr]

    def __getitem__(self, v: VarId) -> Expr:
        return self.components[v]

    def constraints(self) -> dict[VarId, Expr]:
        """Functions p - p_hat whose common zero set is graph(FL)."""
        return {m: sub(var(m), self.components[m]) for m in self.atlas.momenta}

    def as_strings(self) -> dict[str, str]:
        return {m.token: str(self.components[m]) for m in self.atlas.momenta}


@dataclass(frozen=True, eq=False)
class LagrangianSystem:
    """A k-th order Lagrangian on T^kQ together with parameter values.

    Derived objects are computed lazily and cached; parameters stay symbolic
    in every derived expression and are bound only for numeric work.
    """

    atlas: JetAtlas
    lagrangian: Expr
    params: Mapping[str, float] = field(default_factory=dict)
    symbolic_solve_max: int = 4
    det_tol: float = 1e-10
    samples: int = 20
    seed: int = 0
    ranges: Mapping[VarId, tuple[float, float]] | None = None

    def __post_init__(self):
        fv = self.lagrangian.free_vars()
        if any(v.is_momentum for v in fv):
            raise ValueError("the Lagrangian must not depend on momenta")
        if max_order(self.lagrangian) > self.atlas.k:
            raise ValueError(f"the Lagrangian depends on jets above order k={self.atlas.k}")
        for v in fv:
            if v.is_jet and v.index > self.atlas.n:
                raise ValueError(f"{v.token} is outside n={self.atlas.n}")
        missing = sorted(v.name for v in fv if v.is_param and v.name not in self.params)
        if missing:
            raise ValueError("no value for parameter(s) " + ", ".join(missing))

    @classmethod
    def from_text(cls, n: int, k: int, lagrangian: str, params: Mapping[str, float] | None = None,
                  **kw) -> "LagrangianSystem":
        params = dict(params or {})
        atl = JetAtlas(n, k)
        return cls(atl, parse_expr(lagrangian, atl, params), params, **kw)

    @property
    def n(self) -> int:
        return self.atlas.n

    @property
    def k(self) -> int:
        return self.atlas.k

    @cached_property
    def param_point(self) -> dict[VarId, float]:
        return {param(name): float(v) for name, v in self.params.items()}

    def dL(self, v: VarId) -> Expr:
        return diff(self.lagrangian, v)

    @cached_property
    def formal_top(self) -> tuple[VarId, ...]:
        """The formal level q_{2k}, used only while solving for F."""
        return self.atlas.level(2 * self.k)

    # derived objects, cached

    @cached_property
    def _hessian(self) -> HessianResult:
        return hessian(self)

    @cached_property
    def _el(self) -> tuple[Expr, ...]:
        return tuple(euler_lagrange(self))

    @cached_property
    def _affine_el(self):
        M, b = [], []
        zero_top = {v: ZERO for v in self.formal_top}
        for e in self._el:
            row = tuple(expand(diff(e, v)) for v in self.formal_top)
            if any(set(c.free_vars()) & set(self.formal_top) for c in row):
                raise RegularityError("Euler-Lagrange expressions are not affine in the top jets")
            M.append(row)
            b.append(expand(subs(e, zero_top)))
        return tuple(M), tuple(b)

    @cached_property
    def _F(self) -> tuple[Expr, ...]:
        return tuple(compute_F(self))

    @cached_property
    def _legendre(self) -> LegendreMap:
        return legendre(self)

    @cached_property
    def _H(self) -> tuple[Expr, Expr]:
        return hamiltonian(self)

    @cached_property
    def _XLH(self) -> VectorField:
        return build_XLH(self)

    @property
    def F(self) -> tuple[Expr, ...]:
        return self._F

    @property
    def FL(self) -> LegendreMap:
        return self._legendre

    @property
    def H(self) -> Expr:
        return self._H[0]

    @property
    def XLH(self) -> VectorField:
        return self._XLH

    @property
    def symbolic_F(self) -> bool:
        return self.n <= self.symbolic_solve_max

    def require_regular(self) -> None:
        h = self._hessian
        if not h.regular:
            raise RegularityError(
                f"singular Hessian (min |det| = {h.min_abs_det:.3g} <= {self.det_tol:g})"
            )

    def sample(self, coords: Sequence[VarId], count: int | None = None, seed: int | None = None):
        pts = sample_points(coords, count or self.samples, self.seed if seed is None else seed,
                            self.ranges)
        for pt in pts:
            pt.update(self.param_point)
        return pts


def hessian(sys: LagrangianSystem) -> HessianResult:
    """Hessian of L in the top jet level and a regularity verdict.

    For n = 1 a structurally zero entry is singular outright; otherwise the
    determinant is checked numerically at sampled points of T^kQ.
    """
    top = sys.atlas.level(sys.k)
    rows = tuple(tuple(diff(diff(sys.lagrangian, a), b) for b in top) for a in top)
    bound = [[expand(bind_params(e, sys.params)) for e in row] for row in rows]
    if sys.n == 1 and bound[0][0].is_const(0):
        return HessianResult(rows, False, 0.0)
    coords = set().union(*(e.free_vars() for row in bound for e in row))
    pts = sys.sample(sorted(coords), 1 if not coords else None)
    dets = []
    for pt in pts:
        try:
            m = np.array([[eval_expr(e, pt) for e in row] for row in bound])
        except DomainError:
            continue
        dets.append(abs(float(np.linalg.det(m))))
    min_det = min(dets) if dets else 0.0
    return HessianResult(rows, min_det > sys.det_tol, min_det)


def euler_lagrange(sys: LagrangianSystem) -> list[Expr]:
    """E_A = sum_i (-1)^i d_T^i(dL/dq_i^A), living on jets up to order 2k."""
    out = []
    for a in range(1, sys.n + 1):
        terms = []
        for i in range(sys.k + 1):
            t = total_derivative_n(sys.dL(q(i, a)), i)
            terms.append(neg(t) if i % 2 else t)
        out.append(add(*terms))
    return out


def compute_F(sys: LagrangianSystem) -> list[Expr]:
    """Solve the Euler-Lagrange equations for the top-level accelerations.

    Raises :class:`ValueError` when ``n`` exceeds ``symbolic_solve_max``; use
    :func:`F_numeric` (or the compiled X_LH) in that regime.
    """
    sys.require_regular()
    if not sys.symbolic_F:
        raise ValueError(f"n={sys.n} exceeds the symbolic solve bound {sys.symbolic_solve_max}")
    M, b = sys._affine_el
    try:
        return solve_linear(M, [neg(x) for x in b])
    except SingularSystemError as exc:
        raise RegularityError(str(exc)) from exc


def F_numeric(sys: LagrangianSystem, point: Mapping[VarId, float]) -> np.ndarray:
    """Per-point LU solve for F^A at a point of T^{2k-1}Q."""
    sys.require_regular()
    M, b = sys._affine_el
    pt = dict(sys.param_point)
    pt.update(point)
    m = np.array([[eval_expr(e, pt) for e in row] for row in M])
    rhs = -np.array([eval_expr(e, pt) for e in b])
    return np.linalg.solve(m, rhs)


def legendre(sys: LagrangianSystem) -> LegendreMap:
    """p_A^r = sum_{i=0}^{k-1-r} (-1)^i d_T^i(dL/dq_{r+1+i}^A)."""
    comps = {}
    for r in range(sys.k):
        for a in range(1, sys.n + 1):
            terms = []
            for i in range(sys.k - r):
                t = total_derivative_n(sys.dL(q(r + 1 + i, a)), i)
                terms.append(neg(t) if i % 2 else t)
            comps[VarId("p", r, a)] = add(*terms)
    return LegendreMap(sys.atlas, comps)


def coupling(sys: LagrangianSystem) -> Expr:
    return add(*(mul(var(q(i + 1, a)), var(VarId("p", i, a)))
                 for i in range(sys.k) for a in range(1, sys.n + 1)))


def hamiltonian(sys: LagrangianSystem) -> tuple[Expr, Expr]:
    """Return ``(H, C)`` with C the canonical coupling and H = C - L."""
    c = coupling(sys)
    return sub(c, sys.lagrangian), c


def dH(sys: LagrangianSystem) -> dict[VarId, Expr]:
    """Components of dH over the W coordinates, written from the closed form."""
    comps = {v: ZERO for v in sys.atlas.w}
    for a in range(1, sys.n + 1):
        comps[q(0, a)] = neg(sys.dL(q(0, a)))
        for i in range(sys.k):
            comps[q(i + 1, a)] = sub(var(VarId("p", i, a)), sys.dL(q(i + 1, a)))
            comps[VarId("p", i, a)] = var(q(i + 1, a))
    return comps


def build_XLH(sys: LagrangianSystem) -> VectorField:
    """The unique X_LH on W solving the dynamical equation, tangent to graph(FL)."""
    sys.require_regular()
    at = sys.atlas
    k, n = sys.k, sys.n
    comps: dict[VarId, Expr] = {}
    for l in range(2 * k - 1):
        for a in range(1, n + 1):
            comps[q(l, a)] = var(q(l + 1, a))
    implicit = {}
    if sys.symbolic_F:
        for a, f in zip(range(1, n + 1), sys.F):
            comps[q(2 * k - 1, a)] = f
    else:
        M, b = sys._affine_el
        for a, sym in zip(range(1, n + 1), sys.formal_top):
            comps[q(2 * k - 1, a)] = var(sym)
        implicit = dict(implicit_symbols=tuple(sys.formal_top), implicit_matrix=M,
                        implicit_rhs=tuple(neg(x) for x in b))
    for a in range(1, n + 1):
        comps[VarId("p", 0, a)] = sys.dL(q(0, a))
        for i in range(1, k):
            comps[VarId("p", i, a)] = sub(sys.dL(q(i, a)), var(VarId("p", i - 1, a)))
    return VectorField(at.w, comps, **implicit)


def on_graph(e: Expr, sys: LagrangianSystem) -> Expr:
    """Restrict a function on W to graph(FL) by substituting the momenta."""
    return subs(e, sys.FL.components)


def tangency_residuals(sys: LagrangianSystem) -> dict[VarId, Expr]:
    """X_LH(p - p_hat) restricted to graph(FL), expanded; zero for regular L."""
    x = sys.XLH
    return {m: expand(on_graph(x.apply(g), sys)) for m, g in sys.FL.constraints().items()}


def check_tangency(sys: LagrangianSystem) -> None:
    bad = {m.token: str(r) for m, r in tangency_residuals(sys).items() if not is_zero(r)}
    if bad:
        raise TangencyError(f"X_LH is not tangent to graph(FL): {bad}")


def legendre_recursion_residuals(sys: LagrangianSystem) -> list[Expr]:
    """p_hat^{r-1} - (dL/dq_r - d_T p_hat^r) for r = 1..k-1, and the top identity."""
    fl = sys.FL
    out = []
    for a in range(1, sys.n + 1):
        out.append(expand(sub(fl[VarId("p", sys.k - 1, a)], sys.dL(q(sys.k, a)))))
        for r in range(1, sys.k):
            rhs = sub(sys.dL(q(r, a)), total_derivative(fl[VarId("p", r, a)]))
            out.append(expand(sub(fl[VarId("p", r - 1, a)], rhs)))
    return out


def fl_point(sys: LagrangianSystem, velocities: Mapping[VarId, float]) -> dict[VarId, float]:
    """Complete a point of T^{2k-1}Q to the point of graph(FL) above it."""
    pt = dict(sys.param_point)
    pt.update(velocities)
    out = {v: float(velocities[v]) for v in sys.atlas.velocities}
    for m in sys.atlas.momenta:
        out[m] = eval_expr(sys.FL[m], pt)
    return out
