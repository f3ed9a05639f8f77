"""Hamilton-Jacobi residual systems for candidate sections of p: W -> T^{k-1}Q.

A section is ``s(q_i) = (q_i, s_j, alpha^i)`` with ``k <= j <= 2k-1`` and
``0 <= i <= k-1``; every residual produced here is an expression on
T^{k-1}Q obtained by composing with ``s`` wherever the upper jets or the
momenta appear.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .dynamics import LagrangianSystem, VectorField
from .jetspace import JetAtlas
from .linsolve import SingularSystemError, solve_linear
from .symexpr import (
    ZERO,
    Expr,
    VarId,
    add,
    compile_exprs,
    diff,
    eval_expr,
    expand,
    is_zero,
    mul,
    neg,
    param,
    parse_expr,
    q,
    sub,
    subs,
    var,
)


class AtlasMismatchError(ValueError):
    pass


class HyperregularityError(ArithmeticError):
    """The Legendre-Ostrogradsky map could not be inverted at a point."""


def _check_base_only(components: Mapping[VarId, Expr], atl: JetAtlas, what: str) -> None:
    base = set(atl.base)
    for key, e in components.items():
        stray = [v.token for v in e.free_vars() if not v.is_param and v not in base]
        if stray:
            raise ValueError(f"{what} component {key.token} depends on {', '.join(sorted(stray))}"
                             " (only q_0..q_{k-1} allowed)")


def _parse_components(atl: JetAtlas, texts: Mapping[str, str], params) -> dict[VarId, Expr]:
    from .symexpr import ParseContext, parse_token

    ctx = ParseContext.for_atlas(atl, params)
    return {parse_token(tok, ctx): parse_expr(text, context=ctx) for tok, text in texts.items()}


@dataclass(frozen=True)
class UnifiedSection:
    """Candidate section: kn upper-jet functions s_j^A and kn momenta alpha_A^i."""

    atlas: JetAtlas
    components: Mapping[VarId, Expr]

    def __post_init__(self):
        want = set(self.atlas.upper) | set(self.atlas.momenta)
        have = set(self.components)
        if have != want:
            extra = sorted(v.token for v in have - want)
            missing = sorted(v.token for v in want - have)
            raise AtlasMismatchError(f"section keys mismatch: missing {missing}, unexpected {extra}")
        _check_base_only(self.components, self.atlas, "section")

    @classmethod
    def from_strings(cls, atl: JetAtlas, texts: Mapping[str, str], params=()) -> "UnifiedSection":
        return cls(atl, _parse_components(atl, texts, params))

    def s(self, j: int, a: int = 1) -> Expr:
        return self.components[q(j, a)]

    def alpha(self, i: int, a: int = 1) -> Expr:
        return self.components[VarId("p", i, a)]

    @property
    def sigma(self) -> Mapping[VarId, Expr]:
        """Substitution composing W-functions with s."""
        return self.components

    def compose(self, e: Expr) -> Expr:
        return subs(e, self.components)

    def component(self, c: VarId) -> Expr:
        """The ``c``-coordinate of s, including the identity on base coordinates."""
        if c in self.components:
            return self.components[c]
        return var(c)

    def at(self, base_point: Mapping[VarId, float], params: Mapping[str, float] | None = None
           ) -> dict[VarId, float]:
        pt = {param(k): float(v) for k, v in (params or {}).items()}
        pt.update(base_point)
        out = {c: float(base_point[c]) for c in self.atlas.base}
        for c in self.atlas.upper + self.atlas.momenta:
            out[c] = eval_expr(self.components[c], pt)
        return {c: out[c] for c in self.atlas.w}

    def as_strings(self) -> dict[str, str]:
        return {c.token: str(self.components[c]) for c in self.atlas.upper + self.atlas.momenta}

    def bind(self, params: Mapping[str, float]) -> "UnifiedSection":
        from .dynamics import bind_params

        return UnifiedSection(self.atlas, {c: bind_params(e, params) for c, e in self.components.items()})


@dataclass(frozen=True)
class LagrangianSection:
    """Section of T^{2k-1}Q -> T^{k-1}Q: the upper jets as functions of the base."""

    atlas: JetAtlas
    components: Mapping[VarId, Expr]

    def __post_init__(self):
        if set(self.components) != set(self.atlas.upper):
            raise AtlasMismatchError("Lagrangian section must give exactly q_k..q_{2k-1}")
        _check_base_only(self.components, self.atlas, "Lagrangian section")


@dataclass(frozen=True)
class OneForm:
    """1-form on T^{k-1}Q; ``coefficients[p_i^A]`` multiplies dq_i^A."""

    atlas: JetAtlas
    coefficients: Mapping[VarId, Expr]

    def __post_init__(self):
        if set(self.coefficients) != set(self.atlas.momenta):
            raise AtlasMismatchError("1-form needs one coefficient per base coordinate")
        _check_base_only(self.coefficients, self.atlas, "1-form")

    def coefficient(self, c: VarId) -> Expr:
        """Coefficient of dc for a base coordinate c = q_i^A."""
        return self.coefficients[VarId("p", c.order, c.index)]

    def __str__(self):
        return " + ".join(f"({self.coefficient(c)})*d{c.token}" for c in self.atlas.base)


# residual containers


@dataclass(frozen=True)
class Grid:
    """Tensor-product grid over base coordinates: coord -> (min, max, count)."""

    axes: Mapping[VarId, tuple[float, float, int]]

    def check_covers(self, coords: Sequence[VarId]) -> None:
        missing = [c.token for c in coords if c not in self.axes]
        if missing:
            raise ValueError("grid does not cover " + ", ".join(missing))

    def arrays(self, coords: Sequence[VarId]) -> list[np.ndarray]:
        self.check_covers(coords)
        lines = []
        for c in coords:
            lo, hi, count = self.axes[c]
            if count < 1:
                raise ValueError(f"grid count for {c.token} must be >= 1")
            lines.append(np.linspace(lo, hi, int(count)))
        mesh = np.meshgrid(*lines, indexing="ij")
        return [m.ravel() for m in mesh]


@dataclass(frozen=True)
class Residual:
    id: str
    expr: Expr
    symbolic_zero: bool = False
    max_abs: float | None = None
    l2: float | None = None
    argmax_point: dict[str, float] | None = None

    @property
    def evaluated(self) -> bool:
        return self.max_abs is not None

    def passes(self, tol: float) -> bool:
        if self.symbolic_zero:
            return True
        return self.max_abs is not None and bool(self.max_abs <= tol)


@dataclass(frozen=True)
class ResidualSet:
    residuals: tuple[Residual, ...]
    tolerance: float | None = None

    def __post_init__(self):
        ids = [r.id for r in self.residuals]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate residual ids")

    @classmethod
    def of(cls, items: Sequence[tuple[str, Expr]]) -> "ResidualSet":
        return cls(tuple(Residual(i, e, is_zero(e)) for i, e in items))

    def __len__(self):
        return len(self.residuals)

    def __iter__(self):
        return iter(self.residuals)

    def __getitem__(self, ident: str) -> Residual:
        for r in self.residuals:
            if r.id == ident:
                return r
        raise KeyError(ident)

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.residuals]

    @property
    def exprs(self) -> list[Expr]:
        return [r.expr for r in self.residuals]

    def evaluate(self, grid: Grid, atl: JetAtlas, params: Mapping[str, float] | None = None,
                 tol: float = 1e-9) -> "ResidualSet":
        """Grid statistics per residual; symbolic zeros short-circuit to 0.

        ``l2`` is the root-mean-square over grid points.
        """
        params = params or {}
        coords = list(atl.base)
        cols = grid.arrays(coords)
        pvars = [param(k) for k in sorted(params)]
        pvals = [float(params[k]) for k in sorted(params)]
        out = []
        todo = [r for r in self.residuals if not r.symbolic_zero]
        values = {}
        if todo:
            f = compile_exprs([r.expr for r in todo], coords + pvars, backend="numpy")
            with np.errstate(all="ignore"):
                res = f(*cols, *pvals)
            size = cols[0].size
            for r, v in zip(todo, res):
                values[r.id] = np.broadcast_to(np.asarray(v, dtype=float), (size,))
        for r in self.residuals:
            if r.symbolic_zero:
                out.append(replace(r, max_abs=0.0, l2=0.0, argmax_point=None))
                continue
            v = np.abs(values[r.id])
            if not np.all(np.isfinite(v)):
                i = int(np.argmax(~np.isfinite(v)))
                out.append(replace(r, max_abs=float("nan"), l2=float("nan"),
                                   argmax_point={c.token: float(col[i]) for c, col in zip(coords, cols)}))
                continue
            i = int(np.argmax(v))
            out.append(replace(r, max_abs=float(v[i]), l2=float(np.sqrt(np.mean(v * v))),
                               argmax_point={c.token: float(col[i]) for c, col in zip(coords, cols)}))
        return ResidualSet(tuple(out), tol)

    def passed(self, tol: float | None = None) -> bool:
        tol = self.tolerance if tol is None else tol
        if tol is None:
            return all(r.symbolic_zero for r in self.residuals)
        return all(r.passes(tol) for r in self.residuals)

    def failures(self, tol: float | None = None) -> list[str]:
        tol = self.tolerance if tol is None else tol
        return [r.id for r in self.residuals if not r.passes(tol if tol is not None else 0.0)]

    def __add__(self, other: "ResidualSet") -> "ResidualSet":
        tol = self.tolerance if self.tolerance is not None else other.tolerance
        return ResidualSet(self.residuals + other.residuals, tol)


def _check_atlas(s, sys: LagrangianSystem) -> None:
    if s.atlas != sys.atlas:
        raise AtlasMismatchError(f"section atlas {s.atlas} does not match system atlas {sys.atlas}")


# residual generators


def wo_membership_residuals(s: UnifiedSection, sys: LagrangianSystem) -> ResidualSet:
    """alpha_A^i - p_hat_A^i o s for every momentum; all zero iff Im(s) lies in graph(FL)."""
    _check_atlas(s, sys)
    items = []
    for m in sys.atlas.momenta:
        items.append((f"wo.{m.token}", sub(s.components[m], s.compose(sys.FL[m]))))
    return ResidualSet.of(items)


def associated_vf(s: UnifiedSection, sys: LagrangianSystem) -> VectorField:
    """X = Tp o X_LH o s on T^{k-1}Q."""
    _check_atlas(s, sys)
    at = sys.atlas
    comps = {}
    for c in at.base:
        nxt = q(c.order + 1, c.index)
        comps[c] = s.components[nxt] if c.order == sys.k - 1 else var(nxt)
    return VectorField(at.base, comps)


def generalized_hj_residuals(s: UnifiedSection, sys: LagrangianSystem) -> ResidualSet:
    """The 2kn invariance equations X_LH(q_j - s_j) = 0, X_LH(p^i - alpha^i) = 0 on Im(s).

    Each residual is written as (X_LH component o s) - X(component of s), with
    X the associated vector field.
    """
    _check_atlas(s, sys)
    k, n = sys.k, sys.n
    x = associated_vf(s, sys)
    items = []
    for j in range(k, 2 * k):
        for a in range(1, n + 1):
            lead = s.s(j + 1, a) if j < 2 * k - 1 else s.compose(sys.F[a - 1])
            items.append((f"inv.{q(j, a).token}", sub(lead, x.apply(s.s(j, a)))))
    for l in range(k):
        for a in range(1, n + 1):
            lead = s.compose(sys.dL(q(l, a)))
            if l > 0:
                lead = sub(lead, s.alpha(l - 1, a))
            items.append((f"inv.{VarId('p', l, a).token}", sub(lead, x.apply(s.alpha(l, a)))))
    return ResidualSet.of(items)


def s_relatedness_residuals(s: UnifiedSection, sys: LagrangianSystem) -> dict[VarId, Expr]:
    """X(s^c) - X_LH^c o s for every W coordinate c (zero iff X and X_LH are s-related)."""
    x = associated_vf(s, sys)
    xlh = sys.XLH
    return {c: sub(x.apply(s.component(c)), s.compose(xlh[c])) for c in sys.atlas.w}


def dsH_residuals(s: UnifiedSection, sys: LagrangianSystem) -> ResidualSet:
    """Components of d(s*H) on T^{k-1}Q, assembled term by term from dH."""
    _check_atlas(s, sys)
    k, n = sys.k, sys.n
    idx = range(1, n + 1)
    items = []
    for l in range(k):
        for a in idx:
            ql = q(l, a)
            terms = []
            for i in range(k - 1):
                terms += [mul(var(q(i + 1, b)), diff(s.alpha(i, b), ql)) for b in idx]
            terms += [mul(s.s(k, b), diff(s.alpha(k - 1, b), ql)) for b in idx]
            if l > 0:
                terms.append(s.alpha(l - 1, a))
            terms += [mul(s.alpha(k - 1, b), diff(s.s(k, b), ql)) for b in idx]
            lag = [s.compose(sys.dL(ql))]
            lag += [mul(s.compose(sys.dL(q(k, b))), diff(s.s(k, b), ql)) for b in idx]
            items.append((f"dsH.{ql.token}", sub(add(*terms), add(*lag))))
    return ResidualSet.of(items)


def pullback_hamiltonian(s: UnifiedSection, sys: LagrangianSystem) -> Expr:
    """s*H as a function on T^{k-1}Q."""
    _check_atlas(s, sys)
    return s.compose(sys.H)


def dsH_oracle(s: UnifiedSection, sys: LagrangianSystem) -> list[Expr]:
    """Gradient of s*H computed by substitution then differentiation."""
    sh = pullback_hamiltonian(s, sys)
    return [diff(sh, c) for c in sys.atlas.base]


def closedness_residuals(s: UnifiedSection) -> ResidualSet:
    """d(pr2 o s) = 0: one residual per unordered pair of base coordinates.

    For base coordinates c_a < c_b (order-major) the residual is
    d(alpha_{c_b})/dc_a - d(alpha_{c_a})/dc_b.
    """
    base = s.atlas.base
    items = []
    for ia, ca in enumerate(base):
        for cb in base[ia + 1:]:
            alpha_a = s.components[VarId("p", ca.order, ca.index)]
            alpha_b = s.components[VarId("p", cb.order, cb.index)]
            items.append((f"closed.{ca.token}.{cb.token}", sub(diff(alpha_b, ca), diff(alpha_a, cb))))
    return ResidualSet.of(items)


# relations with the Lagrangian and Hamiltonian pictures


def project_to_lagrangian(s: UnifiedSection) -> LagrangianSection:
    return LagrangianSection(s.atlas, {c: s.components[c] for c in s.atlas.upper})


def project_to_hamiltonian(s: UnifiedSection) -> OneForm:
    return OneForm(s.atlas, {m: s.components[m] for m in s.atlas.momenta})


def lift_from_lagrangian(sl: LagrangianSection, sys: LagrangianSystem) -> UnifiedSection:
    """s = j_o o pr1^{-1} o s_L: momenta from composing FL with s_L."""
    _check_atlas(sl, sys)
    comps = dict(sl.components)
    for m in sys.atlas.momenta:
        comps[m] = expand(subs(sys.FL[m], sl.components))
    return UnifiedSection(sys.atlas, comps)


def fl_is_affine(sys: LagrangianSystem) -> bool:
    upper = sys.atlas.upper
    for m in sys.atlas.momenta:
        for u in upper:
            d = expand(diff(sys.FL[m], u))
            if d.free_vars() & set(upper):
                return False
    return True


def lift_from_hamiltonian(alpha: OneForm, sys: LagrangianSystem, *, tol: float = 1e-12,
                          max_iter: int = 50):
    """s = j_o o pr2^{-1} o alpha: solve FL(q, s_k..s_{2k-1}) = alpha for the upper jets.

    Solved symbolically when FL is affine in the upper jets (returns a
    :class:`UnifiedSection`); otherwise returns a :class:`PointwiseSection`
    that inverts FL by Newton iteration at each base point.
    """
    _check_atlas(alpha, sys)
    at = sys.atlas
    if not fl_is_affine(sys):
        return PointwiseSection(alpha, sys, tol, max_iter)
    upper = at.upper
    zero = {u: ZERO for u in upper}
    M = [[expand(diff(sys.FL[m], u)) for u in upper] for m in at.momenta]
    rhs = [sub(alpha.coefficients[m], subs(sys.FL[m], zero)) for m in at.momenta]
    try:
        sol = solve_linear(M, rhs)
    except SingularSystemError as exc:
        raise HyperregularityError(f"Legendre-Ostrogradsky map is not invertible: {exc}") from exc
    comps = dict(zip(upper, sol))
    comps.update(alpha.coefficients)
    return UnifiedSection(at, comps)


class PointwiseSection:
    """Section whose upper jets are found numerically by inverting FL per point."""

    def __init__(self, alpha: OneForm, sys: LagrangianSystem, tol: float = 1e-12, max_iter: int = 50,
                 guess: Mapping[VarId, float] | None = None):
        self.alpha = alpha
        self.sys = sys
        self.atlas = sys.atlas
        self.tol = tol
        self.max_iter = max_iter
        self.guess = dict(guess or {})
        at = sys.atlas
        pvars = [param(k) for k in sorted(sys.params)]
        self._pvals = [float(sys.params[k]) for k in sorted(sys.params)]
        args = list(at.base) + list(at.upper) + pvars
        res = [sub(sys.FL[m], alpha.coefficients[m]) for m in at.momenta]
        jac = [diff(r, u) for r in res for u in at.upper]
        self._res = compile_exprs(res, args)
        self._jac = compile_exprs(jac, args)

    def upper_at(self, base_point: Mapping[VarId, float]) -> dict[VarId, float]:
        at = self.atlas
        b = [float(base_point[c]) for c in at.base]
        u = np.array([self.guess.get(c, 0.0) for c in at.upper], dtype=float)
        m = len(u)
        for _ in range(self.max_iter):
            r = np.array(self._res(*b, *u, *self._pvals))
            if np.max(np.abs(r)) <= self.tol:
                return dict(zip(at.upper, map(float, u)))
            jm = np.array(self._jac(*b, *u, *self._pvals)).reshape(m, m)
            try:
                u = u - np.linalg.solve(jm, r)
            except np.linalg.LinAlgError as exc:
                raise HyperregularityError(f"singular FL Jacobian at {b}") from exc
            if not np.all(np.isfinite(u)):
                break
        r = np.array(self._res(*b, *u, *self._pvals))
        if np.all(np.isfinite(r)) and np.max(np.abs(r)) <= self.tol:
            return dict(zip(at.upper, map(float, u)))
        raise HyperregularityError(
            f"Newton inversion of FL did not converge within {self.max_iter} iterations at {b}")

    def at(self, base_point: Mapping[VarId, float], params=None) -> dict[VarId, float]:
        pt = dict(self.sys.param_point)
        pt.update(base_point)
        out = {c: float(base_point[c]) for c in self.atlas.base}
        out.update(self.upper_at(base_point))
        for m in self.atlas.momenta:
            out[m] = eval_expr(self.alpha.coefficients[m], pt)
        return {c: out[c] for c in self.atlas.w}


@dataclass
class SectionChecks:
    """All residual families for one section, optionally grid-evaluated."""

    wo: ResidualSet
    generalized: ResidualSet
    dsH: ResidualSet | None = None
    closedness: ResidualSet | None = None

    def all(self) -> ResidualSet:
        out = self.wo + self.generalized
        if self.dsH is not None:
            out = out + self.dsH
        if self.closedness is not None:
            out = out + self.closedness
        return out


def check_section(s: UnifiedSection, sys: LagrangianSystem, grid: Grid | None = None,
                  tol: float = 1e-9, generalized_only: bool = False) -> SectionChecks:
    sets = {
        "wo": wo_membership_residuals(s, sys),
        "generalized": generalized_hj_residuals(s, sys),
    }
    if not generalized_only:
        sets["dsH"] = dsH_residuals(s, sys)
        sets["closedness"] = closedness_residuals(s)
    if grid is not None:
        sets = {k: v.evaluate(grid, sys.atlas, sys.params, tol) for k, v in sets.items()}
    return SectionChecks(**sets)
