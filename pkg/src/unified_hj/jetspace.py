"""Coordinate atlases for T^rQ, T*(T^{k-1}Q) and the unified bundle W.

W = T^{2k-1}Q x_{T^{k-1}Q} T*(T^{k-1}Q) carries the jet coordinates
q_0..q_{2k-1} and the momenta p^0..p^{k-1}; all three projections out of W
are coordinate restrictions.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

from .symexpr import Expr, VarId, add, diff, mul, p, q, var

PROJECTIONS = ("pr1", "pr2", "p")


class IncompletePointError(ValueError):
    pass


@dataclass(frozen=True)
class JetAtlas:
    n: int
    k: int

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")

    def jet(self, r: int) -> tuple[VarId, ...]:
        """Coordinates of T^rQ, order-major."""
        return tuple(q(i, a) for i in range(r + 1) for a in range(1, self.n + 1))

    def level(self, i: int) -> tuple[VarId, ...]:
        return tuple(q(i, a) for a in range(1, self.n + 1))

    def momentum_level(self, i: int) -> tuple[VarId, ...]:
        return tuple(p(i, a) for a in range(1, self.n + 1))

    @cached_property
    def base(self) -> tuple[VarId, ...]:
        """T^{k-1}Q coordinates q_0..q_{k-1}."""
        return self.jet(self.k - 1)

    @cached_property
    def upper(self) -> tuple[VarId, ...]:
        """Fibre jet coordinates q_k..q_{2k-1} of p: W -> T^{k-1}Q."""
        return tuple(q(i, a) for i in range(self.k, 2 * self.k) for a in range(1, self.n + 1))

    @cached_property
    def momenta(self) -> tuple[VarId, ...]:
        return tuple(p(i, a) for i in range(self.k) for a in range(1, self.n + 1))

    @cached_property
    def velocities(self) -> tuple[VarId, ...]:
        """T^{2k-1}Q coordinates."""
        return self.jet(2 * self.k - 1)

    @cached_property
    def cotangent(self) -> tuple[VarId, ...]:
        """T*(T^{k-1}Q) coordinates."""
        return self.base + self.momenta

    @cached_property
    def w(self) -> tuple[VarId, ...]:
        return self.velocities + self.momenta

    @cached_property
    def lagrangian_coords(self) -> tuple[VarId, ...]:
        """T^kQ coordinates, where the Lagrangian lives."""
        return self.jet(self.k)

    @property
    def dim_w(self) -> int:
        return 3 * self.k * self.n

    def target(self, name: str) -> tuple[VarId, ...]:
        try:
            return {"pr1": self.velocities, "pr2": self.cotangent, "p": self.base}[name]
        except KeyError:
            raise ValueError(f"unknown projection {name!r}; expected one of {PROJECTIONS}") from None

    def tokens(self, coords) -> list[str]:
        return [v.token for v in coords]


def atlas(n: int, k: int) -> JetAtlas:
    return JetAtlas(n, k)


def total_derivative(e: Expr) -> Expr:
    """Tulczyjew total time derivative sum_l q_{l+1}^A d/dq_l^A."""
    fv = e.free_vars()
    bad = [v for v in fv if v.is_momentum]
    if bad:
        raise ValueError(f"total derivative is undefined on momenta ({bad[0].token})")
    terms = [mul(var(q(v.order + 1, v.index)), diff(e, v)) for v in sorted(fv) if v.is_jet]
    return add(*terms)


def total_derivative_n(e: Expr, times: int) -> Expr:
    for _ in range(times):
        e = total_derivative(e)
    return e


def max_order(e: Expr) -> int:
    """Highest jet order appearing in ``e`` (-1 if none)."""
    return max((v.order for v in e.free_vars() if v.is_jet), default=-1)


def project(point: Mapping[VarId, float], target: str, atl: JetAtlas) -> dict[VarId, float]:
    """Restrict a point of W to pr1 (T^{2k-1}Q), pr2 (T*T^{k-1}Q) or p (T^{k-1}Q)."""
    missing = [v.token for v in atl.w if v not in point]
    if missing:
        raise IncompletePointError("point is missing " + ", ".join(missing))
    return {v: point[v] for v in atl.target(target)}
