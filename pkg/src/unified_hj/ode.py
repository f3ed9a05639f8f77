"""Fixed-step RK4 integration and flow-level checks of HJ solutions."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .dynamics import LagrangianSystem, VectorField
from .hj import UnifiedSection, associated_vf
from .jetspace import project
from .symexpr import VarId, compile_exprs, param


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Trajectory:
    coords: tuple[VarId, ...]
    times: np.ndarray
    states: np.ndarray  # shape (len(times), len(coords))
    dt: float

    def __len__(self):
        return len(self.times)

    def column(self, v: VarId) -> np.ndarray:
        return self.states[:, self.coords.index(v)]

    def point(self, i: int) -> dict[VarId, float]:
        return dict(zip(self.coords, map(float, self.states[i])))

    @property
    def final(self) -> dict[VarId, float]:
        return self.point(-1)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            self.write_csv(fh)

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [c.token for c in self.coords])
        for t, row in zip(self.times, self.states):
            w.writerow([f"{t:.17g}"] + [f"{x:.17g}" for x in row])


def _steps(t0: float, t1: float, dt: float) -> tuple[int, float]:
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t1 > t0:
        raise ValueError("t1 must exceed t0")
    n = max(1, round((t1 - t0) / dt))
    if abs(n * dt - (t1 - t0)) > 1e-9 * max(1.0, abs(t1 - t0)):
        n = math.ceil((t1 - t0) / dt)
    return n, (t1 - t0) / n


def rk4(f: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, t0: float, t1: float, dt: float,
        coords: Sequence[VarId] = ()) -> tuple[np.ndarray, np.ndarray, float]:
    """Classical RK4 on an autonomous field; the step is adjusted to divide [t0, t1]."""
    n, h = _steps(t0, t1, dt)
    xs = np.empty((n + 1, len(x0)))
    xs[0] = x0
    x = np.array(x0, dtype=float)
    for i in range(n):
        try:
            k1 = f(x)
            k2 = f(x + 0.5 * h * k1)
            k3 = f(x + 0.5 * h * k2)
            k4 = f(x + h * k3)
        except (ValueError, ZeroDivisionError, OverflowError, np.linalg.LinAlgError) as exc:
            where = ", ".join(f"{c.token}={v:.17g}" for c, v in zip(coords, x))
            raise IntegrationError(f"evaluation failed at t={t0 + i * h:.17g} ({where}): {exc}") from exc
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state at t={t0 + (i + 1) * h:.17g}")
        xs[i + 1] = x
    times = t0 + h * np.arange(n + 1)
    return times, xs, h


def integrate(vf: VectorField, x0: Mapping[VarId, float], t0: float, t1: float, dt: float,
              params: Mapping[str, float] | None = None) -> Trajectory:
    """Integrate ``vf`` from ``x0`` with fixed-step classical RK4."""
    missing = [c.token for c in vf.coords if c not in x0]
    if missing:
        raise ValueError("initial point is missing " + ", ".join(missing))
    f = vf.compile(params)
    start = np.array([float(x0[c]) for c in vf.coords])
    times, xs, h = rk4(f, start, t0, t1, dt, vf.coords)
    return Trajectory(tuple(vf.coords), times, xs, h)


def _section_along(s: UnifiedSection, params: Mapping[str, float], base: Trajectory) -> np.ndarray:
    """s evaluated at every sample of a base trajectory, ordered like W."""
    at = s.atlas
    pvars = [param(k) for k in sorted(params)]
    pvals = [float(params[k]) for k in sorted(params)]
    fibre = list(at.upper) + list(at.momenta)
    f = compile_exprs([s.components[c] for c in fibre], list(at.base) + pvars, backend="numpy")
    cols = [base.column(c) for c in at.base]
    with np.errstate(all="ignore"):
        vals = f(*cols, *pvals)
    out = {c: col for c, col in zip(at.base, cols)}
    for c, v in zip(fibre, vals):
        out[c] = np.broadcast_to(np.asarray(v, dtype=float), cols[0].shape)
    arr = np.column_stack([out[c] for c in at.w])
    if not np.all(np.isfinite(arr)):
        raise IntegrationError("section left its domain along the base trajectory")
    return arr


@dataclass(frozen=True)
class FlowCheck:
    passed: bool
    deviation: float
    time: float
    coordinate: str
    tolerance: float

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def _sup_deviation(a: np.ndarray, b: np.ndarray, times: np.ndarray, coords, tol: float) -> FlowCheck:
    d = np.abs(a - b)
    i, j = np.unravel_index(int(np.argmax(d)), d.shape)
    dev = float(d[i, j])
    return FlowCheck(dev <= tol, dev, float(times[i]), coords[j].token, tol)


def lifting_check(s: UnifiedSection, sys: LagrangianSystem, gamma0: Mapping[VarId, float], T: float,
                  dt: float, tol: float = 1e-6) -> FlowCheck:
    """Compare s o gamma with the X_LH integral curve through s(gamma(0)).

    gamma is integrated under the associated field X; the verdict is the sup
    over time of the max-abs coordinate difference.
    """
    x = associated_vf(s, sys)
    base = integrate(x, gamma0, 0.0, T, dt, sys.params)
    lifted = _section_along(s, sys.params, base)
    w0 = dict(zip(sys.atlas.w, lifted[0]))
    flow = integrate(sys.XLH, w0, 0.0, T, dt, sys.params)
    return _sup_deviation(lifted, flow.states, base.times, sys.atlas.w, tol)


def projection_check(s: UnifiedSection, sys: LagrangianSystem, w0: Mapping[VarId, float], T: float,
                     dt: float, tol: float = 1e-6, start_tol: float = 1e-12) -> FlowCheck:
    """Compare p(X_LH flow from w0) against the X-flow from p(w0), with w0 in Im(s)."""
    gamma0 = project(w0, "p", sys.atlas)
    expected = s.at(gamma0, sys.params)
    off = max(abs(expected[c] - w0[c]) for c in sys.atlas.w)
    if off > start_tol * (1 + max(abs(v) for v in expected.values())):
        raise ValueError(f"initial point is not on Im(s) (off by {off:.3g})")
    flow = integrate(sys.XLH, w0, 0.0, T, dt, sys.params)
    base = integrate(associated_vf(s, sys), gamma0, 0.0, T, dt, sys.params)
    idx = [sys.atlas.w.index(c) for c in sys.atlas.base]
    return _sup_deviation(flow.states[:, idx], base.states, base.times, sys.atlas.base, tol)


@dataclass(frozen=True)
class EnergyReport:
    drift: float
    wo_violation: float
    trajectory: Trajectory


def _w_functions(sys: LagrangianSystem, exprs):
    pvars = [param(k) for k in sorted(sys.params)]
    pvals = [float(sys.params[k]) for k in sorted(sys.params)]
    f = compile_exprs(list(exprs), list(sys.atlas.w) + pvars, backend="numpy")
    return lambda states: [np.broadcast_to(np.asarray(v, dtype=float), states.shape[:1])
                           for v in f(*states.T, *pvals)]


def wo_violation(sys: LagrangianSystem, states: np.ndarray) -> np.ndarray:
    """max_A,r |p_A^r - p_hat_A^r| at each sample."""
    g = _w_functions(sys, sys.FL.constraints().values())
    return np.max(np.abs(np.vstack(g(states))), axis=0)


def energy_drift(sys: LagrangianSystem, w0: Mapping[VarId, float], T: float, dt: float,
                 start_tol: float = 1e-12) -> EnergyReport:
    """max |H(t) - H(0)| along the X_LH flow from a point of graph(FL)."""
    start = np.array([[float(w0[c]) for c in sys.atlas.w]])
    v0 = float(wo_violation(sys, start)[0])
    if v0 > start_tol:
        raise ValueError(f"initial point is off graph(FL) by {v0:.3g}")
    traj = integrate(sys.XLH, w0, 0.0, T, dt, sys.params)
    (h,) = _w_functions(sys, [sys.H])(traj.states)
    return EnergyReport(float(np.max(np.abs(h - h[0]))), float(np.max(wo_violation(sys, traj.states))),
                        traj)
