"""Command line front end.

Exit codes: 0 pass, 1 check failure, 2 input error, 3 regularity failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import fixtures
from .dynamics import LagrangianSystem, RegularityError, euler_lagrange, fl_point
from .hj import check_section
from .ode import IntegrationError, energy_drift, integrate, lifting_check, projection_check
from .problem import ProblemError, ProblemSpec
from .symexpr import EvaluationError

log = logging.getLogger("unified_hj")

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SINGULAR = 0, 1, 2, 3


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def derivation_echo(sys: LagrangianSystem) -> dict:
    """Normalized strings for the derived objects (requires a regular system)."""
    out = {
        "F": {f"F_{a}": str(f) for a, f in enumerate(sys.F, start=1)} if sys.symbolic_F else None,
        "FL": sys.FL.as_strings(),
        "H": str(sys.H),
        "X_LH": sys.XLH.as_strings(),
    }
    return out


def derive_report(sys: LagrangianSystem) -> dict:
    h = sys._hessian
    report = {
        "n": sys.n,
        "k": sys.k,
        "lagrangian": str(sys.lagrangian),
        "hessian": [[str(e) for e in row] for row in h.matrix],
        "regular": h.regular,
        "min_abs_det": h.min_abs_det,
    }
    if not h.regular:
        return report
    report["euler_lagrange"] = {f"E_{a}": str(e) for a, e in enumerate(euler_lagrange(sys), start=1)}
    report.update(derivation_echo(sys))
    return report


def _emit(report: dict, out: str | None) -> None:
    text = json.dumps(report, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_derive(args) -> int:
    if args.emit_fixture:
        try:
            fx = fixtures.fixture(args.emit_fixture)
        except KeyError as exc:
            log.error("%s", exc.args[0])
            return EXIT_INPUT
        _emit(fx.problem, args.out)
        return EXIT_OK
    if not args.file:
        log.error("derive needs a problem file or --emit-fixture NAME")
        return EXIT_INPUT
    spec = ProblemSpec.load(args.file)
    system = spec.system()
    report = derive_report(system)
    _emit(report, args.out)
    if not report["regular"]:
        log.error("singular Hessian: the Lagrangian is not regular")
        return EXIT_SINGULAR
    return EXIT_OK


def cmd_check(args) -> int:
    spec = ProblemSpec.load(args.file)
    if spec.section is None or spec.grid is None:
        raise ProblemError("check needs both a section and a grid")
    grid = spec.grid_obj()
    try:
        grid.check_covers(spec.atlas.base)
    except ValueError as exc:
        raise ProblemError(str(exc)) from exc
    tol = spec.tolerance if args.tol is None else args.tol
    system = spec.system()
    system.require_regular()
    checks = check_section(spec.section_obj, system, grid, tol, args.generalized_only)
    families = {"wo": checks.wo, "generalized": checks.generalized}
    if not args.generalized_only:
        families["dsH"] = checks.dsH
        families["closedness"] = checks.closedness
    rows = []
    for fam, rs in families.items():
        for r in rs:
            rows.append({
                "id": r.id,
                "family": fam,
                "expression": str(r.expr),
                "symbolic_zero": r.symbolic_zero,
                "max_abs": _clean(r.max_abs),
                "l2": _clean(r.l2),
                "argmax_point": r.argmax_point,
                "pass": r.passes(tol),
            })
    failed = [row["id"] for row in rows if not row["pass"]]
    report = {
        "pass": not failed,
        "tolerance": tol,
        "generalized_only": bool(args.generalized_only),
        "failed": failed,
        "residuals": rows,
        "derivation": derivation_echo(system),
    }
    _emit(report, args.out)
    if failed:
        log.error("residual check failed: %s", ", ".join(failed))
        return EXIT_FAIL
    return EXIT_OK


def _start_point(spec: ProblemSpec, system: LagrangianSystem):
    at = spec.atlas
    init = spec.initial_point()
    section = spec.section_obj
    if all(c in init for c in at.w):
        return {c: init[c] for c in at.w}
    if all(c in init for c in at.velocities):
        return fl_point(system, init)
    if section is not None and all(c in init for c in at.base):
        return section.at({c: init[c] for c in at.base})
    raise ProblemError("integrate.initial must give a full W point, a T^{2k-1}Q point, "
                       "or (with a section) a base point")


def cmd_integrate(args) -> int:
    spec = ProblemSpec.load(args.file)
    if spec.integrate is None:
        raise ProblemError("integrate needs an 'integrate' block")
    system = spec.system()
    system.require_regular()
    integ = spec.integrate
    t0, t1, dt = float(integ["t0"]), float(integ["t1"]), float(integ["dt"])
    flow_tol = float(integ.get("tolerance", 1e-6))
    w0 = _start_point(spec, system)
    traj = integrate(system.XLH, w0, t0, t1, dt)
    traj.to_csv(args.out)
    summary = {
        "csv": str(args.out),
        "samples": len(traj),
        "dt": traj.dt,
        "final": {c.token: v for c, v in traj.final.items()},
    }
    ok = True
    try:
        rep = energy_drift(system, w0, t1 - t0, dt)
        summary["energy_drift"] = rep.drift
        summary["wo_violation"] = rep.wo_violation
    except ValueError:
        summary["energy_drift"] = None  # start is off graph(FL)
    section = spec.section_obj
    if section is not None:
        gamma0 = {c: w0[c] for c in spec.atlas.base}
        lift = lifting_check(section, system, gamma0, t1 - t0, dt, flow_tol)
        proj = projection_check(section, system, section.at(gamma0), t1 - t0, dt, flow_tol)
        for name, chk in (("lifting", lift), ("projection", proj)):
            summary[name] = {"verdict": chk.verdict, "deviation": chk.deviation, "time": chk.time,
                             "coordinate": chk.coordinate, "tolerance": chk.tolerance}
            print(f"{name}: {chk.verdict} (deviation {chk.deviation:.3e} at t={chk.time:g}, "
                  f"{chk.coordinate})", file=sys.stderr)
        ok = lift.passed and proj.passed
    sys.stdout.write(json.dumps(summary, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="unified-hj",
                                 description="Unified-formalism dynamics and HJ residual checks "
                                             "for higher-order Lagrangians.")
    sub = ap.add_subparsers(dest="command", required=True)

    d = sub.add_parser("derive", help="derive F, FL, H and X_LH")
    d.add_argument("file", nargs="?")
    d.add_argument("--emit-fixture", metavar="NAME", help=f"print a built-in problem ({', '.join(fixtures.NAMES)})")
    d.add_argument("--out")
    d.set_defaults(func=cmd_derive)

    c = sub.add_parser("check", help="evaluate HJ residuals of the problem's section")
    c.add_argument("file")
    c.add_argument("--tol", type=float)
    c.add_argument("--generalized-only", action="store_true")
    c.add_argument("--out")
    c.set_defaults(func=cmd_check)

    i = sub.add_parser("integrate", help="integrate X_LH and write a CSV trajectory")
    i.add_argument("file")
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_integrate)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ProblemError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except RegularityError as exc:
        log.error("%s", exc)
        return EXIT_SINGULAR
    except (IntegrationError, EvaluationError) as exc:
        log.error("%s", exc)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
