import csv
import io
import math

import numpy as np
import pytest

from unified_hj.dynamics import LagrangianSystem, VectorField, fl_point
from unified_hj.hj import UnifiedSection
from unified_hj.jetspace import atlas
from unified_hj.ode import (
    IntegrationError,
    energy_drift,
    integrate,
    lifting_check,
    projection_check,
    rk4,
    wo_violation,
)
from unified_hj.symexpr import const, p, param, parse_expr, q

BEAM = atlas(1, 2)
ZERO_JET = {q(i): 0.0 for i in range(4)}


def beam(mu=1.0, rho=1.0):
    return LagrangianSystem.from_text(1, 2, f"1/2*{mu!r}*q2_1^2 + {rho!r}*q0_1")


def oscillator():
    return LagrangianSystem.from_text(1, 1, "1/2*q1_1^2 - 1/2*q0_1^2")


def free_beam_section(c="1/2", p0="0"):
    return UnifiedSection.from_strings(BEAM, {"q2_1": c, "q3_1": "0", "p0_1": p0, "p1_1": f"2*{c}"})


OSC_SECTION = UnifiedSection.from_strings(atlas(1, 1), {"q1_1": "sqrt(1 - q0_1^2)", "p0_1": "sqrt(1 - q0_1^2)"})


def test_rest_point_of_position_block():
    sys = beam(rho=0.0)
    w0 = {**ZERO_JET, p(0): 0.3, p(1): -0.7}
    traj = integrate(sys.XLH, w0, 0.0, 2.0, 1e-2)
    assert np.all(traj.column(q(0)) == 0.0)


def test_constant_field():
    c = 0.7
    vf = VectorField((q(0),), {q(0): const(c)})
    traj = integrate(vf, {q(0): 0.0}, 0.0, 1.0, 1e-3)
    assert abs(traj.final[q(0)] - c) <= 1e-12


def test_beam_quartic():
    traj = integrate(beam().XLH, fl_point(beam(), ZERO_JET), 0.0, 1.0, 1e-3)
    t = traj.times
    assert np.max(np.abs(traj.column(q(0)) + t ** 4 / 24)) <= 1e-10
    assert traj.final[q(0)] == pytest.approx(-1 / 24, abs=1e-10)


def test_step_adjusted_to_interval():
    traj = integrate(beam().XLH, fl_point(beam(), ZERO_JET), 0.0, 1.0, 0.3)
    assert traj.times[-1] == pytest.approx(1.0)
    assert len(traj) == 5 and traj.dt == pytest.approx(0.25)
    assert np.all(np.diff(traj.times) > 0)


def test_bad_arguments():
    vf = VectorField((q(0),), {q(0): const(1)})
    with pytest.raises(ValueError):
        integrate(vf, {q(0): 0.0}, 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(vf, {q(0): 0.0}, 1.0, 0.0, 0.1)
    with pytest.raises(ValueError):
        integrate(vf, {}, 0.0, 1.0, 0.1)


def test_domain_error_mid_flight_reports_time_and_point():
    # q0' = -sqrt(q0) reaches q0 = 0 in finite time and the next stage leaves the domain
    vf = VectorField((q(0),), {q(0): parse_expr("-sqrt(q0_1)")})
    with pytest.raises(IntegrationError) as info:
        integrate(vf, {q(0): 0.01}, 0.0, 1.0, 1e-2)
    msg = str(info.value)
    assert "t=" in msg and "q0_1=" in msg


def _osc_error(dt):
    # harmonic oscillator from q0 = 0, q1 = 1: q0 = sin t
    sys = oscillator()
    traj = integrate(sys.XLH, fl_point(sys, {q(0): 0.0, q(1): 1.0}), 0.0, 1.0, dt)
    return abs(traj.final[q(0)] - math.sin(1.0))


def test_rk4_order():
    errs = [_osc_error(dt) for dt in (0.1, 0.05, 0.025)]
    for coarse, fine in zip(errs, errs[1:]):
        assert coarse / fine >= 12


def test_rk4_exact_on_quartic_until_roundoff():
    errs = []
    for dt in (0.1, 0.05):
        traj = integrate(beam().XLH, fl_point(beam(), ZERO_JET), 0.0, 1.0, dt)
        errs.append(abs(traj.final[q(0)] + 1 / 24))
    assert max(errs) <= 1e-14


def test_rk4_raw():
    times, xs, h = rk4(lambda x: -x, np.array([1.0]), 0.0, 1.0, 1e-2)
    assert xs[-1, 0] == pytest.approx(math.exp(-1), rel=1e-9)
    assert times[0] == 0.0 and h == pytest.approx(1e-2)


def test_csv_format():
    traj = integrate(beam().XLH, fl_point(beam(), ZERO_JET), 0.0, 0.1, 0.05)
    buf = io.StringIO()
    traj.write_csv(buf)
    rows = list(csv.reader(io.StringIO(buf.getvalue())))
    assert rows[0] == ["t", "q0_1", "q1_1", "q2_1", "q3_1", "p0_1", "p1_1"]
    assert len(rows) == len(traj) + 1
    for row, state in zip(rows[1:], traj.states):
        assert [float(x) for x in row[1:]] == list(state)  # 17 digits round-trip exactly


def test_lifting_examples():
    sys = LagrangianSystem.from_text(1, 2, "q2_1^2")
    ok = lifting_check(free_beam_section(), sys, {q(0): 0.0, q(1): 0.0}, 1.0, 1e-3)
    assert ok.passed and ok.deviation <= 1e-6
    particle = LagrangianSystem.from_text(1, 1, "1/2*q1_1^2")
    s = UnifiedSection.from_strings(atlas(1, 1), {"q1_1": "7/10", "p0_1": "7/10"})
    assert lifting_check(s, particle, {q(0): 0.0}, 1.0, 1e-3).deviation <= 1e-12
    broken = lifting_check(free_beam_section(p0="1/10"), sys, {q(0): 0.0, q(1): 0.0}, 1.0, 1e-3)
    assert not broken.passed
    assert broken.deviation == pytest.approx(0.1, rel=1e-9)  # p1 drifts at rate 0.1
    assert broken.coordinate == "p1_1" and broken.time == pytest.approx(1.0)
    assert broken.verdict == "FAIL"


def test_projection_examples():
    sys = LagrangianSystem.from_text(1, 2, "q2_1^2")
    s = free_beam_section()
    assert projection_check(s, sys, s.at({q(0): 0.2, q(1): -0.1}), 1.0, 1e-3).passed
    osc = oscillator()
    for x0 in (-0.5, 0.0, 0.3, 0.5):
        w0 = OSC_SECTION.at({q(0): x0})
        assert projection_check(OSC_SECTION, osc, w0, 0.5, 1e-3, tol=1e-6).passed


def test_projection_requires_point_on_image():
    sys = LagrangianSystem.from_text(1, 2, "q2_1^2")
    w0 = free_beam_section().at({q(0): 0.0, q(1): 0.0})
    w0[q(3)] = 1.0
    with pytest.raises(ValueError):
        projection_check(free_beam_section(), sys, w0, 1.0, 1e-3)


def test_projection_sees_velocity_perturbations_only():
    """The base flow ignores momenta, so a perturbed alpha^0 is invisible to
    the projection check while a perturbed s_3 is caught by both checks."""
    sys = LagrangianSystem.from_text(1, 2, "q2_1^2")
    origin = {q(0): 0.0, q(1): 0.0}
    s_alpha = free_beam_section(p0="1/10")
    assert projection_check(s_alpha, sys, s_alpha.at(origin), 1.0, 1e-3).passed
    s_vel = UnifiedSection.from_strings(BEAM, {"q2_1": "1/2", "q3_1": "1/10", "p0_1": "-1/5", "p1_1": "1"})
    lift = lifting_check(s_vel, sys, origin, 1.0, 1e-3)
    proj = projection_check(s_vel, sys, s_vel.at(origin), 1.0, 1e-3)
    assert not lift.passed and not proj.passed
    # q1 gains 0.1 t^2 / 2 relative to the base flow
    assert proj.deviation == pytest.approx(0.05, rel=1e-9) and proj.coordinate == "q1_1"


def test_energy_drift():
    sys = beam()
    rep = energy_drift(sys, fl_point(sys, ZERO_JET), 10.0, 1e-3)
    assert rep.drift <= 1e-7 and rep.wo_violation <= 1e-8
    particle = LagrangianSystem.from_text(1, 1, "1/2*q1_1^2")
    rep = energy_drift(particle, fl_point(particle, {q(0): 0.1, q(1): 0.4}), 10.0, 1e-3)
    assert rep.drift <= 1e-14
    osc = oscillator()
    rep = energy_drift(osc, fl_point(osc, {q(0): 0.3, q(1): 0.8}), 10.0, 1e-3)
    assert rep.drift <= 1e-7 and rep.wo_violation <= 1e-8


def test_energy_drift_needs_start_on_graph():
    sys = beam()
    w0 = fl_point(sys, ZERO_JET)
    w0[p(0)] = 1.0
    with pytest.raises(ValueError):
        energy_drift(sys, w0, 1.0, 1e-2)
    assert wo_violation(sys, np.array([[w0[c] for c in sys.atlas.w]]))[0] == pytest.approx(1.0)


def test_parameters_passed_to_integration():
    sys = LagrangianSystem.from_text(1, 2, "1/2*mu*q2_1^2 + rho*q0_1", {"mu": 2.0, "rho": 1.0})
    traj = integrate(sys.XLH, fl_point(sys, ZERO_JET), 0.0, 1.0, 1e-2, sys.params)
    assert traj.final[q(0)] == pytest.approx(-1 / 48, abs=1e-12)
    assert param("mu") in sys.XLH[q(3)].free_vars()
