"""Built-in reference systems and candidate sections.

``beam`` is the homogeneous elastic beam L = mu/2 q2^2 + rho q0 (k = 2).
The constant free-beam section (rho = 0: s2 = c, s3 = 0, alpha0 = 0,
alpha1 = mu c) and the oscillator section s1 = alpha0 = sqrt(2E - q0^2)
are solutions derived for this package and checked by the residual
generators; ``broken-section`` perturbs alpha0 of the free-beam section by
0.1 and must be rejected.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

from .problem import ProblemSpec

BEAM_L = "1/2*mu*q2_1^2 + rho*q0_1"


@dataclass(frozen=True)
class Fixture:
    name: str
    problem: dict[str, Any]
    derivation: dict[str, Any] = field(default_factory=dict)
    verdicts: dict[str, Any] = field(default_factory=dict)

    @property
    def spec(self) -> ProblemSpec:
        return ProblemSpec.from_dict(self.problem)


def _free_beam(p0: str) -> dict[str, Any]:
    return {
        "n": 1,
        "k": 2,
        "parameters": {"mu": 2.0, "rho": 0.0, "c": 0.5},
        "lagrangian": BEAM_L,
        "section": {"q2_1": "c", "q3_1": "0", "p0_1": p0, "p1_1": "mu*c"},
        "grid": {"q0_1": {"min": -1.0, "max": 1.0, "count": 21},
                 "q1_1": {"min": -1.0, "max": 1.0, "count": 21}},
        "integrate": {"t0": 0.0, "t1": 1.0, "dt": 1e-3, "initial": {"q0_1": 0.0, "q1_1": 0.0}},
        "tolerance": 1e-10,
        "seed": 0,
    }


_FIXTURES = {
    "beam": Fixture(
        "beam",
        {
            "n": 1,
            "k": 2,
            "parameters": {"mu": 1.0, "rho": 1.0},
            "lagrangian": BEAM_L,
            "integrate": {"t0": 0.0, "t1": 1.0, "dt": 1e-3,
                          "initial": {"q0_1": 0.0, "q1_1": 0.0, "q2_1": 0.0, "q3_1": 0.0}},
            "tolerance": 1e-9,
            "seed": 0,
        },
        derivation={
            "hessian": [["1"]],
            "F": {"F_1": "-1"},
            "FL": {"p0_1": "-q3_1", "p1_1": "q2_1"},
            "H": "-q0_1 - 1/2*q2_1^2 + q1_1*p0_1 + q2_1*p1_1",
            "X_LH": {"q0_1": "q1_1", "q1_1": "q2_1", "q2_1": "q3_1", "q3_1": "-1",
                     "p0_1": "1", "p1_1": "-p0_1"},
        },
        verdicts={"derive": 0, "q0_at_1": -1.0 / 24.0},
    ),
    "free-beam-const-section": Fixture(
        "free-beam-const-section",
        _free_beam("0"),
        verdicts={"check": 0, "lifting": True, "projection": True},
    ),
    "free-particle": Fixture(
        "free-particle",
        {
            "n": 1,
            "k": 1,
            "parameters": {"c": 0.7},
            "lagrangian": "1/2*q1_1^2",
            "section": {"q1_1": "c", "p0_1": "c"},
            "grid": {"q0_1": {"min": -1.0, "max": 1.0, "count": 21}},
            "integrate": {"t0": 0.0, "t1": 1.0, "dt": 1e-3, "initial": {"q0_1": 0.0}},
            "tolerance": 1e-10,
            "seed": 0,
        },
        derivation={"hessian": [["1"]], "F": {"F_1": "0"}, "FL": {"p0_1": "q1_1"},
                    "H": "-1/2*q1_1^2 + q1_1*p0_1"},
        verdicts={"check": 0, "lifting": True, "projection": True},
    ),
    "oscillator": Fixture(
        "oscillator",
        {
            "n": 1,
            "k": 1,
            "parameters": {"E": 0.5},
            "lagrangian": "1/2*q1_1^2 - 1/2*q0_1^2",
            "section": {"q1_1": "sqrt(2*E - q0_1^2)", "p0_1": "sqrt(2*E - q0_1^2)"},
            # 0.9*sqrt(2E) = 0.9 for E = 1/2
            "grid": {"q0_1": {"min": -0.9, "max": 0.9, "count": 101}},
            "integrate": {"t0": 0.0, "t1": 1.0, "dt": 1e-3, "initial": {"q0_1": 0.0}},
            "tolerance": 1e-10,
            "seed": 0,
        },
        derivation={"hessian": [["1"]], "F": {"F_1": "-q0_1"}, "FL": {"p0_1": "q1_1"}},
        verdicts={"check": 0, "lifting": True, "projection": True},
    ),
    "broken-section": Fixture(
        "broken-section",
        _free_beam("1/10"),
        # positions decouple from momenta, so only the lifting check sees alpha0
        verdicts={"check": 1, "lifting": False, "projection": True},
    ),
}

NAMES = tuple(_FIXTURES)


def fixture(name: str) -> Fixture:
    try:
        return copy.deepcopy(_FIXTURES[name])
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; choose from {', '.join(NAMES)}") from None
