"""Skinner-Rusk unified dynamics and Hamilton-Jacobi checks for higher-order Lagrangians."""

from .dynamics import (
    LagrangianSystem,
    LegendreMap,
    RegularityError,
    VectorField,
    build_XLH,
    compute_F,
    dH,
    euler_lagrange,
    hamiltonian,
    hessian,
    legendre,
    tangency_residuals,
)
from .hj import (
    Grid,
    OneForm,
    LagrangianSection,
    ResidualSet,
    UnifiedSection,
    associated_vf,
    closedness_residuals,
    dsH_residuals,
    generalized_hj_residuals,
    lift_from_hamiltonian,
    lift_from_lagrangian,
    project_to_hamiltonian,
    project_to_lagrangian,
    wo_membership_residuals,
)
from .jetspace import JetAtlas, atlas, project, total_derivative
from .ode import Trajectory, energy_drift, integrate, lifting_check, projection_check

__version__ = "0.1.0"
