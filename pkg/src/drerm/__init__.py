"""Distributionally robust expected residual minimization for affine SVIPs.

The worst-case expected regularized gap over a moment ambiguity set is
computed by solving a lifted convex conic program; a quasi-Monte Carlo ERM
solver serves as the baseline.
"""

__version__ = "0.1.0"

from .ambiguity import MomentAmbiguity, equicorrelated_sigma
from .gap import gap_value, gap_values, omega, project, strong_duality_multipliers
from .model import AffineSVIP, GameInstance, PolyhedralSet, SetMode
from .nsdp import DecisionBlock, build, support_box, support_ellipsoids, support_full
from .qmc_erm import QmcSampleSet, SamplingMode, erm_gradient, erm_objective, qmc_samples, sobol, solve_erm
from .solver import SolveReport, SolverSettings, Status, kkt_residual, solve_conic, solve_qp

__all__ = [
    "AffineSVIP",
    "DecisionBlock",
    "GameInstance",
    "MomentAmbiguity",
    "PolyhedralSet",
    "QmcSampleSet",
    "SamplingMode",
    "SetMode",
    "SolveReport",
    "SolverSettings",
    "Status",
    "build",
    "erm_gradient",
    "erm_objective",
    "gap_value",
    "gap_values",
    "kkt_residual",
    "omega",
    "equicorrelated_sigma",
    "project",
    "qmc_samples",
    "sobol",
    "solve_conic",
    "solve_erm",
    "solve_qp",
    "strong_duality_multipliers",
    "support_box",
    "support_ellipsoids",
    "support_full",
]
