"""Dense QP and conic interior-point solvers."""

from .conic import Multipliers, SolveReport, SolverSettings, Status, kkt_residual, solve_conic
from .qp import InfeasibleError, QPResult, solve_qp

__all__ = [
    "InfeasibleError",
    "Multipliers",
    "QPResult",
    "SolveReport",
    "SolverSettings",
    "Status",
    "kkt_residual",
    "solve_conic",
    "solve_qp",
]
