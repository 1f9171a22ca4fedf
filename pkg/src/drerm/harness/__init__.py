"""Instance generation, evaluation and batch experiments."""

from .evaluate import EvaluationSummary, RcReport, evaluate, rc
from .experiments import (
    CompareConfig,
    ExperimentResult,
    SweepConfig,
    nominal_ambiguity,
    run_compare,
    run_sweep,
    solve_drerm,
    strip_timing,
    write_result,
)
from .instances import generate_game, instance_seed, perturb_moments, sample_realizations

__all__ = [
    "CompareConfig",
    "EvaluationSummary",
    "ExperimentResult",
    "RcReport",
    "SweepConfig",
    "evaluate",
    "generate_game",
    "instance_seed",
    "nominal_ambiguity",
    "perturb_moments",
    "rc",
    "run_compare",
    "run_sweep",
    "sample_realizations",
    "solve_drerm",
    "strip_timing",
    "write_result",
]
