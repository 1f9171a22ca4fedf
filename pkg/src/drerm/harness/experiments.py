"""Batch experiments: DRERM vs ERM comparison and confidence-parameter sweeps.

Seeding rule: with master seed ``s`` instance ``i`` (1-based) is drawn with
``s ^ i``; its realizations use the stream ``[s ^ i, 1]``. The sweep uses the
instance ``s ^ 0``, moment perturbation stream ``[s, 2]`` and realization
stream ``[s, 1]``. Every output byte except the timing columns is a function
of the configuration.
"""

from __future__ import annotations

import csv
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from ..ambiguity import MomentAmbiguity, equicorrelated_sigma
from ..nsdp import build, support_full
from ..qmc_erm import SamplingMode, qmc_samples, solve_erm
from ..solver.conic import SolverSettings, Status, solve_conic
from .evaluate import EvaluationSummary, evaluate, rc
from .instances import generate_game, instance_seed, perturb_moments, sample_realizations

TIMING_COLUMNS = ("t_erm", "t_drerm")

COMPARE_COLUMNS = (
    "instance",
    "nk",
    "rc_min",
    "rc_max",
    "rc_mean",
    "rc_median",
    "rc_sd",
    "drerm_max",
    "erm_max",
    "drerm_mean",
    "erm_mean",
    "drerm_sd",
    "erm_sd",
    "drerm_objective",
    "t_erm",
    "t_drerm",
    "status_drerm",
    "status_erm",
    "status",
)

SWEEP_COLUMNS = ("gamma1", "gamma2", "objective", "max", "mean", "sd", "kkt_residual", "iterations", "status")


def nominal_ambiguity(m, gamma1=0.0, gamma2=1.0):
    """Zero mean with the equicorrelated covariance (2 on, 1.6 off the diagonal)."""
    return MomentAmbiguity(np.zeros(m), equicorrelated_sigma(m), gamma1, gamma2)


def solve_drerm(inst, alpha, amb, support=None, settings=None):
    """Build and solve the lifted conic program; returns ``(x or None, report)``."""
    prog = build(inst, alpha, amb, support if support is not None else support_full())
    w, report = solve_conic(prog, settings=settings)
    return (None if w is None else w.x), report


@dataclass
class CompareConfig:
    seed: int = 0
    instances: int = 10
    nk: tuple = (80, 10000)
    n1: int = 2
    n2: int = 2
    realizations: int = 5000
    sampling: str = SamplingMode.PER_COORDINATE.value
    tol: float = 1e-7
    max_iter: int = 200
    mu_factor: float = 0.2
    erm_tol: float = 1e-7
    erm_max_iter: int = 500

    def settings(self):
        return SolverSettings(tol=self.tol, max_iter=self.max_iter, mu_factor=self.mu_factor)


@dataclass
class SweepConfig:
    seed: int = 0
    grid: str = "gamma2"  # axis varied in steps of 0.1
    gamma1: tuple | None = None
    gamma2: tuple | None = None
    n1: int = 2
    n2: int = 2
    realizations: int = 5000
    tol: float = 1e-7
    max_iter: int = 200
    mu_factor: float = 0.2

    def settings(self):
        return SolverSettings(tol=self.tol, max_iter=self.max_iter, mu_factor=self.mu_factor)

    def points(self):
        """(gamma1, gamma2) pairs, ordered by the fixed axis then the varied one."""
        if self.grid == "gamma1":
            g1 = self.gamma1 or tuple(round(0.1 * k, 10) for k in range(1, 21))
            g2 = self.gamma2 or (1.0, 2.0)
            return [(a, b) for b in g2 for a in g1]
        if self.grid == "gamma2":
            g1 = self.gamma1 or (0.1, 1.0)
            g2 = self.gamma2 or tuple(round(1.0 + 0.1 * k, 10) for k in range(21))
            return [(a, b) for a in g1 for b in g2]
        raise ValueError(f"grid must be 'gamma1' or 'gamma2', got {self.grid!r}")


@dataclass
class ExperimentResult:
    rows: list
    columns: tuple
    manifest: dict
    extras: dict = field(default_factory=dict, repr=False)

    @property
    def failures(self):
        return [r for r in self.rows if r["status"] != "ok"]


def _check_seed(seed):
    if int(seed) < 0:
        raise ValueError("seed must be nonnegative")


def _status(value):
    return value.value if isinstance(value, Status) else str(value)


def run_compare(cfg: CompareConfig) -> ExperimentResult:
    """DRERM (gamma1=0, gamma2=1, full support) vs QMC-ERM on ``cfg.instances`` games.

    A failure in one instance is recorded in its rows and does not stop the
    batch.
    """
    _check_seed(cfg.seed)
    if cfg.instances < 1:
        raise ValueError("instances must be at least 1")
    rows = []
    extras = {}
    for i in range(1, cfg.instances + 1):
        iseed = instance_seed(cfg.seed, i)
        game = generate_game(cfg.n1, cfg.n2, seed=iseed)
        inst = game.to_svip()
        alpha = 1.0 / inst.beta0()
        amb = nominal_ambiguity(game.m)
        xis = sample_realizations(amb, cfg.realizations, [iseed, 1])

        t0 = time.perf_counter()
        try:
            x_dr, rep = solve_drerm(inst, alpha, amb, settings=cfg.settings())
            st_dr = _status(rep.status)
            dr_obj = rep.objective
            dr_sum = evaluate(x_dr, inst, alpha, xis) if x_dr is not None else None
        except Exception as exc:  # noqa: BLE001 - recorded per instance
            x_dr, st_dr, dr_obj, dr_sum = None, f"error:{type(exc).__name__}", math.nan, None
        t_dr = time.perf_counter() - t0
        extras[i] = {"x_drerm": x_dr, "drerm": dr_sum}

        for nk in cfg.nk:
            t0 = time.perf_counter()
            try:
                samples = qmc_samples(amb, nk, cfg.sampling)
                x_erm, erep = solve_erm(inst, alpha, samples, amb, tol=cfg.erm_tol, max_iter=cfg.erm_max_iter)
                st_erm = erep.status
                erm_sum = evaluate(x_erm, inst, alpha, xis)
            except Exception as exc:  # noqa: BLE001
                x_erm, st_erm, erm_sum = None, f"error:{type(exc).__name__}", None
            t_erm = time.perf_counter() - t0
            extras[i][f"x_erm_{nk}"] = x_erm
            extras[i][f"erm_{nk}"] = erm_sum

            ok = st_dr == Status.OPTIMAL.value and st_erm == "optimal"
            row = {"instance": i, "nk": nk}
            if dr_sum is not None and erm_sum is not None:
                row.update(rc(dr_sum, erm_sum).as_dict())
            else:
                row.update(dict.fromkeys(("rc_min", "rc_max", "rc_mean", "rc_median", "rc_sd"), math.nan))
            row.update(
                drerm_max=dr_sum.max if dr_sum else math.nan,
                erm_max=erm_sum.max if erm_sum else math.nan,
                drerm_mean=dr_sum.mean if dr_sum else math.nan,
                erm_mean=erm_sum.mean if erm_sum else math.nan,
                drerm_sd=dr_sum.sd if dr_sum else math.nan,
                erm_sd=erm_sum.sd if erm_sum else math.nan,
                drerm_objective=dr_obj,
                t_erm=t_erm,
                t_drerm=t_dr,
                status_drerm=st_dr,
                status_erm=st_erm,
                status="ok" if ok else "failed",
            )
            rows.append(row)
    rows.sort(key=lambda r: (r["instance"], r["nk"]))
    manifest = _manifest("compare", cfg, rows)
    return ExperimentResult(rows, COMPARE_COLUMNS, manifest, extras)


def run_sweep(cfg: SweepConfig) -> ExperimentResult:
    """Solve the DRERM problem with perturbed moments over a (gamma1, gamma2) grid.

    Realizations come from the unperturbed nominal normal and are shared by
    every grid point.
    """
    _check_seed(cfg.seed)
    game = generate_game(cfg.n1, cfg.n2, seed=instance_seed(cfg.seed, 0))
    inst = game.to_svip()
    alpha = 1.0 / inst.beta0()
    true_amb = nominal_ambiguity(game.m)
    est = perturb_moments(true_amb, [cfg.seed, 2])
    xis = sample_realizations(true_amb, cfg.realizations, [cfg.seed, 1])
    rows = []
    xs = {}
    for g1, g2 in cfg.points():
        row = {"gamma1": float(g1), "gamma2": float(g2)}
        try:
            x, rep = solve_drerm(inst, alpha, est.with_gammas(g1, g2), settings=cfg.settings())
            summ = evaluate(x, inst, alpha, xis) if x is not None else None
            row.update(objective=rep.objective, kkt_residual=rep.kkt_residual, iterations=rep.iterations)
            status = "ok" if rep.status is Status.OPTIMAL else _status(rep.status)
        except Exception as exc:  # noqa: BLE001
            x, summ, status = None, None, f"error:{type(exc).__name__}"
            row.update(objective=math.nan, kkt_residual=math.nan, iterations=0)
        row.update(
            max=summ.max if summ else math.nan,
            mean=summ.mean if summ else math.nan,
            sd=summ.sd if summ else math.nan,
            status=status,
        )
        xs[(g1, g2)] = x
        rows.append(row)
    if cfg.grid == "gamma1":
        rows.sort(key=lambda r: (r["gamma2"], r["gamma1"]))
    else:
        rows.sort(key=lambda r: (r["gamma1"], r["gamma2"]))
    manifest = _manifest("sweep", cfg, rows)
    manifest["estimated_moments"] = {"mu0": est.mu0.tolist(), "sigma0": est.sigma0.tolist()}
    return ExperimentResult(rows, SWEEP_COLUMNS, manifest, {"x": xs, "instance": game, "estimate": est})


def _jsonable(v):
    if isinstance(v, (tuple, list)):
        return [_jsonable(u) for u in v]
    if isinstance(v, SamplingMode):
        return v.value
    return v


def _manifest(kind, cfg, rows):
    from .. import __version__

    return {
        "experiment": kind,
        "config": {k: _jsonable(v) for k, v in asdict(cfg).items()},
        "seed_rule": "instance i uses seed ^ i; realizations use [seed ^ i, 1]",
        "rows": len(rows),
        "failed_rows": sum(r["status"] != "ok" for r in rows),
        "versions": {
            "drerm": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "timing_columns": list(TIMING_COLUMNS),
    }


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_result(result: ExperimentResult, out):
    """Write ``<out>`` as CSV and ``<out>.manifest.json`` next to it.

    Returns the two paths.
    """
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(result.columns)
        for row in result.rows:
            writer.writerow([_fmt(row[c]) for c in result.columns])
    manifest_path = path.with_name(path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(result.manifest, indent=2, sort_keys=True) + "\n")
    return path, manifest_path


def strip_timing(csv_text):
    """CSV text with the timing columns removed, for byte comparisons."""
    lines = csv_text.splitlines()
    if not lines:
        return ""
    reader = list(csv.reader(lines))
    keep = [j for j, c in enumerate(reader[0]) if c not in TIMING_COLUMNS]
    return "\n".join(",".join(r[j] for j in keep) for r in reader) + "\n"


def summary_to_dict(s: EvaluationSummary | None):
    return None if s is None else {**s.stats(), "count": s.count}


__all__ = [
    "COMPARE_COLUMNS",
    "SWEEP_COLUMNS",
    "TIMING_COLUMNS",
    "CompareConfig",
    "ExperimentResult",
    "SweepConfig",
    "nominal_ambiguity",
    "run_compare",
    "run_sweep",
    "solve_drerm",
    "strip_timing",
    "summary_to_dict",
    "write_result",
]
