"""Expected-residual minimization baseline with quasi-Monte Carlo samples.

The expectation ``E[f_alpha(x, xi)]`` under ``N(mu0, Sigma0)`` is replaced by
a density-weighted average over Sobol points in a box around ``mu0``,
normalized by ``p(mu0)`` to keep the weights away from underflow:

    theta(x) = 1 / (N p(mu0)) * sum_k f_alpha(x, xi_k) p(xi_k)
"""

from __future__ import annotations

import enum
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .gap import FEAS_TOL, gap_values, gap_with_gradient, project
from .model import AffineSVIP, SetMode
from .solver.qp import solve_qp

SOBOL_MAX_DIM = 21201


class SamplingMode(str, enum.Enum):
    PAPER_LITERAL = "paper-literal"  # one Sobol coordinate along the all-ones direction
    PER_COORDINATE = "per-coordinate"  # an m-dimensional Sobol point per sample


def sobol(count, dim):
    """First ``count`` points of the unscrambled Sobol sequence in [0, 1)^dim.

    Gray-code order with Joe-Kuo direction numbers; the all-zero point at
    index 0 is skipped, so ``sobol(2, 1)`` is ``[[0.5], [0.75]]``.
    """
    if count < 0:
        raise ValueError("count must be nonnegative")
    if not 1 <= dim <= SOBOL_MAX_DIM:
        raise ValueError(f"Sobol dimension must lie in [1, {SOBOL_MAX_DIM}], got {dim}")
    if count == 0:
        return np.zeros((0, dim))
    engine = qmc.Sobol(d=dim, scramble=False)
    engine.fast_forward(1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # balance warning for counts that are not powers of two
        return engine.random(count)


@dataclass(frozen=True)
class QmcSampleSet:
    """Sample points with their nominal density values."""

    points: np.ndarray  # (N, m)
    weights: np.ndarray  # (N,)
    mode: SamplingMode | None = None

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        w = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if pts.shape[0] != w.shape[0] or pts.shape[0] == 0:
            raise ValueError("need one positive weight per sample point")
        if not np.all(w > 0):
            raise ValueError("weights must be positive")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def count(self):
        return self.points.shape[0]

    @classmethod
    def from_points(cls, points, amb):
        """Explicit points weighted by the density of ``amb``'s nominal normal."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return cls(points, amb.density(points), None)


def qmc_samples(amb, N_k, mode=SamplingMode.PER_COORDINATE):
    """Sobol-based samples for the ERM approximation.

    ``PER_COORDINATE`` maps an m-dimensional Sobol point ``zeta`` to
    ``mu0_i - 3 sd_i + 6 sd_i zeta_i``. ``PAPER_LITERAL`` uses one Sobol
    coordinate ``zeta`` for every component:
    ``(mu0_i - 3 sqrt 2) + (mu0_i + 3 sqrt 2) zeta``.
    """
    mode = SamplingMode(mode)
    if N_k < 1:
        raise ValueError("N_k must be at least 1")
    mu0 = amb.mu0
    if mode is SamplingMode.PAPER_LITERAL:
        zeta = sobol(N_k, 1)
        r = 3.0 * math.sqrt(2.0)
        points = (mu0 - r) + zeta * (mu0 + r)
    else:
        sd = np.sqrt(np.diag(amb.sigma0))
        points = (mu0 - 3.0 * sd) + 6.0 * sd * sobol(N_k, amb.m)
    return QmcSampleSet(points, amb.density(points), mode)


def _check_start(S, x):
    if not S.contains(x, FEAS_TOL):
        raise ValueError(f"x is not in S (violation {S.violation(x):.3e})")


def erm_objective(inst: AffineSVIP, alpha, samples: QmcSampleSet, amb, x):
    """``1/(N p(mu0)) sum_k f_alpha(x, xi_k) p(xi_k)``."""
    x = np.asarray(x, dtype=np.float64)
    vals = gap_values(inst, alpha, x, samples.points)
    return float(np.sum(vals * samples.weights) / (samples.count * amb.density(amb.mu0)[0]))


def erm_gradient(inst: AffineSVIP, alpha, samples: QmcSampleSet, amb, x):
    """Gradient of :func:`erm_objective` in ``x``."""
    x = np.asarray(x, dtype=np.float64)
    _check_start(inst.feasible, x)
    _, grads, _ = gap_with_gradient(inst, alpha, x, samples.points)
    return samples.weights @ grads / (samples.count * amb.density(amb.mu0)[0])


def _active_rows(S, Y, tol=1e-9):
    """Boolean (N, k) mask of the constraints active at each projection."""
    if S.mode is SetMode.INEQUALITY:
        return Y @ S.A.T - S.b >= -tol * (1.0 + np.abs(S.b))
    return Y <= tol


def _erm_hessian(inst, alpha, samples, amb, x, Y):
    """Weighted generalized Hessian of the sampled gap, made positive definite.

    Per sample ``M - (M' - I/alpha)(P (I - alpha M) - I)`` with ``P`` the
    Jacobian of the projection on the active face at ``y``.
    """
    S = inst.feasible
    n = inst.n
    Ms = inst.M(samples.points)
    active = _active_rows(S, Y)
    if S.mode is SetMode.INEQUALITY:
        rows, eq = S.A, np.zeros((0, n))
    else:
        rows, eq = np.eye(n), S.A
    I = np.eye(n)
    H = np.zeros((n, n))
    scale = samples.count * amb.density(amb.mu0)[0]
    patterns, inverse = np.unique(active, axis=0, return_inverse=True)
    for idx, pat in enumerate(patterns):
        B = np.vstack([eq, rows[pat]])
        if B.shape[0]:
            P = I - np.linalg.pinv(B) @ B
        else:
            P = I
        sel = np.flatnonzero(inverse.ravel() == idx)
        Mk = Ms[sel]
        Dy = P @ (I - alpha * Mk)
        Hk = Mk - (Mk.transpose(0, 2, 1) - I / alpha) @ (Dy - I)
        H += np.einsum("k,kij->ij", samples.weights[sel], Hk)
    H = 0.5 * (H + H.T) / scale
    ev, V = np.linalg.eigh(H)
    floor = 1e-8 * max(abs(ev).max(), 1e-12)
    return (V * np.maximum(ev, floor)) @ V.T


@dataclass
class ErmReport:
    status: str  # "optimal" or "max_iter"
    objective: float
    iterations: int
    pg_norm: float
    wall_time: float
    history: list = field(default_factory=list, repr=False)


def projected_gradient_norm(S, x, g):
    """Stationarity measure ``|x - proj_S(x - g)|``."""
    return float(np.linalg.norm(x - project(S, x - g)))


def solve_erm(inst: AffineSVIP, alpha, samples: QmcSampleSet, amb, start=None, tol=1e-7, max_iter=500):
    """Minimize the sampled ERM objective over ``S``.

    Each step solves ``min g'd + d'Hd/2`` over ``x + d`` in ``S`` with ``H``
    the positive definite generalized Hessian of the sampled objective, then
    backtracks (Armijo) along ``d``. The objective never increases. Stops
    when the projected gradient norm is at most ``tol``.

    ``start`` defaults to 0 when it lies in ``S`` and to its projection
    otherwise.
    """
    t0 = time.perf_counter()
    S = inst.feasible
    if start is None:
        start = np.zeros(inst.n)
        if not S.contains(start, FEAS_TOL):
            start = project(S, start)
    x = np.asarray(start, dtype=np.float64).copy()
    _check_start(S, x)
    scale = samples.count * amb.density(amb.mu0)[0]

    def evaluate(v):
        vals, grads, Y = gap_with_gradient(inst, alpha, v, samples.points)
        return float(np.sum(vals * samples.weights) / scale), samples.weights @ grads / scale, Y

    obj, g, Y = evaluate(x)
    history = [obj]
    status = "max_iter"
    it = 0
    pg = projected_gradient_norm(S, x, g)
    qp_kw = {"ineq": (S.A, S.b)} if S.mode is SetMode.INEQUALITY else {"eq": (S.A, S.b), "nonneg": range(inst.n)}
    for it in range(max_iter + 1):
        if pg <= tol:
            status = "optimal"
            break
        if it == max_iter:
            break
        H = _erm_hessian(inst, alpha, samples, amb, x, Y)
        u = solve_qp(H, g - H @ x, **qp_kw).x
        d = u - x
        slope = g @ d
        if slope >= 0:
            # metric step failed to descend; fall back to the projected gradient
            d = project(S, x - g) - x
            slope = g @ d
        step = 1.0
        while True:
            x_new = x + step * d
            if S.mode is SetMode.EQUALITY_NONNEG:
                x_new = np.maximum(x_new, 0.0)
            obj_new, g_new, Y_new = evaluate(x_new)
            if obj_new <= obj + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-16:
                break
        if step < 1e-16 or obj_new > obj:
            # no decrease representable in floating point
            pg = projected_gradient_norm(S, x, g)
            break
        x, obj, g, Y = x_new, obj_new, g_new, Y_new
        history.append(obj)
        pg = projected_gradient_norm(S, x, g)
    report = ErmReport(status, obj, it, pg, time.perf_counter() - t0, history)
    return x, report
