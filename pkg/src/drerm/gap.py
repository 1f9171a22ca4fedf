"""Regularized gap function and its Lagrangian dual bound.

For ``alpha > 0`` the regularized gap function is

    f(x, xi) = max_{y in S} <F(x, xi), x - y> - |y - x|^2 / (2 alpha)

whose maximizer is the projection of ``x - alpha F(x, xi)`` onto ``S``. The
dual function ``omega`` of the inner maximization upper-bounds ``f`` for any
sign-feasible multipliers and equals it at the projection multipliers.

Multiplier conventions: for ``S = {Ax = b, x >= 0}`` the pair ``(lam, mu)``
has ``lam`` free and ``mu >= 0``; for ``S = {Ax <= b}`` only ``lam >= 0`` is
used.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .model import PolyhedralSet, SetMode
from .solver.qp import InfeasibleError, solve_qp

FEAS_TOL = 1e-9


class InfeasibleSetError(InfeasibleError):
    """The polyhedron ``S`` is empty."""


@dataclass(frozen=True)
class GapEval:
    value: float
    maximizer_y: np.ndarray
    alpha: float


def _qp_data(S: PolyhedralSet):
    if S.mode is SetMode.INEQUALITY:
        return {"ineq": (S.A, S.b)}
    return {"eq": (S.A, S.b), "nonneg": range(S.n)}


def project_with_multipliers(S: PolyhedralSet, z):
    """Projection of ``z`` onto ``S`` and the QP multipliers.

    Returns ``(p, lam, mu)`` where ``p - z + A' lam - mu = 0`` (``mu`` is an
    empty array in inequality mode).
    """
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (S.n,):
        raise ValueError(f"z must have shape ({S.n},), got {z.shape}")
    try:
        res = solve_qp(np.eye(S.n), -z, **_qp_data(S))
    except InfeasibleError as exc:
        raise InfeasibleSetError(f"feasible set is empty: {exc}") from None
    if S.mode is SetMode.INEQUALITY:
        return res.x, res.ineq, np.zeros(0)
    return res.x, res.eq, res.nonneg


def project(S: PolyhedralSet, z):
    """Euclidean projection of ``z`` onto ``S``."""
    return project_with_multipliers(S, z)[0]


@lru_cache(maxsize=32)
def _active_set_table(key):
    mode, A_bytes, shape = key
    A = np.frombuffer(A_bytes).reshape(shape)
    l, n = shape
    if mode is SetMode.INEQUALITY:
        G, E = A, np.zeros((0, n))
    else:
        G, E = -np.eye(n), A
    k = G.shape[0]
    table = []
    for size in range(k + 1):
        for W in itertools.combinations(range(k), size):
            B = np.vstack([E, G[list(W)]])
            if B.shape[0] > n:
                continue
            BBt = B @ B.T
            if B.shape[0] and np.linalg.matrix_rank(BBt) < B.shape[0]:
                continue
            table.append((np.array(W, dtype=int), B, np.linalg.inv(BBt) if B.shape[0] else BBt))
    return G, E, table


def project_batch(S: PolyhedralSet, Z):
    """Project every row of ``Z`` onto ``S``.

    Small sets are handled by vectorized enumeration of active sets with an
    explicit KKT check; rows no active set certifies (degenerate vertices)
    and sets with many rows go through :func:`project` one at a time.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    N, n = Z.shape
    k = S.l if S.mode is SetMode.INEQUALITY else S.n
    out = np.empty_like(Z)
    todo = np.arange(N)
    if k <= 10:
        A = np.ascontiguousarray(S.A)
        G, E, table = _active_set_table((S.mode, A.tobytes(), A.shape))
        h = S.b if S.mode is SetMode.INEQUALITY else np.zeros(n)
        d = np.zeros(0) if S.mode is SetMode.INEQUALITY else S.b
        scale = 1.0 + np.abs(Z).max(initial=0.0) + np.abs(h).max(initial=0.0) + np.abs(d).max(initial=0.0)
        tol = 1e-11 * scale
        ne = E.shape[0]
        for W, B, K in table:
            if todo.size == 0:
                break
            Zt = Z[todo]
            if B.shape[0]:
                r = np.concatenate([d, h[W]])
                nu = (Zt @ B.T - r) @ K
                Y = Zt - nu @ B
                ok = np.all(nu[:, ne:] >= -tol, axis=1)
            else:
                Y = Zt
                ok = np.ones(todo.size, dtype=bool)
            if G.shape[0]:
                ok &= np.all(Y @ G.T - h <= tol, axis=1)
            out[todo[ok]] = Y[ok]
            todo = todo[~ok]
    for i in todo:
        out[i] = project(S, Z[i])
    return out


def _require_feasible(S, x):
    if not S.contains(x, FEAS_TOL):
        raise ValueError(f"x is not in S (violation {S.violation(x):.3e}); the gap function is only meaningful on S")


def gap_value(inst, alpha, x, xi):
    """Regularized gap ``f_alpha(x, xi)`` with its maximizer."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    x = inst._check_x(x)
    _require_feasible(inst.feasible, x)
    F = inst.eval_F(x, inst._check_xi(xi))
    y = project(inst.feasible, x - alpha * F)
    d = x - y
    value = float(F @ d - d @ d / (2.0 * alpha))
    return GapEval(value=value, maximizer_y=y, alpha=float(alpha))


def gap_values(inst, alpha, x, xis):
    """Vectorized ``f_alpha(x, xi_j)`` over the rows of ``xis``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    x = inst._check_x(x)
    _require_feasible(inst.feasible, x)
    F = inst.eval_F(x, np.atleast_2d(xis))
    Y = project_batch(inst.feasible, x - alpha * F)
    D = x - Y
    return np.einsum("ij,ij->i", F, D) - np.einsum("ij,ij->i", D, D) / (2.0 * alpha)


def gap_with_gradient(inst, alpha, x, xis):
    """Gap values and their gradients in ``x`` for every row of ``xis``.

    ``grad f = F - (M(xi)' - I / alpha)(y - x)``.
    """
    x = inst._check_x(x)
    xis = np.atleast_2d(xis)
    F = inst.eval_F(x, xis)
    Y = project_batch(inst.feasible, x - alpha * F)
    D = x - Y
    vals = np.einsum("ij,ij->i", F, D) - np.einsum("ij,ij->i", D, D) / (2.0 * alpha)
    Ms = inst.M(xis)
    grads = F + np.einsum("kji,kj->ki", Ms, D) - D / alpha
    return vals, grads, Y


def strong_duality_multipliers(inst, alpha, x, xi):
    """Multipliers ``(lam, mu)`` at which ``omega`` equals the gap value."""
    x = inst._check_x(x)
    F = inst.eval_F(x, inst._check_xi(xi))
    _, lam, mu = project_with_multipliers(inst.feasible, x - alpha * F)
    return lam / alpha, mu / alpha


def omega(inst, alpha, x, lam, mu, xi):
    """Dual bound ``omega_alpha(x, lam, mu; xi)`` on the regularized gap.

    ``omega = alpha/2 |F + A' lam - mu|^2 + <b - Ax, lam> + <mu, x>``, with
    ``mu`` omitted (``None`` or empty) when ``S`` is in inequality form.
    ``xi`` may be a batch of shape (N, m).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    S = inst.feasible
    x = inst._check_x(x)
    lam = np.asarray(lam, dtype=np.float64).reshape(-1)
    if lam.shape != (S.l,):
        raise ValueError(f"lam must have length {S.l}")
    if S.mode is SetMode.INEQUALITY:
        if mu is not None and np.size(mu) != 0:
            raise ValueError("mu is not used when S = {Ax <= b}")
        if np.any(lam < 0):
            raise ValueError("lam must be nonnegative when S = {Ax <= b}")
        mu = np.zeros(S.n)
        mu_term = 0.0
    else:
        if mu is None:
            raise ValueError("mu is required when S = {Ax = b, x >= 0}")
        mu = np.asarray(mu, dtype=np.float64).reshape(-1)
        if mu.shape != (S.n,):
            raise ValueError(f"mu must have length {S.n}")
        if np.any(mu < 0):
            raise ValueError("mu must be nonnegative")
        mu_term = float(mu @ x)
    F = inst.eval_F(x, inst._check_xi(xi))
    v = F + S.A.T @ lam - mu
    sq = np.sum(v * v, axis=-1)
    return 0.5 * alpha * sq + float((S.b - S.A @ x) @ lam) + mu_term
