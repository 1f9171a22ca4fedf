"""Small dense convex QP solver.

Solves

    min  1/2 x'Qx + c'x
    s.t. G x <= h,  E x = d,  x_i >= 0 for i in ``nonneg``

with a dual active-set method: start from the unconstrained minimizer and add
violated constraints one at a time while keeping the multipliers of the
active set dual feasible (Goldfarb & Idnani, Math. Prog. 27, 1983). Problems
here have a handful of variables, so the active-set systems are re-solved
from scratch each step instead of updating factorizations.

A merely positive semidefinite ``Q`` is handled by proximal-point outer
iterations, each of which is strictly convex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InfeasibleError(ValueError):
    """The constraint set of a QP is empty."""


@dataclass
class QPResult:
    x: np.ndarray
    ineq: np.ndarray  # multipliers of G x <= h, >= 0
    eq: np.ndarray  # multipliers of E x = d, free
    nonneg: np.ndarray  # multipliers of x_i >= 0, >= 0
    iterations: int
    kkt_residual: float


def _as_rows(pair, n):
    if pair is None:
        return np.zeros((0, n)), np.zeros(0)
    A, b = pair
    A = np.asarray(A, dtype=np.float64).reshape(-1, n)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if A.shape[0] != b.shape[0]:
        raise ValueError("constraint matrix and right-hand side disagree in length")
    return A, b


def _dual_active_set(Qinv, c, N, bN, n_eq, max_iter):
    """Core loop on constraints ``N[j] @ x >= bN[j]`` (first ``n_eq`` are equalities).

    Returns ``(x, u, iterations)`` with ``Q x + c = N' u``.
    """
    n = c.shape[0]
    k_all = N.shape[0]
    x = -Qinv @ c
    scale = 1.0 + np.abs(bN).max(initial=0.0) + np.abs(N).max(initial=0.0) * (1.0 + np.abs(x).max(initial=0.0))
    viol_tol = 1e-13 * scale
    sign = np.ones(k_all)  # equalities may be flipped to enter as violated rows
    active: list[int] = []
    u_act: list[float] = []
    iterations = 0

    def add(p):
        nonlocal x, iterations
        n_p = sign[p] * N[p]
        b_p = sign[p] * bN[p]
        u_p = 0.0
        while True:
            iterations += 1
            if iterations > max_iter:
                raise RuntimeError("dual active-set iteration limit reached")
            s_p = n_p @ x - b_p
            Gin = Qinv @ n_p
            if active:
                Aa = sign[active, None] * N[active]
                GiA = Qinv @ Aa.T
                S = Aa @ GiA
                r = np.linalg.lstsq(S, Aa @ Gin, rcond=None)[0]
                z = Gin - GiA @ r
            else:
                r = np.zeros(0)
                z = Gin
            t1, j1 = np.inf, -1
            for pos, j in enumerate(active):
                if j >= n_eq and r[pos] > 1e-14:
                    ratio = u_act[pos] / r[pos]
                    if ratio < t1:
                        t1, j1 = ratio, pos
            zn = z @ n_p
            if np.linalg.norm(z) <= 1e-13 * (1.0 + np.linalg.norm(Gin)) or zn <= 1e-300:
                if s_p >= -viol_tol:
                    return  # dependent on the active set and already satisfied
                if not np.isfinite(t1):
                    raise InfeasibleError("constraints are inconsistent (dual unbounded)")
                for pos in range(len(active)):
                    u_act[pos] -= t1 * r[pos]
                u_p += t1
                del active[j1], u_act[j1]
                continue
            t2 = max(-s_p / zn, 0.0)
            t = min(t1, t2)
            x = x + t * z
            for pos in range(len(active)):
                u_act[pos] -= t * r[pos]
            u_p += t
            if t2 <= t1:
                active.append(p)
                u_act.append(u_p)
                return
            del active[j1], u_act[j1]

    for p in range(n_eq):
        if N[p] @ x - bN[p] > 0:
            sign[p] = -1.0
        add(p)

    while True:
        if k_all == n_eq:
            break
        s = N[n_eq:] @ x - bN[n_eq:]
        s[[j - n_eq for j in active if j >= n_eq]] = np.inf
        p = int(np.argmin(s))
        if s[p] >= -viol_tol:
            break
        add(p + n_eq)

    u = np.zeros(k_all)
    for j, val in zip(active, u_act):
        u[j] = sign[j] * val
    return x, u, iterations


def _kkt(Q, c, G, h, E, d, nonneg_idx, x, u_g, v_e, w):
    stat = Q @ x + c + G.T @ u_g + E.T @ v_e
    stat[nonneg_idx] -= w
    parts = [np.abs(stat).max(initial=0.0)]
    sg = G @ x - h
    parts.append(max(sg.max(initial=0.0), 0.0))
    parts.append(np.abs(E @ x - d).max(initial=0.0))
    xn = x[nonneg_idx]
    parts.append(max((-xn).max(initial=0.0), 0.0))
    parts.append(max((-u_g).max(initial=0.0), (-w).max(initial=0.0), 0.0))
    parts.append(np.abs(u_g * sg).max(initial=0.0))
    parts.append(np.abs(w * xn).max(initial=0.0))
    return float(max(parts))


def solve_qp(Q, c, ineq=None, eq=None, nonneg=(), max_iter=1000, tol=1e-10):
    """Solve a small convex QP to a verified KKT point.

    Parameters
    ----------
    Q : (n, n) array
        Symmetric positive semidefinite Hessian.
    c : (n,) array
        Linear term.
    ineq, eq : tuple of (matrix, vector), optional
        ``G x <= h`` and ``E x = d``.
    nonneg : sequence of int
        Indices constrained to be nonnegative.

    Returns
    -------
    QPResult
        Solution with multipliers satisfying
        ``Q x + c + G' ineq + E' eq - nonneg_mult = 0``.

    Raises
    ------
    InfeasibleError
        If the constraints admit no point.
    """
    Q = np.asarray(Q, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    n = c.shape[0]
    if Q.shape != (n, n):
        raise ValueError(f"Q must be ({n}, {n}), got {Q.shape}")
    Q = 0.5 * (Q + Q.T)
    G, h = _as_rows(ineq, n)
    E, d = _as_rows(eq, n)
    nonneg_idx = np.asarray(sorted(set(int(i) for i in nonneg)), dtype=int)
    Inn = np.eye(n)[nonneg_idx]
    N = np.vstack([E, -G, Inn])
    bN = np.concatenate([d, -h, np.zeros(len(nonneg_idx))])
    n_eq, n_g = E.shape[0], G.shape[0]

    def split(u):
        return u[n_eq:n_eq + n_g], -u[:n_eq], u[n_eq + n_g:]

    try:
        np.linalg.cholesky(Q)
        strictly_convex = True
    except np.linalg.LinAlgError:
        strictly_convex = False

    if strictly_convex:
        x, u, it = _dual_active_set(np.linalg.inv(Q), c, N, bN, n_eq, max_iter)
        u_g, v_e, w = split(u)
    else:
        # proximal point: each subproblem adds rho/2 |x - x_k|^2
        rho = max(1e-3 * np.abs(Q).max(initial=0.0), 1e-3)
        Qinv = np.linalg.inv(Q + rho * np.eye(n))
        x = np.zeros(n)
        it = 0
        for _ in range(max_iter):
            x_new, u, k = _dual_active_set(Qinv, c - rho * x, N, bN, n_eq, max_iter)
            it += k
            u_g, v_e, w = split(u)
            step = np.abs(x_new - x).max(initial=0.0)
            x = x_new
            if step <= 1e-14 * (1.0 + np.abs(x).max(initial=0.0)) or _kkt(Q, c, G, h, E, d, nonneg_idx, x, u_g, v_e, w) <= tol:
                break
            if not np.all(np.isfinite(x)) or np.abs(x).max() > 1e12:
                raise RuntimeError("QP appears unbounded below")
    res = _kkt(Q, c, G, h, E, d, nonneg_idx, x, u_g, v_e, w)
    return QPResult(x=x, ineq=u_g, eq=v_e, nonneg=w, iterations=it, kkt_residual=res)
