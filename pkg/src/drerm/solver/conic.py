"""Primal-dual interior-point method for small dense conic programs.

Handles programs of the form built by :func:`drerm.nsdp.build`:

    min  c'z
    s.t. F_k(z) >= 0      (affine LMIs)
         t(z) >= |u(z)|   (second-order cones)
         G z <= h, z_i >= 0 for i in nonneg
         E z = d

Every cone constraint is written as ``s = h_K - G_K z`` with ``s`` in the
cone. Iterations are infeasible-start Newton steps on the perturbed
optimality conditions ``s o zeta = sigma mu e`` in Nesterov-Todd scaled
coordinates, with a Mehrotra predictor-corrector choice of ``sigma`` (capped
by ``mu_factor``), a fraction-to-boundary rule and Armijo backtracking on the
merit ``<s, zeta> + |dual residual| + |primal residual|``. The Newton
equations are solved as a least-squares problem by QR, followed by a few
sweeps of iterative refinement on the dual equation, which keeps the
attainable KKT residual near 1e-10 on the lifted programs.
"""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import linprog

from ..model import SetMode

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    MAX_ITER = "max_iter"
    NUMERICAL_FAILURE = "numerical_failure"
    INFEASIBLE = "infeasible"


@dataclass
class SolverSettings:
    tol: float = 1e-7
    max_iter: int = 200
    mu_factor: float = 0.2  # upper bound on the centering parameter sigma
    fraction_to_boundary: float = 0.99
    armijo: float = 1e-2
    reg: float = 1e-10
    reg_max: float = 1e-6
    stall_iter: int = 25  # give up after this many iterations without halving the KKT residual
    refine: int = 2  # iterative refinement sweeps on the Newton system


@dataclass
class Multipliers:
    """Dual variables, signed as in :func:`kkt_residual`."""

    lmi: list
    soc: list
    ineq: np.ndarray
    nonneg: np.ndarray
    eq: np.ndarray


@dataclass
class SolveReport:
    status: Status
    objective: float
    iterations: int
    kkt_residual: float
    barrier_mu_final: float
    wall_time: float
    merit_history: list = field(default_factory=list, repr=False)
    multipliers: Multipliers | None = field(default=None, repr=False)


def _adjoint(prog, Z, zs):
    out = np.zeros(prog.dim)
    for blk, Zk in zip(prog.lmi, Z):
        out += np.tensordot(blk.F, Zk, axes=([1, 2], [0, 1]))
    for soc, zk in zip(prog.soc, zs):
        out += np.vstack([soc.t, soc.U]).T @ zk
    return out


def kkt_residual(prog, point, mult: Multipliers):
    """Largest of the primal, dual and complementarity residuals.

    ``point`` is a :class:`~drerm.nsdp.DecisionBlock` or a packed vector.
    Lagrangian convention: ``c'z - sum <Z_k, F_k(z)> - zeta'(t, u)(z)
    + ineq'(Gz - h) - nonneg'z_nn + eq'(Ez - d)``; complementarity is the
    total ``sum |<dual, slack>|``.
    """
    z = np.asarray(point, dtype=np.float64) if isinstance(point, np.ndarray) else prog.layout.pack(point)
    G, h = prog.ineq
    E, d = prog.eq
    nn = np.asarray(prog.nonneg, dtype=int)
    primal = [0.0]
    dual = [0.0]
    comp = 0.0
    for blk, Zk in zip(prog.lmi, mult.lmi):
        Fz = blk(z)
        primal.append(-np.linalg.eigvalsh(Fz)[0])
        dual.append(-np.linalg.eigvalsh(0.5 * (Zk + Zk.T))[0])
        comp += abs(np.sum(Fz * Zk))
    for soc, zk in zip(prog.soc, mult.soc):
        a = np.concatenate([[soc.t0 + soc.t @ z], soc.u0 + soc.U @ z])
        primal.append(np.linalg.norm(a[1:]) - a[0])
        dual.append(np.linalg.norm(zk[1:]) - zk[0])
        comp += abs(zk @ a)
    slack = h - G @ z
    if slack.size:
        primal.append(-slack.min())
        dual.append(-mult.ineq.min())
        comp += np.abs(mult.ineq * slack).sum()
    if nn.size:
        primal.append(-z[nn].min())
        dual.append(-mult.nonneg.min())
        comp += np.abs(mult.nonneg * z[nn]).sum()
    if E.shape[0]:
        primal.append(np.abs(E @ z - d).max())
    r = prog.c - _adjoint(prog, mult.lmi, mult.soc) + G.T @ mult.ineq + E.T @ mult.eq
    r[nn] -= mult.nonneg
    stationarity = np.abs(r).max(initial=0.0)
    return float(max(max(primal), max(dual), stationarity, comp))


def _interior_x(S):
    """A strictly interior point of ``S`` (zero when it is one)."""
    n = S.n
    x = np.zeros(n)
    if S.mode is SetMode.INEQUALITY:
        if np.all(S.A @ x < S.b):
            return x
        norms = np.linalg.norm(S.A, axis=1)
        # max t s.t. A x + t |a_i| <= b, t <= 1
        res = linprog(
            np.r_[np.zeros(n), -1.0],
            A_ub=np.hstack([S.A, norms[:, None]]),
            b_ub=S.b,
            bounds=[(None, None)] * n + [(None, 1.0)],
            method="highs",
        )
    else:
        if S.l == 0:
            return np.ones(n)
        # max t s.t. A x = b, x >= t, t <= 1
        res = linprog(
            np.r_[np.zeros(n), -1.0],
            A_ub=np.hstack([-np.eye(n), np.ones((n, 1))]),
            b_ub=np.zeros(n),
            A_eq=np.hstack([S.A, np.zeros((S.l, 1))]),
            b_eq=S.b,
            bounds=[(None, None)] * n + [(None, 1.0)],
            method="highs",
        )
    if res.status != 0 or res.x[-1] <= 1e-9:
        return None
    return res.x[:n]


def _starting_point(prog):
    from ..nsdp import DecisionBlock, lifted_block, schur_complement, _residual_factor

    inst, layout = prog.inst, prog.layout
    S = inst.feasible
    x = _interior_x(S)
    if x is None:
        return None
    m = inst.m
    eq_mode = S.mode is SetMode.EQUALITY_NONNEG
    w = DecisionBlock(
        x=x,
        lam=np.zeros(S.l) if eq_mode else np.ones(S.l),
        mu=np.ones(inst.n) if eq_mode else np.zeros(0),
        y0=0.0,
        y=np.zeros(m),
        Y=np.zeros((m, m)),
        s=np.ones(layout.p),
    )
    R = _residual_factor(inst, prog.alpha)
    S0 = schur_complement(inst, prog.alpha, lifted_block(inst, prog.alpha, w, prog.support, R))
    shift = max(0.0, -np.linalg.eigvalsh(S0)[0]) + 1.0
    w.y0 = shift
    w.Y = shift * np.eye(m)
    if layout.has_z0:
        u = math.sqrt(prog.amb.gamma1) * prog.amb.factor.T @ (w.y + 2.0 * w.Y @ prog.amb.mu0)
        w.z0 = float(np.linalg.norm(u)) + 1.0
    return layout.pack(w)


# -- cone algebra ---------------------------------------------------------
#
# A point of the product cone is a list ``[lp, soc_1, ..., lmi_1, ...]`` with
# a vector for the nonnegative orthant, a vector per second-order cone and a
# symmetric matrix per LMI.


class _Cones:
    def __init__(self, prog):
        G, h = prog.ineq
        nn = np.asarray(prog.nonneg, dtype=int)
        dim = prog.dim
        self.n_ineq = G.shape[0]
        # s_lp = h_lp - G_lp z
        self.G_lp = np.vstack([G, -np.eye(dim)[nn]])
        self.h_lp = np.concatenate([h, np.zeros(nn.size)])
        self.soc_J = [np.vstack([q.t, q.U]) for q in prog.soc]
        self.soc_a0 = [np.concatenate([[q.t0], q.u0]) for q in prog.soc]
        self.lmi = list(prog.lmi)
        self.n_soc = len(self.soc_J)
        self.degree = self.G_lp.shape[0] + self.n_soc + sum(b.size for b in self.lmi)

    def slack(self, z):
        return (
            [self.h_lp - self.G_lp @ z]
            + [a0 + J @ z for a0, J in zip(self.soc_a0, self.soc_J)]
            + [blk(z) for blk in self.lmi]
        )

    def G(self, dz):
        """Linear part of ``-slack``, i.e. ``G dz`` with ``s = h - G z``."""
        return (
            [self.G_lp @ dz]
            + [-(J @ dz) for J in self.soc_J]
            + [-np.tensordot(dz, blk.F, axes=1) for blk in self.lmi]
        )

    def GT(self, v):
        out = self.G_lp.T @ v[0]
        for J, vk in zip(self.soc_J, v[1:1 + self.n_soc]):
            out -= J.T @ vk
        for blk, Vk in zip(self.lmi, v[1 + self.n_soc:]):
            out -= np.tensordot(blk.F, Vk, axes=([1, 2], [0, 1]))
        return out

    def kinds(self):
        return ["lp"] + ["soc"] * self.n_soc + ["lmi"] * len(self.lmi)


def _inner(u, v):
    return float(sum(np.sum(a * b) for a, b in zip(u, v)))


def _axpy(a, x, y):
    return [yi + a * xi for xi, yi in zip(x, y)]


def _identity(kind, like):
    if kind == "lp":
        return np.ones_like(like)
    if kind == "soc":
        e = np.zeros_like(like)
        e[0] = 1.0
        return e
    return np.eye(like.shape[0])


def _jordan(kind, u, v):
    if kind == "lp":
        return u * v
    if kind == "soc":
        return np.concatenate([[u @ v], u[0] * v[1:] + v[0] * u[1:]])
    return 0.5 * (u @ v + v @ u)


def _soc_det(v):
    return v[0] * v[0] - v[1:] @ v[1:]


def _in_interior(kind, v):
    if kind == "lp":
        return bool(np.all(v > 0))
    if kind == "soc":
        return bool(v[0] > 0 and _soc_det(v) > 0)
    try:
        np.linalg.cholesky(v)
    except np.linalg.LinAlgError:
        return False
    return True


def _max_step(kind, v, dv):
    """Largest ``a`` with ``v + a dv`` in the cone (``v`` interior; may be inf)."""
    if kind == "lp":
        neg = dv < 0
        return float(np.min(-v[neg] / dv[neg])) if np.any(neg) else math.inf
    if kind == "soc":
        qa = _soc_det(dv)
        qb = 2.0 * (v[0] * dv[0] - v[1:] @ dv[1:])
        qc = _soc_det(v)
        amax = -v[0] / dv[0] if dv[0] < 0 else math.inf
        if abs(qa) > 1e-300:
            disc = qb * qb - 4.0 * qa * qc
            if disc >= 0:
                sq = math.sqrt(disc)
                for r in ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)):
                    if r > 0:
                        amax = min(amax, r)
        elif qb < 0:
            amax = min(amax, -qc / qb)
        return amax
    Li = np.linalg.inv(np.linalg.cholesky(v))
    ev = np.linalg.eigvalsh(Li @ dv @ Li.T)[0]
    return -1.0 / ev if ev < 0 else math.inf


def _step_to_boundary(kinds, s, ds, zeta, dzeta):
    return min(
        min(_max_step(k, si, dsi) for k, si, dsi in zip(kinds, s, ds)),
        min(_max_step(k, zi, dzi) for k, zi, dzi in zip(kinds, zeta, dzeta)),
    )


class _Scaling:
    """Nesterov-Todd scaling ``W`` with ``W^{-T} s = W zeta = lam``."""

    def __init__(self, kind, s, zeta):
        self.kind = kind
        if kind == "lp":
            self.d = np.sqrt(s / zeta)
            self.lam = np.sqrt(s * zeta)
        elif kind == "soc":
            k = s.size
            Jm = -np.eye(k)
            Jm[0, 0] = 1.0
            s_n = math.sqrt(_soc_det(s))
            z_n = math.sqrt(_soc_det(zeta))
            sb = s / s_n
            zb = zeta / z_n
            gam = math.sqrt(0.5 * (1.0 + sb @ zb))
            wb = (sb + Jm @ zb) / (2.0 * gam)
            beta = math.sqrt(s_n / z_n)
            # (2 wb wb' - J) maps zb to sb; W uses its square root, the same
            # form built on the Jordan square root of wb. W is symmetric.
            u = wb.copy()
            u[0] += 1.0
            u /= math.sqrt(2.0 * (wb[0] + 1.0))
            self.Winv = (2.0 * np.outer(Jm @ u, Jm @ u) - Jm) / beta
            self.lam = self.Winv @ s
        else:
            Ls = np.linalg.cholesky(s)
            Lz = np.linalg.cholesky(zeta)
            _, sv, Vt = np.linalg.svd(Lz.T @ Ls)
            # W(Z) = R' Z R and W^{-T}(S) = R^{-1} S R^{-T}
            self.Rinv = np.sqrt(sv)[:, None] * (Vt @ np.linalg.inv(Ls))
            self.lam = sv

    def lam_full(self):
        return np.diag(self.lam) if self.kind == "lmi" else self.lam

    def lam_solve(self, r):
        """``x`` with ``lam o x = r``."""
        if self.kind == "lp":
            return r / self.lam
        if self.kind == "soc":
            l0, l1 = self.lam[0], self.lam[1:]
            arw = np.block([[np.array([[l0]]), l1[None, :]], [l1[:, None], l0 * np.eye(l1.size)]])
            return np.linalg.solve(arw, r)
        return 2.0 * r / (self.lam[:, None] + self.lam[None, :])

    def inv_T(self, v):
        """``W^{-T} v`` for a slack-space ``v``."""
        if self.kind == "lp":
            return v / self.d
        if self.kind == "soc":
            return self.Winv @ v
        out = self.Rinv @ v @ self.Rinv.T
        return 0.5 * (out + out.T)

    def inv(self, v):
        """``W^{-1} v``, mapping scaled coordinates back to dual space."""
        if self.kind == "lp":
            return v / self.d
        if self.kind == "soc":
            return self.Winv @ v
        out = self.Rinv.T @ v @ self.Rinv
        return 0.5 * (out + out.T)

    def scaled_G(self, Gblock):
        """Rows of ``W^{-T} G`` (``Gblock`` is rows x dim, or dim x k x k for an LMI)."""
        if self.kind == "lp":
            return Gblock / self.d[:, None]
        if self.kind == "soc":
            return self.Winv @ Gblock
        B = self.Rinv @ Gblock @ self.Rinv.T
        return B.reshape(B.shape[0], -1).T


class _NewtonSystem:
    """Least-squares solve of the scaled Newton equations.

    With ``M = W^{-T} G`` the equations reduce to the normal equations of
    ``min |M dx + b|^2/2 + r_d'dx`` over ``E dx = -r_e``; factoring ``M`` by
    QR on the null space of ``E`` avoids squaring its condition number.
    """

    def __init__(self, cones, scalings, eq_basis, reg, reg_max):
        blocks = [scalings[0].scaled_G(cones.G_lp)]
        blocks += [sc.scaled_G(-J) for J, sc in zip(cones.soc_J, scalings[1:1 + cones.n_soc])]
        blocks += [sc.scaled_G(-blk.F) for blk, sc in zip(cones.lmi, scalings[1 + cones.n_soc:])]
        self.M = np.vstack(blocks)
        self.N, self.E_pinv = eq_basis
        MN = self.M @ self.N
        k = MN.shape[1]
        delta = 0.0
        while True:
            A = MN if delta == 0.0 else np.vstack([MN, math.sqrt(delta) * np.eye(k)])
            self.Q, self.R = np.linalg.qr(A)
            dg = np.abs(np.diag(self.R))
            if k == 0 or dg.min() > 1e-13 * dg.max():
                break
            delta = reg if delta == 0.0 else delta * 10.0
            if delta > reg_max:
                raise np.linalg.LinAlgError("Newton system is singular")
        self.rows = MN.shape[0]

    def solve(self, r_d, r_e, b):
        """Return ``dx`` and the scaled dual step ``M dx + b``."""
        dx_p = -self.E_pinv @ r_e if r_e.size else np.zeros(self.M.shape[1])
        c = self.M @ dx_p + b
        if self.Q.shape[0] > self.rows:
            c = np.concatenate([c, np.zeros(self.Q.shape[0] - self.rows)])
        rho = self.Q @ solve_triangular(self.R, self.N.T @ r_d, trans="T")
        w = -solve_triangular(self.R, self.Q.T @ (c + rho))
        dx = dx_p + self.N @ w
        return dx, self.M @ dx + b[: self.rows]


def _equality_basis(E, dim):
    """Orthonormal null-space basis of ``E`` and its pseudo-inverse."""
    if E.shape[0] == 0:
        return np.eye(dim), np.zeros((dim, 0))
    U, sv, Vt = np.linalg.svd(E)
    rank = int(np.sum(sv > 1e-12 * sv[0]))
    return Vt[rank:].T, np.linalg.pinv(E)


def _flatten(parts):
    return np.concatenate([np.ravel(p) for p in parts])


def _unflatten(vec, like):
    out = []
    pos = 0
    for p in like:
        out.append(vec[pos:pos + p.size].reshape(p.shape))
        pos += p.size
    return out


def _to_multipliers(cones, zeta, nu):
    lp = zeta[0]
    return Multipliers(
        lmi=[0.5 * (Z + Z.T) for Z in zeta[1 + cones.n_soc:]],
        soc=list(zeta[1:1 + cones.n_soc]),
        ineq=lp[: cones.n_ineq].copy(),
        nonneg=lp[cones.n_ineq:].copy(),
        eq=nu.copy(),
    )


def solve_conic(prog, tol=None, start=None, settings: SolverSettings | None = None):
    """Solve a lifted conic program to the KKT tolerance.

    Parameters
    ----------
    prog : ConicProgram
    tol : float, optional
        KKT residual target; overrides ``settings.tol`` (default 1e-7).
    start : DecisionBlock, optional
        Strictly feasible primal starting point. A computed interior point is
        used when omitted or not strictly feasible.
    settings : SolverSettings, optional

    Returns
    -------
    (DecisionBlock or None, SolveReport)
        The block is ``None`` only when ``S`` has no interior point. The
        report carries the dual variables in ``multipliers``.
    """
    settings = settings or SolverSettings()
    tol = settings.tol if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not 0.0 < settings.mu_factor < 1.0:
        raise ValueError("mu_factor must lie in (0, 1)")
    t_start = time.perf_counter()
    layout = prog.layout
    cones = _Cones(prog)
    kinds = cones.kinds()
    E, d = prog.eq
    c = prog.c

    z = None
    if start is not None:
        z = layout.pack(start)
        feasible = all(_in_interior(k, v) for k, v in zip(kinds, cones.slack(z)))
        if not feasible or (E.shape[0] and np.abs(E @ z - d).max() > 1e-9):
            log.warning("supplied start is not strictly feasible; computing one")
            z = None
    if z is None:
        z = _starting_point(prog)
    if z is None:
        report = SolveReport(Status.INFEASIBLE, math.nan, 0, math.inf, math.nan, time.perf_counter() - t_start)
        return None, report

    eq_basis = _equality_basis(E, prog.dim)
    s = cones.slack(z)
    zeta = _initial_dual(cones, kinds, c, eq_basis[0], s)
    nu = np.zeros(E.shape[0])
    h_all = cones.slack(np.zeros_like(z))

    def residuals(z, s, zeta, nu):
        r_d = c + cones.GT(zeta) + (E.T @ nu if E.shape[0] else 0.0)
        # r_p = G z + s - h
        Gz = cones.G(z)
        r_p = [gz + si - hi for gz, si, hi in zip(Gz, s, h_all)]
        r_e = E @ z - d if E.shape[0] else np.zeros(0)
        return r_d, r_p, r_e

    def merit(gap, r_d, r_p, r_e):
        rp = max([np.abs(v).max(initial=0.0) for v in r_p] + [np.abs(r_e).max(initial=0.0)])
        return gap + np.abs(r_d).max(initial=0.0) + rp

    history = []
    best_kkt, best_it = math.inf, 0
    status = Status.MAX_ITER
    kkt = math.inf
    it = 0
    r_d, r_p, r_e = residuals(z, s, zeta, nu)
    gap = _inner(s, zeta)
    phi = merit(gap, r_d, r_p, r_e)
    history.append(phi)
    for it in range(1, settings.max_iter + 1):
        mult = _to_multipliers(cones, zeta, nu)
        kkt = kkt_residual(prog, z, mult)
        mu = gap / cones.degree
        log.debug("iter %d mu=%.3e obj=%.12g kkt=%.3e", it, mu, c @ z + prog.c0, kkt)
        if kkt <= tol:
            status = Status.OPTIMAL
            break
        if kkt < 0.5 * best_kkt:
            best_kkt, best_it = kkt, it
        elif it - best_it >= settings.stall_iter:
            status = Status.NUMERICAL_FAILURE
            break
        if not np.all(np.isfinite(z)) or np.abs(z).max() > 1e12:
            status = Status.NUMERICAL_FAILURE
            break
        try:
            scalings = [_Scaling(k, si, zi) for k, si, zi in zip(kinds, s, zeta)]
            system = _NewtonSystem(cones, scalings, eq_basis, settings.reg, settings.reg_max)
        except np.linalg.LinAlgError:
            status = Status.NUMERICAL_FAILURE
            break
        lams = [sc.lam_full() for sc in scalings]

        def direction(rc):
            # lam o (W^{-T} ds + W dzeta) = rc
            b_vec = _flatten([sc.inv_T(rp) + sc.lam_solve(r) for sc, rp, r in zip(scalings, r_p, rc)])
            dz, dzt = system.solve(r_d, r_e, b_vec)
            zero_b = np.zeros_like(b_vec)
            zero_e = np.zeros_like(r_e)
            for _ in range(settings.refine):
                # iterative refinement of G' dzeta = -r_d on null(E)
                dzeta = [sc.inv(x) for sc, x in zip(scalings, _unflatten(dzt, s))]
                e = eq_basis[0].T @ (r_d + cones.GT(dzeta))
                if np.abs(e).max(initial=0.0) <= 1e-15 * (1.0 + np.abs(r_d).max(initial=0.0)):
                    break
                ddz, ddzt = system.solve(eq_basis[0] @ e, zero_e, zero_b)
                dz, dzt = dz + ddz, dzt + ddzt
            dzt = _unflatten(dzt, s)
            dzeta = [sc.inv(x) for sc, x in zip(scalings, dzt)]
            ds = [-rp - g for rp, g in zip(r_p, cones.G(dz))]
            return dz, ds, dzeta, dzt

        # predictor: pure Newton step towards mu = 0
        rc_aff = [-_jordan(k, lm, lm) for k, lm in zip(kinds, lams)]
        dz, ds, dzeta, dzt = direction(rc_aff)
        a_aff = min(1.0, _step_to_boundary(kinds, s, ds, zeta, dzeta))
        gap_aff = _inner(_axpy(a_aff, ds, s), _axpy(a_aff, dzeta, zeta))
        sigma = min(settings.mu_factor, max(0.0, gap_aff / gap) ** 3)
        # corrector with second-order term
        dst = [sc.inv_T(x) for sc, x in zip(scalings, ds)]
        rc = [
            sigma * mu * _identity(k, lm) + r - _jordan(k, a, b)
            for k, lm, r, a, b in zip(kinds, lams, rc_aff, dst, dzt)
        ]
        dz, ds, dzeta, _ = direction(rc)
        if E.shape[0]:
            dnu = np.linalg.lstsq(E.T, -r_d - cones.GT(dzeta), rcond=None)[0]
        else:
            dnu = np.zeros(0)

        amax = _step_to_boundary(kinds, s, ds, zeta, dzeta)
        step = min(1.0, settings.fraction_to_boundary * amax)
        while True:
            z_new = z + step * dz
            s_new = _axpy(step, ds, s)
            zeta_new = _axpy(step, dzeta, zeta)
            nu_new = nu + step * dnu
            rn = residuals(z_new, s_new, zeta_new, nu_new)
            gap_new = _inner(s_new, zeta_new)
            phi_new = merit(gap_new, *rn)
            if phi_new <= (1.0 - settings.armijo * step * (1.0 - sigma)) * phi:
                break
            step *= 0.5
            if step < 1e-10:
                break
        if step < 1e-10:
            status = Status.NUMERICAL_FAILURE
            break
        z, s, zeta, nu = z_new, s_new, zeta_new, nu_new
        r_d, r_p, r_e = rn
        gap, phi = gap_new, phi_new
        history.append(phi)
    else:
        mult = _to_multipliers(cones, zeta, nu)
        kkt = kkt_residual(prog, z, mult)
        if kkt <= tol:
            status = Status.OPTIMAL

    report = SolveReport(
        status=status,
        objective=prog.objective(z),
        iterations=it,
        kkt_residual=kkt,
        barrier_mu_final=gap / cones.degree,
        wall_time=time.perf_counter() - t_start,
        merit_history=history,
        multipliers=_to_multipliers(cones, zeta, nu),
    )
    return layout.unpack(z), report


def _initial_dual(cones, kinds, c, N, like):
    """Least-norm solution of ``G' zeta = -c`` on null(E), shifted into the cone."""
    G = np.vstack([_flatten(cones.G(e)) for e in np.eye(c.size)]).T
    GN = G @ N
    zeta = _unflatten(np.linalg.lstsq(GN.T, -N.T @ c, rcond=None)[0], like)
    zeta = [0.5 * (v + v.T) if v.ndim == 2 else v for v in zeta]
    depth = min(_cone_depth(k, v) for k, v in zip(kinds, zeta))
    shift = max(0.0, -depth) + 1.0
    return [v + shift * _identity(k, v) for k, v in zip(kinds, zeta)]


def _cone_depth(kind, v):
    """Largest ``t`` with ``v - t e`` in the cone."""
    if kind == "lp":
        return float(v.min()) if v.size else math.inf
    if kind == "soc":
        return float(v[0] - np.linalg.norm(v[1:]))
    return float(np.linalg.eigvalsh(v)[0])
