"""Semidefinite reformulation of the worst-case expected gap minimization.

The semi-infinite constraint ``xi'Y xi + y'xi + y0 >= f_alpha(x, xi)`` on the
support is replaced by a matrix inequality in

    w = (x, lam, mu, y0, y, Y)

through the (m+1)x(m+1) matrix ``D_alpha(w)``, whose quadratic form in
``[1; xi]`` equals ``xi'Y xi + y'xi + y0 - omega_alpha(x, lam, mu; xi)``.
Quadratic supports enter through the S-procedure with multipliers ``s >= 0``.

``D_alpha`` is quadratic in ``w``. When ``M(xi)`` has a ``xi``-independent
symmetric part ``Ms`` it splits exactly as

    D_alpha(w) = Lin(w) - alpha/2 sum_i a_i(w) a_i(w)' - e0 e0' |R x|^2

with ``Lin`` and ``a_i`` affine and ``R'R = Ms - I/(2 alpha)``, so a Schur
complement turns it into one affine LMI of size ``(m+1) + n + rank(R)``. The
factor ``R`` exists exactly when ``alpha >= 1/(2 beta0)``, which is also the
condition under which the matrix inequality is convex.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .ambiguity import MomentAmbiguity
from .model import AffineSVIP, SetMode

log = logging.getLogger(__name__)


# -- supports ---------------------------------------------------------------


@dataclass(frozen=True)
class SupportSpec:
    """Support ``{xi | xi'A_i xi + 2 b_i'xi + c_i <= 0 for all i}`` or all of R^m.

    ``quadratics`` is empty for the full space.
    """

    quadratics: tuple = ()

    @property
    def is_full_space(self):
        return len(self.quadratics) == 0

    @property
    def p(self):
        return len(self.quadratics)

    def g(self, xi):
        """Values ``g_i(xi)`` for each quadratic, shape (..., p)."""
        xi = np.asarray(xi, dtype=np.float64)
        return np.stack(
            [np.einsum("...i,ij,...j->...", xi, A, xi) + 2 * xi @ b + c for A, b, c in self.quadratics],
            axis=-1,
        ) if self.quadratics else np.zeros(xi.shape[:-1] + (0,))

    def contains(self, xi, tol=0.0):
        return np.all(self.g(xi) <= tol, axis=-1)

    def augmented(self):
        """Matrices ``[[c_i, b_i'], [b_i, A_i]]``."""
        out = []
        for A, b, c in self.quadratics:
            m = b.shape[0]
            T = np.empty((m + 1, m + 1))
            T[0, 0] = c
            T[0, 1:] = b
            T[1:, 0] = b
            T[1:, 1:] = A
            out.append(T)
        return out

    def is_slater_point(self, xi):
        """True when ``xi`` strictly satisfies every quadratic."""
        return bool(np.all(self.g(xi) < 0))


def support_full():
    return SupportSpec(())


def support_box(lo, hi):
    """Box ``lo <= xi <= hi`` as ``(xi_i - lo_i)(xi_i - hi_i) <= 0``."""
    lo = np.asarray(lo, dtype=np.float64).reshape(-1)
    hi = np.asarray(hi, dtype=np.float64).reshape(-1)
    if lo.shape != hi.shape:
        raise ValueError("lo and hi must have the same length")
    if np.any(lo >= hi):
        raise ValueError("box requires lo < hi in every coordinate")
    m = lo.shape[0]
    quads = []
    for i in range(m):
        A = np.zeros((m, m))
        A[i, i] = 1.0
        b = np.zeros(m)
        b[i] = -0.5 * (lo[i] + hi[i])
        quads.append((A, b, float(lo[i] * hi[i])))
    return SupportSpec(tuple(quads))


def support_ellipsoids(centers, shapes):
    """Intersection of ellipsoids ``(xi - c)' P^{-1} (xi - c) <= 1``."""
    quads = []
    for center, P in zip(centers, shapes, strict=True):
        center = np.asarray(center, dtype=np.float64).reshape(-1)
        P = np.atleast_2d(np.asarray(P, dtype=np.float64))
        try:
            np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            raise ValueError("ellipsoid shape matrices must be positive definite") from None
        Pinv = np.linalg.inv(P)
        Pinv = 0.5 * (Pinv + Pinv.T)
        quads.append((Pinv, -Pinv @ center, float(center @ Pinv @ center - 1.0)))
    return SupportSpec(tuple(quads))


# -- decision variables -----------------------------------------------------


@dataclass
class DecisionBlock:
    """Point ``(x, lam, mu, y0, y, Y, z0, s)`` of the reformulated problem.

    ``lam`` follows the nonnegative convention for ``S = {Ax <= b}``; see
    :meth:`to_dict` for the opposite sign.
    """

    x: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    y0: float
    y: np.ndarray
    Y: np.ndarray
    z0: float = 0.0
    s: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def to_dict(self, lambda_convention="nonneg"):
        sign = -1.0 if lambda_convention == "nonpos" else 1.0
        return {
            "x": self.x.tolist(),
            "lambda": (sign * self.lam).tolist(),
            "lambda_convention": lambda_convention,
            "mu": self.mu.tolist(),
            "y0": float(self.y0),
            "y": self.y.tolist(),
            "Y": self.Y.tolist(),
            "z0": float(self.z0),
            "s": self.s.tolist(),
        }


@dataclass(frozen=True)
class Layout:
    """Offsets of each block in the flattened decision vector."""

    n: int
    l: int
    m: int
    has_mu: bool
    has_z0: bool
    p: int

    @property
    def sizes(self):
        m = self.m
        return {
            "x": self.n,
            "lam": self.l,
            "mu": self.n if self.has_mu else 0,
            "y0": 1,
            "y": m,
            "Y": m * (m + 1) // 2,
            "z0": 1 if self.has_z0 else 0,
            "s": self.p,
        }

    @property
    def slices(self):
        out, k = {}, 0
        for name, size in self.sizes.items():
            out[name] = slice(k, k + size)
            k += size
        return out

    @property
    def dim(self):
        return sum(self.sizes.values())

    def triu(self):
        return np.triu_indices(self.m)

    def pack(self, w: DecisionBlock):
        sl = self.slices
        z = np.zeros(self.dim)
        z[sl["x"]] = w.x
        z[sl["lam"]] = w.lam
        if self.has_mu:
            z[sl["mu"]] = w.mu
        z[sl["y0"]] = w.y0
        z[sl["y"]] = w.y
        z[sl["Y"]] = np.asarray(w.Y)[self.triu()]
        if self.has_z0:
            z[sl["z0"]] = w.z0
        z[sl["s"]] = w.s
        return z

    def unpack(self, z):
        sl = self.slices
        iu = self.triu()
        Y = np.zeros((self.m, self.m))
        Y[iu] = z[sl["Y"]]
        Y = Y + np.triu(Y, 1).T
        return DecisionBlock(
            x=z[sl["x"]].copy(),
            lam=z[sl["lam"]].copy(),
            mu=z[sl["mu"]].copy() if self.has_mu else np.zeros(0),
            y0=float(z[sl["y0"]][0]),
            y=z[sl["y"]].copy(),
            Y=Y,
            z0=float(z[sl["z0"]][0]) if self.has_z0 else 0.0,
            s=z[sl["s"]].copy(),
        )


# -- the matrix-valued function ---------------------------------------------


def _mu_or_zero(inst, w):
    if inst.feasible.mode is SetMode.EQUALITY_NONNEG:
        return np.asarray(w.mu, dtype=np.float64)
    return np.zeros(inst.n)


def assemble_D(inst: AffineSVIP, alpha, w: DecisionBlock):
    """``D_alpha(w) = [[y0, y'/2], [y/2, Y]] - G - alpha/2 sum_i H^i``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    S = inst.feasible
    x = inst._check_x(w.x)
    lam = np.asarray(w.lam, dtype=np.float64).reshape(-1)
    mu = _mu_or_zero(inst, w)
    y = np.asarray(w.y, dtype=np.float64).reshape(-1)
    Y = np.asarray(w.Y, dtype=np.float64)
    m = inst.m
    if lam.shape != (S.l,) or mu.shape != (inst.n,) or y.shape != (m,) or Y.shape != (m, m):
        raise ValueError("decision block dimensions do not match the instance")
    C, c0 = inst.coeffs_c(x)
    p0 = c0 + S.A.T @ lam - mu
    top = np.empty((m + 1, m + 1))
    top[0, 0] = w.y0
    top[0, 1:] = 0.5 * y
    top[1:, 0] = 0.5 * y
    top[1:, 1:] = Y
    G = np.zeros((m + 1, m + 1))
    G[0, 0] = (S.b - S.A @ x) @ lam + mu @ x
    H = np.zeros((m + 1, m + 1))
    for i in range(inst.n):
        v = np.concatenate([[p0[i]], C[i]])
        H += np.outer(v, v)
    return top - G - 0.5 * alpha * H


def omega_hessian(inst: AffineSVIP, alpha, xi):
    """Hessian of ``omega_alpha`` in ``(x, lam, mu)`` (``mu`` only for equality form)."""
    M = inst.M(xi)
    A = inst.feasible.A
    n, l = inst.n, A.shape[0]
    I = np.eye(n)
    Ma = M - I / alpha
    blocks = [
        [M.T @ M, Ma.T @ A.T],
        [A @ Ma, A @ A.T],
    ]
    if inst.feasible.mode is SetMode.EQUALITY_NONNEG:
        blocks[0].append(-Ma.T)
        blocks[1].append(-A)
        blocks.append([-Ma, -A.T, I])
    return alpha * np.block(blocks)


def _residual_factor(inst: AffineSVIP, alpha, tol=1e-10):
    """``R`` with ``R'R = Ms - I/(2 alpha)``; rows for zero eigenvalues dropped."""
    if not inst.has_constant_symmetric_part():
        raise ValueError(
            "the lifted reformulation needs M(xi) with a xi-independent symmetric part"
        )
    K = inst.symmetric_part() - np.eye(inst.n) / (2.0 * alpha)
    evals, V = np.linalg.eigh(K)
    scale = max(1.0, np.abs(evals).max())
    if evals[0] < -tol * scale:
        beta0 = inst.beta0()
        raise ValueError(
            f"alpha={alpha:g} is below the convexity threshold 1/(2 beta0)={1 / (2 * beta0):g}; "
            "the matrix inequality is not convex there and cannot be lifted"
        )
    keep = evals > tol * scale
    return np.sqrt(evals[keep])[:, None] * V[:, keep].T


# -- the conic program ------------------------------------------------------


@dataclass(frozen=True)
class LmiBlock:
    """``F0 + sum_j z_j F[j] >= 0`` in the semidefinite order."""

    name: str
    F0: np.ndarray
    F: np.ndarray  # (dim, k, k)

    def __call__(self, z):
        return self.F0 + np.tensordot(z, self.F, axes=1)

    @property
    def size(self):
        return self.F0.shape[0]


@dataclass(frozen=True)
class SocBlock:
    """``t0 + t @ z >= |u0 + U @ z|``."""

    name: str
    t0: float
    t: np.ndarray
    u0: np.ndarray
    U: np.ndarray

    def margin(self, z):
        return float(self.t0 + self.t @ z - np.linalg.norm(self.u0 + self.U @ z))


@dataclass(frozen=True)
class ConicProgram:
    """``min c'z + c0`` over affine LMI, SOC and linear constraints."""

    layout: Layout
    c: np.ndarray
    c0: float
    lmi: tuple
    soc: tuple
    ineq: tuple  # (G, h): G z <= h
    eq: tuple  # (E, d): E z = d
    nonneg: np.ndarray
    alpha: float
    inst: AffineSVIP = field(repr=False, compare=False)
    amb: MomentAmbiguity = field(repr=False, compare=False)
    support: SupportSpec = field(repr=False, compare=False)

    @property
    def dim(self):
        return self.layout.dim

    def objective(self, z):
        return float(self.c @ z + self.c0)

    def to_dict(self):
        """Block sizes and coefficient tensors, for debugging."""
        return {
            "dim": self.dim,
            "layout": {k: [s.start, s.stop] for k, s in self.layout.slices.items()},
            "alpha": self.alpha,
            "c": self.c.tolist(),
            "c0": self.c0,
            "lmi": [{"name": b.name, "size": b.size, "F0": b.F0.tolist(), "F": b.F.tolist()} for b in self.lmi],
            "soc": [
                {"name": b.name, "t0": b.t0, "t": b.t.tolist(), "u0": b.u0.tolist(), "U": b.U.tolist()}
                for b in self.soc
            ],
            "ineq": {"G": self.ineq[0].tolist(), "h": self.ineq[1].tolist()},
            "eq": {"E": self.eq[0].tolist(), "d": self.eq[1].tolist()},
            "nonneg": self.nonneg.tolist(),
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def lifted_block(inst: AffineSVIP, alpha, w: DecisionBlock, support: SupportSpec, R=None):
    """Affine Schur-complement lift of ``D_alpha(w) + sum_i s_i T_i``.

    The result is positive semidefinite exactly when the (nonlinear)
    original is, because the lower-right block is positive definite.
    """
    if R is None:
        R = _residual_factor(inst, alpha)
    S = inst.feasible
    m, n, r = inst.m, inst.n, R.shape[0]
    x = np.asarray(w.x, dtype=np.float64)
    lam = np.asarray(w.lam, dtype=np.float64)
    mu = _mu_or_zero(inst, w)
    C, c0 = inst.coeffs_c(x)
    p0 = c0 + S.A.T @ lam - mu
    k = m + 1 + n + r
    B = np.zeros((k, k))
    ylin = 0.5 * (np.asarray(w.y) - inst.q_lin.T @ x)
    B[0, 0] = w.y0 - S.b @ lam - inst.q_const @ x
    B[0, 1:m + 1] = ylin
    B[1:m + 1, 0] = ylin
    B[1:m + 1, 1:m + 1] = w.Y
    for si, T in zip(np.asarray(w.s).reshape(-1), support.augmented()):
        B[:m + 1, :m + 1] += si * T
    Ua = np.vstack([p0 - x / alpha, C.T])  # (m+1, n)
    B[:m + 1, m + 1:m + 1 + n] = Ua
    B[m + 1:m + 1 + n, :m + 1] = Ua.T
    B[m + 1:m + 1 + n, m + 1:m + 1 + n] = (2.0 / alpha) * np.eye(n)
    if r:
        Rx = R @ x
        B[0, m + 1 + n:] = Rx
        B[m + 1 + n:, 0] = Rx
        B[m + 1 + n:, m + 1 + n:] = np.eye(r)
    return B


def schur_complement(inst: AffineSVIP, alpha, B):
    """Schur complement of the lower-right block of a lifted matrix."""
    m1 = inst.m + 1
    P = B[:m1, m1:]
    Dg = np.diag(B[m1:, m1:])
    return B[:m1, :m1] - (P / Dg) @ P.T


def _affine_map(fn, dim):
    F0 = fn(np.zeros(dim))
    F = np.empty((dim,) + F0.shape)
    e = np.zeros(dim)
    for j in range(dim):
        e[j] = 1.0
        F[j] = fn(e) - F0
        e[j] = 0.0
    return F0, F


def build(inst: AffineSVIP, alpha, amb: MomentAmbiguity, support: SupportSpec | None = None):
    """Assemble the lifted conic program for the worst-case expected gap.

    Parameters
    ----------
    inst : AffineSVIP
        Problem data; the symmetric part of ``M(xi)`` must not depend on ``xi``.
    alpha : float
        Gap regularization, at least ``1/(2 beta0)``.
    amb : MomentAmbiguity
        Moment information ``(mu0, Sigma0, gamma1, gamma2)``.
    support : SupportSpec, optional
        Defaults to the full space.
    """
    if support is None:
        support = support_full()
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if amb.m != inst.m:
        raise ValueError(f"ambiguity set has dimension {amb.m}, instance has m={inst.m}")
    for A, b, c in support.quadratics:
        if A.shape != (inst.m, inst.m):
            raise ValueError("support quadratics do not match the random dimension")
    R = _residual_factor(inst, alpha)
    S = inst.feasible
    eq_mode = S.mode is SetMode.EQUALITY_NONNEG
    layout = Layout(n=inst.n, l=S.l, m=inst.m, has_mu=eq_mode, has_z0=amb.gamma1 > 0, p=support.p)
    sl = layout.slices
    dim = layout.dim
    m = inst.m
    iu = layout.triu()

    c = np.zeros(dim)
    c[sl["y0"]] = 1.0
    c[sl["y"]] = amb.mu0
    W = amb.second_moment_weight()
    c[sl["Y"]] = np.where(iu[0] == iu[1], 1.0, 2.0) * W[iu]
    if layout.has_z0:
        c[sl["z0"]] = 1.0

    F0, F = _affine_map(lambda z: lifted_block(inst, alpha, layout.unpack(z), support, R), dim)
    blocks = [LmiBlock("D", F0, F)]
    Y0, YF = _affine_map(lambda z: layout.unpack(z).Y, dim)
    blocks.append(LmiBlock("Y", Y0, YF))

    socs = []
    if layout.has_z0:
        # u = sqrt(gamma1) L'(y + 2 Y mu0)
        def u_of(z):
            w = layout.unpack(z)
            return math.sqrt(amb.gamma1) * amb.factor.T @ (w.y + 2.0 * w.Y @ amb.mu0)

        u0, U = _affine_map(u_of, dim)
        t = np.zeros(dim)
        t[sl["z0"]] = 1.0
        socs.append(SocBlock("mean", 0.0, t, u0, U.T))

    G_rows, h_rows, E_rows, d_rows = [], [], [], []
    xs = np.arange(dim)[sl["x"]]
    if eq_mode:
        for i in range(S.l):
            row = np.zeros(dim)
            row[xs] = S.A[i]
            E_rows.append(row)
            d_rows.append(S.b[i])
        nonneg = np.concatenate([xs, np.arange(dim)[sl["mu"]], np.arange(dim)[sl["s"]]])
    else:
        for i in range(S.l):
            row = np.zeros(dim)
            row[xs] = S.A[i]
            G_rows.append(row)
            h_rows.append(S.b[i])
        nonneg = np.concatenate([np.arange(dim)[sl["lam"]], np.arange(dim)[sl["s"]]])
    ineq = (np.array(G_rows).reshape(-1, dim), np.array(h_rows, dtype=np.float64))
    eq = (np.array(E_rows).reshape(-1, dim), np.array(d_rows, dtype=np.float64))
    return ConicProgram(
        layout=layout,
        c=c,
        c0=0.0,
        lmi=tuple(blocks),
        soc=tuple(socs),
        ineq=ineq,
        eq=eq,
        nonneg=nonneg.astype(int),
        alpha=float(alpha),
        inst=inst,
        amb=amb,
        support=support,
    )
