"""Affine stochastic variational inequality data.

An instance is a mapping ``F(x, xi) = M(xi) x + q(xi)`` whose entries are
affine in the random vector ``xi`` together with a polyhedral feasible set
``S``. Coefficients are stored densely:

    M(xi)[i, j] = m_lin[i, j] @ xi + m_const[i, j]
    q(xi)[i]    = q_lin[i] @ xi + q_const[i]
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np


class SetMode(str, enum.Enum):
    """How the rows ``A x ? b`` of a polyhedron are read."""

    EQUALITY_NONNEG = "equality-nonneg"  # {x | Ax = b, x >= 0}
    INEQUALITY = "inequality"  # {x | Ax <= b}


def _frozen(a, ndim=None, name="array"):
    arr = np.array(a, dtype=np.float64)
    if ndim is not None and arr.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PolyhedralSet:
    """Polyhedron ``{x | Ax = b, x >= 0}`` or ``{x | Ax <= b}``."""

    mode: SetMode
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        mode = SetMode(self.mode)
        A = np.array(self.A, dtype=np.float64)
        if A.ndim == 1 and A.size == 0:
            raise ValueError("A must be given as a 2-d array; use shape (0, n) for no rows")
        if A.ndim != 2 or A.shape[1] < 1:
            raise ValueError(f"A must be l x n with n >= 1, got shape {A.shape}")
        b = np.array(self.b, dtype=np.float64).reshape(-1)
        if b.shape[0] != A.shape[0]:
            raise ValueError(f"b has length {b.shape[0]} but A has {A.shape[0]} rows")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "mode", mode)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def nonneg_orthant(cls, n):
        return cls(SetMode.EQUALITY_NONNEG, np.zeros((0, n)), np.zeros(0))

    @property
    def n(self):
        return self.A.shape[1]

    @property
    def l(self):
        return self.A.shape[0]

    def violation(self, x):
        """Largest constraint violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=np.float64)
        r = self.A @ x - self.b
        if self.mode is SetMode.INEQUALITY:
            return float(max(0.0, r.max(initial=0.0)))
        return float(max(np.abs(r).max(initial=0.0), (-x).max(initial=0.0), 0.0))

    def contains(self, x, tol=1e-9):
        return self.violation(x) <= tol

    def inequality_form(self):
        """Rows ``(G, h)`` with ``S = {x | G x <= h}`` plus equalities ``(E, d)``."""
        if self.mode is SetMode.INEQUALITY:
            return self.A, self.b, np.zeros((0, self.n)), np.zeros(0)
        return -np.eye(self.n), np.zeros(self.n), self.A, self.b


@dataclass(frozen=True)
class AffineSVIP:
    """Affine SVIP ``F(x, xi) = M(xi) x + q(xi)`` over a polyhedron."""

    m_lin: np.ndarray  # (n, n, m)
    m_const: np.ndarray  # (n, n)
    q_lin: np.ndarray  # (n, m)
    q_const: np.ndarray  # (n,)
    feasible: PolyhedralSet

    def __post_init__(self):
        m_lin = _frozen(self.m_lin, 3, "m_lin")
        n, n2, m = m_lin.shape
        if n != n2 or n < 1:
            raise ValueError(f"m_lin must be (n, n, m), got {m_lin.shape}")
        m_const = _frozen(self.m_const, 2, "m_const")
        q_lin = _frozen(self.q_lin, 2, "q_lin")
        q_const = _frozen(np.reshape(self.q_const, -1), 1, "q_const")
        if m_const.shape != (n, n) or q_lin.shape != (n, m) or q_const.shape != (n,):
            raise ValueError("coefficient shapes are inconsistent with m_lin")
        if self.feasible.n != n:
            raise ValueError(f"feasible set has dimension {self.feasible.n}, expected {n}")
        object.__setattr__(self, "m_lin", m_lin)
        object.__setattr__(self, "m_const", m_const)
        object.__setattr__(self, "q_lin", q_lin)
        object.__setattr__(self, "q_const", q_const)

    @property
    def n(self):
        return self.m_const.shape[0]

    @property
    def m(self):
        return self.q_lin.shape[1]

    def _check_x(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise ValueError(f"x must have shape ({self.n},), got {x.shape}")
        return x

    def _check_xi(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        if xi.shape[-1:] != (self.m,):
            raise ValueError(f"xi must have trailing dimension {self.m}, got {xi.shape}")
        return xi

    def M(self, xi):
        xi = self._check_xi(xi)
        return self.m_lin @ xi + self.m_const if xi.ndim == 1 else np.einsum("ijk,...k->...ij", self.m_lin, xi) + self.m_const

    def q(self, xi):
        xi = self._check_xi(xi)
        return xi @ self.q_lin.T + self.q_const

    def eval_F(self, x, xi):
        """``F(x, xi)``; ``xi`` may be a batch of shape (N, m)."""
        x = self._check_x(x)
        C, c0 = self.coeffs_c(x)
        xi = self._check_xi(xi)
        return xi @ C.T + c0

    def coeffs_c(self, x):
        """Coefficients of ``F`` as an affine map of ``xi`` at fixed ``x``.

        Returns ``(C, c0)`` with ``F(x, xi) = C @ xi + c0``; row ``i`` of ``C``
        is ``q^i + sum_j x_j m^{ij}``.
        """
        x = self._check_x(x)
        C = self.q_lin + np.einsum("ijk,j->ik", self.m_lin, x)
        c0 = self.q_const + self.m_const @ x
        return C, c0

    def has_constant_symmetric_part(self, tol=1e-12):
        sym_lin = self.m_lin + self.m_lin.transpose(1, 0, 2)
        return bool(np.abs(sym_lin).max(initial=0.0) <= tol)

    def symmetric_part(self):
        """Symmetric part of the constant component of ``M``."""
        return 0.5 * (self.m_const + self.m_const.T)

    def beta0(self, override=None):
        """Strong monotonicity modulus ``min_v v' M(xi) v`` over unit ``v``.

        Only computable here when the symmetric part of ``M(xi)`` does not
        depend on ``xi``; otherwise pass ``override``.
        """
        if override is not None:
            return float(override)
        if not self.has_constant_symmetric_part():
            raise ValueError(
                "symmetric part of M(xi) depends on xi; beta0 would need an infimum "
                "over the support, pass override= explicitly"
            )
        return float(np.linalg.eigvalsh(self.symmetric_part())[0])

    # -- serialization -------------------------------------------------

    def to_dict(self):
        return {
            "n": self.n,
            "m": self.m,
            "mode": self.feasible.mode.value,
            "A": self.feasible.A.tolist(),
            "b": self.feasible.b.tolist(),
            "m_lin": self.m_lin.tolist(),
            "m_const": self.m_const.tolist(),
            "q_lin": self.q_lin.tolist(),
            "q_const": self.q_const.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        n, m = int(d["n"]), int(d["m"])
        A = np.array(d["A"], dtype=np.float64).reshape(-1, n)
        inst = cls(
            m_lin=np.array(d["m_lin"], dtype=np.float64).reshape(n, n, m),
            m_const=np.array(d["m_const"], dtype=np.float64).reshape(n, n),
            q_lin=np.array(d["q_lin"], dtype=np.float64).reshape(n, m),
            q_const=np.array(d["q_const"], dtype=np.float64).reshape(n),
            feasible=PolyhedralSet(SetMode(d["mode"]), A, d["b"]),
        )
        return inst

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class GameInstance:
    """Two-player game whose equilibrium conditions form an affine SVIP.

    Player ``nu`` minimizes ``1/2 x' M_nu x + v^nu + q^nu(xi)' x`` subject to
    ``A_nu x <= b_nu``, with the zero-sum coupling ``x1' R(xi) x2`` where
    ``R(xi)[i, j] = xi[i * n2 + j] + r_const[i, j]``.
    """

    M1: np.ndarray
    M2: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    r_const: np.ndarray
    Q_map: np.ndarray
    q0: np.ndarray
    x_star0: np.ndarray

    def __post_init__(self):
        for name in self.__dataclass_fields__:
            object.__setattr__(self, name, _frozen(getattr(self, name), name=name))

    @property
    def n1(self):
        return self.M1.shape[0]

    @property
    def n2(self):
        return self.M2.shape[0]

    @property
    def n(self):
        return self.n1 + self.n2

    @property
    def m(self):
        return self.n1 * self.n2 + 2

    def R(self, xi):
        xi = np.asarray(xi, dtype=np.float64)
        return xi[: self.n1 * self.n2].reshape(self.n1, self.n2) + self.r_const

    def block_matrix(self, R):
        return np.block([[self.M1, R], [-R.T, self.M2]])

    def to_svip(self):
        """Affine SVIP of the game's equilibrium conditions."""
        n1, n2, n, m = self.n1, self.n2, self.n, self.m
        m_lin = np.zeros((n, n, m))
        for i in range(n1):
            for j in range(n2):
                k = i * n2 + j
                m_lin[i, n1 + j, k] = 1.0
                m_lin[n1 + j, i, k] = -1.0
        A = np.block([[self.A1, np.zeros((self.A1.shape[0], n2))], [np.zeros((self.A2.shape[0], n1)), self.A2]])
        b = np.concatenate([self.b1, self.b2])
        return AffineSVIP(
            m_lin=m_lin,
            m_const=self.block_matrix(self.r_const),
            q_lin=self.Q_map,
            q_const=self.q0,
            feasible=PolyhedralSet(SetMode.INEQUALITY, A, b),
        )

    def beta0(self):
        return float(np.linalg.eigvalsh(np.block([
            [self.M1, np.zeros((self.n1, self.n2))],
            [np.zeros((self.n2, self.n1)), self.M2],
        ]))[0])

    def to_dict(self):
        return {name: getattr(self, name).tolist() for name in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d):
        return cls(**{name: d[name] for name in cls.__dataclass_fields__})
