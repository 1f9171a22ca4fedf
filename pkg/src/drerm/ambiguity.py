"""Moment ambiguity set of distributions with uncertain mean and covariance.

The set contains every distribution supported on the support set whose mean
lies in the ellipsoid ``(E xi - mu0)' Sigma0^{-1} (E xi - mu0) <= gamma1`` and
whose centered second moment satisfies
``E (xi - mu0)(xi - mu0)' <= gamma2 Sigma0`` in the semidefinite order
(Delage & Ye, Oper. Res. 58, 2010). ``gamma1 = 0, gamma2 = 1`` pins the first
two moments exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class MomentAmbiguity:
    mu0: np.ndarray
    sigma0: np.ndarray
    gamma1: float = 0.0
    gamma2: float = 1.0
    factor: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mu0 = np.array(self.mu0, dtype=np.float64).reshape(-1)
        sigma0 = np.array(self.sigma0, dtype=np.float64)
        m = mu0.shape[0]
        if sigma0.shape != (m, m):
            raise ValueError(f"sigma0 must be ({m}, {m}), got {sigma0.shape}")
        if not np.allclose(sigma0, sigma0.T, rtol=0, atol=1e-12 * (1 + np.abs(sigma0).max())):
            raise ValueError("sigma0 must be symmetric")
        sigma0 = 0.5 * (sigma0 + sigma0.T)
        try:
            L = np.linalg.cholesky(sigma0)
        except np.linalg.LinAlgError:
            raise ValueError("sigma0 must be positive definite") from None
        if not np.all(np.diag(L) > 0):
            raise ValueError("sigma0 must be positive definite")
        if not (self.gamma1 >= 0):
            raise ValueError("gamma1 must be >= 0")
        if not (self.gamma2 >= 1):
            raise ValueError("gamma2 must be >= 1")
        for a in (mu0, sigma0, L):
            a.setflags(write=False)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "sigma0", sigma0)
        object.__setattr__(self, "gamma1", float(self.gamma1))
        object.__setattr__(self, "gamma2", float(self.gamma2))
        object.__setattr__(self, "factor", L)

    @property
    def m(self):
        return self.mu0.shape[0]

    def with_gammas(self, gamma1=None, gamma2=None):
        return MomentAmbiguity(
            self.mu0,
            self.sigma0,
            self.gamma1 if gamma1 is None else gamma1,
            self.gamma2 if gamma2 is None else gamma2,
        )

    def second_moment_weight(self):
        """``gamma2 Sigma0 + mu0 mu0'``, the objective weight on ``Y``."""
        return self.gamma2 * self.sigma0 + np.outer(self.mu0, self.mu0)

    def dual_objective(self, y0, y, Y, z0):
        """``z0 + y0 + mu0' y + <gamma2 Sigma0 + mu0 mu0', Y>``."""
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        Y = np.asarray(Y, dtype=np.float64)
        if y.shape != (self.m,) or Y.shape != (self.m, self.m):
            raise ValueError("y / Y dimensions do not match the ambiguity set")
        return float(z0 + y0 + self.mu0 @ y + np.sum(self.second_moment_weight() * Y))

    def soc_margin(self, y, Y, z0):
        """``z0 - sqrt(gamma1) |L'(y + 2 Y mu0)|`` with ``L L' = Sigma0``.

        Nonnegative exactly when the second-order cone constraint on the mean
        holds.
        """
        y = np.asarray(y, dtype=np.float64).reshape(-1)
        Y = np.asarray(Y, dtype=np.float64)
        if y.shape != (self.m,) or Y.shape != (self.m, self.m):
            raise ValueError("y / Y dimensions do not match the ambiguity set")
        v = self.factor.T @ (y + 2.0 * Y @ self.mu0)
        return float(z0 - math.sqrt(self.gamma1) * np.linalg.norm(v))

    def density(self, xi):
        """Density of the nominal normal ``N(mu0, Sigma0)`` at rows of ``xi``."""
        xi = np.atleast_2d(np.asarray(xi, dtype=np.float64))
        w = np.linalg.solve(self.factor, (xi - self.mu0).T)
        logdet = 2.0 * np.sum(np.log(np.diag(self.factor)))
        return np.exp(-0.5 * np.sum(w * w, axis=0) - 0.5 * (self.m * math.log(2 * math.pi) + logdet))

    def to_dict(self):
        return {
            "mu0": self.mu0.tolist(),
            "sigma0": self.sigma0.tolist(),
            "gamma1": self.gamma1,
            "gamma2": self.gamma2,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["mu0"], d["sigma0"], d.get("gamma1", 0.0), d.get("gamma2", 1.0))

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def equicorrelated_sigma(m, diag=2.0, off=1.6):
    """Equicorrelated covariance with ``diag`` on the diagonal and ``off`` elsewhere."""
    return np.full((m, m), off) + (diag - off) * np.eye(m)
