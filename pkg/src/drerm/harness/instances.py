"""Random game instances, moment perturbations and realization sampling."""

from __future__ import annotations

import numpy as np

from ..ambiguity import MomentAmbiguity
from ..model import GameInstance


def instance_seed(seed, index):
    """Seed of the ``index``-th instance in a batch run with master ``seed``."""
    return int(seed) ^ int(index)


def generate_game(n1=2, n2=2, l1=None, l2=None, seed=0):
    """Draw a two-player game.

    ``M_nu = L L' + I`` with lower triangular ``L`` uniform on [-5, 5);
    ``A_nu`` (l_nu x n_nu) uniform on [-2, 2); ``b_nu`` uniform on [0, 10);
    coupling offsets ``r0`` uniform on [-5, 5); the reference point ``x*0``
    uniform on [-2, 2) with ``q0`` chosen so that ``F(x*0, 0) = 0``.
    ``l_nu`` defaults to ``n_nu``.
    """
    if min(n1, n2) < 1:
        raise ValueError("player dimensions must be at least 1")
    l1 = n1 if l1 is None else l1
    l2 = n2 if l2 is None else l2
    if min(l1, l2) < 0:
        raise ValueError("constraint counts must be nonnegative")
    rng = np.random.default_rng(seed)
    M1 = _spd(rng, n1)
    M2 = _spd(rng, n2)
    A1 = rng.uniform(-2.0, 2.0, size=(l1, n1))
    b1 = rng.uniform(0.0, 10.0, size=l1)
    A2 = rng.uniform(-2.0, 2.0, size=(l2, n2))
    b2 = rng.uniform(0.0, 10.0, size=l2)
    r0 = rng.uniform(-5.0, 5.0, size=(n1, n2))
    x_star0 = rng.uniform(-2.0, 2.0, size=n1 + n2)

    m = n1 * n2 + 2
    Q = np.zeros((n1 + n2, m))
    Q[:n1, n1 * n2] = 1.0
    Q[n1:, n1 * n2 + 1] = 1.0
    q0 = -np.block([[M1, r0], [-r0.T, M2]]) @ x_star0
    return GameInstance(M1=M1, M2=M2, A1=A1, A2=A2, b1=b1, b2=b2, r_const=r0, Q_map=Q, q0=q0, x_star0=x_star0)


def _spd(rng, k):
    L = np.tril(rng.uniform(-5.0, 5.0, size=(k, k)))
    return L @ L.T + np.eye(k)


def perturb_moments(amb: MomentAmbiguity, seed, scale=1.0, max_tries=100):
    """Perturbed nominal moments for the sensitivity sweeps.

    ``mu0 + u`` with ``u`` uniform on [-0.25, 0.25) and ``Sigma0 + U`` with
    the upper triangle of ``U`` uniform on [-0.2, 0.2) mirrored below. Draws
    are repeated until the perturbed covariance is positive definite.
    ``scale`` multiplies both perturbations (``scale=0`` returns the input).
    """
    rng = np.random.default_rng(seed)
    m = amb.m
    for _ in range(max_tries):
        u = rng.uniform(-0.25, 0.25, size=m)
        U = np.triu(rng.uniform(-0.2, 0.2, size=(m, m)))
        U = U + np.triu(U, 1).T
        sigma = amb.sigma0 + scale * U
        try:
            np.linalg.cholesky(sigma)
        except np.linalg.LinAlgError:
            continue
        return MomentAmbiguity(amb.mu0 + scale * u, sigma, amb.gamma1, amb.gamma2)
    raise RuntimeError(f"no positive definite perturbation found in {max_tries} draws")


def sample_realizations(amb: MomentAmbiguity, N, seed):
    """``N`` draws from ``N(mu0, Sigma0)`` as an (N, m) array."""
    if N < 1:
        raise ValueError("N must be at least 1")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal(size=(N, amb.m))
    return amb.mu0 + g @ amb.factor.T
