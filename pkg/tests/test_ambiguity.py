import numpy as np
import pytest
from scipy.linalg import sqrtm

from drerm.ambiguity import MomentAmbiguity, equicorrelated_sigma


def test_dual_objective_examples():
    amb = MomentAmbiguity(np.zeros(2), np.eye(2), 0.0, 1.0)
    assert amb.dual_objective(1.0, np.zeros(2), np.eye(2), 0.0) == pytest.approx(3.0)
    amb2 = MomentAmbiguity([1.0, 0.0], np.eye(2), 0.0, 2.0)
    assert amb2.dual_objective(0.0, [1.0, 1.0], np.zeros((2, 2)), 0.0) == pytest.approx(1.0)
    assert amb.dual_objective(0.0, np.zeros(2), np.zeros((2, 2)), 0.0) == 0.0


def test_dual_objective_dimension_check():
    amb = MomentAmbiguity(np.zeros(2), np.eye(2))
    with pytest.raises(ValueError):
        amb.dual_objective(0.0, np.zeros(3), np.zeros((2, 2)), 0.0)


def test_dual_objective_is_linear(rng):
    amb = MomentAmbiguity(rng.standard_normal(3), equicorrelated_sigma(3), 0.5, 1.5)

    def rand():
        Y = rng.standard_normal((3, 3))
        return rng.standard_normal(), rng.standard_normal(3), Y + Y.T, rng.standard_normal()

    for _ in range(20):
        a, b = rand(), rand()
        t = rng.standard_normal()
        lhs = amb.dual_objective(*[u + t * v for u, v in zip(a, b)])
        rhs = amb.dual_objective(*a) + t * amb.dual_objective(*b)
        assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(rhs)))


def test_soc_margin_examples():
    amb0 = MomentAmbiguity(np.zeros(2), np.eye(2), 0.0)
    assert amb0.soc_margin([3.0, 4.0], np.zeros((2, 2)), 2.5) == pytest.approx(2.5)
    amb1 = MomentAmbiguity(np.zeros(2), np.eye(2), 1.0)
    assert amb1.soc_margin([3.0, 4.0], np.zeros((2, 2)), 6.0) == pytest.approx(1.0)
    assert amb1.soc_margin(np.zeros(2), np.zeros((2, 2)), 0.0) == 0.0


def test_soc_margin_factor_invariance(rng):
    sigma = equicorrelated_sigma(4)
    mu = rng.standard_normal(4)
    amb = MomentAmbiguity(mu, sigma, 0.7)
    root = np.real(sqrtm(sigma))
    for _ in range(20):
        y = rng.standard_normal(4)
        Y = rng.standard_normal((4, 4))
        Y = Y + Y.T
        z0 = 3.0
        v = y + 2 * Y @ mu
        expected = z0 - np.sqrt(0.7) * np.linalg.norm(root @ v)
        assert amb.soc_margin(y, Y, z0) == pytest.approx(expected, abs=1e-12 * (1 + abs(expected)))


def test_monotonicity_hooks(rng):
    mu = rng.standard_normal(3)
    base = MomentAmbiguity(mu, equicorrelated_sigma(3), 0.0, 1.0)
    A = rng.standard_normal((3, 3))
    Y = A @ A.T
    y = rng.standard_normal(3)
    vals = [base.with_gammas(gamma2=g).dual_objective(0.2, y, Y, 0.1) for g in (1.0, 1.5, 2.0, 3.0)]
    assert np.all(np.diff(vals) >= 0)
    margins = [base.with_gammas(gamma1=g).soc_margin(y, Y, 1.0) for g in (0.0, 0.1, 1.0, 2.0)]
    assert np.all(np.diff(margins) <= 0)


def test_validation():
    with pytest.raises(ValueError):
        MomentAmbiguity(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(ValueError):
        MomentAmbiguity(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        MomentAmbiguity(np.zeros(2), np.eye(2), gamma1=-0.1)
    with pytest.raises(ValueError):
        MomentAmbiguity(np.zeros(2), np.eye(2), gamma2=0.9)
    with pytest.raises(ValueError):
        MomentAmbiguity(np.zeros(3), np.eye(2))


def test_factor_is_lower_cholesky():
    amb = MomentAmbiguity(np.zeros(6), equicorrelated_sigma(6))
    L = amb.factor
    np.testing.assert_allclose(L @ L.T, equicorrelated_sigma(6), atol=1e-14)
    assert np.allclose(L, np.tril(L))
    assert np.all(np.diag(L) > 0)


def test_equicorrelated_sigma_entries():
    S = equicorrelated_sigma(6)
    assert np.all(np.diag(S) == 2.0)
    assert S[0, 1] == 1.6 and S[5, 2] == 1.6


def test_density_at_mean():
    amb = MomentAmbiguity(np.zeros(1), np.eye(1))
    assert amb.density(np.zeros(1))[0] == pytest.approx(0.3989422804, rel=1e-9)
    amb2 = MomentAmbiguity(np.ones(2), equicorrelated_sigma(2))
    expected = (2 * np.pi) ** -1 * np.linalg.det(equicorrelated_sigma(2)) ** -0.5
    assert amb2.density(np.ones(2))[0] == pytest.approx(expected, rel=1e-12)


def test_json_roundtrip():
    amb = MomentAmbiguity([0.5, -1.0], equicorrelated_sigma(2), 0.3, 1.7)
    back = MomentAmbiguity.from_json(amb.to_json())
    np.testing.assert_array_equal(back.mu0, amb.mu0)
    np.testing.assert_array_equal(back.sigma0, amb.sigma0)
    assert (back.gamma1, back.gamma2) == (0.3, 1.7)
