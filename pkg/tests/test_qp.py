import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from drerm.solver.qp import InfeasibleError, solve_qp


def test_unconstrained():
    res = solve_qp(np.eye(2), np.ones(2))
    np.testing.assert_allclose(res.x, [-1.0, -1.0])


def test_projection_example_multipliers():
    G = np.array([[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0]])
    h = np.array([0.0, 0.0, 2.0])
    res = solve_qp(np.eye(2), -np.array([-1.0, 3.0]), ineq=(G, h))
    np.testing.assert_allclose(res.x, [0.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(res.ineq, [2.0, 0.0, 1.0], atol=1e-12)
    assert res.kkt_residual <= 1e-10


def test_equality_only():
    res = solve_qp(np.eye(2), np.zeros(2), eq=(np.array([[1.0, 1.0]]), np.array([2.0])))
    np.testing.assert_allclose(res.x, [1.0, 1.0])


def test_nonneg_and_equality():
    res = solve_qp(np.eye(3), np.array([1.0, -1.0, 0.0]), eq=(np.ones((1, 3)), np.array([1.0])), nonneg=range(3))
    assert res.x.min() >= -1e-12
    assert res.x.sum() == pytest.approx(1.0)
    assert np.all(res.nonneg >= -1e-12)
    assert res.kkt_residual <= 1e-10


def test_infeasible():
    with pytest.raises(InfeasibleError):
        solve_qp(np.eye(1), np.zeros(1), ineq=(np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0])))


@given(st.integers(0, 10_000))
@settings(max_examples=40, deadline=None)
def test_random_qps_match_slsqp(seed):
    rng = np.random.default_rng(seed)
    n, k = 4, 6
    B = rng.standard_normal((n, n))
    Q = B @ B.T + 0.1 * np.eye(n)
    c = rng.standard_normal(n)
    G = rng.standard_normal((k, n))
    h = rng.uniform(0.1, 2.0, k)  # 0 is strictly feasible
    res = solve_qp(Q, c, ineq=(G, h))
    assert res.kkt_residual <= 1e-9
    assert np.all(res.ineq >= -1e-12)
    assert np.all(G @ res.x <= h + 1e-9)
    ref = minimize(
        lambda x: 0.5 * x @ Q @ x + c @ x,
        np.zeros(n),
        jac=lambda x: Q @ x + c,
        constraints=[{"type": "ineq", "fun": lambda x: h - G @ x, "jac": lambda x: -G}],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    f = lambda x: 0.5 * x @ Q @ x + c @ x  # noqa: E731
    assert f(res.x) <= f(ref.x) + 1e-8
