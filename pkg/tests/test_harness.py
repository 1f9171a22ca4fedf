import csv
import io
import json
import math

import numpy as np
import pytest

from drerm.ambiguity import MomentAmbiguity, equicorrelated_sigma
from drerm.harness import experiments
from drerm.harness.evaluate import EvaluationSummary, evaluate, rc
from drerm.harness.experiments import (
    COMPARE_COLUMNS,
    SWEEP_COLUMNS,
    CompareConfig,
    SweepConfig,
    run_compare,
    run_sweep,
    strip_timing,
    write_result,
)
from drerm.harness.instances import generate_game, instance_seed, perturb_moments, sample_realizations

from conftest import scalar_svip

NOMINAL = MomentAmbiguity(np.zeros(6), equicorrelated_sigma(6))


def test_generate_game_shape_and_determinism():
    g = generate_game(seed=3)
    assert g.m == 6 and g.n == 4
    h = generate_game(seed=3)
    np.testing.assert_array_equal(g.M1, h.M1)
    np.testing.assert_array_equal(g.q0, h.q0)
    assert not np.array_equal(g.M1, generate_game(seed=4).M1)


@pytest.mark.parametrize("seed", range(20))
def test_generate_game_strongly_monotone(seed):
    g = generate_game(seed=seed)
    for M in (g.M1, g.M2):
        assert np.linalg.eigvalsh(M)[0] >= 1.0 - 1e-10
    inst = g.to_svip()
    assert inst.beta0() >= 1.0 - 1e-10
    np.testing.assert_allclose(inst.eval_F(g.x_star0, np.zeros(6)), 0.0, atol=1e-10)


def test_generate_game_validation():
    with pytest.raises(ValueError):
        generate_game(0, 2)
    assert generate_game(3, 1, l1=0, seed=1).A1.shape == (0, 3)


def test_instance_seed_rule():
    assert instance_seed(5, 1) == 4
    assert instance_seed(0, 7) == 7


def test_perturb_scale_zero_is_identity():
    p = perturb_moments(NOMINAL, 8, scale=0.0)
    np.testing.assert_array_equal(p.mu0, NOMINAL.mu0)
    np.testing.assert_array_equal(p.sigma0, NOMINAL.sigma0)


@pytest.mark.parametrize("seed", range(100))
def test_perturb_bounds_and_pd(seed):
    p = perturb_moments(NOMINAL.with_gammas(0.3, 1.4), seed)
    assert np.abs(p.mu0 - NOMINAL.mu0).max() < 0.25
    assert np.abs(p.sigma0 - NOMINAL.sigma0).max() < 0.2
    np.testing.assert_array_equal(p.sigma0, p.sigma0.T)
    assert np.linalg.eigvalsh(p.sigma0)[0] > 0
    assert (p.gamma1, p.gamma2) == (0.3, 1.4)


def test_realization_moments():
    N = 20000
    xi = sample_realizations(NOMINAL, N, [3, 1])
    lam = np.linalg.eigvalsh(NOMINAL.sigma0)[-1]
    assert np.abs(xi.mean(axis=0)).max() <= 4 * math.sqrt(lam / N)
    assert np.abs(np.cov(xi.T) - NOMINAL.sigma0).max() <= 0.15
    assert sample_realizations(NOMINAL, 1, 0).shape == (1, 6)
    np.testing.assert_array_equal(sample_realizations(NOMINAL, 5, 2), sample_realizations(NOMINAL, 5, 2))
    with pytest.raises(ValueError):
        sample_realizations(NOMINAL, 0, 0)


def test_evaluate_constant_gap():
    # F = x - 1 at x = 0: the gap is 1/2 for every xi
    s = evaluate([0.0], scalar_svip(1.0, q_const=-1.0), 1.0, np.linspace(-2, 2, 9)[:, None])
    assert s.min == s.max == s.mean == s.median == pytest.approx(0.5)
    assert s.sd == pytest.approx(0.0, abs=1e-15)
    assert s.count == 9


def test_summary_statistics():
    s = EvaluationSummary.from_gaps([1.0, 2.0, 3.0, 4.0])
    assert s.median == 2.5
    assert s.sd == pytest.approx(1.2909944487, abs=1e-9)
    assert EvaluationSummary.from_gaps([3.0]).sd == 0.0
    with pytest.raises(ValueError):
        EvaluationSummary.from_gaps([])


def test_evaluate_rejects_infeasible():
    with pytest.raises(ValueError):
        evaluate([-1.0], scalar_svip(1.0), 1.0, np.zeros((3, 1)))


def test_rc_values():
    a = EvaluationSummary.from_gaps([0.0, 1.0, 2.0])
    r = rc(a, a)
    assert r.rc_max == r.rc_mean == r.rc_sd == 0.0
    assert math.isnan(r.rc_min)
    big = EvaluationSummary.from_gaps([0.009, 2.162])
    small = EvaluationSummary.from_gaps([0.009, 0.009])
    assert rc(big, small).rc_max == pytest.approx((2.162 - 0.009) / 0.009)
    assert rc(big, small).rc_max == pytest.approx(239.2, abs=0.1)
    # negative rate means DRERM is lower
    assert rc(small, big).rc_max < 0


def test_sweep_grid_sizes():
    assert len(SweepConfig(grid="gamma1").points()) == 40
    pts = SweepConfig(grid="gamma2").points()
    assert len(pts) == 42
    assert pts[0] == (0.1, 1.0) and pts[-1] == (1.0, 3.0)
    with pytest.raises(ValueError):
        SweepConfig(grid="gamma3").points()


def _read(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_compare_smoke(tmp_path):
    res = run_compare(CompareConfig(seed=2, instances=1, nk=(40,), realizations=200))
    assert not res.failures
    csv_path, man = write_result(res, tmp_path / "c.csv")
    rows = _read(csv_path)
    assert len(rows) == 1 and tuple(rows[0]) == COMPARE_COLUMNS
    assert rows[0]["status"] == "ok"
    assert float(rows[0]["drerm_objective"]) >= 0
    meta = json.loads(man.read_text())
    assert meta["rows"] == 1 and meta["failed_rows"] == 0
    assert meta["config"]["nk"] == [40]


def test_compare_failure_recorded(monkeypatch):
    calls = {"n": 0}
    real = experiments.solve_drerm

    def flaky(*a, **k):
        calls["n"] += 1
        if calls["n"] == 1:
            raise np.linalg.LinAlgError("boom")
        return real(*a, **k)

    monkeypatch.setattr(experiments, "solve_drerm", flaky)
    res = run_compare(CompareConfig(instances=2, nk=(20,), realizations=50))
    assert len(res.rows) == 2
    assert res.rows[0]["status"] == "failed"
    assert res.rows[0]["status_drerm"] == "error:LinAlgError"
    assert math.isnan(res.rows[0]["rc_max"])
    assert res.rows[1]["status"] == "ok"
    assert res.manifest["failed_rows"] == 1


def test_sweep_small(tmp_path):
    res = run_sweep(SweepConfig(grid="gamma2", gamma1=(0.1,), gamma2=(1.0, 1.5), realizations=100))
    assert [r["gamma2"] for r in res.rows] == [1.0, 1.5]
    assert all(r["status"] == "ok" for r in res.rows)
    assert res.rows[1]["objective"] >= res.rows[0]["objective"] - 1e-7
    path, _ = write_result(res, tmp_path / "s.csv")
    assert tuple(_read(path)[0]) == SWEEP_COLUMNS
    assert "estimated_moments" in res.manifest


def test_strip_timing_deterministic(tmp_path):
    cfg = CompareConfig(seed=1, instances=2, nk=(30,), realizations=100)
    p1, _ = write_result(run_compare(cfg), tmp_path / "a.csv")
    p2, _ = write_result(run_compare(cfg), tmp_path / "b.csv")
    s1 = strip_timing(p1.read_text())
    assert s1 == strip_timing(p2.read_text())
    assert "t_erm" not in s1 and "t_drerm" not in s1
    assert strip_timing("") == ""


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        run_compare(CompareConfig(seed=-1))
    with pytest.raises(ValueError):
        run_compare(CompareConfig(instances=0))
