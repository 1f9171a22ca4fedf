import numpy as np
import pytest

from drerm.ambiguity import MomentAmbiguity, equicorrelated_sigma
from drerm.gap import gap_values, omega
from drerm.model import SetMode
from drerm.nsdp import (
    DecisionBlock,
    assemble_D,
    build,
    lifted_block,
    omega_hessian,
    schur_complement,
    support_box,
    support_ellipsoids,
    support_full,
)
from drerm.solver.conic import Status, solve_conic

from conftest import scalar_svip


def random_block(inst, rng, scale=1.0):
    m = inst.m
    Y = rng.standard_normal((m, m))
    eq = inst.feasible.mode is SetMode.EQUALITY_NONNEG
    return DecisionBlock(
        x=scale * rng.standard_normal(inst.n),
        lam=rng.standard_normal(inst.feasible.l) if eq else rng.exponential(size=inst.feasible.l),
        mu=rng.exponential(size=inst.n) if eq else np.zeros(0),
        y0=scale * rng.standard_normal(),
        y=scale * rng.standard_normal(m),
        Y=scale * (Y + Y.T),
    )


def quad_form(D, xi):
    v = np.concatenate([[1.0], xi])
    return v @ D @ v


def test_assemble_D_hand_example():
    inst = scalar_svip(1.0, q_lin=1.0)
    w = DecisionBlock(x=np.array([1.0]), lam=np.zeros(0), mu=np.zeros(1), y0=3.0, y=np.zeros(1), Y=np.eye(1))
    D = assemble_D(inst, 1.0, w)
    np.testing.assert_allclose(D, [[2.5, -0.5], [-0.5, 0.5]], atol=1e-15)
    for xi in (-2.0, 0.0, 1.3):
        assert quad_form(D, [xi]) == pytest.approx(3 + xi**2 - 0.5 * (1 + xi) ** 2)


def test_assemble_D_zero_block():
    inst = scalar_svip(1.0)
    w = DecisionBlock(x=np.zeros(1), lam=np.zeros(0), mu=np.zeros(1), y0=0.0, y=np.zeros(1), Y=np.zeros((1, 1)))
    np.testing.assert_array_equal(assemble_D(inst, 1.0, w), np.zeros((2, 2)))


def test_assemble_D_dimension_errors(games):
    inst = games[0].to_svip()
    w = random_block(inst, np.random.default_rng(0))
    w.y = np.zeros(inst.m + 1)
    with pytest.raises(ValueError):
        assemble_D(inst, 1.0, w)


def test_quadratic_form_identity(games, rng):
    for g in games[:3]:
        inst = g.to_svip()
        alpha = 1.0 / inst.beta0()
        for _ in range(10):
            w = random_block(inst, rng)
            D = assemble_D(inst, alpha, w)
            xis = rng.standard_normal((10, inst.m))
            om = omega(inst, alpha, w.x, w.lam, None, xis)
            for xi, o in zip(xis, om):
                rhs = xi @ w.Y @ xi + w.y @ xi + w.y0 - o
                assert quad_form(D, xi) == pytest.approx(rhs, abs=1e-10)


def test_quadratic_form_identity_equality_form(rng):
    from drerm.model import AffineSVIP, PolyhedralSet

    S = PolyhedralSet(SetMode.EQUALITY_NONNEG, [[1.0, 2.0, 1.0]], [1.0])
    inst = AffineSVIP(rng.standard_normal((3, 3, 2)), 3 * np.eye(3), rng.standard_normal((3, 2)), rng.standard_normal(3), S)
    for _ in range(20):
        w = random_block(inst, rng)
        D = assemble_D(inst, 0.8, w)
        xi = rng.standard_normal(2)
        rhs = xi @ w.Y @ xi + w.y @ xi + w.y0 - omega(inst, 0.8, w.x, w.lam, w.mu, xi)
        assert quad_form(D, xi) == pytest.approx(rhs, abs=1e-10)


def test_schur_complement_recovers_D(games, rng):
    inst = games[1].to_svip()
    alpha = 1.0 / inst.beta0()
    for _ in range(20):
        w = random_block(inst, rng)
        B = lifted_block(inst, alpha, w, support_full())
        np.testing.assert_allclose(schur_complement(inst, alpha, B), assemble_D(inst, alpha, w), atol=1e-9)


def test_lift_soundness(games, rng):
    inst = games[2].to_svip()
    alpha = 1.0 / inst.beta0()
    seen = set()
    for _ in range(100):
        w = random_block(inst, rng)
        D = assemble_D(inst, alpha, w)
        shift = -np.linalg.eigvalsh(D)[0] + rng.normal(scale=0.5)
        w.y0 += shift
        w.Y = w.Y + shift * np.eye(inst.m)
        d_min = np.linalg.eigvalsh(assemble_D(inst, alpha, w))[0]
        l_min = np.linalg.eigvalsh(lifted_block(inst, alpha, w, support_full()))[0]
        if d_min >= 1e-6:
            assert l_min >= -1e-9
            seen.add(True)
        elif d_min <= -1e-6:
            assert l_min < 0
            seen.add(False)
    assert seen == {True, False}


def test_psd_convexity_midpoints(games, rng):
    for g in games[:4]:
        inst = g.to_svip()
        beta0 = inst.beta0()
        for alpha in (1.0 / beta0, 1.0 / (2 * beta0)):
            for _ in range(10):
                w1, w2 = random_block(inst, rng), random_block(inst, rng)
                for t in (0.25, 0.5, 0.75):
                    mid = DecisionBlock(
                        x=t * w1.x + (1 - t) * w2.x,
                        lam=t * w1.lam + (1 - t) * w2.lam,
                        mu=np.zeros(0),
                        y0=t * w1.y0 + (1 - t) * w2.y0,
                        y=t * w1.y + (1 - t) * w2.y,
                        Y=t * w1.Y + (1 - t) * w2.Y,
                    )
                    J = assemble_D(inst, alpha, mid) - t * assemble_D(inst, alpha, w1) - (1 - t) * assemble_D(inst, alpha, w2)
                    assert np.linalg.eigvalsh(J)[0] >= -1e-8


def test_hessian_psd_at_threshold(games, rng):
    for g in games:
        inst = g.to_svip()
        alpha = 1.0 / (2 * inst.beta0())
        for _ in range(5):
            H = omega_hessian(inst, alpha, rng.standard_normal(inst.m))
            assert np.linalg.eigvalsh(H)[0] >= -1e-8 * max(1.0, np.abs(H).max())


def test_hessian_can_be_indefinite_below_threshold():
    inst = scalar_svip(1.0)
    H = omega_hessian(inst, 0.1, np.zeros(1))
    assert np.linalg.eigvalsh(H)[0] < -1e-3


def test_support_box_examples():
    (A, b, c), = support_box([-1.0], [1.0]).quadratics
    assert (A[0, 0], b[0], c) == (1.0, 0.0, -1.0)
    (A, b, c), = support_box([0.0], [2.0]).quadratics
    assert (A[0, 0], b[0], c) == (1.0, -1.0, 0.0)
    box = support_box([-1.0, 0.0], [3.0, 2.0])
    assert np.all(box.g(np.array([1.0, 1.0])) < 0)
    np.testing.assert_allclose(box.g(np.array([3.0, 0.0])), 0.0)
    with pytest.raises(ValueError):
        support_box([1.0], [1.0])


def test_support_ellipsoid_examples():
    (A, b, c), = support_ellipsoids([np.zeros(2)], [np.eye(2)]).quadratics
    np.testing.assert_array_equal(A, np.eye(2))
    np.testing.assert_array_equal(b, np.zeros(2))
    assert c == -1.0
    (A, b, c), = support_ellipsoids([[2.0]], [[[4.0]]]).quadratics
    assert (A[0, 0], b[0], c) == pytest.approx((0.25, -0.5, 0.0))
    sup = support_ellipsoids([[1.0, -1.0]], [np.diag([2.0, 3.0])])
    assert sup.g(np.array([1.0, -1.0]))[0] == pytest.approx(-1.0)
    assert sup.is_slater_point(np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        support_ellipsoids([np.zeros(2)], [np.diag([1.0, 0.0])])


def test_build_structure_full_space():
    inst = scalar_svip(1.0, q_lin=-1.0)
    amb = MomentAmbiguity(np.zeros(1), np.eye(1))
    prog = build(inst, 1.0, amb)
    assert prog.dim == 5
    # R'R = Ms - I/(2 alpha) has rank one at alpha = 1; at the threshold it vanishes
    assert [b.size for b in prog.lmi] == [4, 1]
    assert [b.size for b in build(inst, 0.5, amb).lmi] == [3, 1]
    assert prog.soc == ()


def test_build_adds_multiplier_for_ellipsoid():
    inst = scalar_svip(1.0, q_lin=-1.0)
    amb = MomentAmbiguity(np.zeros(1), np.eye(1))
    prog = build(inst, 1.0, amb, support_ellipsoids([[0.0]], [[[9.0]]]))
    assert prog.dim == 6
    assert prog.layout.p == 1
    assert prog.layout.slices["s"].start in set(prog.nonneg.tolist())
    assert [b.name for b in prog.lmi] == ["D", "Y"]


def test_build_specialized_objective(games):
    inst = games[0].to_svip()
    amb = MomentAmbiguity(np.zeros(6), equicorrelated_sigma(6), 0.0, 1.0)
    prog = build(inst, 1.0 / inst.beta0(), amb)
    rng = np.random.default_rng(3)
    w = random_block(inst, rng)
    assert prog.objective(prog.layout.pack(w)) == pytest.approx(w.y0 + np.sum(equicorrelated_sigma(6) * w.Y))
    assert not prog.layout.has_z0


def test_build_soc_block_matches_margin(rng):
    inst = scalar_svip(2.0, q_lin=1.0)
    amb = MomentAmbiguity([0.3], [[1.5]], 0.4, 1.2)
    prog = build(inst, 1.0, amb)
    (soc,) = prog.soc
    w = random_block(inst, rng)
    w.z0 = 2.0
    z = prog.layout.pack(w)
    assert soc.margin(z) == pytest.approx(amb.soc_margin(w.y, w.Y, w.z0))
    assert prog.objective(z) == pytest.approx(amb.dual_objective(w.y0, w.y, w.Y, w.z0))


def test_build_rejects_alpha_below_threshold():
    inst = scalar_svip(1.0)
    with pytest.raises(ValueError, match="threshold"):
        build(inst, 0.49, MomentAmbiguity(np.zeros(1), np.eye(1)))


def test_build_rejects_xi_dependent_symmetric_part():
    inst = scalar_svip(1.0, m_lin=1.0)
    with pytest.raises(ValueError):
        build(inst, 1.0, MomentAmbiguity(np.zeros(1), np.eye(1)))


def test_layout_pack_roundtrip(games, rng):
    inst = games[0].to_svip()
    prog = build(inst, 1.0, MomentAmbiguity(np.zeros(6), equicorrelated_sigma(6), 0.5, 1.0))
    w = random_block(inst, rng)
    w.z0 = 1.25
    back = prog.layout.unpack(prog.layout.pack(w))
    np.testing.assert_array_equal(back.Y, w.Y)
    assert back.z0 == 1.25


def test_lifted_lmi_block_is_affine(games, rng):
    inst = games[4].to_svip()
    prog = build(inst, 1.0 / inst.beta0(), MomentAmbiguity(np.zeros(6), equicorrelated_sigma(6)))
    blk = prog.lmi[0]
    z1, z2 = rng.standard_normal(prog.dim), rng.standard_normal(prog.dim)
    np.testing.assert_allclose(blk(0.3 * z1 + 0.7 * z2), 0.3 * blk(z1) + 0.7 * blk(z2), atol=1e-10)
    w = prog.layout.unpack(z1)
    np.testing.assert_allclose(blk(z1), lifted_block(inst, prog.alpha, w, support_full()), atol=1e-12)


def test_s_procedure_soundness_at_solution(games, rng):
    inst = games[0].to_svip()
    alpha = 1.0 / inst.beta0()
    amb = MomentAmbiguity(np.zeros(6), equicorrelated_sigma(6))
    sup = support_ellipsoids([np.zeros(6)], [9.0 * np.eye(6)])
    w, rep = solve_conic(build(inst, alpha, amb, sup))
    assert rep.status is Status.OPTIMAL
    dirs = rng.standard_normal((1000, 6))
    xis = dirs / np.linalg.norm(dirs, axis=1, keepdims=True) * 3.0 * rng.uniform(size=(1000, 1)) ** (1 / 6)
    assert np.all(sup.contains(xis))
    gaps = gap_values(inst, alpha, w.x, xis)
    bound = np.einsum("ki,ij,kj->k", xis, w.Y, xis) + xis @ w.y + w.y0
    assert np.min(bound - gaps) >= -1e-7
