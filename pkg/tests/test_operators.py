import math

import numpy as np
import pytest

from monotone_play.errors import InstanceError
from monotone_play.operators import (
    MonotoneOperator,
    check_monotone_and_smooth,
    make_bilinear,
    make_linear,
    make_perturbed_bilinear,
    make_quadratic_min,
    sample_ball,
    split_blocks,
    suboptimality,
    two_player_bilinear_game,
)


def bundled_operators():
    return [
        make_bilinear([[1.0]], D=1.0),
        make_bilinear([[2.0, 0.0], [0.0, 1.0]], b1=[0.1, 0.0], b2=[0.0, 0.2], D=1.0),
        make_perturbed_bilinear(np.eye(2), epsilon=0.01, D=1.0),
        make_quadratic_min([[2.0, 0.5], [0.5, 1.0]], b=[0.3, -0.1], D=1.0),
        make_linear([[1.0, 0.5], [-0.5, 1.0]], D=1.0),
    ]


def test_bilinear_eval_unit_hand_value():
    op = make_bilinear([[1.0]])
    assert np.array_equal(op.eval([1.0, 0.0]), np.array([0.0, -1.0]))


def test_eval_at_equilibrium_is_zero():
    for op in bundled_operators():
        if op.equilibrium is None:
            continue
        assert np.linalg.norm(op.eval(op.equilibrium)) <= 1e-12


def test_perturbed_eval_hand_value():
    # A z = (0, -1); perturbation 0.5 * ||z||^2 * z = (0.5, 0)
    op = make_perturbed_bilinear([[1.0]], epsilon=0.5, D=1.0)
    assert np.allclose(op.eval([1.0, 0.0]), [0.5, -1.0], atol=0, rtol=0)


def test_linear_jacobian_is_constant():
    A = [[0.0, 1.0], [-1.0, 0.0]]
    op = make_linear(A, D=1.0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert np.array_equal(op.jacobian(rng.normal(size=2)), np.asarray(A))


def test_perturbed_jacobian_vanishes_at_origin():
    op = make_perturbed_bilinear([[1.0]], epsilon=1.0, D=1.0)
    assert np.array_equal(op.jacobian([0.0, 0.0]), op.A)


def test_perturbed_jacobian_hand_value():
    # ||z||^2 I + 2 z z^T at z = (1, 0) adds [[3, 0], [0, 1]]
    op = make_perturbed_bilinear([[1.0]], epsilon=1.0, D=1.0)
    expected = np.array([[3.0, 1.0], [-1.0, 1.0]])
    assert np.allclose(op.jacobian([1.0, 0.0]), expected, atol=0, rtol=0)


def finite_difference_jacobian(op, z):
    n = op.n
    h = 1e-6 * (1.0 + float(np.linalg.norm(z)))
    J = np.empty((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = h
        J[:, j] = (op.eval(z + e) - op.eval(z - e)) / (2.0 * h)
    return J


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(11)
    for op in bundled_operators():
        zs = sample_ball(rng, op.n, op.domain_radius, 20)
        for z in zs:
            J = op.jacobian(z)
            J_fd = finite_difference_jacobian(op, z)
            scale = max(1.0, float(np.abs(J).max()))
            assert np.abs(J - J_fd).max() <= 1e-5 * scale


def singular_values_oracle(M):
    # via the symmetric eigeproblem of M^T M, independent of the SVD route
    return np.sqrt(np.maximum(np.linalg.eigvalsh(np.asarray(M).T @ np.asarray(M)), 0))


@pytest.mark.parametrize(
    "M,expected",
    [
        ([[1.0]], 1.0),
        (0.05 * np.eye(2), 0.05),
        ([[2.0, 0.0], [0.0, 1.0]], 2.0),
    ],
)
def test_bilinear_first_order_constant(M, expected):
    op = make_bilinear(M)
    assert math.isclose(op.ell, expected, rel_tol=1e-12)
    assert math.isclose(op.ell, float(singular_values_oracle(M)[-1]), rel_tol=1e-12)


def test_bilinear_skew_structure_and_equilibrium():
    M = np.array([[1.0, 0.3], [0.0, 2.0]])
    op = make_bilinear(M, b1=[0.5, 0.0], b2=[0.0, 0.5], D=1.0)
    m = 2
    assert np.array_equal(op.A[:m, m:], M)
    assert np.array_equal(op.A[m:, :m], -M.T)
    assert np.array_equal(op.A[:m, :m], np.zeros((m, m)))
    assert np.allclose(op.A @ op.equilibrium + op.b, 0.0, atol=1e-14)


def test_bilinear_rejects_equilibrium_outside_ball():
    # M = 0.1 I with b1 = (1, 0) puts the equilibrium at distance 10
    with pytest.raises(InstanceError):
        make_bilinear(0.1 * np.eye(2), b1=[1.0, 0.0], D=1.0)


def test_perturbed_rejects_negative_epsilon():
    with pytest.raises(InstanceError):
        make_perturbed_bilinear([[1.0]], epsilon=-0.1, D=1.0)


def test_perturbed_zero_epsilon_matches_bilinear():
    a = make_perturbed_bilinear([[1.0]], epsilon=0.0, D=1.0)
    b = make_bilinear([[1.0]], D=1.0)
    assert a.kind == b.kind == "bilinear"
    assert np.array_equal(a.A, b.A) and a.ell == b.ell


def test_perturbed_constants_dominate_sampled_quotients():
    op = make_perturbed_bilinear([[1.0]], epsilon=0.01, D=1.0)
    # derived claims: ell <= ||A|| + 3 eps R^2 = 1 + 0.27, lam = 6 eps R
    assert math.isclose(op.ell, 1.27, rel_tol=1e-12)
    assert math.isclose(op.lam, 0.18, rel_tol=1e-12)
    rep = check_monotone_and_smooth(op, num_samples=1000, seed=5, tol=1e-8)
    assert rep.monotone and rep.min_inner >= -1e-12
    assert rep.ell_ok and rep.ell_hat <= op.ell
    assert rep.lambda_ok and rep.lambda_hat <= op.lam


def test_quadratic_min_scaled_identity():
    op = make_quadratic_min(0.5 * np.eye(3), D=1.0)
    assert np.array_equal(op.equilibrium, np.zeros(3))
    rng = np.random.default_rng(2)
    for _ in range(5):
        x = rng.normal(size=3)
        # f(x) - f(0) = nu ||x||^2 / 2 for S = nu I, b = 0
        assert math.isclose(
            suboptimality(op, x), 0.25 * float(x @ x), rel_tol=1e-12
        )


def test_quadratic_min_shifted_equilibrium():
    op = make_quadratic_min(np.eye(2), b=[1.0, 0.0], D=1.0)
    assert np.allclose(op.equilibrium, [-1.0, 0.0], atol=0)
    assert suboptimality(op, op.equilibrium) <= 1e-24


def test_quadratic_min_rejections():
    with pytest.raises(InstanceError):
        make_quadratic_min([[1.0, 0.0], [0.0, -1.0]], D=1.0)  # not PD
    with pytest.raises(InstanceError):
        make_quadratic_min([[0.1]], b=[1.0], D=1.0)  # minimizer outside ball
    with pytest.raises(InstanceError):
        make_quadratic_min([[1.0, 0.5], [0.0, 1.0]], D=1.0)  # not symmetric


def test_linear_rejects_nonmonotone():
    with pytest.raises(InstanceError):
        make_linear([[-1.0, 0.0], [0.0, 1.0]], D=1.0)


def test_bilinear_inner_products_exactly_skew():
    op = make_bilinear([[1.0, 0.2], [0.1, 0.5]], D=1.0)
    rng = np.random.default_rng(7)
    for _ in range(200):
        z, zp = rng.uniform(-1.0, 1.0, size=(2, op.n))
        dz = z - zp
        inner = float((op.eval(z) - op.eval(zp)) @ dz)
        assert abs(inner) <= 1e-12 * (1.0 + float(dz @ dz))


def test_monotone_checker_flags_sign_flip():
    # negate an SPD quadratic field: strictly decreasing, must be flagged
    bad = MonotoneOperator(
        n=2,
        kind="linear",
        A=-np.eye(2),
        b=np.zeros(2),
        epsilon=0.0,
        ell=1.0,
        lam=0.0,
        domain_radius=3.0,
        equilibrium=np.zeros(2),
    )
    rep = check_monotone_and_smooth(bad, num_samples=100, seed=0)
    assert not rep.monotone


def test_sampled_lipschitz_invariants_all_families():
    rng = np.random.default_rng(13)
    for op in bundled_operators():
        zs = sample_ball(rng, op.n, op.domain_radius, 1000)
        zps = sample_ball(rng, op.n, op.domain_radius, 1000)
        dz = zs - zps
        norms = np.linalg.norm(dz, axis=1)
        for z, zp, d, nrm in zip(zs, zps, dz, norms):
            if nrm == 0:
                continue
            df = op.eval(z) - op.eval(zp)
            assert float(df @ d) >= -1e-12
            assert float(np.linalg.norm(df)) <= op.ell * nrm * (1 + 1e-8)


def test_game_gradients_match_operator():
    game = two_player_bilinear_game(
        [[1.0, 0.2], [0.0, 0.8]], b1=[0.1, 0.0], b2=[0.05, 0.0], D=1.0
    )
    rng = np.random.default_rng(3)
    for _ in range(20):
        z = rng.uniform(-1.0, 1.0, size=4)
        F = game.operator.eval(z)
        # central differences of each cost in its own block
        h = 1e-6
        grads = []
        start = 0
        for k, d in enumerate(game.dims):
            g = np.empty(d)
            for j in range(d):
                e = np.zeros(4)
                e[start + j] = h
                g[j] = (game.costs[k](z + e) - game.costs[k](z - e)) / (2 * h)
            grads.append(g)
            start += d
        assert np.allclose(np.concatenate(grads), F, atol=1e-7)


def test_split_blocks_validates_length():
    with pytest.raises(ValueError):
        split_blocks(np.zeros(3), (2, 2))


def test_dimension_mismatch_rejected():
    op = make_bilinear([[1.0]])
    with pytest.raises(ValueError):
        op.eval([1.0, 0.0, 0.0])


def test_eval_warns_outside_certified_ball():
    op = make_bilinear([[1.0]], D=1.0)
    with pytest.warns(UserWarning):
        op.eval([10.0, 0.0])
