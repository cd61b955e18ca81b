import math

import numpy as np
import pytest

from monotone_play.dynamics import (
    SCLICoefficients,
    alternating_adversary_grads,
    eg_regret_demo,
    gd_as_scli,
    og_as_scli,
    og_regret_run,
    run_eg,
    run_gd,
    run_og,
    run_og_peg,
    run_scli,
    write_trace_csv,
)
from monotone_play.errors import DivergenceError
from monotone_play.operators import (
    make_bilinear,
    make_perturbed_bilinear,
    make_quadratic_min,
)


def test_og_single_step_hand_value():
    # z1 = (1,0) - 0.2 (0,-1) + 0.1 (0,-1) = (1, 0.1)
    op = make_bilinear([[1.0]])
    tr = run_og(op, [1.0, 0.0], [1.0, 0.0], 0.1, 1)
    assert np.allclose(tr.iterates[0], [1.0, 0.1], atol=0, rtol=0)


def test_equilibrium_is_fixed_point_for_all_dynamics():
    op = make_bilinear([[1.2, 0.0], [0.3, 0.8]], b1=[0.1, 0.0], b2=[0.0, -0.1])
    zs = op.equilibrium
    for tr in (
        run_og(op, zs, zs, 0.05, 20),
        run_og_peg(op, zs, zs, 0.05, 20),
        run_eg(op, zs, 0.05, 20),
        run_scli(op, og_as_scli(0.05), np.vstack([zs, zs]), 20),
    ):
        assert np.abs(tr.iterates - zs).max() <= 1e-12
    quad = make_quadratic_min([[1.0, 0.2], [0.2, 0.5]], b=[0.1, 0.0], D=1.0)
    tr = run_gd(quad, quad.equilibrium, 0.1, 20)
    assert np.abs(tr.iterates - quad.equilibrium).max() <= 1e-12


def test_og_recurrence_bit_exact():
    op = make_bilinear([[1.0, 0.4], [0.0, 0.7]], D=1.0)
    eta = 0.01
    tr = run_og(op, [0.3, 0.1, -0.2, 0.4], [0.2, 0.0, 0.1, -0.3], eta, 50)
    pts = tr.points()
    grads = tr.grads
    for k in range(2, len(pts)):
        expected = pts[k - 1] - (2.0 * eta) * grads[k - 1] + eta * grads[k - 2]
        assert np.array_equal(pts[k], expected)


def test_cached_grads_match_reevaluation_bitwise():
    op = make_perturbed_bilinear([[1.0]], epsilon=0.05, D=1.0)
    tr = run_og(op, [0.5, 0.0], [0.4, 0.1], 0.01, 30)
    for pt, g in zip(tr.points(), tr.grads):
        assert np.array_equal(op.eval(pt), g)


def test_og_and_peg_agree():
    rng = np.random.default_rng(42)
    ops = [
        make_bilinear(rng.uniform(-1, 1, (2, 2)), D=5.0),
        make_perturbed_bilinear(np.eye(2), epsilon=0.01, D=1.0),
    ]
    for op in ops:
        eta = 1.0 / (150.0 * op.ell)
        z0 = rng.uniform(-0.5, 0.5, op.n)
        zm1 = rng.uniform(-0.5, 0.5, op.n)
        a = run_og(op, zm1, z0, eta, 100)
        b = run_og_peg(op, zm1, z0, eta, 100)
        scale = 1.0 + float(np.abs(a.iterates).max())
        assert np.abs(a.iterates - b.iterates).max() <= 1e-10 * scale
        assert np.abs(a.iterates[0] - b.iterates[0]).max() <= 1e-12


def test_peg_w_sequence_definition():
    # w^t = z^t + eta F(z^{t-1}) along the whole run
    op = make_bilinear([[1.0]], D=1.0)
    eta = 0.05
    tr = run_og_peg(op, [0.4, 0.0], [0.3, 0.1], eta, 40)
    for t in range(0, tr.T + 1):
        expected = tr.point(t) + eta * tr.grad(t - 1)
        assert np.abs(tr.aux[t] - expected).max() <= 1e-14


def test_eg_first_step_hand_value():
    op = make_bilinear([[1.0]])
    tr = run_eg(op, [1.0, 0.0], 0.1, 1)
    assert np.allclose(tr.iterates[0], [1.0, 0.1], atol=0, rtol=0)
    assert tr.times()[0] == 0


def test_eg_gap_decreases_on_bilinear():
    op = make_bilinear(np.eye(2), D=1.0)
    tr = run_eg(op, [1.0, 0.0, 0.0, 0.5], 0.1, 1000)
    gn = tr.grad_norms()
    assert gn[-1] < 0.1 * gn[0]
    assert np.all(np.diff(gn) <= 1e-12)


def test_eg_projection_keeps_blocks_in_ball():
    op = make_bilinear(np.eye(2), b1=[0.3, 0.0], b2=[0.0, 0.3], D=1.0)
    tr = run_eg(op, [1.0, 0.0, 0.0, 1.0], 0.2, 50, projection_radius=0.8)
    for z in tr.iterates:
        assert np.linalg.norm(z[:2]) <= 0.8 + 1e-12
        assert np.linalg.norm(z[2:]) <= 0.8 + 1e-12


def test_scli_reproduces_og_on_random_affine_instances():
    rng = np.random.default_rng(123)
    for k in range(5):
        M = rng.uniform(-1, 1, (2, 2))
        b1 = 0.1 * rng.uniform(-1, 1, 2)
        b2 = 0.1 * rng.uniform(-1, 1, 2)
        op = make_bilinear(M, b1, b2, D=10.0)
        eta = 1.0 / (150.0 * op.ell)
        zm1 = rng.uniform(-1, 1, 4)
        z0 = rng.uniform(-1, 1, 4)
        a = run_og(op, zm1, z0, eta, 200)
        b = run_scli(op, og_as_scli(eta), np.vstack([zm1, z0]), 200)
        scale = 1.0 + float(np.abs(a.iterates).max())
        assert np.abs(a.iterates - b.iterates).max() <= 1e-12 * scale


def test_scli_constant_coefficients_freeze_the_seed():
    op = make_bilinear(np.eye(2), D=1.0)
    coeffs = SCLICoefficients(p=2, alpha=(0.0, 0.0), beta=(0.0, 1.0),
                              gamma=0.0, delta=0.0)
    inits = np.array([[0.1, 0.2, 0.0, 0.0], [0.3, 0.0, -0.1, 0.2]])
    tr = run_scli(op, coeffs, inits, 10)
    assert np.array_equal(tr.iterates, np.tile(inits[1], (10, 1)))


def test_scli_gradient_descent_geometric_decay():
    op = make_quadratic_min(np.eye(2), D=2.0)
    tr = run_scli(op, gd_as_scli(0.1), np.array([[1.0, 0.0]]), 30)
    for t in range(1, 31):
        assert np.abs(tr.point(t) - 0.9**t * np.array([1.0, 0.0])).max() <= 1e-12


def test_og_coefficient_values():
    c = og_as_scli(0.1)
    assert c.alpha == (0.1, -0.2)
    assert c.beta == (0.0, 1.0)
    assert c.gamma == 0.0 and c.delta == -0.1
    assert c.consistent()


def test_scli_rejects_nonaffine_operator():
    op = make_perturbed_bilinear([[1.0]], epsilon=0.1, D=1.0)
    with pytest.raises(ValueError):
        run_scli(op, og_as_scli(0.1), np.zeros((2, 2)), 5)


def test_divergence_raises_with_step_and_partial_trace():
    op = make_bilinear([[1.0]], D=1.0)
    # gradient descent spirals outward on a skew field
    with pytest.raises(DivergenceError) as exc:
        run_gd(op, [1.0, 0.0], 1.5, 200)
    assert exc.value.step > 0
    assert exc.value.trace is not None
    assert exc.value.trace.T == exc.value.step - 1


def test_trace_time_indexing():
    op = make_bilinear([[1.0]])
    tr = run_og(op, [0.1, 0.0], [0.2, 0.0], 0.05, 3)
    assert list(tr.times()) == [-1, 0, 1, 2, 3]
    assert np.array_equal(tr.point(-1), [0.1, 0.0])
    assert np.array_equal(tr.point(0), [0.2, 0.0])
    with pytest.raises(IndexError):
        tr.point(4)


def test_trace_csv_format(tmp_path):
    op = make_bilinear([[1.0]])
    tr = run_og(op, [0.1, 0.0], [0.2, 0.0], 0.05, 2)
    path = tmp_path / "trace.csv"
    write_trace_csv(tr, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "t,algorithm,eta,z_0,z_1,grad_norm"
    assert lines[1].startswith("-1,og,0.050000000000000003,")
    assert len(lines) == 1 + 4  # header + two seeds + two iterates


# ---------------------------------------------------------------------------
# Regret environments
# ---------------------------------------------------------------------------


def brute_force_best_fixed(v2_seq):
    # affine in the action, so the minimum over [-1, 1] sits at an endpoint
    total = float(np.sum(v2_seq))
    return min(-total, total, 0.0 * total)


@pytest.mark.parametrize("T,expected", [(10, 5.0), (11, 6.0), (1, 1.0), (2, 1.0)])
def test_eg_demo_regret_values(T, expected):
    demo = eg_regret_demo(T, 0.5)
    assert demo.final_regret == expected
    assert demo.cumulative_loss == 0.0


def test_eg_demo_matches_ceiling_formula_and_oracle():
    for T in range(1, 60):
        demo = eg_regret_demo(T, 0.5)
        assert demo.final_regret == math.ceil(T / 2)
        v2 = np.array([1.0 if t % 2 == 0 else 0.0 for t in range(T)])
        assert demo.final_regret == demo.cumulative_loss - brute_force_best_fixed(v2)


def test_eg_demo_actions_follow_the_half_updates():
    demo = eg_regret_demo(8, 0.25)
    assert np.array_equal(demo.actions[::2], np.zeros(4))
    assert np.array_equal(demo.actions[1::2], -0.25 * np.ones(4))


def test_og_regret_zero_gradients():
    regrets = og_regret_run(np.zeros((50, 2)), D=1.0, T=50)
    assert np.array_equal(regrets, np.zeros(50))


def test_og_regret_sublinear_against_alternating_adversary():
    T = 1000
    regrets = og_regret_run(alternating_adversary_grads(T), D=1.0, T=T)
    assert regrets[-1] / T <= 0.1
    # sublinearity: the second half accrues less than the first
    assert regrets[-1] - regrets[T // 2] < regrets[T // 2]


def test_og_regret_constant_gradient_plateaus():
    g = np.tile(np.array([[0.6, -0.8]]), (200, 1))
    regrets = og_regret_run(g, D=1.0, T=200)
    # after the first step the play saturates at the best action -D g/||g||
    assert abs(regrets[-1] - regrets[10]) <= 1e-9


def test_og_regret_rejects_underdeclared_bound():
    with pytest.raises(ValueError):
        og_regret_run(np.ones((10, 1)), D=1.0, T=10, grad_bound=0.5)
