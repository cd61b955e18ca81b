import math

import numpy as np
import pytest

from monotone_play.diagnostics import (
    best_iterate,
    best_iterate_bound,
    bounded_iterates_check,
    averaged_iterate_gap,
    gap_report_series,
    grad_gap,
    last_iterate_bound_check,
    rate_fit,
    short_term_growth_check,
    total_gap_bilinear,
    total_gap_bound,
    write_gap_csv,
)
from monotone_play.dynamics import Trace, run_og
from monotone_play.errors import UnsupportedInstanceError
from monotone_play.operators import (
    GameSpec,
    make_bilinear,
    two_player_bilinear_game,
)


def test_grad_gap_values():
    op = make_bilinear([[1.0]])
    assert grad_gap(op, [0.0, 0.0]) == 0.0
    assert grad_gap(op, [1.0, 0.0]) == 1.0
    # linearity with zero offset
    assert grad_gap(op, [2.0, 0.0]) == 2.0 * grad_gap(op, [1.0, 0.0])


def test_total_gap_hand_value():
    # f1 = x*y = -f2 at z = (1, 0), centers 0, radius 1:
    # own-gradients g1 = y = 0, g2 = -x = -1; value 0 + 1 = 1
    game = two_player_bilinear_game([[1.0]], D=1.0)
    val = total_gap_bilinear(game, [1.0, 0.0], [np.zeros(1), np.zeros(1)], 1.0)
    assert math.isclose(val, 1.0, rel_tol=0, abs_tol=1e-15)


def test_total_gap_zero_at_equilibrium_centers():
    game = two_player_bilinear_game([[1.0, 0.0], [0.2, 0.8]],
                                    b1=[0.1, 0.0], b2=[0.0, 0.1], D=1.0)
    zstar = game.operator.equilibrium
    centers = game.blocks(zstar)
    assert abs(total_gap_bilinear(game, zstar, centers, 0.5)) <= 1e-12


def brute_force_total_gap(game, z, centers, radius, grid=2000):
    # grid minimization of each cost over the sphere of deviations
    # (for 1-d blocks the ball is an interval; check endpoints + center)
    total = 0.0
    start = 0
    z = np.asarray(z, dtype=float)
    for k, d in enumerate(game.dims):
        assert d == 1
        best = np.inf
        for dv in np.linspace(-radius, radius, grid):
            zk = z.copy()
            zk[start] = centers[k][0] + dv
            best = min(best, game.costs[k](zk))
        total += game.costs[k](z) - best
        start += d
    return total


def test_total_gap_matches_brute_force_minimization():
    game = two_player_bilinear_game([[1.3]], b1=[0.2], b2=[-0.1], D=1.0)
    rng = np.random.default_rng(5)
    for _ in range(10):
        z = rng.uniform(-1, 1, 2)
        centers = [rng.uniform(-0.3, 0.3, 1), rng.uniform(-0.3, 0.3, 1)]
        exact = total_gap_bilinear(game, z, centers, 0.7)
        approx = brute_force_total_gap(game, z, centers, 0.7)
        assert abs(exact - approx) <= 1e-5


def test_total_gap_upper_bound_inside_deviation_sets():
    game = two_player_bilinear_game([[1.0, 0.3], [0.0, 0.6]], D=1.0)
    rng = np.random.default_rng(9)
    radius = 1.0
    for _ in range(1000):
        centers = [rng.uniform(-0.5, 0.5, 2), rng.uniform(-0.5, 0.5, 2)]
        # state inside the deviation sets, as the bound's proof requires
        offs = [rng.normal(size=2) for _ in range(2)]
        offs = [o / np.linalg.norm(o) * rng.uniform(0, radius) for o in offs]
        z = np.concatenate([c + o for c, o in zip(centers, offs)])
        gap = total_gap_bilinear(game, z, centers, radius)
        bound = total_gap_bound(grad_gap(game.operator, z), 2.0 * radius, game.K)
        assert gap <= bound + 1e-9


def test_total_gap_rejects_nonaffine_games():
    game = two_player_bilinear_game([[1.0]], D=1.0)
    bad = GameSpec(K=game.K, dims=game.dims, costs=game.costs,
                   operator=game.operator, affine_in_own=False)
    with pytest.raises(UnsupportedInstanceError):
        total_gap_bilinear(bad, [0.0, 0.0], [np.zeros(1), np.zeros(1)], 1.0)


def _og_run(nu=1.0, T=2000, eta=None):
    op = make_bilinear(nu * np.eye(2), D=1.0)
    eta = eta if eta is not None else 1.0 / (150.0 * op.ell)
    z0 = np.array([0.5, -0.3, 0.4, -0.2])
    return op, run_og(op, z0, z0, eta, T)


def test_best_iterate_constant_trace():
    op = make_bilinear([[1.0]], D=1.0)
    zs = op.equilibrium
    tr = run_og(op, zs, zs, 0.01, 20)
    best = best_iterate(tr)
    assert best.value == 0.0 and best.t == 0


def test_best_iterate_bounds_on_a_real_run():
    op, tr = _og_run()
    eta, ell = tr.eta, op.ell
    b1 = best_iterate(tr, 1)
    assert b1.value <= best_iterate_bound(1.0, eta, ell, tr.T, 1)
    b3 = best_iterate(tr, 3)
    assert b3.value <= best_iterate_bound(1.0, eta, ell, tr.T, 3)
    # windowed value dominates the plain minimum
    assert b3.value >= b1.value


def test_best_iterate_prefix_minimum_nonincreasing():
    _, tr = _og_run(T=500)
    gn = tr.grad_norms()[1:]  # from t = 0
    prefix_min = np.minimum.accumulate(gn)
    assert np.all(np.diff(prefix_min) <= 0.0)


def test_best_iterate_window_validation():
    _, tr = _og_run(T=20)
    with pytest.raises(ValueError):
        best_iterate(tr, 0)
    with pytest.raises(ValueError):
        best_iterate(tr, 7)  # 3 * 7 >= 20


def test_last_iterate_ceiling_from_equilibrium():
    op = make_bilinear([[1.0]], D=1.0)
    zs = op.equilibrium
    tr = run_og(op, zs, zs, 1.0 / 150.0, 50)
    chk = last_iterate_bound_check(tr, 1.0, op.ell, op.lam)
    assert chk.holds and not chk.vacuous and chk.margin == 0.0


def test_last_iterate_ceiling_gate():
    op, tr = _og_run(T=50, eta=0.05)  # above 1/(150 ell): gate fails
    chk = last_iterate_bound_check(tr, 1.0, op.ell, op.lam)
    assert chk.vacuous


def test_last_iterate_ceiling_on_perturbed_instance():
    from monotone_play.operators import make_perturbed_bilinear

    op = make_perturbed_bilinear(np.eye(2), epsilon=0.01, D=1.0)
    eta = min(1.0 / (150.0 * op.ell), 1.0 / (1711.0 * 1.0 * op.lam))
    z0 = 0.9 * np.array([0.5, -0.3, 0.4, -0.2])
    tr = run_og(op, z0, z0, eta, 2000)
    chk = last_iterate_bound_check(tr, 1.0, op.ell, op.lam)
    assert chk.holds and not chk.vacuous


def test_averaged_iterate_gap_constant_trace():
    op = make_bilinear([[1.0]], D=1.0)
    zs = op.equilibrium
    tr = run_og(op, zs, zs, 0.01, 30)
    Ts, gaps = averaged_iterate_gap(tr, op)
    assert np.array_equal(gaps, np.zeros(30))


def test_averaged_iterate_gap_decays_like_one_over_T():
    op, tr = _og_run(T=10_000)
    Ts, gaps = averaged_iterate_gap(tr, op)
    mask = Ts >= 100
    fit = rate_fit(Ts[mask], gaps[mask], burn_in=0.0)
    assert fit.slope <= -0.9


def test_rate_fit_exact_power_laws():
    Ts = np.array([10.0, 40.0, 160.0, 640.0, 2560.0])
    fit = rate_fit(Ts, 3.0 / np.sqrt(Ts), burn_in=0.0)
    assert abs(fit.slope + 0.5) <= 1e-12
    assert fit.r2 >= 1.0 - 1e-12
    fit = rate_fit(Ts, 7.0 / Ts, burn_in=0.0)
    assert abs(fit.slope + 1.0) <= 1e-12


def test_rate_fit_excludes_nonpositive_and_errors_when_starved():
    Ts = np.array([1.0, 2.0, 4.0, 8.0])
    with pytest.warns(UserWarning):
        fit = rate_fit(Ts, np.array([1.0, 0.0, 0.25, 0.125]), burn_in=0.0)
    assert fit.n_used == 3
    with pytest.raises(ValueError):
        rate_fit(Ts[:3], np.array([1.0, -1.0, 0.5]), burn_in=0.0)


def test_rate_fit_burn_in_drops_prefix():
    Ts = np.arange(1.0, 21.0)
    vals = 1.0 / Ts
    vals[0] = 100.0  # transient outlier
    fit = rate_fit(Ts, vals, burn_in=0.1)
    assert abs(fit.slope + 1.0) <= 1e-12


def test_zero_gap_iff_zero_distance_for_invertible_affine():
    op = make_bilinear([[1.0, 0.2], [0.0, 0.7]], b1=[0.1, 0.0], b2=[0.0, 0.1],
                       D=1.0)
    zstar = op.equilibrium
    sigma_min = np.linalg.svd(op.A, compute_uv=False)[-1]
    rng = np.random.default_rng(21)
    for _ in range(100):
        z = zstar + rng.uniform(-1, 1, 4)
        dist = float(np.linalg.norm(z - zstar))
        gap = grad_gap(op, z)
        assert gap >= sigma_min * dist - 1e-12
        assert gap <= op.ell * dist + 1e-12
    assert grad_gap(op, zstar) <= 1e-12


def test_growth_envelope_holds_on_og_runs():
    for nu in (0.2, 1.0):
        op, tr = _og_run(nu=nu, T=800)
        chk = short_term_growth_check(tr, op.ell)
        assert chk.holds


def test_growth_envelope_flags_artificial_spike():
    # hand-built trace whose gradient norms jump by 100x in one step
    n = 1
    grads = np.array([[1.0], [1.0], [1.0], [100.0]])
    tr = Trace(
        algorithm="og",
        eta=0.01,
        inits=np.zeros((2, n)),
        iterates=np.zeros((2, n)),
        grads=grads,
    )
    chk = short_term_growth_check(tr, ell=1.0)
    assert not chk.holds


def test_bounded_iterates_on_convergent_run():
    op, tr = _og_run()
    chk = bounded_iterates_check(tr, op.equilibrium)
    assert chk.holds and not chk.finding_only


def test_bounded_iterates_unequal_seeds_is_finding_only():
    op = make_bilinear(np.eye(2), D=1.0)
    tr = run_og(op, [0.5, 0.0, 0.0, 0.0], [0.0, 0.5, 0.0, 0.0],
                1.0 / 150.0, 100)
    chk = bounded_iterates_check(tr, op.equilibrium)
    assert chk.finding_only


def test_gap_report_series_and_csv(tmp_path):
    game = two_player_bilinear_game([[1.0]], D=1.0)
    op = game.operator
    tr = run_og(op, [0.5, 0.0], [0.5, 0.0], 1.0 / 150.0, 10)
    reports = gap_report_series(tr, op, game=game, radius=3.0)
    assert all(r.total_gap is not None for r in reports)
    assert all(r.dist_to_eq is not None for r in reports)
    assert all(r.grad_gap >= 0 for r in reports)
    path = tmp_path / "gap.csv"
    write_gap_csv(reports, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "t,grad_gap,total_gap,total_gap_bound,dist_to_eq"
    assert len(lines) == 1 + len(reports)
    # bound-only series leaves the exact column blank
    reports2 = gap_report_series(tr, op)
    write_gap_csv(reports2, path)
    first = path.read_text().strip().split("\n")[1].split(",")
    assert first[2] == "" and first[3] == ""
