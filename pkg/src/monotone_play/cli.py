"""Experiment harness: parse a JSON config, dispatch to the library, and
emit CSV tables, a human-readable summary, and companion figures.

Invocation:  monotone-play <command> --config cfg.json [--out dir]
Commands:    simulate | gap | potential | scli-sweep | lowerbound |
             regret | ratefit

Configs are parsed strictly: unknown keys are rejected and physical
parameters (step size, horizon, ball radius) have no defaults.  Exit
codes: 0 success, 1 a check failed, 2 configuration error, 3 numeric
error.  CSV output is byte-identical across runs of the same config and
seed.  Sweep parallelism is capped by the MONOTONE_PLAY_THREADS
environment variable.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import diagnostics, dynamics, figures, potential, scli
from .errors import ConfigError, DivergenceError, NumericError
from .operators import (
    GameSpec,
    MonotoneOperator,
    make_bilinear,
    make_linear,
    make_perturbed_bilinear,
    make_quadratic_min,
    two_player_bilinear_game,
)

COMMANDS = ("simulate", "gap", "potential", "scli-sweep", "lowerbound",
            "regret", "ratefit")


# ---------------------------------------------------------------------------
# Strict config handling
# ---------------------------------------------------------------------------


def _check_keys(d: dict, allowed: set[str], required: set[str], ctx: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{ctx}: unknown keys {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"{ctx}: missing required keys {sorted(missing)}")


def _positive(d: dict, key: str, ctx: str) -> float:
    v = d[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
        raise ConfigError(f"{ctx}: {key} must be a positive number")
    return float(v)


def _matrix(spec, d: dict, ctx: str) -> np.ndarray:
    if spec == "random":
        if "m" not in d or "seed" not in d:
            raise ConfigError(f"{ctx}: random matrix needs 'm' and 'seed'")
        rng = np.random.default_rng(int(d["seed"]))
        M = rng.uniform(-1.0, 1.0, size=(int(d["m"]), int(d["m"])))
        return M / np.linalg.norm(M, 2)
    M = np.asarray(spec, dtype=float)
    if M.ndim == 1:  # row-major flat list
        m = math.isqrt(M.size)
        if m * m != M.size:
            raise ConfigError(f"{ctx}: flat matrix length {M.size} is not square")
        M = M.reshape(m, m)
    return M


_OPERATOR_KEYS = {"kind", "M", "b1", "b2", "S", "A", "b", "epsilon", "D", "seed", "m"}


def operator_from_config(d: dict, ctx: str = "operator") -> MonotoneOperator:
    if not isinstance(d, dict):
        raise ConfigError(f"{ctx}: expected an object")
    _check_keys(d, _OPERATOR_KEYS, {"kind", "D"}, ctx)
    kind = d["kind"]
    D = _positive(d, "D", ctx)
    if kind == "bilinear":
        if "M" not in d:
            raise ConfigError(f"{ctx}: bilinear operator needs M")
        return make_bilinear(_matrix(d["M"], d, ctx), d.get("b1"), d.get("b2"), D)
    if kind == "perturbed-bilinear":
        if "M" not in d or "epsilon" not in d:
            raise ConfigError(f"{ctx}: perturbed-bilinear needs M and epsilon")
        return make_perturbed_bilinear(
            _matrix(d["M"], d, ctx), d.get("b1"), d.get("b2"),
            float(d["epsilon"]), D,
        )
    if kind == "quadratic-min":
        if "S" not in d:
            raise ConfigError(f"{ctx}: quadratic-min operator needs S")
        return make_quadratic_min(_matrix(d["S"], d, ctx), d.get("b"), D)
    if kind == "linear":
        if "A" not in d:
            raise ConfigError(f"{ctx}: linear operator needs A")
        return make_linear(_matrix(d["A"], d, ctx), d.get("b"), D)
    raise ConfigError(f"{ctx}: unknown operator kind {kind!r}")


def coeffs_from_config(d: dict, ctx: str = "coeffs") -> dynamics.SCLICoefficients:
    if not isinstance(d, dict):
        raise ConfigError(f"{ctx}: expected an object")
    _check_keys(d, {"alpha", "beta", "gamma", "delta"},
                {"alpha", "beta", "gamma", "delta"}, ctx)
    alpha = tuple(float(a) for a in d["alpha"])
    beta = tuple(float(b) for b in d["beta"])
    if len(alpha) != len(beta):
        raise ConfigError(f"{ctx}: alpha and beta must have equal length")
    return dynamics.SCLICoefficients(
        p=len(alpha), alpha=alpha, beta=beta,
        gamma=float(d["gamma"]), delta=float(d["delta"]),
    )


# ---------------------------------------------------------------------------
# Summary
# ---------------------------------------------------------------------------


@dataclass
class Summary:
    lines: list[tuple[str, str, str]]

    def add(self, name: str, status: str, detail: str = "") -> None:
        self.lines.append((name, status, detail))

    def render(self) -> str:
        out = []
        for name, status, detail in self.lines:
            line = f"{name}: {status}"
            if detail:
                line += f" ({detail})"
            out.append(line)
        return "\n".join(out) + "\n"

    @property
    def failed(self) -> bool:
        return any(status == "violated" for _, status, _ in self.lines)


def _status(ok: bool) -> str:
    return "holds" if ok else "violated"


# ---------------------------------------------------------------------------
# simulate / gap shared run handling
# ---------------------------------------------------------------------------

_RUN_KEYS = {
    "label", "operator", "algorithm", "eta", "T", "D", "z0", "z_minus1",
    "u0", "inits", "coeffs", "projection_radius",
}


def _vector(d: dict, key: str, n: int, ctx: str) -> np.ndarray:
    if key not in d:
        raise ConfigError(f"{ctx}: missing {key}")
    v = np.asarray(d[key], dtype=float).reshape(-1)
    if v.shape != (n,):
        raise ConfigError(f"{ctx}: {key} must have length {n}")
    return v


def _run_dynamic(run: dict, ctx: str) -> tuple[MonotoneOperator, dynamics.Trace, float]:
    _check_keys(run, _RUN_KEYS, {"operator", "algorithm", "T", "D"}, ctx)
    op = operator_from_config(run["operator"], f"{ctx}.operator")
    algo = run["algorithm"]
    T = int(_positive(run, "T", ctx))
    D = _positive(run, "D", ctx)
    if algo in ("og", "og-peg", "eg", "gd") and "eta" not in run:
        raise ConfigError(f"{ctx}: eta is required for algorithm {algo!r}")
    if algo == "og":
        trace = dynamics.run_og(
            op, _vector(run, "z_minus1", op.n, ctx), _vector(run, "z0", op.n, ctx),
            _positive(run, "eta", ctx), T,
        )
    elif algo == "og-peg":
        trace = dynamics.run_og_peg(
            op, _vector(run, "z_minus1", op.n, ctx), _vector(run, "z0", op.n, ctx),
            _positive(run, "eta", ctx), T,
        )
    elif algo == "eg":
        radius = run.get("projection_radius")
        trace = dynamics.run_eg(
            op, _vector(run, "u0", op.n, ctx), _positive(run, "eta", ctx), T,
            projection_radius=None if radius is None else float(radius),
        )
    elif algo == "gd":
        trace = dynamics.run_gd(
            op, _vector(run, "z0", op.n, ctx), _positive(run, "eta", ctx), T
        )
    elif algo == "scli":
        if "coeffs" not in run or "inits" not in run:
            raise ConfigError(f"{ctx}: scli runs need coeffs and inits")
        coeffs = coeffs_from_config(run["coeffs"], f"{ctx}.coeffs")
        inits = np.asarray(run["inits"], dtype=float)
        trace = dynamics.run_scli(op, coeffs, inits, T)
    else:
        raise ConfigError(f"{ctx}: unknown algorithm {algo!r}")
    return op, trace, D


def _simulate_checks(
    summary: Summary, label: str, op: MonotoneOperator,
    trace: dynamics.Trace, D: float, run: dict,
) -> None:
    if trace.algorithm not in ("og", "og-peg"):
        gn = trace.grad_norms()
        summary.add(f"{label}.final_grad_gap", "info", f"{gn[-1]:.6g}")
        return
    eta = trace.eta
    zstar = op.equilibrium
    seeds_in_ball = zstar is not None and all(
        float(np.linalg.norm(z - zstar)) <= D * (1 + 1e-12) for z in trace.inits
    )
    # last-iterate ceiling over every prefix
    if zstar is None or not seeds_in_ball:
        summary.add(f"{label}.last_iterate_bound", "vacuous",
                    "equilibrium unknown or seeds outside the D-ball")
    else:
        chk = diagnostics.last_iterate_bound_check(trace, D, op.ell, op.lam)
        if chk.vacuous:
            summary.add(f"{label}.last_iterate_bound", "vacuous",
                        "step size exceeds the admissible range")
        else:
            summary.add(f"{label}.last_iterate_bound", _status(chk.holds),
                        f"margin={chk.margin:.4g} worst_t={chk.worst_t}")
    # best-iterate ceilings
    gate = 10.0 * eta**2 * op.ell**2 < 1.0
    if not (gate and seeds_in_ball):
        summary.add(f"{label}.best_iterate_bound", "vacuous",
                    "preconditions not met")
    else:
        b1 = diagnostics.best_iterate(trace, 1)
        bound1 = diagnostics.best_iterate_bound(D, eta, op.ell, trace.T, 1)
        summary.add(f"{label}.best_iterate_bound", _status(b1.value <= bound1),
                    f"value={b1.value:.4g} bound={bound1:.4g}")
        if trace.T > 9:
            b3 = diagnostics.best_iterate(trace, 3)
            bound3 = diagnostics.best_iterate_bound(D, eta, op.ell, trace.T, 3)
            summary.add(f"{label}.best_window_bound", _status(b3.value <= bound3),
                        f"value={b3.value:.4g} bound={bound3:.4g}")
    # growth envelope
    growth = diagnostics.short_term_growth_check(trace, op.ell)
    summary.add(f"{label}.short_term_growth", _status(growth.holds),
                f"log_excess={growth.margin:.3g}")
    # bounded iterates
    if zstar is not None:
        bd = diagnostics.bounded_iterates_check(trace, zstar)
        if bd.finding_only and not bd.holds:
            summary.add(f"{label}.bounded_iterates", "finding",
                        f"ratio={bd.ratio:.4g} (unequal seeds)")
        else:
            summary.add(f"{label}.bounded_iterates", _status(bd.holds),
                        f"ratio={bd.ratio:.4g}")
    # agreement of the two update forms
    if trace.algorithm == "og":
        twin = dynamics.run_og_peg(
            op, trace.inits[0], trace.inits[1], eta, trace.T
        )
        scale = 1.0 + float(np.abs(trace.iterates).max())
        diff = float(np.abs(twin.iterates - trace.iterates).max()) / scale
        summary.add(f"{label}.og_peg_agreement", _status(diff <= 1e-10),
                    f"max_rel_diff={diff:.3g}")


def cmd_simulate(cfg: dict, out: Path, summary: Summary, render: bool) -> None:
    _check_keys(cfg, {"command", "out", "figures", "runs"}, {"runs"}, "simulate")
    runs = cfg["runs"]
    if not isinstance(runs, list) or not runs:
        raise ConfigError("simulate: runs must be a non-empty list")
    for i, run in enumerate(runs):
        label = run.get("label", f"run{i}")
        op, trace, D = _run_dynamic(run, f"simulate.runs[{i}]")
        dynamics.write_trace_csv(trace, out / f"trace_{label}.csv")
        _simulate_checks(summary, label, op, trace, D, run)
        if render:
            times = trace.times()
            bound = None
            if trace.algorithm in ("og", "og-peg"):
                with np.errstate(divide="ignore"):
                    bound = 60.0 * D / (trace.eta * np.sqrt(np.maximum(times, 1)))
            figures.trace_figure(out / f"trace_{label}.png", times,
                                 trace.grad_norms(), bound, label)


def cmd_gap(cfg: dict, out: Path, summary: Summary, render: bool) -> None:
    _check_keys(cfg, {"command", "out", "figures", "runs"}, {"runs"}, "gap")
    for i, run in enumerate(cfg["runs"]):
        label = run.get("label", f"run{i}")
        run_keys = dict(run)
        radius = run_keys.pop("radius", None)
        ctx = f"gap.runs[{i}]"
        op, trace, D = _run_dynamic(run_keys, ctx)
        game: Optional[GameSpec] = None
        odef = run["operator"]
        if odef.get("kind") == "bilinear":
            game = two_player_bilinear_game(
                _matrix(odef["M"], odef, ctx), odef.get("b1"), odef.get("b2"),
                float(odef["D"]),
            )
        gap_radius = float(radius) if radius is not None else 3.0 * D
        reports = diagnostics.gap_report_series(
            trace, op, game=game, radius=gap_radius if game else None
        )
        diagnostics.write_gap_csv(reports, out / f"gap_{label}.csv")
        both = [r for r in reports
                if r.total_gap is not None and r.total_gap_bound is not None]
        if both:
            worst = max(r.total_gap - r.total_gap_bound for r in both)
            summary.add(f"{label}.gap_upper_bound", _status(worst <= 1e-9),
                        f"max_excess={worst:.3g} over {len(both)} steps")
        else:
            summary.add(f"{label}.gap_upper_bound", "info",
                        "exact total gap unavailable for this instance")
        if render:
            figures.gap_figure(out / f"gap_{label}.png", reports)


_POTENTIAL_KEYS = {"label", "operator", "eta", "T", "D", "z0", "z_minus1",
                   "quad_order", "identity_tol"}


def cmd_potential(cfg: dict, out: Path, summary: Summary, render: bool) -> None:
    _check_keys(cfg, {"command", "out", "figures", "runs"}, {"runs"}, "potential")
    for i, run in enumerate(cfg["runs"]):
        ctx = f"potential.runs[{i}]"
        _check_keys(run, _POTENTIAL_KEYS,
                    {"operator", "eta", "T", "D", "z0", "z_minus1"}, ctx)
        label = run.get("label", f"run{i}")
        op = operator_from_config(run["operator"], f"{ctx}.operator")
        eta = _positive(run, "eta", ctx)
        T = int(_positive(run, "T", ctx))
        quad_order = int(run.get("quad_order", 2))
        tol = float(run.get("identity_tol", 1e-8))
        trace = dynamics.run_og_peg(
            op, _vector(run, "z_minus1", op.n, ctx), _vector(run, "z0", op.n, ctx),
            eta, T,
        )
        pt = potential.backward_pass(op, trace, quad_order=quad_order)
        potential.write_potential_csv(pt, out / f"potential_{label}.csv")
        residuals = potential.potential_identity_residuals(pt)
        worst = float(residuals.max()) if residuals.size else 0.0
        summary.add(f"{label}.potential_identity", _status(worst <= tol),
                    f"max_residual={worst:.3g} tol={tol:g}")
        bounds = potential.step_matrix_bounds(pt)
        if bounds.vacuous:
            summary.add(f"{label}.step_matrix_bounds", "vacuous",
                        "step size exceeds the guaranteed regime")
        else:
            summary.add(f"{label}.step_matrix_bounds", _status(bounds.all_hold))
        rem = potential.remainder_identity_residuals(pt)
        worst_rem = float(rem.max()) if rem.size else 0.0
        summary.add(f"{label}.remainder_identity", _status(worst_rem <= tol),
                    f"max_residual={worst_rem:.3g}")
        if op.kind in ("linear", "bilinear", "quadratic-min") and T >= 51:
            C_cf = potential.linear_closed_form_C(op.A, eta)
            devs = [
                float(np.linalg.norm(pt.C(t) - C_cf, 2)) for t in range(0, T - 49)
            ]
            worst_dev = max(devs)
            summary.add(f"{label}.correction_closed_form",
                        _status(worst_dev <= 1e-6), f"max_dev={worst_dev:.3g}")
        if render:
            gn = trace.grad_norms()[trace.p - 1 :]
            figures.potential_figure(out / f"potential_{label}.png",
                                     pt.ftilde_norms(), gn, residuals)


_SWEEP_KEYS = {"command", "out", "figures", "mode", "q", "r", "coeffs", "mu",
               "ell", "grid_points", "combine", "count", "seed", "p_max",
               "n_list"}


def _random_consistent_pair(rng: np.random.Generator, p_max: int) -> scli.PolyPair:
    p = int(rng.integers(1, p_max + 1))
    alpha = rng.uniform(-1.0, 1.0, p)
    while True:
        beta = rng.uniform(-1.0, 1.0, p)
        if abs(beta.sum()) >= 0.2:
            break
    beta /= beta.sum()
    coeffs = dynamics.SCLICoefficients(
        p=p, alpha=tuple(alpha), beta=tuple(beta), gamma=0.0,
        delta=float(alpha.sum()),
    )
    return scli.PolyPair.from_scli(coeffs)


def cmd_scli_sweep(cfg: dict, out: Path, summary: Summary, render: bool) -> None:
    _check_keys(cfg, _SWEEP_KEYS, {"mode"}, "scli-sweep")
    mode = cfg["mode"]
    grid_points = int(cfg.get("grid_points", 10_000))
    if mode in ("pair", "agd", "random"):
        mu = _positive(cfg, "mu", "scli-sweep")
        ell = _positive(cfg, "ell", "scli-sweep")
    if mode == "pair":
        if "coeffs" in cfg:
            pair = scli.PolyPair.from_scli(
                coeffs_from_config(cfg["coeffs"], "scli-sweep.coeffs"))
        elif "q" in cfg and "r" in cfg:
            pair = scli.PolyPair(q=np.asarray(cfg["q"], dtype=float),
                                 r=np.asarray(cfg["r"], dtype=float))
        else:
            raise ConfigError("scli-sweep: pair mode needs q/r or coeffs")
        combine = cfg.get("combine", "linear")
        sweep = scli.radius_sweep(pair, mu, ell, grid_points, combine=combine)
        scli.write_sweep_csv(sweep, out / "sweep.csv")
        summary.add("radius_sweep", "info",
                    f"sup={sweep.sup:.10g} argmax_nu={sweep.argmax_nu:.6g}")
        floor = None
        if abs(pair.q_at_one()) <= 1e-12 and combine == "linear":
            floor = scli.spectral_floor(mu, ell)
            summary.add("spectral_floor", _status(sweep.sup >= floor - 1e-3),
                        f"sup={sweep.sup:.8g} floor={floor:.8g}")
        if render:
            figures.sweep_figure(out / "sweep.png", sweep.nus, sweep.rhos, floor)
    elif mode == "agd":
        pair = scli.agd_polys(mu, ell)
        sweep = scli.radius_sweep(pair, mu, ell, grid_points, combine="linear")
        scli.write_sweep_csv(sweep, out / "sweep.csv")
        alpha = (math.sqrt(ell) - math.sqrt(mu)) / (math.sqrt(ell) + math.sqrt(mu))
        target = math.sqrt(alpha)
        dev = float(np.abs(sweep.rhos - target).max())
        summary.add("agd_flatness", _status(dev <= 1e-8),
                    f"max_dev={dev:.3g} target={target:.9g}")
        floor = scli.spectral_floor(mu, ell)
        summary.add("spectral_floor", _status(sweep.sup >= floor - 1e-3),
                    f"sup={sweep.sup:.8g} floor={floor:.8g}")
        if render:
            figures.sweep_figure(out / "sweep.png", sweep.nus, sweep.rhos, floor)
    elif mode == "random":
        count = int(cfg.get("count", 100))
        seed = int(cfg.get("seed", 0))
        p_max = int(cfg.get("p_max", 4))
        rng = np.random.default_rng(seed)
        floor = scli.spectral_floor(mu, ell)
        rows = []
        ok = 0
        for k in range(count):
            pair = _random_consistent_pair(rng, p_max)
            sweep = scli.radius_sweep(pair, mu, ell, grid_points,
                                      combine="linear")
            good = sweep.sup >= floor - 1e-3
            ok += bool(good)
            rows.append((k, pair.p, sweep.sup, sweep.argmax_nu))
        with open(out / "sweep_batch.csv", "w") as fh:
            fh.write("pair,p,sup_rho,argmax_nu\n")
            for k, p, sup, nu in rows:
                fh.write(f"{k},{p},{sup:.17g},{nu:.17g}\n")
        summary.add("spectral_floor_law", _status(ok == count),
                    f"{ok}/{count} pairs above floor-1e-3 (floor={floor:.8g})")
        if render:
            sups = np.array([r[2] for r in rows])
            figures.sweep_figure(out / "sweep_batch.png",
                                 np.arange(count), sups, floor)
    elif mode == "characteristic":
        count = int(cfg.get("count", 20))
        seed = int(cfg.get("seed", 0))
        n_list = [int(v) for v in cfg.get("n_list", [2, 4])]
        if any(n % 2 or n < 2 for n in n_list):
            raise ConfigError("scli-sweep: n_list entries must be even")
        rng = np.random.default_rng(seed)
        worst = 0.0
        with open(out / "characteristic.csv", "w") as fh:
            fh.write("case,n,p,nu,rho_companion,rho_poly,abs_err\n")
            for k in range(count):
                p = int(rng.integers(1, 5))
                coeffs = dynamics.SCLICoefficients(
                    p=p,
                    alpha=tuple(rng.uniform(-1.0, 1.0, p)),
                    beta=tuple(rng.uniform(-1.0, 1.0, p)),
                    gamma=float(rng.uniform(-1.0, 1.0)),
                    delta=float(rng.uniform(-1.0, 1.0)),
                )
                nu = float(rng.uniform(0.05, 1.0))
                n = n_list[k % len(n_list)]
                A = np.block([
                    [np.zeros((n // 2, n // 2)), nu * np.eye(n // 2)],
                    [-nu * np.eye(n // 2), np.zeros((n // 2, n // 2))],
                ])
                rho_c = scli.spectral_radius(
                    scli.build_companion(coeffs, A).C_of_A)
                pair = scli.PolyPair.from_scli(coeffs)
                rho_p = scli.poly_radius(pair.minmax_combined(nu))
                err = abs(rho_c - rho_p)
                worst = max(worst, err)
                fh.write(f"{k},{n},{p},{nu:.17g},{rho_c:.17g},{rho_p:.17g},"
                         f"{err:.17g}\n")
        summary.add("companion_poly_agreement", _status(worst <= 1e-8),
                    f"max_err={worst:.3g} over {count} cases")
    else:
        raise ConfigError(f"scli-sweep: unknown mode {mode!r}")


_LOWERBOUND_KEYS = {"command", "out", "figures", "problem", "coeffs", "ell",
                    "D", "T_list", "n", "grid_points", "floor_ratio",
                    "slope_range"}


def cmd_lowerbound(cfg: dict, out: Path, summary: Summary, render: bool) -> None:
    _check_keys(cfg, _LOWERBOUND_KEYS,
                {"coeffs", "ell", "D", "T_list", "n"}, "lowerbound")
    problem = cfg.get("problem", "minmax")
    coeffs = coeffs_from_config(cfg["coeffs"], "lowerbound.coeffs")
    ell = _positive(cfg, "ell", "lowerbound")
    D = _positive(cfg, "D", "lowerbound")
    n = int(cfg["n"])
    T_list = [int(t) for t in cfg["T_list"]]
    grid_points = int(cfg.get("grid_points", 10_000))
    result = scli.lowerbound_experiment(coeffs, ell, D, T_list, n,
                                        problem=problem, grid_points=grid_points)
    if not result.convergent_case:
        rep = result.case_report
        summary.add("case", "info", f"{rep.code} [{rep.label}] {rep.detail}")
        if result.witness_trace is not None:
            dynamics.write_trace_csv(result.witness_trace, out / "witness.csv")
            gn = result.witness_trace.grad_norms()
            summary.add("witness_grad_gap", "info",
                        f"first={gn[0]:.6g} last={gn[-1]:.6g}")
        return
    scli.write_lowerbound_csv(result, out / "lowerbound.csv")
    Ts = [row.T for row in result.rows]
    measured = [row.measured for row in result.rows]
    floor_ratio = float(cfg.get("floor_ratio", 1e-3))
    min_ratio = min(row.ratio for row in result.rows)
    summary.add("lower_bound_floor", _status(min_ratio >= floor_ratio),
                f"min_ratio={min_ratio:.4g} floor={floor_ratio:g}")
    default_range = [-0.65, -0.35] if problem == "minmax" else [-1.2, -0.8]
    lo, hi = (float(v) for v in cfg.get("slope_range", default_range))
    fit = diagnostics.rate_fit(Ts, measured, burn_in=0.0)
    summary.add("decay_slope", _status(lo <= fit.slope <= hi),
                f"slope={fit.slope:.4g} range=[{lo:g},{hi:g}] r2={fit.r2:.4g}")
    if problem == "convexmin":
        worst = max(
            abs(row.window_sum - row.predicted_sum)
            / max(abs(row.predicted_sum), 1e-300)
            for row in result.rows
        )
        summary.add("window_sum_identity", _status(worst <= 1e-8),
                    f"max_rel_err={worst:.3g}")
    if render:
        ref_label = ("ell*D/sqrt(T)" if problem == "minmax" else "ell*D^2/T")
        reference = [
            ell * D / math.sqrt(T) if problem == "minmax" else ell * D**2 / T
            for T in Ts
        ]
        figures.lowerbound_figure(out / "lowerbound.png", Ts, measured,
                                  reference, ref_label)


def cmd_regret(cfg: dict, out: Path, summary: Summary, render: bool) -> None:
    _check_keys(cfg, {"command", "out", "figures", "T", "eta", "D",
                      "og_ratio_limit"}, {"T", "eta", "D"}, "regret")
    T = int(_positive(cfg, "T", "regret"))
    eta = _positive(cfg, "eta", "regret")
    D = _positive(cfg, "D", "regret")
    limit = float(cfg.get("og_ratio_limit", 0.1))
    demo = dynamics.eg_regret_demo(T, eta)
    og = dynamics.og_regret_run(dynamics.alternating_adversary_grads(T), D, T)
    with open(out / "regret.csv", "w") as fh:
        fh.write("T,eg_regret,og_regret\n")
        for t in range(T):
            fh.write(f"{t + 1},{demo.regret[t]:.17g},{og[t]:.17g}\n")
    expected = np.ceil(np.arange(1, T + 1) / 2.0)
    exact = bool(np.array_equal(demo.regret, expected))
    summary.add("eg_regret", _status(exact),
                f"final={demo.final_regret:g} expected={expected[-1]:g}")
    summary.add("eg_cumulative_loss", _status(demo.cumulative_loss == 0.0),
                f"value={demo.cumulative_loss:g}")
    ratio = float(og[-1]) / T
    summary.add("og_regret_ratio", _status(ratio <= limit),
                f"regret(T)/T={ratio:.4g} limit={limit:g}")
    if render:
        figures.regret_figure(out / "regret.png",
                              [("eg demo", demo.regret), ("og", og)])


def cmd_ratefit(cfg: dict, out: Path, summary: Summary, render: bool) -> None:
    _check_keys(cfg, {"command", "out", "figures", "input", "t_column",
                      "value_column", "burn_in"}, {"input"}, "ratefit")
    path = Path(cfg["input"])
    if not path.exists():
        raise ConfigError(f"ratefit: input file {path} not found")
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    t_col = cfg.get("t_column", header[0])
    v_col = cfg.get("value_column", header[1] if len(header) > 1 else header[0])

    def col_index(col) -> int:
        if isinstance(col, int):
            return col
        if col in header:
            return header.index(col)
        raise ConfigError(f"ratefit: column {col!r} not in {header}")

    ti, vi = col_index(t_col), col_index(v_col)
    ts = np.array([float(r[ti]) for r in rows])
    vals = np.array([float(r[vi]) for r in rows])
    fit = diagnostics.rate_fit(ts, vals, burn_in=float(cfg.get("burn_in", 0.1)))
    with open(out / "ratefit.csv", "w") as fh:
        fh.write("slope,intercept,r2,n_used\n")
        fh.write(f"{fit.slope:.17g},{fit.intercept:.17g},{fit.r2:.17g},"
                 f"{fit.n_used}\n")
    summary.add("rate_fit", "info",
                f"slope={fit.slope:.6g} r2={fit.r2:.6g} n={fit.n_used}")
    if render:
        figures.ratefit_figure(out / "ratefit.png", ts, vals,
                               fit.slope, fit.intercept)


_HANDLERS = {
    "simulate": cmd_simulate,
    "gap": cmd_gap,
    "potential": cmd_potential,
    "scli-sweep": cmd_scli_sweep,
    "lowerbound": cmd_lowerbound,
    "regret": cmd_regret,
    "ratefit": cmd_ratefit,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="monotone-play",
        description="experiment harness for monotone-game learning dynamics",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering")
    args = parser.parse_args(argv)
    try:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {args.config} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        if "command" in cfg and cfg["command"] != args.command:
            raise ConfigError(
                f"config is for command {cfg['command']!r}, invoked as "
                f"{args.command!r}"
            )
        out = Path(args.out if args.out is not None else cfg.get("out", "."))
        out.mkdir(parents=True, exist_ok=True)
        render = not args.no_figures and bool(cfg.get("figures", True))
        summary = Summary(lines=[])
        _HANDLERS[args.command](cfg, out, summary, render)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, DivergenceError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    text = summary.render()
    (out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    return 1 if summary.failed else 0


if __name__ == "__main__":
    sys.exit(main())
