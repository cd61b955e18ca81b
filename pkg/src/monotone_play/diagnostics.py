"""Gap functions, distance-to-equilibrium statistics, bound checks over
traces, and convergence-rate fitting.

The two proximity measures are the gradient gap ||F(z)|| and the total
gap: the sum over players of the best-response improvement available
inside compact per-player deviation sets.  For games whose costs are
affine in each player's own block and ball deviation sets the total gap
has a closed form; otherwise only the upper bound
diam * sqrt(K) * ||F(z)|| is reported, where diam bounds the diameter of
every deviation set.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dynamics import Trace
from .errors import UnsupportedInstanceError
from .operators import GameSpec, MonotoneOperator, split_blocks

Array = np.ndarray


def grad_gap(op: MonotoneOperator, z) -> float:
    """Euclidean norm of F(z)."""
    return float(np.linalg.norm(op.eval(np.asarray(z, dtype=float))))


def total_gap_bound(grad_gap_value: float, diameter: float, K: int) -> float:
    """Upper bound diam * sqrt(K) * ||F(z)|| on the total gap.

    Valid whenever z itself lies in the deviation sets and every set has
    diameter at most ``diameter``.
    """
    return diameter * math.sqrt(K) * grad_gap_value


def total_gap_bilinear(
    game: GameSpec, z, centers: Sequence[Array], radius: float
) -> float:
    """Exact total gap for ball deviation sets B(center_k, radius).

    Requires costs affine in each player's own block: the inner
    minimization then has the closed form
    f_k(z) - f_k(center_k, z_{-k}) + radius * ||g_k||
    with g_k the own-block gradient (constant in z_k).
    """
    if not game.affine_in_own:
        raise UnsupportedInstanceError(
            "exact total gap requires costs affine in each player's own "
            "block; use the gradient-gap upper bound instead"
        )
    z = np.asarray(z, dtype=float).reshape(-1)
    own_grads = split_blocks(game.operator.eval(z), game.dims)
    total = 0.0
    start = 0
    for k, d in enumerate(game.dims):
        center = np.asarray(centers[k], dtype=float).reshape(-1)
        if center.shape != (d,):
            raise ValueError(f"center for player {k} must have length {d}")
        z_at_center = z.copy()
        z_at_center[start : start + d] = center
        g_k = own_grads[k]
        total += (
            game.costs[k](z)
            - game.costs[k](z_at_center)
            + radius * float(np.linalg.norm(g_k))
        )
        start += d
    return total


@dataclass(frozen=True)
class GapReport:
    """Per-step gap statistics; fields are None when not computable."""

    t: int
    grad_gap: float
    total_gap: Optional[float]
    total_gap_bound: Optional[float]
    dist_to_eq: Optional[float]


def gap_report_series(
    trace: Trace,
    op: MonotoneOperator,
    game: Optional[GameSpec] = None,
    centers: Optional[Sequence[Array]] = None,
    radius: Optional[float] = None,
) -> list[GapReport]:
    """Gap statistics for every stored point of a trace.

    Deviation sets default to per-player balls of radius 3D around the
    blocks of the first stored point when ``radius``/``centers`` are not
    given (``radius`` here must then be supplied by the caller as 3D).
    The exact total gap is filled in only when a bilinear ``game`` is
    supplied; the upper bound uses the set diameter 2 * radius.
    """
    dims = game.dims if game is not None else None
    reports = []
    times = trace.times()
    pts = trace.points()
    gns = trace.grad_norms()
    if centers is None and radius is not None and dims is not None:
        centers = split_blocks(pts[0], dims)
    zstar = op.equilibrium
    for t, z, gn in zip(times, pts, gns):
        total = None
        bound = None
        if game is not None and centers is not None and radius is not None:
            total = total_gap_bilinear(game, z, centers, radius)
            bound = total_gap_bound(float(gn), 2.0 * radius, game.K)
        dist = (
            float(np.linalg.norm(z - zstar)) if zstar is not None else None
        )
        reports.append(
            GapReport(
                t=int(t),
                grad_gap=float(gn),
                total_gap=total,
                total_gap_bound=bound,
                dist_to_eq=dist,
            )
        )
    return reports


@dataclass(frozen=True)
class BestIterate:
    t: int
    value: float


def best_iterate(trace: Trace, window: int = 1) -> BestIterate:
    """Smallest gradient gap over t >= 0; windowed variant for window > 1.

    With ``window`` = S > 1 returns min over t of the max gradient gap on
    {t, ..., t + S - 1}, scanning t >= 0.  Requires S < T / 3.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    gns = trace.grad_norms()
    times = trace.times()
    mask = times >= 0
    g = gns[mask]
    ts = times[mask]
    if window == 1:
        idx = int(np.argmin(g))
        return BestIterate(t=int(ts[idx]), value=float(g[idx]))
    if 3 * window >= trace.T:
        raise ValueError("window too large: need window < T / 3")
    m = len(g) - window + 1
    wmax = g[:m].copy()
    for s in range(1, window):
        np.maximum(wmax, g[s : s + m], out=wmax)
    idx = int(np.argmin(wmax))
    return BestIterate(t=int(ts[idx]), value=float(wmax[idx]))


def best_iterate_bound(
    D: float, eta: float, ell: float, T: int, window: int = 1
) -> float:
    """Guaranteed ceiling on the (windowed) best gradient gap after T steps.

    4D / (eta sqrt(T) sqrt(1 - 10 eta^2 ell^2)) for window 1 and
    6D / (eta sqrt(T/S) sqrt(1 - 10 eta^2 ell^2)) for an S-window;
    requires eta < 1 / (ell sqrt(10)).
    """
    damp = 1.0 - 10.0 * eta**2 * ell**2
    if damp <= 0:
        raise ValueError("step size too large: need eta < 1 / (ell sqrt(10))")
    if window == 1:
        return 4.0 * D / (eta * math.sqrt(T) * math.sqrt(damp))
    return 6.0 * D / (eta * math.sqrt(T / window) * math.sqrt(damp))


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of a trace-wide bound check.

    ``margin`` is the worst ratio of measured value to bound (<= 1 means
    the bound holds everywhere); ``vacuous`` marks runs that fail the
    bound's step-size precondition, for which ``holds`` is meaningless.
    """

    holds: bool
    vacuous: bool
    margin: float
    worst_t: int


def last_iterate_bound_check(
    trace: Trace, D: float, ell: float, lam: float
) -> BoundCheck:
    """Check ||F(z^T)|| <= 60 D / (eta sqrt(T)) for every prefix length T >= 1.

    The check applies to optimistic-gradient runs with
    eta <= min(1 / (150 ell), 1 / (1711 D lam)); otherwise it is vacuous.
    """
    eta = trace.eta
    gate = 1.0 / (150.0 * ell) if ell > 0 else math.inf
    if lam > 0:
        gate = min(gate, 1.0 / (1711.0 * D * lam))
    if eta > gate * (1 + 1e-12):
        return BoundCheck(holds=False, vacuous=True, margin=math.inf, worst_t=0)
    gns = trace.grad_norms()
    times = trace.times()
    mask = times >= 1
    g = gns[mask]
    ts = times[mask].astype(float)
    bounds = 60.0 * D / (eta * np.sqrt(ts))
    ratios = g / bounds
    idx = int(np.argmax(ratios)) if len(ratios) else 0
    margin = float(ratios[idx]) if len(ratios) else 0.0
    return BoundCheck(
        holds=bool(margin <= 1.0),
        vacuous=False,
        margin=margin,
        worst_t=int(ts[idx]) if len(ratios) else 0,
    )


def averaged_iterate_gap(trace: Trace, op: MonotoneOperator) -> tuple[Array, Array]:
    """Gradient gap of the running averages zbar^T = (1/T) sum_{t<=T} z^t.

    Averages run over the iterates t = 1 .. T.  Returns (T values,
    gap values).
    """
    if trace.T < 1:
        raise ValueError("trace has no iterates")
    csum = np.cumsum(trace.iterates, axis=0)
    Ts = np.arange(1, trace.T + 1)
    gaps = np.empty(trace.T)
    for i in range(trace.T):
        gaps[i] = float(np.linalg.norm(op.eval(csum[i] / (i + 1))))
    return Ts.astype(float), gaps


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float
    n_used: int


def rate_fit(ts, values, burn_in: float = 0.1) -> RateFit:
    """Least-squares fit of log(value) against log(T).

    Drops the first ``burn_in`` fraction of points as transient, then
    excludes nonpositive values (with a warning).  At least 3 points must
    remain.
    """
    ts = np.asarray(ts, dtype=float).reshape(-1)
    values = np.asarray(values, dtype=float).reshape(-1)
    if ts.shape != values.shape:
        raise ValueError("ts and values must have the same length")
    skip = int(math.floor(burn_in * len(ts)))
    ts, values = ts[skip:], values[skip:]
    pos = values > 0
    if not np.all(pos):
        warnings.warn(
            f"excluding {int((~pos).sum())} nonpositive values from rate fit"
        )
    ts, values = ts[pos], values[pos]
    if len(ts) < 3:
        raise ValueError("rate fit needs at least 3 positive points")
    x = np.log(ts)
    y = np.log(values)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) @ (y - y.mean())))
    if ss_tot <= 1e-300:
        r2 = 1.0 if ss_res <= 1e-300 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept), r2=r2, n_used=len(ts))


def short_term_growth_check(
    trace: Trace, ell: float, rtol: float = 1e-9
) -> BoundCheck:
    """Check the growth envelope ||F(z^{t+s})|| <= delta_t (1 + 3 eta ell)^s.

    delta_t = max(||F(z^t)||, ||F(z^{t-1})||); the envelope must hold for
    every t >= 0 and every s >= 1 along the trace.  Comparison is done in
    log space so arbitrarily long traces cannot overflow.
    """
    eta = trace.eta
    gns = trace.grad_norms()
    times = trace.times()
    rate = math.log1p(3.0 * eta * ell)
    with np.errstate(divide="ignore"):
        phi = np.log(gns) - times * rate  # log(||F|| / (1+r)^t)
    # suffix max of phi strictly after each index
    suffix = np.full(len(phi), -np.inf)
    running = -np.inf
    for i in range(len(phi) - 1, 0, -1):
        running = max(running, phi[i])
        suffix[i - 1] = running
    worst_t = 0
    margin = 0.0
    slack = math.log1p(rtol)
    start = int(np.searchsorted(times, 0))
    for i in range(max(start, 1), len(phi)):
        # log of delta_t / (1+r)^t with delta_t = max(gn[t], gn[t-1])
        delta_log = max(phi[i], phi[i - 1] - rate)
        if suffix[i] > delta_log + slack:
            excess = suffix[i] - delta_log
            if excess > margin:
                margin = excess
                worst_t = int(times[i])
    return BoundCheck(
        holds=bool(margin == 0.0), vacuous=False, margin=margin, worst_t=worst_t
    )


@dataclass(frozen=True)
class BoundedIteratesCheck:
    holds: bool
    ratio: float
    finding_only: bool


def bounded_iterates_check(trace: Trace, zstar) -> BoundedIteratesCheck:
    """Check max_t ||z^t - z*|| <= 2 ||z^0 - z*|| (1 + 1e-6).

    The guarantee is stated for runs whose two seed points coincide; when
    they differ the check compares against the larger seed distance and is
    reported as a finding rather than a failure.
    """
    zstar = np.asarray(zstar, dtype=float).reshape(-1)
    pts = trace.points()
    dists = np.linalg.norm(pts - zstar, axis=1)
    seed_dists = np.linalg.norm(trace.inits - zstar, axis=1)
    same_seeds = trace.p <= 1 or bool(
        np.array_equal(trace.inits[0], trace.inits[-1])
    )
    ref = float(seed_dists[-1] if same_seeds else seed_dists.max())
    if ref == 0.0:
        ratio = 0.0 if float(dists.max()) == 0.0 else math.inf
    else:
        ratio = float(dists.max()) / (2.0 * ref)
    return BoundedIteratesCheck(
        holds=bool(ratio <= 1.0 + 1e-6),
        ratio=ratio,
        finding_only=not same_seeds,
    )


def _fmt_opt(x: Optional[float]) -> str:
    return "" if x is None else format(float(x), ".17g")


def write_gap_csv(reports: Sequence[GapReport], path) -> None:
    """CSV t,grad_gap,total_gap,total_gap_bound,dist_to_eq (blank = unavailable)."""
    with open(path, "w", newline="") as fh:
        fh.write("t,grad_gap,total_gap,total_gap_bound,dist_to_eq\n")
        for r in reports:
            fh.write(
                ",".join(
                    [
                        str(r.t),
                        format(r.grad_gap, ".17g"),
                        _fmt_opt(r.total_gap),
                        _fmt_opt(r.total_gap_bound),
                        _fmt_opt(r.dist_to_eq),
                    ]
                )
                + "\n"
            )
