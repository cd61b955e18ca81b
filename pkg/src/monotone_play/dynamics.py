"""Iterative dynamics: optimistic gradient (two equivalent forms),
extragradient, plain gradient descent, a generic fixed-coefficient linear
iteration runner, and the adversarial regret environments.

Index conventions
-----------------
A :class:`Trace` stores ``inits`` (the seed points, in increasing time
order) followed by ``iterates``.  Time indices run from ``-p0 + 1`` for a
method seeded with ``p0`` points, so the last init always sits at t = 0
and iterates occupy t = 1 .. T.  The extragradient runner has no seeds in
this sense (its z-sequence starts at t = 0 and the u-sequence is stored
as ``aux``).

Gradients are evaluated exactly once per stored point and cached in
``grads``; ``grads[k]`` is F at the k-th stored point, bit-identical to
re-evaluation.  The optimistic update is computed in the fixed order
``z - (2*eta)*g + eta*g_prev`` so repeated runs are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DivergenceError
from .operators import MonotoneOperator, split_blocks

Array = np.ndarray

#: Runs abort once an iterate norm exceeds this multiple of (1 + initial norm).
DIVERGENCE_FACTOR = 1e12


@dataclass(frozen=True)
class Trace:
    """Ordered iterates of one run, with cached per-point gradient values."""

    algorithm: str
    eta: float
    inits: Array  # (p0, n), time-ascending
    iterates: Array  # (T, n)
    grads: Array  # (p0 + T, n)
    aux: Optional[Array] = None  # w-sequence (og-peg) or u-sequence (eg)

    @property
    def n(self) -> int:
        return self.iterates.shape[1] if self.iterates.size else self.inits.shape[1]

    @property
    def p(self) -> int:
        return self.inits.shape[0]

    @property
    def T(self) -> int:
        return self.iterates.shape[0]

    @property
    def t_first(self) -> int:
        # last init sits at t = 0; with no inits the iterates start at t = 0
        return -self.p + 1 if self.p else 0

    def times(self) -> Array:
        return np.arange(self.t_first, self.t_first + self.p + self.T)

    def points(self) -> Array:
        return np.vstack([self.inits, self.iterates]) if self.p else self.iterates

    def point(self, t: int) -> Array:
        return self.points()[self._row(t)]

    def grad(self, t: int) -> Array:
        return self.grads[self._row(t)]

    def grad_norms(self) -> Array:
        return np.linalg.norm(self.grads, axis=1)

    def _row(self, t: int) -> int:
        row = t - self.t_first
        if not 0 <= row < self.p + self.T:
            raise IndexError(f"time index {t} outside stored range")
        return row


def _check_run_args(eta: float, T: int) -> None:
    if not eta > 0:
        raise ValueError("eta must be positive")
    if not T >= 1:
        raise ValueError("T must be at least 1")


def _guard(z: Array, cap: float, step: int, partial: Callable[[], Trace]) -> None:
    if not np.all(np.isfinite(z)) or float(np.linalg.norm(z)) > cap:
        raise DivergenceError(
            f"iterate diverged at step {step}", step=step, trace=partial()
        )


def run_og(op: MonotoneOperator, z_minus1, z0, eta: float, T: int) -> Trace:
    """Optimistic gradient: z^{t+1} = z^t - 2 eta F(z^t) + eta F(z^{t-1})."""
    _check_run_args(eta, T)
    zm1 = np.asarray(z_minus1, dtype=float).reshape(-1)
    z = np.asarray(z0, dtype=float).reshape(-1)
    g_init = np.vstack([op.eval(zm1), op.eval(z)])
    g_prev, g = g_init[0], g_init[1]
    cap = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(z)))
    zs = np.empty((T, op.n))
    gs = np.empty((T, op.n))
    inits = np.vstack([zm1, z])

    def partial(k: int) -> Callable[[], Trace]:
        return lambda: Trace(
            "og", eta, inits, zs[:k].copy(), np.vstack([g_init, gs[:k]])
        )

    for t in range(1, T + 1):
        z = z - (2.0 * eta) * g + eta * g_prev
        _guard(z, cap, t, partial(t - 1))
        g_prev, g = g, op.eval(z)
        zs[t - 1] = z
        gs[t - 1] = g
    return Trace("og", eta, inits, zs, np.vstack([g_init, gs]))


def run_og_peg(op: MonotoneOperator, z_minus1, z0, eta: float, T: int) -> Trace:
    """Optimistic gradient in its past-extragradient form.

    Maintains w^t = z^t + eta F(z^{t-1}) via w^{t+1} = w^t - eta F(z^t)
    and z^t = w^t - eta F(z^{t-1}); algebraically identical to
    :func:`run_og`, differing only in floating-point evaluation order.
    The w-sequence is stored as ``aux`` (w^0 .. w^T).
    """
    _check_run_args(eta, T)
    zm1 = np.asarray(z_minus1, dtype=float).reshape(-1)
    z = np.asarray(z0, dtype=float).reshape(-1)
    init_grads = np.vstack([op.eval(zm1), op.eval(z)])
    g = init_grads[1]  # F(z^{t-1}) within the loop
    w = z + eta * init_grads[0]  # w^0
    cap = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(z)))
    zs = np.empty((T, op.n))
    gs = np.empty((T, op.n))
    ws = np.empty((T + 1, op.n))
    ws[0] = w
    inits = np.vstack([zm1, z])

    def partial(k: int) -> Callable[[], Trace]:
        return lambda: Trace(
            "og-peg",
            eta,
            inits,
            zs[:k].copy(),
            np.vstack([init_grads, gs[:k]]),
            aux=ws[: k + 1].copy(),
        )

    for t in range(1, T + 1):
        w = w - eta * g
        z = w - eta * g
        _guard(z, cap, t, partial(t - 1))
        g = op.eval(z)
        ws[t] = w
        zs[t - 1] = z
        gs[t - 1] = g
    return Trace("og-peg", eta, inits, zs, np.vstack([init_grads, gs]), aux=ws)


def _project_blocks(z: Array, radius: float, dims: Sequence[int]) -> Array:
    out = []
    for blk in split_blocks(z, dims):
        nrm = float(np.linalg.norm(blk))
        out.append(blk * (radius / nrm) if nrm > radius else blk)
    return np.concatenate(out)


def run_eg(
    op: MonotoneOperator,
    u0,
    eta: float,
    T: int,
    projection_radius: Optional[float] = None,
    block_dims: Optional[Sequence[int]] = None,
) -> Trace:
    """Extragradient: u^t = P(u^{t-1} - eta F(z^{t-1})), z^t = P(u^t - eta F(u^t)).

    Projection (optional) is the Euclidean projection onto the centered
    ball of ``projection_radius`` per player block; ``block_dims``
    defaults to the two-player even split. The u-sequence is stored as
    ``aux`` and the z-sequence as iterates, starting at t = 0.
    """
    _check_run_args(eta, T)
    u = np.asarray(u0, dtype=float).reshape(-1)
    if block_dims is None:
        block_dims = (op.n // 2, op.n - op.n // 2) if op.n % 2 == 0 else (op.n,)

    def proj(v: Array) -> Array:
        if projection_radius is None:
            return v
        return _project_blocks(v, projection_radius, block_dims)

    gu = op.eval(u)
    z = proj(u - eta * gu)
    gz = op.eval(z)
    cap = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(u)))
    zs = np.empty((T + 1, op.n))
    gs = np.empty((T + 1, op.n))
    us = np.empty((T + 1, op.n))
    zs[0], gs[0], us[0] = z, gz, u
    empty = np.empty((0, op.n))

    def partial(k: int) -> Callable[[], Trace]:
        return lambda: Trace(
            "eg", eta, empty, zs[:k].copy(), gs[:k].copy(), aux=us[:k].copy()
        )

    for t in range(1, T + 1):
        u = proj(u - eta * gz)
        gu = op.eval(u)
        z = proj(u - eta * gu)
        _guard(z, cap, t, partial(t))
        gz = op.eval(z)
        us[t], zs[t], gs[t] = u, z, gz
    return Trace("eg", eta, empty, zs, gs, aux=us)


def run_gd(op: MonotoneOperator, z0, eta: float, T: int) -> Trace:
    """Plain (online) gradient descent z^{t+1} = z^t - eta F(z^t)."""
    _check_run_args(eta, T)
    z = np.asarray(z0, dtype=float).reshape(-1)
    g0 = op.eval(z)
    g = g0
    cap = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(z)))
    zs = np.empty((T, op.n))
    gs = np.empty((T, op.n))
    inits = z[None, :].copy()

    def partial(k: int) -> Callable[[], Trace]:
        return lambda: Trace(
            "gd", eta, inits, zs[:k].copy(), np.vstack([g0[None, :], gs[:k]])
        )

    for t in range(1, T + 1):
        z = z - eta * g
        _guard(z, cap, t, partial(t - 1))
        g = op.eval(z)
        zs[t - 1] = z
        gs[t - 1] = g
    return Trace("gd", eta, inits, zs, np.vstack([g0[None, :], gs]))


@dataclass(frozen=True)
class SCLICoefficients:
    """Scalar coefficients of a stationary linear iteration with memory p.

    The update on an affine operator F(z) = Az + b is
    z^t = sum_j (alpha_j A + beta_j I) z^{t-p+j} + (gamma A + delta I) b.
    """

    p: int
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    gamma: float
    delta: float

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("memory order p must be at least 1")
        if len(self.alpha) != self.p or len(self.beta) != self.p:
            raise ValueError("alpha and beta must each have length p")

    def consistent(self, tol: float = 1e-9) -> bool:
        """True iff the beta coefficients sum to 1."""
        return abs(math.fsum(self.beta) - 1.0) <= tol

    def coefficient_matrices(self, A: Array) -> list[Array]:
        eye = np.eye(A.shape[0])
        return [a * A + b * eye for a, b in zip(self.alpha, self.beta)]

    def step_offset(self, A: Array, b: Array) -> Array:
        return self.gamma * (A @ b) + self.delta * b


def og_as_scli(eta: float) -> SCLICoefficients:
    """Optimistic gradient with constant step as a 2-memory linear iteration."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    return SCLICoefficients(
        p=2, alpha=(eta, -2.0 * eta), beta=(0.0, 1.0), gamma=0.0, delta=-eta
    )


def gd_as_scli(eta: float) -> SCLICoefficients:
    """Gradient descent with constant step as a 1-memory linear iteration."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    return SCLICoefficients(p=1, alpha=(-eta,), beta=(1.0,), gamma=0.0, delta=-eta)


def run_scli(
    op: MonotoneOperator, coeffs: SCLICoefficients, inits, T: int
) -> Trace:
    """Run a fixed-coefficient linear iteration on an affine operator.

    ``inits`` are the p seed points in increasing time order
    (z^{-p+1}, ..., z^0). Restricted to affine operator kinds; the
    coefficient matrices are formed once.
    """
    if op.kind not in ("linear", "bilinear", "quadratic-min"):
        raise ValueError(
            "linear-iteration runner requires an affine operator kind, "
            f"got {op.kind!r}"
        )
    if not T >= 1:
        raise ValueError("T must be at least 1")
    inits = np.atleast_2d(np.asarray(inits, dtype=float))
    if inits.shape != (coeffs.p, op.n):
        raise ValueError(f"inits must have shape ({coeffs.p}, {op.n})")
    Cjs = coeffs.coefficient_matrices(op.A)
    offset = coeffs.step_offset(op.A, op.b)
    cap = DIVERGENCE_FACTOR * (1.0 + float(np.max(np.linalg.norm(inits, axis=1))))
    window = [inits[j].copy() for j in range(coeffs.p)]
    zs = np.empty((T, op.n))

    def partial(k: int) -> Callable[[], Trace]:
        def build() -> Trace:
            pts = np.vstack([inits, zs[:k]])
            grads = pts @ op.A.T + op.b
            return Trace("scli", float("nan"), inits.copy(), zs[:k].copy(), grads)

        return build

    for t in range(1, T + 1):
        z = offset.copy()
        for Cj, zj in zip(Cjs, window):
            z += Cj @ zj
        _guard(z, cap, t, partial(t - 1))
        window.pop(0)
        window.append(z)
        zs[t - 1] = z
    pts = np.vstack([inits, zs])
    grads = np.empty_like(pts)
    for k, pt in enumerate(pts):
        grads[k] = op.eval(pt)
    return Trace("scli", float("nan"), inits.copy(), zs, grads)


# ---------------------------------------------------------------------------
# Online-learning regret environments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegretDemo:
    """Actions, per-step losses, and the prefix regret sequence of a run."""

    actions: Array
    losses: Array
    regret: Array  # regret after t steps, t = 1 .. T

    @property
    def final_regret(self) -> float:
        return float(self.regret[-1])

    @property
    def cumulative_loss(self) -> float:
        return float(self.losses.sum())


def eg_regret_demo(T: int, eta: float) -> RegretDemo:
    """Extragradient played as an online learner against a scripted adversary.

    One learner with action set [-1, 1] and loss v1 * v2 faces the
    adversary v2 = 1 on even steps and 0 on odd steps.  The learner
    alternates the two extragradient half-updates, starting from 0.
    Regret is measured against the best fixed action in [-1, 1]; the
    per-step losses are exactly zero, so the regret equals ceil(t / 2).
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    if not 0 < eta <= 1:
        raise ValueError("eta must lie in (0, 1]")

    def clip(v: float) -> float:
        return min(1.0, max(-1.0, v))

    def adversary(t: int) -> float:
        return 1.0 if t % 2 == 0 else 0.0

    actions = np.zeros(T)
    for t in range(1, T):
        prev = actions[t - 1] if t % 2 == 1 else actions[t - 2]
        actions[t] = clip(prev - eta * adversary(t - 1))
    v2 = np.array([adversary(t) for t in range(T)])
    losses = actions * v2
    cum_loss = np.cumsum(losses)
    cum_v2 = np.cumsum(v2)
    best_fixed = -np.abs(cum_v2)  # min over v in [-1, 1] of v * sum(v2)
    return RegretDemo(actions=actions, losses=losses, regret=cum_loss - best_fixed)


def alternating_adversary_grads(T: int, d: int = 1) -> Array:
    """Loss gradients produced by the scripted adversary of the demo above."""
    g = np.zeros((T, d))
    g[::2, 0] = 1.0
    return g


def og_regret_run(
    loss_gradient_sequence,
    D: float,
    T: int,
    step_schedule: Optional[Callable[[int], float]] = None,
    grad_bound: Optional[float] = None,
) -> Array:
    """Optimistic gradient as an online learner against fixed affine losses.

    Plays v^t in B(0, D) against per-step losses <g_t, v>; the update is
    v^{t+1} = P(v^t - 2 eta_t g_t + eta_t g_{t-1}) with the default
    schedule eta_t = D / (L sqrt(t + 1)), L the declared gradient bound.
    Returns the exact regret sequence: regret(t) = sum of incurred losses
    minus the best fixed action's total loss over B(0, D).
    """
    g = np.asarray(loss_gradient_sequence, dtype=float)
    if g.ndim == 1:
        g = g[:, None]
    if g.shape[0] < T:
        raise ValueError(f"need {T} gradients, got {g.shape[0]}")
    if D <= 0:
        raise ValueError("D must be positive")
    norms = np.linalg.norm(g[:T], axis=1)
    L = grad_bound if grad_bound is not None else float(norms.max())
    if np.any(norms > L * (1 + 1e-12)):
        raise ValueError("gradients exceed the declared bound")
    if step_schedule is None:
        if L > 0:
            step_schedule = lambda t: D / (L * math.sqrt(t + 1))
        else:
            step_schedule = lambda t: 0.0
    d = g.shape[1]
    v = np.zeros(d)
    g_prev = np.zeros(d)
    losses = np.empty(T)
    for t in range(T):
        losses[t] = float(g[t] @ v)
        eta_t = step_schedule(t)
        v = v - (2.0 * eta_t) * g[t] + eta_t * g_prev
        nrm = float(np.linalg.norm(v))
        if nrm > D:
            v *= D / nrm
        g_prev = g[t]
    cum_loss = np.cumsum(losses)
    cum_grad_norm = np.linalg.norm(np.cumsum(g[:T], axis=0), axis=1)
    # best fixed action over the ball is -D * (sum g) / ||sum g||
    return cum_loss + D * cum_grad_norm


# ---------------------------------------------------------------------------
# Trace serialization
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace_csv(trace: Trace, path) -> None:
    """CSV with header t,algorithm,eta,z_0..z_{n-1},grad_norm, one row per point."""
    n = trace.n
    header = ["t", "algorithm", "eta"] + [f"z_{i}" for i in range(n)] + ["grad_norm"]
    times = trace.times()
    pts = trace.points()
    gns = trace.grad_norms()
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for t, z, gn in zip(times, pts, gns):
            row = [str(int(t)), trace.algorithm, _fmt(trace.eta)]
            row += [_fmt(v) for v in z]
            row.append(_fmt(gn))
            fh.write(",".join(row) + "\n")
