"""Adaptive potential reconstruction for optimistic-gradient runs.

Given a finished run in past-extragradient form (iterates z^t with the
auxiliary sequence w^t = z^t + eta F(z^{t-1})), this module rebuilds the
potential vectors

    Ftilde^t = F(w^t) + C^{t-1} F(z^{t-1}),

where the correction matrices C^t are defined *backwards* from C^T = 0 by

    C^{t-1} = (M^t)^{-1} N^t,
    M^t = I - eta A^t + C^t,
    N^t = eta (eta A^t - C^t) B^t,

and A^t, B^t are Jacobians of F averaged along the segments from
w^t - eta F(z^t) (resp. w^t - eta F(z^{t-1})) to w^t.  The construction
makes the one-step growth exact:

    Ftilde^{t+1} = (I - eta A^t + C^t) Ftilde^t,

so the per-step residual of that identity is a direct quality signal for
the averaged Jacobians (zero up to rounding whenever the quadrature is
exact for the operator's Jacobian degree).

For affine F the recursion is stationary: every C^t equals the closed
form C = ((I + (2 eta A)^2)^{1/2} - I) / 2, computed here by the binomial
series for the matrix square root.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .dynamics import Trace
from .errors import SeriesConvergenceError, SingularStepError
from .operators import MonotoneOperator

Array = np.ndarray

#: Memory guardrails: the backward pass stores O(T n^2) matrices.
MAX_DIMENSION = 64
MAX_STEPS = 10_000

#: Step-size gates under which the norm bounds on C^t, M^t are guaranteed.
L0_GATE = math.sqrt(1.0 / 200.0)
ETA_ELL_GATE = 2.0 / 3.0


@dataclass(frozen=True)
class PotentialTrace:
    """Per-step matrices and potential vectors of one backward pass.

    Arrays are indexed by shifted step: ``A_seq[t]`` is A^t for
    t = 0 .. T, while ``C_seq[t + 1]`` is C^t for t = -1 .. T (use
    :meth:`C`).  ``step_norms[t]`` is the spectral norm of
    M^t = I - eta A^t + C^t.
    """

    base: Trace
    eta: float
    quad_order: int
    A_seq: Array  # (T+1, n, n)
    B_seq: Array  # (T+1, n, n)
    C_seq: Array  # (T+2, n, n), C^{-1} .. C^T
    M_seq: Array  # (T+1, n, n)
    N_seq: Array  # (T+1, n, n)
    D_seq: Array  # (T+1, n, n)
    Ftilde_seq: Array  # (T+1, n), t = 0 .. T
    step_norms: Array  # (T+1,)
    L0: float
    Lambda0: float

    @property
    def T(self) -> int:
        return self.base.T

    @property
    def n(self) -> int:
        return self.base.n

    def C(self, t: int) -> Array:
        if not -1 <= t <= self.T:
            raise IndexError(f"C^t defined for -1 <= t <= {self.T}")
        return self.C_seq[t + 1]

    def ftilde_norms(self) -> Array:
        return np.linalg.norm(self.Ftilde_seq, axis=1)

    def c_norms(self) -> Array:
        return np.array([np.linalg.norm(C, 2) for C in self.C_seq[1:]])


def _gauss_legendre_01(order: int) -> tuple[Array, Array]:
    if order < 1:
        raise ValueError("quadrature order must be at least 1")
    x, w = leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def alpha_avg_jacobians(
    op: MonotoneOperator, trace: Trace, t: int, quad_order: int = 2
) -> tuple[Array, Array]:
    """Averaged Jacobians A^t, B^t along the two update segments at step t.

    A^t averages the Jacobian over the segment from w^t - eta F(z^t) to
    w^t, B^t over the segment from w^t - eta F(z^{t-1}) to w^t, both with
    Gauss-Legendre quadrature of the given order.  Exact (up to rounding)
    whenever the Jacobian is polynomial of degree <= 2 * quad_order - 1
    along the segment.
    """
    if trace.aux is None:
        raise ValueError("trace must carry the w-sequence (run the PEG form)")
    nodes, weights = _gauss_legendre_01(quad_order)
    eta = trace.eta
    w_t = trace.aux[t]
    g_t = trace.grad(t)
    g_prev = trace.grad(t - 1)
    A_t = np.zeros((op.n, op.n))
    B_t = np.zeros((op.n, op.n))
    for a, wt in zip(nodes, weights):
        A_t += wt * op.jacobian(w_t - (1.0 - a) * eta * g_t)
        B_t += wt * op.jacobian(w_t - (1.0 - a) * eta * g_prev)
    return A_t, B_t


def backward_pass(
    op: MonotoneOperator,
    trace: Trace,
    quad_order: int = 2,
    cond_limit: float = 1e12,
) -> PotentialTrace:
    """Build the full potential trace for a finished PEG-form run.

    The recursion needs the complete trace because C^{t-1} depends on
    C^t.  One linear solve per step; matrices for every step are stored,
    so the run is capped at n <= 64, T <= 10^4.
    """
    if trace.aux is None or trace.algorithm != "og-peg":
        raise ValueError("backward pass requires a trace from the PEG-form runner")
    n, T = trace.n, trace.T
    if n > MAX_DIMENSION or T > MAX_STEPS:
        raise ValueError(
            f"backward pass stores O(T n^2) matrices; capped at "
            f"n <= {MAX_DIMENSION}, T <= {MAX_STEPS}"
        )
    eta = trace.eta
    eye = np.eye(n)
    A_seq = np.empty((T + 1, n, n))
    B_seq = np.empty((T + 1, n, n))
    C_seq = np.empty((T + 2, n, n))
    M_seq = np.empty((T + 1, n, n))
    N_seq = np.empty((T + 1, n, n))
    D_seq = np.empty((T + 1, n, n))
    step_norms = np.empty(T + 1)
    for t in range(T + 1):
        A_seq[t], B_seq[t] = alpha_avg_jacobians(op, trace, t, quad_order)
    C_seq[T + 1] = 0.0  # C^T = 0
    for t in range(T, -1, -1):
        C_t = C_seq[t + 1]
        M_t = eye - eta * A_seq[t] + C_t
        if np.linalg.cond(M_t) > cond_limit:
            raise SingularStepError(
                f"step matrix I - eta A^t + C^t numerically singular at t={t}",
                step=t,
            )
        X = eta * A_seq[t] - C_t
        N_t = eta * (X @ B_seq[t])
        M_seq[t] = M_t
        N_seq[t] = N_t
        step_norms[t] = np.linalg.norm(M_t, 2)
        C_seq[t] = np.linalg.solve(M_t, N_t)  # C^{t-1}, column-wise solves
        D_seq[t] = -eta * (C_t @ B_seq[t]) + np.linalg.solve(M_t, X @ X) @ (
            eta * B_seq[t]
        )
    ftilde = np.empty((T + 1, n))
    for t in range(T + 1):
        ftilde[t] = op.eval(trace.aux[t]) + C_seq[t] @ trace.grad(t - 1)
    return PotentialTrace(
        base=trace,
        eta=eta,
        quad_order=quad_order,
        A_seq=A_seq,
        B_seq=B_seq,
        C_seq=C_seq,
        M_seq=M_seq,
        N_seq=N_seq,
        D_seq=D_seq,
        Ftilde_seq=ftilde,
        step_norms=step_norms,
        L0=eta * op.ell,
        Lambda0=eta * op.lam,
    )


def linear_closed_form_C(A: Array, eta: float, series_tol: float = 1e-14) -> Array:
    """Stationary correction matrix ((I + (2 eta A)^2)^{1/2} - I) / 2.

    The square root is summed via the binomial series
    sqrt(I - X) = sum_k X^k (-1)^k binom(1/2, k) with X = -(2 eta A)^2,
    truncated once a term's spectral norm drops below ``series_tol``;
    convergence requires ||2 eta A||_sigma < 1.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    X = -4.0 * eta**2 * (A @ A)
    if float(np.linalg.norm(2.0 * eta * A, 2)) >= 1.0:
        raise SeriesConvergenceError(
            "square-root series requires ||2 eta A||_sigma < 1"
        )
    total = np.eye(n)
    power = np.eye(n)
    coeff = 1.0
    for k in range(1, 1000):
        coeff *= (k - 1.5) / k  # (-1)^k binom(1/2, k), built recursively
        power = power @ X
        term = coeff * power
        total += term
        if float(np.linalg.norm(term, 2)) < series_tol:
            break
    else:
        raise SeriesConvergenceError("square-root series did not converge")
    return 0.5 * (total - np.eye(n))


def potential_identity_residuals(pt: PotentialTrace) -> Array:
    """Residuals of Ftilde^{t+1} = (I - eta A^t + C^t) Ftilde^t, t = 0 .. T-1.

    Normalized as ||Ftilde^{t+1} - M^t Ftilde^t|| / (1 + ||Ftilde^t||).
    """
    T = pt.T
    res = np.empty(T)
    for t in range(T):
        pred = pt.M_seq[t] @ pt.Ftilde_seq[t]
        res[t] = np.linalg.norm(pt.Ftilde_seq[t + 1] - pred) / (
            1.0 + np.linalg.norm(pt.Ftilde_seq[t])
        )
    return res


@dataclass(frozen=True)
class StepMatrixBounds:
    """Per-step norm bounds on the correction and step matrices.

    Items (for every t = 0 .. T):
      1. ||C^t||_sigma <= 2 L0^2,
      2. M^t invertible with ||(M^t)^{-1}||_sigma <= sqrt(2),
      3. ||eta A^t - C^t||_sigma <= 2 L0 and ||M^t||_sigma <= 1 + 2 L0.
    Guaranteed when L0 = eta ell <= sqrt(1/200) and eta ell <= 2/3; the
    report is vacuous when that gate fails.
    """

    vacuous: bool
    item1: Array
    item2: Array
    item3_diff: Array
    item3_step: Array

    @property
    def all_hold(self) -> bool:
        return not self.vacuous and bool(
            self.item1.all()
            and self.item2.all()
            and self.item3_diff.all()
            and self.item3_step.all()
        )


def step_matrix_bounds(pt: PotentialTrace) -> StepMatrixBounds:
    """Evaluate the four norm inequalities of the backward recursion."""
    L0 = pt.L0
    T = pt.T
    vacuous = not (L0 <= L0_GATE and L0 <= ETA_ELL_GATE)
    item1 = np.zeros(T + 1, dtype=bool)
    item2 = np.zeros(T + 1, dtype=bool)
    item3_diff = np.zeros(T + 1, dtype=bool)
    item3_step = np.zeros(T + 1, dtype=bool)
    eta = pt.eta
    for t in range(T + 1):
        C_t = pt.C(t)
        item1[t] = np.linalg.norm(C_t, 2) <= 2.0 * L0**2
        try:
            inv_norm = np.linalg.norm(np.linalg.inv(pt.M_seq[t]), 2)
            item2[t] = inv_norm <= math.sqrt(2.0)
        except np.linalg.LinAlgError:
            item2[t] = False
        item3_diff[t] = (
            np.linalg.norm(eta * pt.A_seq[t] - C_t, 2) <= 2.0 * L0
        )
        item3_step[t] = pt.step_norms[t] <= 1.0 + 2.0 * L0
    return StepMatrixBounds(
        vacuous=vacuous,
        item1=item1,
        item2=item2,
        item3_diff=item3_diff,
        item3_step=item3_step,
    )


def remainder_identity_residuals(pt: PotentialTrace) -> Array:
    """Residuals of the splitting of the step matrix via the remainder D^t.

    Checks, for t = 1 .. T, that
    I - eta A^{t-1} + C^{t-1} = I - eta A^{t-1} + eta^2 A^t B^t + D^t
    in spectral norm (the two sides differ only through C^{t-1} versus
    eta^2 A^t B^t + D^t).
    """
    T = pt.T
    eta = pt.eta
    eye = np.eye(pt.n)
    res = np.empty(T)
    for t in range(1, T + 1):
        lhs = eye - eta * pt.A_seq[t - 1] + pt.C(t - 1)
        rhs = (
            eye
            - eta * pt.A_seq[t - 1]
            + eta**2 * (pt.A_seq[t] @ pt.B_seq[t])
            + pt.D_seq[t]
        )
        res[t - 1] = np.linalg.norm(lhs - rhs, 2)
    return res


def write_potential_csv(pt: PotentialTrace, path) -> None:
    """CSV t,ftilde_norm,step_spec_norm,c_norm,identity_residual for t = 0..T."""
    residuals = potential_identity_residuals(pt)
    fn = pt.ftilde_norms()
    cn = pt.c_norms()
    with open(path, "w", newline="") as fh:
        fh.write("t,ftilde_norm,step_spec_norm,c_norm,identity_residual\n")
        for t in range(pt.T + 1):
            res = format(residuals[t], ".17g") if t < pt.T else ""
            fh.write(
                f"{t},{fn[t]:.17g},{pt.step_norms[t]:.17g},{cn[t]:.17g},{res}\n"
            )
