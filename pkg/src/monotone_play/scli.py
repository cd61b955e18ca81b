"""Spectral lower-bound laboratory for fixed-coefficient linear iterations.

A p-memory linear iteration with scalar coefficient pairs (alpha_j,
beta_j) is summarized by the polynomial pair

    q(z) = z^p - sum_j beta_j z^j,      r(z) = sum_j alpha_j z^j,

and, on an affine instance F(z) = Az + b, by the block companion matrix
C(A) whose bottom row holds C_j(A) = alpha_j A + beta_j I.  On the
antisymmetric instances A = [[0, nu I], [-nu I, 0]] the spectral radius
of C(A) equals the largest root modulus of q(z)^2 + nu^2 r(z)^2, and on
S = nu I it equals that of q(z) - nu r(z); sweeping those radii over a
window of nu values is what certifies the convergence floor and locates
the adversarial instances.

Polynomials are stored as coefficient arrays in *ascending* power order
(index k = coefficient of z^k).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .dynamics import SCLICoefficients, Trace, run_scli
from .errors import NumericError
from .operators import (
    MonotoneOperator,
    make_bilinear,
    make_quadratic_min,
    split_blocks,
    suboptimality,
)

Array = np.ndarray

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def spectral_radius(matrix) -> float:
    """Largest eigenvalue modulus, via a dense eigenvalue solve."""
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("spectral radius needs a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    try:
        eig = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue solve failed: {exc}") from exc
    return float(np.abs(eig).max()) if eig.size else 0.0


def _trim_high(coeffs: Array) -> Array:
    nz = np.nonzero(coeffs)[0]
    if nz.size == 0:
        raise ValueError("zero polynomial has no root radius")
    return coeffs[: nz[-1] + 1]


def _companion_stack(monic: Array) -> Array:
    """Companion matrices for a batch of monic ascending-coefficient rows."""
    m, width = monic.shape
    d = width - 1
    C = np.zeros((m, d, d))
    idx = np.arange(1, d)
    C[:, idx, idx - 1] = 1.0
    C[:, :, -1] = -monic[:, :d]
    return C


def poly_radius_batch(coeff_rows: Array) -> Array:
    """Max root modulus for each ascending-coefficient row (same degree)."""
    rows = np.asarray(coeff_rows, dtype=float)
    lead = rows[:, -1]
    if np.any(lead == 0.0):
        raise ValueError("leading coefficients must be nonzero")
    monic = rows / lead[:, None]
    if monic.shape[1] == 1:
        return np.zeros(monic.shape[0])
    eig = np.linalg.eigvals(_companion_stack(monic))
    return np.abs(eig).max(axis=1)


def poly_radius(coeffs) -> float:
    """Max root modulus of a polynomial given in ascending coefficients."""
    c = _trim_high(np.asarray(coeffs, dtype=float).reshape(-1))
    if c.size < 2:
        raise ValueError("polynomial must have degree >= 1")
    return float(poly_radius_batch(c[None, :])[0])


@dataclass(frozen=True)
class PolyPair:
    """Monic q of degree p and r of degree <= p - 1, ascending coefficients."""

    q: Array
    r: Array

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float).reshape(-1)
        r = np.asarray(self.r, dtype=float).reshape(-1)
        if q.size < 2:
            raise ValueError("q must have degree at least 1")
        if q[-1] == 0.0:
            raise ValueError("q must have a nonzero leading coefficient")
        if q[-1] != 1.0:
            r = r / q[-1]
            q = q / q[-1]
        r = np.pad(r, (0, max(0, q.size - 1 - r.size)))
        if r.size > q.size - 1:
            if np.any(r[q.size - 1 :] != 0.0):
                raise ValueError("r must have degree at most deg(q) - 1")
            r = r[: q.size - 1]
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)

    @property
    def p(self) -> int:
        return self.q.size - 1

    @classmethod
    def from_scli(cls, coeffs: SCLICoefficients) -> "PolyPair":
        q = np.concatenate([-np.asarray(coeffs.beta, dtype=float), [1.0]])
        r = np.asarray(coeffs.alpha, dtype=float)
        return cls(q=q, r=r)

    def q_at_one(self) -> float:
        return float(self.q.sum())

    def combined(self, nu: float) -> Array:
        """Coefficients of q - nu r."""
        out = self.q.copy()
        out[: self.r.size] -= nu * self.r
        return out

    def minmax_combined(self, nu: float) -> Array:
        """Coefficients of q^2 + nu^2 r^2 (degree 2p, monic)."""
        qq = np.convolve(self.q, self.q)
        rr = np.convolve(self.r, self.r) if self.r.size else np.zeros(1)
        out = qq.copy()
        out[: rr.size] += nu**2 * rr
        return out


def _radius_on_grid(pair: PolyPair, nus: Array, combine: str) -> Array:
    width = 2 * pair.p + 1 if combine == "minmax" else pair.p + 1
    rows = np.empty((nus.size, width))
    if combine == "minmax":
        qq = np.convolve(pair.q, pair.q)
        rr = np.convolve(pair.r, pair.r) if pair.r.size else np.zeros(1)
        rows[:] = qq
        rows[:, : rr.size] += (nus**2)[:, None] * rr
    elif combine == "linear":
        rows[:] = pair.q
        rows[:, : pair.r.size] -= nus[:, None] * pair.r
    else:
        raise ValueError(f"unknown combine mode {combine!r}")
    return poly_radius_batch(rows)


@dataclass(frozen=True)
class SweepResult:
    nus: Array
    rhos: Array
    sup: float
    argmax_nu: float


def radius_sweep(
    pair: PolyPair,
    mu: float,
    ell: float,
    grid_points: int = 10_000,
    combine: str = "linear",
    refine: bool = True,
    threads: Optional[int] = None,
) -> SweepResult:
    """Estimate sup over nu in [mu, ell] of the combined-polynomial radius.

    Evaluates the radius on a uniform grid, then runs one golden-section
    refinement around the grid argmax.  ``combine`` selects q - nu r
    ("linear") or q^2 + nu^2 r^2 ("minmax").  ``threads`` chunks the grid
    across a thread pool (eigenvalue batches release the GIL).
    """
    if not 0 < mu < ell:
        raise ValueError("need 0 < mu < ell")
    if grid_points < 2:
        raise ValueError("grid_points must be at least 2")
    nus = np.linspace(mu, ell, grid_points)
    if threads is None:
        try:
            threads = max(0, int(os.environ.get("MONOTONE_PLAY_THREADS", "0")))
        except ValueError:
            threads = 0
    if threads > 1:
        chunks = np.array_split(nus, threads)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(lambda c: _radius_on_grid(pair, c, combine), chunks)
            )
        rhos = np.concatenate(parts)
    else:
        rhos = _radius_on_grid(pair, nus, combine)
    best = int(np.argmax(rhos))
    sup = float(rhos[best])
    argmax_nu = float(nus[best])
    if refine and grid_points >= 3:
        lo = nus[max(best - 1, 0)]
        hi = nus[min(best + 1, grid_points - 1)]
        nu_ref, rho_ref = _golden_max(
            lambda v: float(_radius_on_grid(pair, np.array([v]), combine)[0]),
            float(lo),
            float(hi),
        )
        if rho_ref > sup:
            sup, argmax_nu = rho_ref, nu_ref
    return SweepResult(nus=nus, rhos=rhos, sup=sup, argmax_nu=argmax_nu)


def _golden_max(f, a: float, b: float, iters: int = 80) -> tuple[float, float]:
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if b - a < 1e-13 * (1.0 + abs(b)):
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def spectral_floor(mu: float, ell: float) -> float:
    """Guaranteed floor (sqrt(ell/mu) - 1) / (sqrt(ell/mu) + 1) on the swept radius."""
    if not 0 < mu < ell:
        raise ValueError("need 0 < mu < ell")
    k = math.sqrt(ell / mu)
    return (k - 1.0) / (k + 1.0)


def agd_polys(mu: float, ell: float) -> PolyPair:
    """Polynomial pair of fixed-step accelerated gradient descent.

    With alpha = (sqrt(ell) - sqrt(mu)) / (sqrt(ell) + sqrt(mu)), the pair
    is q(z) = (z - alpha)(z - 1) and r(z) = -(1 + alpha) z / ell (rescaled
    to monic q; common rescaling leaves every root of q - nu r unchanged).
    Combined: q - nu r = z^2 - (1 + alpha)(1 - nu/ell) z + alpha, whose
    roots form a conjugate pair of modulus sqrt(alpha) for every nu in
    [mu, ell].
    """
    if not 0 < mu < ell:
        raise ValueError("need 0 < mu < ell")
    alpha = (math.sqrt(ell) - math.sqrt(mu)) / (math.sqrt(ell) + math.sqrt(mu))
    q = np.array([alpha, -(1.0 + alpha), 1.0])
    r = np.array([0.0, -(1.0 + alpha) / ell])
    return PolyPair(q=q, r=r)


# ---------------------------------------------------------------------------
# Companion systems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CompanionSystem:
    """Block companion form of a p-memory linear iteration on F(z) = Az + b."""

    C_of_A: Array  # (p n, p n)
    U: Array  # (p n, n) selector of the newest block
    N_of_A: Array  # (n, n)
    coeffs: SCLICoefficients
    nu: Optional[float] = None


def build_companion(coeffs: SCLICoefficients, A) -> CompanionSystem:
    """Assemble the block companion matrix with identity super-diagonal blocks."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    p = coeffs.p
    eye = np.eye(n)
    C = np.zeros((p * n, p * n))
    for i in range(p - 1):
        C[i * n : (i + 1) * n, (i + 1) * n : (i + 2) * n] = eye
    for j, Cj in enumerate(coeffs.coefficient_matrices(A)):
        C[(p - 1) * n :, j * n : (j + 1) * n] = Cj
    U = np.zeros((p * n, n))
    U[(p - 1) * n :, :] = eye
    N = coeffs.gamma * A + coeffs.delta * eye
    return CompanionSystem(C_of_A=C, U=U, N_of_A=N, coeffs=coeffs)


def companion_power(C: Array, T: int) -> tuple[Array, float]:
    """C^T via T successive products, with norm rescaling to avoid overflow.

    Returns (P, log_scale) with C^T = P * exp(log_scale).
    """
    n = C.shape[0]
    P = np.eye(n)
    log_scale = 0.0
    for _ in range(T):
        P = C @ P
        f = float(np.linalg.norm(P))
        if f > 1e100 or (0.0 < f < 1e-100):
            P /= f
            log_scale += math.log(f)
        elif f == 0.0:
            return P, log_scale
    return P, log_scale


def top_right_singular_vector(P: Array) -> tuple[Array, float]:
    """Top right singular vector and singular value of P."""
    _, s, vh = np.linalg.svd(P)
    return vh[0], float(s[0])


# ---------------------------------------------------------------------------
# Hard-instance synthesis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CaseReport:
    """Degeneracy classification of a coefficient set over nu in (0, ell].

    code "1": the fixed-point/offset structure degenerates (the update
    fixes every point, or the offset map is identically zero) and the
    gradient gap stays constant; code "2": the companion radius exceeds 1
    somewhere, giving divergence; code "3a": beta coefficients do not sum
    to 1, so the iteration converges to a biased limit; code "3b": the
    convergent regime in which hard instances are synthesized.
    """

    code: str
    label: str
    detail: str
    nu_witness: Optional[float] = None


class NonConvergentCase(Exception):
    """Raised when hard-instance synthesis meets a case-1/2/3a coefficient set."""

    def __init__(self, report: CaseReport):
        super().__init__(f"case {report.code}: {report.detail}")
        self.report = report


def classify_coefficients(
    coeffs: SCLICoefficients,
    ell: float,
    problem: str = "minmax",
    grid_points: int = 2048,
) -> CaseReport:
    """Decide which degeneracy case (1 / 2 / 3a / 3b) a coefficient set falls in.

    Stability (case 2) is judged on the instance family of the given
    problem: the radius of q^2 + nu^2 r^2 for min-max, of q - nu r for
    convex minimization.  The scan covers [1e-4 ell, ell] with an excess
    threshold of 1e-6: for every consistent pair the radius tends to 1
    from below as nu -> 0 through a root collision at modulus 1, where
    computed radii carry noise of order eps/split, so smaller nu values
    are numerically unresolvable and carry no stability information.
    """
    sa = math.fsum(coeffs.alpha)
    sb = math.fsum(coeffs.beta)
    tol = 1e-12
    if abs(sa) <= tol and abs(sb - 1.0) <= tol:
        return CaseReport(
            code="1",
            label="stationary",
            detail="sum(alpha) = 0 and sum(beta) = 1: the update fixes every "
            "point of every instance with zero offset",
        )
    if coeffs.gamma == 0.0 and coeffs.delta == 0.0:
        return CaseReport(
            code="1",
            label="stationary",
            detail="gamma = delta = 0: the offset map is identically zero",
        )
    pair = PolyPair.from_scli(coeffs)
    sweep = radius_sweep(
        pair,
        mu=ell * 1e-4,
        ell=ell,
        grid_points=grid_points,
        combine="minmax" if problem == "minmax" else "linear",
        refine=True,
    )
    if sweep.sup > 1.0 + 1e-6:
        return CaseReport(
            code="2",
            label="unstable",
            detail=f"companion spectral radius {sweep.sup:.6g} > 1 at "
            f"nu = {sweep.argmax_nu:.6g}: iterates diverge",
            nu_witness=sweep.argmax_nu,
        )
    if not coeffs.consistent():
        return CaseReport(
            code="3a",
            label="biased-limit",
            detail=f"sum(beta) = {sb:.6g} != 1: the iteration converges to a "
            "point with nonzero gradient",
        )
    return CaseReport(code="3b", label="convergent", detail="consistent and stable")


@dataclass(frozen=True)
class HardInstance:
    operator: MonotoneOperator
    inits: Array  # (p, n), time-ascending
    nu: float
    sweep: SweepResult
    singular_value: float


def _scaled_inits(vec: Array, p: int, n: int, block_dims, D: float) -> Array:
    """Reshape a stacked singular vector into p inits scaled into the D-balls.

    The largest per-block norm is scaled to exactly D, which puts every
    block inside its D-ball while keeping the stacked norm >= D.
    """
    inits = vec.reshape(p, n).copy()
    worst = max(
        float(np.linalg.norm(blk))
        for row in inits
        for blk in split_blocks(row, block_dims)
    )
    if worst == 0.0:
        raise NumericError("degenerate singular vector")
    inits *= D / worst
    return inits


def hard_instance_minmax(
    coeffs: SCLICoefficients,
    ell: float,
    D: float,
    T: int,
    n: int,
    grid_points: int = 10_000,
) -> HardInstance:
    """Adversarial bilinear instance and seeds for a consistent iteration.

    Sweeps the companion radius of q^2 + nu^2 r^2 over [ell/(2 sqrt(T)),
    ell], picks the argmax nu, builds the instance M = nu I with zero
    offset, and seeds with the blocks of the top right singular vector of
    C(A)^T scaled so the largest per-player block norm equals D.

    Raises :class:`NonConvergentCase` for coefficient sets in which the
    iteration is stationary, divergent, or biased (cases 1 / 2 / 3a).
    """
    if n % 2 != 0 or n < 2:
        raise ValueError("n must be even and positive for min-max instances")
    if T < 1:
        raise ValueError("T must be at least 1")
    report = classify_coefficients(coeffs, ell, problem="minmax")
    if report.code != "3b":
        raise NonConvergentCase(report)
    pair = PolyPair.from_scli(coeffs)
    mu = ell / (2.0 * math.sqrt(T))
    sweep = radius_sweep(pair, mu, ell, grid_points, combine="minmax")
    nu = sweep.argmax_nu
    op = make_bilinear(nu * np.eye(n // 2), D=D)
    system = build_companion(coeffs, op.A)
    P, log_scale = companion_power(system.C_of_A, T)
    vec, sigma = top_right_singular_vector(P)
    inits = _scaled_inits(vec, coeffs.p, n, (n // 2, n // 2), D)
    return HardInstance(
        operator=op,
        inits=inits,
        nu=nu,
        sweep=sweep,
        singular_value=sigma * math.exp(log_scale),
    )


def hard_instance_convexmin(
    coeffs: SCLICoefficients,
    ell: float,
    D: float,
    T: int,
    n: int,
    grid_points: int = 10_000,
) -> HardInstance:
    """Adversarial quadratic-minimization instance for a consistent iteration.

    Sweeps the radius of q - nu r over [ell/(4T), ell], builds S = nu I
    with zero offset, and seeds from the top right singular vector of
    C(S)^T scaled so the largest init norm equals D.
    """
    if n < 1 or T < 1:
        raise ValueError("n and T must be positive")
    report = classify_coefficients(coeffs, ell, problem="convexmin")
    if report.code != "3b":
        raise NonConvergentCase(report)
    pair = PolyPair.from_scli(coeffs)
    mu = ell / (4.0 * T)
    sweep = radius_sweep(pair, mu, ell, grid_points, combine="linear")
    nu = sweep.argmax_nu
    op = make_quadratic_min(nu * np.eye(n), D=D)
    system = build_companion(coeffs, op.A)
    P, log_scale = companion_power(system.C_of_A, T)
    vec, sigma = top_right_singular_vector(P)
    inits = _scaled_inits(vec, coeffs.p, n, (n,), D)
    return HardInstance(
        operator=op,
        inits=inits,
        nu=nu,
        sweep=sweep,
        singular_value=sigma * math.exp(log_scale),
    )


def case_witness(
    report: CaseReport,
    coeffs: SCLICoefficients,
    ell: float,
    D: float,
    n: int,
    problem: str = "minmax",
) -> tuple[MonotoneOperator, Array]:
    """Operator and seeds witnessing a non-convergent case (1 / 2 / 3a)."""
    if problem == "minmax":
        if n % 2 != 0 or n < 2:
            raise ValueError("min-max witnesses need even n")
        m = n // 2

        def instance(nu: float, offset: float = 0.0) -> MonotoneOperator:
            c = offset * np.ones(m)
            return make_bilinear(nu * np.eye(m), b1=c, b2=-c, D=D)

        offset_scale = lambda nu: nu * D / math.sqrt(m)
        block_dims = (m, m)
        uniform = (D / math.sqrt(m)) * np.ones(n)
    else:

        def instance(nu: float, offset: float = 0.0) -> MonotoneOperator:
            return make_quadratic_min(nu * np.eye(n), b=offset * np.ones(n), D=D)

        offset_scale = lambda nu: nu * D / math.sqrt(n)
        block_dims = (n,)
        uniform = (D / math.sqrt(n)) * np.ones(n)

    if report.code == "1":
        if coeffs.gamma == 0.0 and coeffs.delta == 0.0:
            # zero offset map: plant the target in b, start at the origin
            op = instance(ell, offset_scale(ell))
            return op, np.zeros((coeffs.p, n))
        return instance(ell), np.tile(uniform, (coeffs.p, 1))
    if report.code == "2":
        nu = report.nu_witness if report.nu_witness is not None else ell
        op = instance(nu)
        system = build_companion(coeffs, op.A)
        P, _ = companion_power(system.C_of_A, min(64, max(8, coeffs.p * 4)))
        vec, _ = top_right_singular_vector(P)
        return op, _scaled_inits(vec, coeffs.p, n, block_dims, D)
    if report.code == "3a":
        op = instance(ell, offset_scale(ell))
        return op, np.zeros((coeffs.p, n))
    raise ValueError("case 3b has a hard instance, not a witness")


# ---------------------------------------------------------------------------
# Lower-bound experiment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LowerBoundRow:
    T: int
    nu: float
    measured: float  # max gradient gap (min-max) or suboptimality over window
    ratio: float  # measured / reference decay ell D / sqrt(T) or ell D^2 / T
    window_sum: Optional[float] = None  # convex-min: total window suboptimality
    predicted_sum: Optional[float] = None  # convex-min: (nu/2) ||C(S)^Tw w0||^2


@dataclass(frozen=True)
class LowerBoundResult:
    problem: str
    rows: list[LowerBoundRow]
    case_report: Optional[CaseReport] = None
    witness_trace: Optional[Trace] = None

    @property
    def convergent_case(self) -> bool:
        return self.case_report is None


def lowerbound_experiment(
    coeffs: SCLICoefficients,
    ell: float,
    D: float,
    T_list,
    n: int,
    problem: str = "minmax",
    grid_points: int = 10_000,
) -> LowerBoundResult:
    """Measure the decay floor of a linear iteration on its hard instances.

    For each T: synthesize the hard instance, run T + p - 1 steps, and
    record the worst value over the window T' in {T, ..., T + p - 1} of
    the gradient gap (min-max) or suboptimality (convex minimization),
    with its ratio against ell D / sqrt(T) (resp. ell D^2 / T).

    Non-convergent coefficient sets produce a case report plus a witness
    run instead of rows.
    """
    T_list = [int(t) for t in T_list]
    if any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise ValueError("T_list must be strictly ascending")
    if problem not in ("minmax", "convexmin"):
        raise ValueError("problem must be 'minmax' or 'convexmin'")
    build = hard_instance_minmax if problem == "minmax" else hard_instance_convexmin
    rows: list[LowerBoundRow] = []
    for T in T_list:
        try:
            inst = build(coeffs, ell, D, T, n, grid_points)
        except NonConvergentCase as exc:
            witness_op, witness_inits = case_witness(
                exc.report, coeffs, ell, D, n, problem=problem
            )
            steps = max(8, min(256, T_list[-1]))
            try:
                wt = run_scli(witness_op, coeffs, witness_inits, steps)
            except Exception as run_exc:  # divergence is the expected witness
                wt = getattr(run_exc, "trace", None)
            return LowerBoundResult(
                problem=problem, rows=[], case_report=exc.report, witness_trace=wt
            )
        steps = T + coeffs.p - 1
        trace = run_scli(inst.operator, coeffs, inst.inits, steps)
        window = range(T, T + coeffs.p)
        if problem == "minmax":
            measured = max(
                float(np.linalg.norm(trace.grad(tp))) for tp in window
            )
            ratio = measured / (ell * D / math.sqrt(T))
            rows.append(LowerBoundRow(T=T, nu=inst.nu, measured=measured, ratio=ratio))
        else:
            subs = [suboptimality(inst.operator, trace.point(tp)) for tp in window]
            measured = max(subs)
            window_sum = float(math.fsum(subs))
            P, log_scale = companion_power(
                build_companion(coeffs, inst.operator.A).C_of_A, steps
            )
            image = (P @ inst.inits.reshape(-1)) * math.exp(log_scale)
            predicted = 0.5 * inst.nu * float(image @ image)
            ratio = measured / (ell * D**2 / T)
            rows.append(
                LowerBoundRow(
                    T=T,
                    nu=inst.nu,
                    measured=measured,
                    ratio=ratio,
                    window_sum=window_sum,
                    predicted_sum=predicted,
                )
            )
    return LowerBoundResult(problem=problem, rows=rows)


def write_sweep_csv(sweep: SweepResult, path) -> None:
    """CSV nu,rho over the sweep grid."""
    with open(path, "w", newline="") as fh:
        fh.write("nu,rho\n")
        for nu, rho in zip(sweep.nus, sweep.rhos):
            fh.write(f"{nu:.17g},{rho:.17g}\n")


def write_lowerbound_csv(result: LowerBoundResult, path) -> None:
    """CSV T,nu,max_gradgap,ratio (max_gradgap column carries the measured value)."""
    with open(path, "w", newline="") as fh:
        fh.write("T,nu,max_gradgap,ratio\n")
        for row in result.rows:
            fh.write(
                f"{row.T},{row.nu:.17g},{row.measured:.17g},{row.ratio:.17g}\n"
            )
