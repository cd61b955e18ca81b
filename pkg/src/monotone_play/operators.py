"""Monotone operator families and game abstractions.

Four concrete instance families are provided, all with closed-form
Jacobians and smoothness constants certified on the ball B(0, 3D):

* ``linear``: F(z) = Az + b with A + A^T positive semidefinite;
* ``bilinear``: the min-max gradient field of f(x, y) = x^T M y + b1^T x
  + b2^T y, i.e. A = [[0, M], [-M^T, 0]], b = (b1, -b2);
* ``perturbed-bilinear``: the bilinear field plus eps * ||z||^2 * z, a
  monotone cubic perturbation whose Jacobian is quadratic in z (so it has
  a strictly positive second-order Lipschitz constant);
* ``quadratic-min``: F(x) = Sx + b for symmetric positive definite S,
  the gradient field of f(x) = x^T S x / 2 + b^T x.

Operators are immutable after construction and all operations are pure;
instances that violate a family's membership conditions are rejected with
:class:`InstanceError` at construction, never at iteration time.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InstanceError

Array = np.ndarray

KINDS = ("linear", "bilinear", "perturbed-bilinear", "quadratic-min")

#: Smoothness constants are certified on B(0, R) with R this multiple of D.
DOMAIN_RADIUS_FACTOR = 3.0


@dataclass(frozen=True)
class MonotoneOperator:
    """An evaluatable monotone map F: R^n -> R^n with Jacobian access.

    ``ell`` and ``lam`` are first- and second-order Lipschitz constants of
    F on B(0, domain_radius); ``equilibrium`` is a zero of F when one is
    known in closed form.
    """

    n: int
    kind: str
    A: Array
    b: Array
    epsilon: float
    ell: float
    lam: float
    domain_radius: float
    equilibrium: Optional[Array]

    def eval(self, z: Array) -> Array:
        """Evaluate F(z). Warns (softly) when z leaves the certified ball."""
        z = self._check_point(z)
        out = self.A @ z + self.b
        if self.kind == "perturbed-bilinear" and self.epsilon != 0.0:
            out = out + self.epsilon * float(z @ z) * z
        return out

    def __call__(self, z: Array) -> Array:
        return self.eval(z)

    def jacobian(self, z: Array) -> Array:
        """Closed-form Jacobian of F at z."""
        z = self._check_point(z, warn=False)
        if self.kind == "perturbed-bilinear" and self.epsilon != 0.0:
            return self.A + self.epsilon * (
                float(z @ z) * np.eye(self.n) + 2.0 * np.outer(z, z)
            )
        return self.A

    def _check_point(self, z: Array, warn: bool = True) -> Array:
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.shape != (self.n,):
            raise ValueError(
                f"point has dimension {z.shape[0]}, operator expects {self.n}"
            )
        if not np.all(np.isfinite(z)):
            raise ValueError("non-finite point passed to operator")
        if warn and float(np.linalg.norm(z)) > self.domain_radius:
            warnings.warn(
                "evaluating operator outside the ball on which its "
                "smoothness constants are certified",
                stacklevel=3,
            )
        return z


@dataclass(frozen=True)
class GameSpec:
    """A K-player continuous game with per-player cost evaluators.

    ``operator`` is the concatenation of own-block gradients of the costs.
    ``affine_in_own`` records that every f_k is affine in player k's own
    block, which makes ball-constrained best responses exact.
    """

    K: int
    dims: tuple[int, ...]
    costs: tuple[Callable[[Array], float], ...]
    operator: MonotoneOperator
    affine_in_own: bool = False

    def blocks(self, z: Array) -> list[Array]:
        return split_blocks(z, self.dims)


def split_blocks(z: Array, dims: Sequence[int]) -> list[Array]:
    """Split a stacked action profile into per-player blocks."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != sum(dims):
        raise ValueError(f"cannot split length-{z.shape[0]} vector into {dims}")
    out, start = [], 0
    for d in dims:
        out.append(z[start : start + d])
        start += d
    return out


def _as_square(M, name: str) -> Array:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InstanceError(f"{name} must be a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InstanceError(f"{name} contains non-finite entries")
    return M


def _as_vector(b, m: int, name: str) -> Array:
    if b is None:
        return np.zeros(m)
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.shape != (m,):
        raise InstanceError(f"{name} must have length {m}, got {b.shape[0]}")
    if not np.all(np.isfinite(b)):
        raise InstanceError(f"{name} contains non-finite entries")
    return b


def _invertible(M: Array) -> bool:
    if M.size == 0:
        return False
    svals = np.linalg.svd(M, compute_uv=False)
    return float(svals[-1]) > max(M.shape) * np.finfo(float).eps * float(svals[0]) and (
        float(svals[-1]) > 0.0
    )


def make_bilinear(M, b1=None, b2=None, D: float = 1.0) -> MonotoneOperator:
    """Min-max operator of the bilinear game f(x, y) = x^T M y + b1^T x + b2^T y.

    A = [[0, M], [-M^T, 0]] is skew-symmetric, so the operator is monotone
    with first-order constant ||A||_sigma = sigma_max(M) and a constant
    Jacobian. When M is invertible the unique equilibrium -A^{-1} b must
    lie in the product of per-player D-balls, otherwise the instance is
    rejected.
    """
    if D <= 0:
        raise InstanceError("D must be positive")
    M = _as_square(M, "M")
    m = M.shape[0]
    b1 = _as_vector(b1, m, "b1")
    b2 = _as_vector(b2, m, "b2")
    A = np.block([[np.zeros((m, m)), M], [-M.T, np.zeros((m, m))]])
    b = np.concatenate([b1, -b2])
    ell = float(np.linalg.norm(M, 2)) if m else 0.0
    equilibrium = None
    if _invertible(M):
        equilibrium = -np.linalg.solve(A, b)
        for blk in split_blocks(equilibrium, (m, m)):
            if float(np.linalg.norm(blk)) > D * (1 + 1e-12):
                raise InstanceError(
                    "equilibrium lies outside the per-player D-balls; "
                    "instance is not a member of the bilinear family"
                )
    return MonotoneOperator(
        n=2 * m,
        kind="bilinear",
        A=A,
        b=b,
        epsilon=0.0,
        ell=ell,
        lam=0.0,
        domain_radius=DOMAIN_RADIUS_FACTOR * D,
        equilibrium=equilibrium,
    )


def make_perturbed_bilinear(
    M, b1=None, b2=None, epsilon: float = 0.0, D: float = 1.0
) -> MonotoneOperator:
    """Bilinear operator plus the monotone cubic term eps * ||z||^2 * z.

    The perturbation's Jacobian eps * (||z||^2 I + 2 z z^T) has PSD
    symmetric part, so monotonicity is preserved. On B(0, R) with R = 3D
    the effective constants are ell = ||A||_sigma + 3 eps R^2 and
    lam = 6 eps R; both are derived bounds and should be validated against
    sampled difference quotients (see :func:`check_monotone_and_smooth`).
    """
    if epsilon < 0:
        raise InstanceError("epsilon must be nonnegative")
    base = make_bilinear(M, b1, b2, D)
    if epsilon == 0.0:
        return base
    R = base.domain_radius
    equilibrium = None
    if float(np.linalg.norm(base.b)) == 0.0:
        equilibrium = np.zeros(base.n)
    return MonotoneOperator(
        n=base.n,
        kind="perturbed-bilinear",
        A=base.A,
        b=base.b,
        epsilon=float(epsilon),
        ell=base.ell + 3.0 * epsilon * R**2,
        lam=6.0 * epsilon * R,
        domain_radius=R,
        equilibrium=equilibrium,
    )


def make_quadratic_min(S, b=None, D: float = 1.0) -> MonotoneOperator:
    """Gradient field F(x) = Sx + b of f(x) = x^T S x / 2 + b^T x, S SPD."""
    if D <= 0:
        raise InstanceError("D must be positive")
    S = _as_square(S, "S")
    n = S.shape[0]
    b = _as_vector(b, n, "b")
    scale = float(np.abs(S).max()) or 1.0
    if float(np.abs(S - S.T).max()) > 1e-12 * scale:
        raise InstanceError("S must be symmetric")
    S = 0.5 * (S + S.T)
    try:
        np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        raise InstanceError("S must be positive definite") from None
    xstar = -np.linalg.solve(S, b)
    if float(np.linalg.norm(xstar)) > D * (1 + 1e-12):
        raise InstanceError("minimizer -S^{-1} b lies outside the D-ball")
    ell = float(np.linalg.eigvalsh(S)[-1])
    return MonotoneOperator(
        n=n,
        kind="quadratic-min",
        A=S,
        b=b,
        epsilon=0.0,
        ell=ell,
        lam=0.0,
        domain_radius=DOMAIN_RADIUS_FACTOR * D,
        equilibrium=xstar,
    )


def make_linear(A, b=None, D: float = 1.0) -> MonotoneOperator:
    """General affine monotone operator F(z) = Az + b.

    Monotonicity requires A + A^T to be positive semidefinite; this is
    checked exactly via symmetric eigenvalues.
    """
    if D <= 0:
        raise InstanceError("D must be positive")
    A = _as_square(A, "A")
    n = A.shape[0]
    b = _as_vector(b, n, "b")
    sym_eigs = np.linalg.eigvalsh(A + A.T)
    scale = max(1.0, float(np.abs(A).max()))
    if n and float(sym_eigs[0]) < -1e-10 * scale:
        raise InstanceError("A + A^T is not positive semidefinite; F is not monotone")
    equilibrium = None
    if _invertible(A):
        equilibrium = -np.linalg.solve(A, b)
        if float(np.linalg.norm(equilibrium)) > D * (1 + 1e-12):
            raise InstanceError("equilibrium lies outside the D-ball")
    return MonotoneOperator(
        n=n,
        kind="linear",
        A=A,
        b=b,
        epsilon=0.0,
        ell=float(np.linalg.norm(A, 2)) if n else 0.0,
        lam=0.0,
        domain_radius=DOMAIN_RADIUS_FACTOR * D,
        equilibrium=equilibrium,
    )


def suboptimality(op: MonotoneOperator, x: Array) -> float:
    """f(x) - f(x*) for a quadratic-min operator, via (Sx+b)^T S^{-1} (Sx+b) / 2."""
    if op.kind != "quadratic-min":
        raise ValueError("suboptimality is defined for quadratic-min operators only")
    g = op.A @ np.asarray(x, dtype=float).reshape(-1) + op.b
    return 0.5 * float(g @ np.linalg.solve(op.A, g))


def two_player_bilinear_game(M, b1=None, b2=None, D: float = 1.0) -> GameSpec:
    """Zero-sum two-player game with f1(x, y) = x^T M y + b1^T x + b2^T y = -f2."""
    op = make_bilinear(M, b1, b2, D)
    m = op.n // 2
    b1v = _as_vector(b1, m, "b1")
    b2v = _as_vector(b2, m, "b2")
    Mm = op.A[:m, m:]

    def f1(z: Array) -> float:
        x, y = split_blocks(z, (m, m))
        return float(x @ Mm @ y + b1v @ x + b2v @ y)

    def f2(z: Array) -> float:
        return -f1(z)

    return GameSpec(K=2, dims=(m, m), costs=(f1, f2), operator=op, affine_in_own=True)


@dataclass(frozen=True)
class SmoothnessReport:
    """Result of seeded sampling checks of monotonicity and smoothness."""

    monotone: bool
    min_inner: float
    ell_hat: float
    lambda_hat: float
    ell_ok: bool
    lambda_ok: bool


def sample_ball(rng: np.random.Generator, n: int, radius: float, size: int) -> Array:
    """Uniform samples from the Euclidean ball B(0, radius) in R^n."""
    x = rng.normal(size=(size, n))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    r = radius * rng.uniform(size=(size, 1)) ** (1.0 / n)
    return x * r


def check_monotone_and_smooth(
    op: MonotoneOperator,
    num_samples: int = 1000,
    seed: int = 0,
    tol: float = 1e-8,
) -> SmoothnessReport:
    """Sampled validation of monotonicity and the declared Lipschitz constants.

    Draws ``num_samples`` point pairs from the certified ball; monotone is
    true iff every pair has <F(z)-F(z'), z-z'> >= -tol, and the report
    flags a violation when the max sampled difference quotient exceeds the
    declared constant by more than a (1 + tol) factor.
    """
    if num_samples < 2:
        raise ValueError("num_samples must be at least 2")
    rng = np.random.default_rng(seed)
    zs = sample_ball(rng, op.n, op.domain_radius, num_samples)
    zps = sample_ball(rng, op.n, op.domain_radius, num_samples)
    min_inner = np.inf
    ell_hat = 0.0
    lambda_hat = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for z, zp in zip(zs, zps):
            dz = z - zp
            nrm = float(np.linalg.norm(dz))
            if nrm == 0.0:
                continue
            df = op.eval(z) - op.eval(zp)
            min_inner = min(min_inner, float(df @ dz))
            ell_hat = max(ell_hat, float(np.linalg.norm(df)) / nrm)
            dj = op.jacobian(z) - op.jacobian(zp)
            lambda_hat = max(lambda_hat, float(np.linalg.norm(dj, 2)) / nrm)
    return SmoothnessReport(
        monotone=bool(min_inner >= -tol),
        min_inner=float(min_inner),
        ell_hat=ell_hat,
        lambda_hat=lambda_hat,
        ell_ok=bool(ell_hat <= op.ell * (1 + tol)),
        lambda_ok=bool(lambda_hat <= op.lam * (1 + tol)),
    )
