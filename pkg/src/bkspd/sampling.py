"""Matrix square roots on Krylov subspaces and Gaussian sampling.

For a standard normal block ``B``, the columns of ``A^{1/2} B`` are Gaussian
with covariance ``A``.  The integral representation ::

    A^{1/2} b = (2/pi) * Integral_0^inf A (A + z^2 I)^{-1} b dz

turns the square root into a family of shifted solves, and because the
solver's block Krylov subspace is shift invariant, the whole family comes
from a single factorization.  The integral over the projected iterates is
evaluated in closed form through the scalar identity
``(2/pi) * Integral_0^inf (lam + z^2)^{-1} dz = lam^{-1/2}`` applied to the
eigendecomposition of the small banded projection ``T``:

    sqrt  iterate: A Q T^{-1/2} E_1 R   (one extra matrix-load)
    isqrt iterate:   Q T^{-1/2} E_1 R   (no extra loads)

The quadrature route is kept only as an independent test oracle, along
with complete elliptic integrals used by the error analysis.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .block_lanczos import BlockKrylovDecomposition, ReorthPolicy, krylov_decomposition
from .errors import NumericalFailureError
from .matgen import STREAM_SAMPLES, SeededRng, SyntheticProblem, gaussian_matrix
from .operator import SymmetricOperator

_EIG_CLAMP_RTOL = 1e-14


def _isqrt_combination(
    dec: BlockKrylovDecomposition, depth: int | None = None
) -> np.ndarray:
    """``Q T^{-1/2} E_1 R`` via eigendecomposition of the banded projection."""
    depth = dec.t_eff if depth is None else int(depth)
    dec._check_depth(depth)
    n = depth * dec.m
    w, V = np.linalg.eigh(dec.T[:n, :n])
    top = w[-1]
    if top <= 0:
        raise NumericalFailureError("projection is not positive definite")
    if w[0] < -1e-10 * top:
        raise NumericalFailureError(
            "projection has significantly negative eigenvalues; "
            "decomposition is corrupted"
        )
    floor = _EIG_CLAMP_RTOL * top
    if w[0] < floor:
        warnings.warn(
            "near-breakdown: tiny projection eigenvalues were clamped",
            RuntimeWarning,
            stacklevel=3,
        )
        w = np.maximum(w, floor)
    E1R = np.zeros((n, dec.m))
    E1R[: dec.m] = dec.R
    return dec.Q[:, :n] @ (V @ ((V.T @ E1R) / np.sqrt(w)[:, None]))


def block_sqrt_apply(
    dec: BlockKrylovDecomposition,
    op: SymmetricOperator,
    depth: int | None = None,
) -> np.ndarray:
    """Approximation to ``A^{1/2} B`` for the factorization's starting block.

    Evaluates ``A Q T^{-1/2} E_1 R`` column by column; the leading product
    with ``A`` costs exactly one additional matrix-load.  Exact once the
    Krylov space has swallowed the whole space.
    """
    return op.apply_block(_isqrt_combination(dec, depth))


def block_isqrt_apply(
    dec: BlockKrylovDecomposition, depth: int | None = None
) -> np.ndarray:
    """Approximation to ``A^{-1/2} B``: ``Q T^{-1/2} E_1 R``, no extra loads.

    Satisfies ``A @ block_isqrt_apply(dec) == block_sqrt_apply(dec, op)``
    by construction.
    """
    return _isqrt_combination(dec, depth)


def scalar_sqrt_integral(lam: float) -> float:
    """Quadrature oracle for ``(2/pi) * Integral_0^inf lam/(lam + z^2) dz``.

    Equals ``sqrt(lam)``; evaluated by adaptive quadrature so it is
    independent of the closed-form route it certifies.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    val, _ = scipy.integrate.quad(
        lambda z: lam / (lam + z * z), 0.0, np.inf, epsabs=0.0, epsrel=1e-11
    )
    return 2.0 / math.pi * val


def elliptic_K(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter convention.

    ``K(m) = Integral_0^{pi/2} (1 - m sin^2 z)^{-1/2} dz`` for ``m < 1``
    (negative values included), computed by the arithmetic-geometric mean
    iteration with a 1e-12 stopping tolerance.
    """
    if not m < 1:
        raise ValueError(f"K(m) diverges for m >= 1, got m={m}")
    a, g = 1.0, math.sqrt(1.0 - m)
    for _ in range(200):
        if abs(a - g) <= 1e-12 * a:
            break
        a, g = (a + g) / 2.0, math.sqrt(a * g)
    return math.pi / (2.0 * a)


def elliptic_K_quadrature(m: float) -> float:
    """Adaptive-quadrature cross-check of :func:`elliptic_K`."""
    if not m < 1:
        raise ValueError(f"K(m) diverges for m >= 1, got m={m}")
    val, _ = scipy.integrate.quad(
        lambda z: 1.0 / math.sqrt(1.0 - m * math.sin(z) ** 2),
        0.0,
        math.pi / 2.0,
        epsabs=0.0,
        epsrel=1e-12,
    )
    return val


def sqrt_error_constant(kappa: float) -> float:
    """Prefactor ``(1/2) log(16 kappa)`` of the square-root error bound."""
    if not kappa >= 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    return 0.5 * math.log(16.0 * kappa)


def sample_error_bound(kappa: float, kappa_deflated: float, t: int, d: int) -> float:
    """Error bound ``log(16 kappa) * exp(-(t - (2 + log(d)/2)) / (3 sqrt(kappa_deflated)))``
    for the relative sample error ``||A^{1/2} b - alg|| / (||A^{1/2}|| ||b||)``."""
    if not (kappa >= 1 and kappa_deflated >= 1):
        raise ValueError("condition numbers must be >= 1")
    burn_in = 2.0 + math.log(d) / 2.0
    return math.log(16.0 * kappa) * math.exp(
        -(t - burn_in) / (3.0 * math.sqrt(kappa_deflated))
    )


def max_deflation_rank(m: int, delta: float) -> int:
    """Largest deflation rank ``r`` admissible for ``m`` simultaneous samples
    at failure probability ``delta``:
    ``(m - 1) * ceil(log(m/delta)/log(100))^{-1} - 2`` (may be negative)."""
    if m < 2:
        raise ValueError(f"need at least two samples, got m={m}")
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    q = math.ceil(math.log(m / delta) / math.log(100.0))
    return (m - 1) // q - 2


@dataclass(frozen=True)
class SampleRequest:
    """``m`` simultaneous samples via a depth-``t`` factorization."""

    m: int
    t: int
    seed: int
    mean: np.ndarray | None = None


@dataclass
class SampleResult:
    samples: np.ndarray
    errors: np.ndarray | None = None


def draw_gaussian_samples(
    op: SymmetricOperator,
    request: SampleRequest,
    problem: SyntheticProblem | None = None,
    policy: ReorthPolicy = ReorthPolicy.full(),
) -> SampleResult:
    """Draw ``m`` approximate samples from N(mean, A).

    When the generating problem is supplied, per-column relative errors
    against the exact ``A^{1/2} B`` are reported alongside.
    """
    if request.m < 1:
        raise ValueError(f"need m >= 1 samples, got {request.m}")
    if request.t < 1 or request.m * request.t > op.dim:
        raise ValueError(
            f"need 1 <= t and m*t <= dim, got m={request.m}, t={request.t}, "
            f"dim={op.dim}"
        )
    B = gaussian_matrix(op.dim, request.m, SeededRng(request.seed, STREAM_SAMPLES))
    dec = krylov_decomposition(op, B, depth=request.t, policy=policy)
    S = block_sqrt_apply(dec, op)
    errors = None
    if problem is not None:
        exact = problem.apply_sqrt(B)
        errors = np.linalg.norm(S - exact, axis=0) / np.linalg.norm(exact, axis=0)
    if request.mean is not None:
        S = S + np.asarray(request.mean, dtype=np.float64).reshape(-1, 1)
    return SampleResult(samples=S, errors=errors)
