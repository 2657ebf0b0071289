"""Randomized block-Krylov Nystrom approximation and deflation preconditioning.

The sketch ``K_s = [G, A G, ..., A^{s-1} G]`` is never formed in the monomial
basis: an orthonormal basis ``W`` of its range is built by block Lanczos
(one matrix-load per depth, ``s`` in total) while the products ``Y = A W``
are retained.  The positive semidefinite approximation ``U diag(D) U^T``
equal to ``(A K_s)(K_s^T A K_s)^+(K_s^T A)`` is then recovered from
``(W, Y)`` through a shifted Cholesky factorization of ``W^T Y``, which is
the numerically stable route.

From any such approximation (or from an exact truncated eigendecomposition)
the deflation preconditioner ::

    P_mu = (theta + mu)^{-1} U (D + mu I) U^T + (I - U U^T)

is applied through its closed-form inverse ::

    P_mu^{-1} = (theta + mu) U (D + mu I)^{-1} U^T + (I - U U^T)

in O(d r) arithmetic for every shift ``mu``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .block_lanczos import ReorthPolicy, _factorize
from .errors import NumericalFailureError
from .matgen import SyntheticProblem
from .operator import DenseOperator, SymmetricOperator

_TRUNCATION_RTOL = 1e-12  # drop approximation eigenvalues below this x max


@dataclass
class NystromApproximation:
    """Eigendecomposed PSD low-rank approximation ``U diag(D) U^T``.

    ``U`` has orthonormal columns, ``D`` is nonnegative and nonincreasing.
    ``depth``/``sketch_width`` record how the sketch was built (depth 0
    marks an exact truncated eigendecomposition).
    """

    U: np.ndarray
    D: np.ndarray
    depth: int
    sketch_width: int

    @property
    def rank(self) -> int:
        return self.D.size

    def dense(self) -> np.ndarray:
        return (self.U * self.D) @ self.U.T


def nystrom_block_krylov(
    op: SymmetricOperator, Omega: np.ndarray, s: int
) -> NystromApproximation:
    """Block-Krylov Nystrom approximation from sketch ``Omega`` at depth ``s``.

    Consumes exactly ``s`` matrix-loads (fewer only if the Krylov space
    becomes invariant early).  The result has rank at most ``s * ell`` after
    truncation of relatively negligible eigenvalues.
    """
    Omega = np.asarray(Omega, dtype=np.float64)
    if Omega.ndim == 1:
        Omega = Omega[:, None]
    ell = Omega.shape[1]
    s = int(s)
    if ell < 1 or s < 1:
        raise ValueError(f"need ell >= 1 and s >= 1, got ell={ell}, s={s}")
    if s * ell > op.dim:
        raise ValueError(
            f"sketch size s*ell = {s * ell} exceeds the dimension {op.dim}"
        )

    dec, products = _factorize(
        op, Omega, depth=s, policy=ReorthPolicy.full(), retain_products=True
    )
    W = dec.Q
    Y = np.hstack(products)
    C = W.T @ Y
    C = (C + C.T) / 2.0

    trace = float(np.trace(C))
    if trace <= 0:
        raise ValueError("sketch captured no energy; operator appears to be zero")
    nu = np.finfo(np.float64).eps * trace
    L = None
    for _ in range(4):
        try:
            L = np.linalg.cholesky(C + nu * np.eye(C.shape[0]))
            break
        except np.linalg.LinAlgError:
            warnings.warn(
                f"projected sketch needed a larger stabilizing shift ({nu:.3e})",
                RuntimeWarning,
                stacklevel=2,
            )
            nu *= 100.0
    if L is None:
        raise NumericalFailureError(
            "projected sketch matrix could not be stably factorized"
        )

    M = scipy.linalg.solve_triangular(L, Y.T, lower=True).T
    U, sig, _ = np.linalg.svd(M, full_matrices=False)
    D = np.maximum(sig**2 - nu, 0.0)
    if D.size == 0 or D[0] == 0.0:
        raise ValueError("approximation collapsed to rank zero")
    keep = D > _TRUNCATION_RTOL * D[0]
    return NystromApproximation(
        U=U[:, keep], D=D[keep], depth=s, sketch_width=ell
    )


class DeflationPreconditioner:
    """Rank-structured preconditioner with a closed-form inverse.

    Applies and inverts ``P_mu`` for any ``mu >= 0`` in O(d r) arithmetic.
    An empty factor (rank zero) degenerates to the identity.
    """

    def __init__(self, U: np.ndarray, D: np.ndarray, theta: float):
        U = np.asarray(U, dtype=np.float64)
        D = np.asarray(D, dtype=np.float64).reshape(-1)
        if U.ndim != 2 or U.shape[1] != D.size:
            raise ValueError("U and D have inconsistent shapes")
        if not (theta > 0) or not np.isfinite(theta):
            raise ValueError(f"theta must be positive and finite, got {theta}")
        self.U = U
        self.D = D
        self.theta = float(theta)

    @property
    def rank(self) -> int:
        return self.D.size

    @property
    def descriptor(self) -> str:
        return f"deflation(rank={self.rank}, theta={self.theta:.6g})"

    def _split(self, mu, v):
        v = np.asarray(v, dtype=np.float64)
        squeeze = v.ndim == 1
        V = v[:, None] if squeeze else v
        W = self.U.T @ V
        return V, W, squeeze

    def apply_inverse(self, mu: float, v: np.ndarray) -> np.ndarray:
        if self.rank == 0:
            return np.array(v, dtype=np.float64, copy=True)
        V, W, squeeze = self._split(mu, v)
        out = (self.theta + mu) * (self.U @ (W / (self.D + mu)[:, None]))
        out += V - self.U @ W
        return out[:, 0] if squeeze else out

    def apply(self, mu: float, v: np.ndarray) -> np.ndarray:
        if self.rank == 0:
            return np.array(v, dtype=np.float64, copy=True)
        V, W, squeeze = self._split(mu, v)
        out = self.U @ (((self.D + mu)[:, None] * W) / (self.theta + mu))
        out += V - self.U @ W
        return out[:, 0] if squeeze else out

    def dense(self, mu: float, dim: int | None = None) -> np.ndarray:
        d = self.U.shape[0] if dim is None else int(dim)
        P = np.eye(d)
        if self.rank:
            P += self.U @ (
                np.diag((self.D + mu) / (self.theta + mu) - 1.0) @ self.U.T
            )
        return (P + P.T) / 2.0


def make_deflation_preconditioner(
    approx: NystromApproximation, theta="auto"
) -> DeflationPreconditioner:
    """Preconditioner from an approximation; ``theta='auto'`` uses the
    smallest retained eigenvalue of the approximation."""
    if approx.rank == 0:
        raise ValueError(
            "approximation has rank zero; the preconditioner would be the "
            "identity, use plain CG instead"
        )
    if isinstance(theta, str):
        if theta != "auto":
            raise ValueError(f"theta must be positive or 'auto', got {theta!r}")
        theta = float(approx.D[-1])
    return DeflationPreconditioner(approx.U, approx.D, float(theta))


def exact_deflation_preconditioner(
    problem: SyntheticProblem, r: int, theta: float | None = None
) -> DeflationPreconditioner:
    """Spectral deflation from the problem's retained top-``r`` eigenpairs.

    ``theta`` defaults to the smallest eigenvalue, the bottom of the
    admissible range ``[lam_d, lam_{r+1}]``.
    """
    r = int(r)
    if not 1 <= r < problem.dim:
        raise ValueError(f"rank must lie in [1, dim), got {r}")
    if theta is None:
        theta = float(problem.eigenvalues[-1])
    return DeflationPreconditioner(
        problem.eigenvectors[:, :r], problem.eigenvalues[:r], theta
    )


def precond_apply_inverse(precond: DeflationPreconditioner, mu: float, v):
    return precond.apply_inverse(mu, v)


def precond_apply(precond: DeflationPreconditioner, mu: float, v):
    return precond.apply(mu, v)


def precond_condition_number(matrix, precond, mu: float) -> float:
    """Condition number of ``P_mu^{-1/2} A_mu P_mu^{-1/2}`` (dense, exact).

    Solved as the symmetric generalized eigenproblem ``(A + mu I, P_mu)``;
    ``precond=None`` means the identity.
    """
    if isinstance(matrix, DenseOperator):
        matrix = matrix.matrix
    A = np.asarray(matrix, dtype=np.float64)
    d = A.shape[0]
    A_mu = A + mu * np.eye(d)
    if precond is None:
        w = np.linalg.eigvalsh(A_mu)
    else:
        P = precond.dense(mu, d)
        try:
            w = scipy.linalg.eigh(A_mu, P, eigvals_only=True)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise ValueError("preconditioner is not positive definite") from exc
    if w[0] <= 0:
        raise ValueError("preconditioned system is not positive definite")
    return float(w[-1] / w[0])


def condno_upper_bound(theta: float, mu: float, approx_err_norm: float, lam_min: float) -> float:
    """Deterministic bound on the preconditioned condition number:
    ``(theta + mu + ||A - U D U^T||) * (1/(theta + mu) + 1/(lam_min + mu))``."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    if mu < 0 or approx_err_norm < 0 or lam_min <= 0:
        raise ValueError("mu, error norm must be nonnegative and lam_min positive")
    return (theta + mu + approx_err_norm) * (1.0 / (theta + mu) + 1.0 / (lam_min + mu))


def approximation_error_norm(matrix, approx: NystromApproximation) -> float:
    """Spectral norm of ``A - U diag(D) U^T`` (dense oracle computation)."""
    if isinstance(matrix, DenseOperator):
        matrix = matrix.matrix
    E = np.asarray(matrix, dtype=np.float64) - approx.dense()
    return float(np.max(np.abs(np.linalg.eigvalsh(E))))


def deflated_condition_number(eigs: np.ndarray, r: int, mu: float) -> float:
    """``(lam_{r+1} + mu) / (lam_d + mu)``: the condition number of the
    shifted matrix with its top ``r`` eigenvalues removed."""
    eigs = np.asarray(eigs, dtype=np.float64)
    if not 0 <= r < eigs.size:
        raise ValueError(f"r must lie in [0, d), got {r}")
    return float((eigs[r] + mu) / (eigs[-1] + mu))


def effective_dimension(eigs: np.ndarray, mu: float) -> float:
    """``sum_i lam_i / (lam_i + mu)``; equals ``d`` at ``mu = 0``."""
    eigs = np.asarray(eigs, dtype=np.float64)
    if mu < 0:
        raise ValueError(f"mu must be nonnegative, got {mu}")
    return float(np.sum(eigs / (eigs + mu)))


def deflation_rank_dominates(eigs: np.ndarray, mu: float, r: int) -> bool:
    """Checkable fact: ``r > 2 * effective_dimension(mu)`` implies
    ``lam_{r+1} <= mu`` (vacuously true for small ``r`` or ``r >= d``)."""
    eigs = np.asarray(eigs, dtype=np.float64)
    if r <= 2.0 * effective_dimension(eigs, mu):
        return True
    if r >= eigs.size:
        return True
    return bool(eigs[r] <= mu)
