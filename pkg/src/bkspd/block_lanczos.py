"""Block Lanczos factorization of an SPD operator against a starting block.

Given a symmetric positive definite operator ``A`` and a full-column-rank
starting block ``B`` with ``m`` columns, the three-term block recurrence
produces an orthonormal basis ``Q`` of the block Krylov subspace generated
by ``(A, B)`` together with the banded projection ``T = Q^T A Q`` (bandwidth
at most ``2m+1`` because the off-diagonal blocks are upper triangular) and
the upper-triangular factor ``R`` of the initial block, ``B = Q[:, :m] @ R``.

Load accounting
---------------
Each product iteration consumes exactly one matrix-load and completes one
Krylov block: its diagonal block of ``T``, the next (unnormalized) basis
block, and the orthogonality corrections.  A ``t``-iteration run therefore
consumes ``max(t - 1, 1)`` matrix-loads, and the returned decomposition
holds ``t_eff = max(t - 1, 1)`` completed blocks (fewer on early
termination); the projection ``T`` is complete for the blocks present.  The
``t = 1`` edge case still needs one product to form its diagonal block.

The decomposition is the shared engine behind the linear solvers, the
low-rank sketches, and the square-root sampler: because block Krylov
subspaces are invariant under spectral shifts, one factorization serves
``A + mu*I`` for every ``mu >= 0`` through ``T + mu*I``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericalFailureError
from .operator import CostCounters, DenseOperator, SymmetricOperator

_RANK_RTOL = 1e-10  # rank-deficiency threshold relative to largest column norm
_ENTRY_RTOL = 1e-10  # full-rank requirement on the starting block
_FLOOR_RTOL = 1e-13  # a residual block at roundoff level means exhaustion


@dataclass(frozen=True)
class ReorthPolicy:
    """Reorthogonalization strategy for new Krylov blocks.

    ``full`` runs two passes of classical block Gram-Schmidt against the
    entire stored basis; ``none`` keeps only the three-term recurrence;
    ``partial(k)`` orthogonalizes fully during the first ``k`` iterations and
    afterwards only against the basis blocks of those first ``k`` iterations.
    """

    kind: str
    first: int = 0

    @classmethod
    def full(cls) -> "ReorthPolicy":
        return cls("full")

    @classmethod
    def none(cls) -> "ReorthPolicy":
        return cls("none")

    @classmethod
    def partial(cls, k: int) -> "ReorthPolicy":
        k = int(k)
        if k < 0:
            raise ValueError(f"partial reorthogonalization needs k >= 0, got {k}")
        return cls("partial", first=k)

    @classmethod
    def parse(cls, text: str) -> "ReorthPolicy":
        text = text.strip().lower()
        if text == "full":
            return cls.full()
        if text == "none":
            return cls.none()
        if text.startswith("partial:"):
            return cls.partial(int(text.split(":", 1)[1]))
        raise ValueError(f"unknown reorthogonalization policy {text!r}")


@dataclass
class BlockKrylovDecomposition:
    """Output of :func:`block_lanczos`.

    ``Q`` is ``d x (m * t_eff)`` with orthonormal columns (under full
    reorthogonalization), ``T`` is the symmetric banded projection of the
    same order, ``R`` the ``m x m`` factor of the starting block, and
    ``residual_block`` the next unnormalized block of the recurrence (zero
    exactly when an invariant subspace has been reached).  ``load_history``
    holds operator-counter snapshots taken after each completed iteration.
    """

    Q: np.ndarray
    T: np.ndarray
    R: np.ndarray
    m: int
    t_eff: int
    residual_block: np.ndarray
    terminated_early: bool
    load_history: list = field(default_factory=list, repr=False)

    @property
    def dim(self) -> int:
        return self.Q.shape[0]

    def basis(self, depth: int | None = None) -> np.ndarray:
        depth = self.t_eff if depth is None else int(depth)
        self._check_depth(depth)
        return self.Q[:, : depth * self.m]

    def projection(self, depth: int | None = None) -> np.ndarray:
        depth = self.t_eff if depth is None else int(depth)
        self._check_depth(depth)
        n = depth * self.m
        return self.T[:n, :n]

    def coupling_block(self, depth: int) -> np.ndarray:
        """The block linking depth ``depth`` to the next basis block.

        For ``depth < t_eff`` this is the subdiagonal block of ``T``; at
        ``depth == t_eff`` the recurrence continues into
        ``residual_block`` instead and the identity coupling applies.
        """
        self._check_depth(depth)
        if depth >= self.t_eff:
            raise ValueError("no coupling block beyond the final depth")
        m = self.m
        return self.T[depth * m : (depth + 1) * m, (depth - 1) * m : depth * m]

    def _check_depth(self, depth: int) -> None:
        if not 1 <= depth <= self.t_eff:
            raise ValueError(
                f"depth must lie in [1, {self.t_eff}], got {depth}"
            )


def _qr_pos(X: np.ndarray):
    """Householder QR with the diagonal of R forced nonnegative."""
    Q, R = np.linalg.qr(X)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs, signs[:, None] * R


def solve_projected(T: np.ndarray, m: int, mu: float, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(T + mu I) y = rhs`` exploiting the 2m+1 band of ``T``.

    Banded Cholesky; an exactly semidefinite projection (an invariant
    subspace tie) falls back to the minimum-norm solution, while an
    indefinite one is reported as corruption.
    """
    n = T.shape[0]
    u = min(m, n - 1)
    ab = np.zeros((u + 1, n))
    for o in range(u + 1):
        ab[u - o, o:] = np.diagonal(T, offset=o)
    ab[u, :] += mu
    try:
        return scipy.linalg.solveh_banded(ab, rhs, lower=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
        w = np.linalg.eigvalsh(T + mu * np.eye(n))
        if w[0] < -1e-12 * max(abs(w[-1]), 1e-300):
            raise NumericalFailureError(
                "projected system is not positive definite; decomposition is corrupted"
            ) from None
        return np.linalg.lstsq(T + mu * np.eye(n), rhs, rcond=None)[0]


def _qr_rank(X: np.ndarray, problem_scale: float):
    """Sign-fixed QR plus rank-deficiency detection.

    A block is deficient when any |R_ii| falls below 1e-10 times its largest
    column norm (rank collapse within the block) or when the whole block
    sits at roundoff level relative to the operator scale observed so far
    (the Krylov space has become invariant).
    """
    Q, R = _qr_pos(X)
    col_norms = np.linalg.norm(X, axis=0)
    largest = col_norms.max() if col_norms.size else 0.0
    deficient = (
        largest <= _FLOOR_RTOL * problem_scale
        or bool(np.any(np.abs(np.diag(R)) < _RANK_RTOL * largest))
    )
    return Q, R, deficient


def _reorthogonalize(W, blocks, policy, iteration):
    """Apply the policy's Gram-Schmidt passes to a candidate block."""
    if policy.kind == "none":
        return W
    if policy.kind == "full" or iteration <= policy.first:
        basis = np.hstack(blocks)
    else:
        keep = min(policy.first, len(blocks))
        if keep == 0:
            return W
        basis = np.hstack(blocks[:keep])
    for _ in range(2):
        W = W - basis @ (basis.T @ W)
    return W


def block_lanczos(
    op: SymmetricOperator,
    B: np.ndarray,
    t: int,
    policy: ReorthPolicy = ReorthPolicy.full(),
) -> BlockKrylovDecomposition:
    """Run ``t`` iterations of block Lanczos on ``(A, B)``.

    Consumes ``max(t - 1, 1)`` matrix-loads and ``m`` matrix-vector products
    per load, returning that many completed Krylov blocks (see the module
    docstring for the accounting convention).  Stops with
    ``terminated_early`` set if a new block is numerically rank deficient,
    which includes reaching an exact invariant subspace.
    """
    if int(t) < 1:
        raise ValueError(f"iteration count must be >= 1, got {t}")
    return _factorize(op, B, depth=max(int(t) - 1, 1), policy=policy)


def krylov_decomposition(
    op: SymmetricOperator,
    B: np.ndarray,
    depth: int,
    policy: ReorthPolicy = ReorthPolicy.full(),
) -> BlockKrylovDecomposition:
    """Factorization whose basis spans the depth-``depth`` block Krylov space.

    Consumes exactly ``depth`` matrix-loads (one per completed block); this
    is the entry point used by the solvers, where the iterate at depth ``k``
    needs the full projection of the ``k``-block basis.
    """
    if int(depth) < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    return _factorize(op, B, depth=int(depth), policy=policy)


def _assemble_projection(diag_blocks, off_blocks, m):
    n = len(diag_blocks) * m
    T = np.zeros((n, n))
    for k, Ak in enumerate(diag_blocks):
        T[k * m : (k + 1) * m, k * m : (k + 1) * m] = Ak
    for k, Bk in enumerate(off_blocks):
        T[(k + 1) * m : (k + 2) * m, k * m : (k + 1) * m] = Bk
        T[k * m : (k + 1) * m, (k + 1) * m : (k + 2) * m] = Bk.T
    return T


def _factorize(op, B, depth, policy, retain_products=False,
               stop_mu=None, stop_rtol=None):
    B = np.asarray(B, dtype=np.float64)
    if B.ndim == 1:
        B = B[:, None]
    if B.ndim != 2 or B.shape[0] != op.dim:
        raise ValueError(
            f"starting block must be {op.dim} x m, got shape {B.shape}"
        )
    m = B.shape[1]
    if m < 1:
        raise ValueError("starting block must have at least one column")
    if m > op.dim:
        raise ValueError(
            f"starting block has {m} columns but the operator dimension is "
            f"{op.dim}; a full-column-rank block cannot be wider"
        )
    if not np.all(np.isfinite(B)):
        raise ValueError("starting block contains non-finite entries")
    svals = np.linalg.svd(B, compute_uv=False)
    if svals[-1] < _ENTRY_RTOL * svals[0] or svals[0] == 0.0:
        raise ValueError(
            "starting block is numerically rank deficient "
            f"(smallest/largest singular value = {svals[-1]:.3e}/{svals[0]:.3e})"
        )

    Q1, R = _qr_pos(B)
    blocks = [Q1]
    diag_blocks: list[np.ndarray] = []
    off_blocks: list[np.ndarray] = []
    history: list[CostCounters] = []
    products: list[np.ndarray] = []
    residual = np.zeros_like(Q1)
    terminated = False
    scale = 0.0

    for i in range(depth):
        Qi = blocks[-1]
        Z = op.apply_block(Qi)
        if retain_products:
            products.append(Z)
        scale = max(scale, float(np.linalg.norm(Z, axis=0).max()))
        Ai = Qi.T @ Z
        Ai = (Ai + Ai.T) / 2.0
        W = Z - Qi @ Ai
        if i > 0:
            W = W - blocks[-2] @ off_blocks[-1].T
        W = _reorthogonalize(W, blocks, policy, iteration=i + 1)
        if not np.all(np.isfinite(W)):
            raise NumericalFailureError(
                f"non-finite intermediate at iteration {i + 1}", iteration=i + 1
            )
        diag_blocks.append(Ai)
        history.append(op.counters())
        residual = W
        if stop_rtol is not None:
            # Residual of the leading starting column at the stopping shift,
            # read off the recurrence for free.
            T_cur = _assemble_projection(diag_blocks, off_blocks, m)
            rhs = np.zeros(T_cur.shape[0])
            rhs[:m] = R[:, 0]
            y = solve_projected(T_cur, m, stop_mu, rhs)
            if np.linalg.norm(W @ y[-m:]) <= stop_rtol * np.linalg.norm(R[:, 0]):
                break
        if i + 1 < depth:
            Qn, Bi, deficient = _qr_rank(W, scale)
            if deficient:
                terminated = True
                break
            blocks.append(Qn)
            off_blocks.append(Bi)

    if not terminated:
        _, _, deficient = _qr_rank(residual, scale)
        terminated = deficient

    t_eff = len(diag_blocks)
    T = _assemble_projection(diag_blocks, off_blocks, m)

    dec = BlockKrylovDecomposition(
        Q=np.hstack(blocks),
        T=T,
        R=R,
        m=m,
        t_eff=t_eff,
        residual_block=residual,
        terminated_early=terminated,
        load_history=history,
    )
    if retain_products:
        return dec, products
    return dec


@dataclass(frozen=True)
class DecompositionReport:
    orth_err: float
    projection_err: float
    bandwidth_ok: bool
    recurrence_err: float


def verify_decomposition(A, dec: BlockKrylovDecomposition) -> DecompositionReport:
    """Measure how well a decomposition satisfies its defining identities.

    ``A`` may be a dense array or a :class:`DenseOperator`; the dense matrix
    is used directly so verification never advances operator counters.
    Reported quantities: ``orth_err = ||Q^T Q - I||``, ``projection_err =
    ||Q^T A Q - T|| / ||A||``, whether ``T`` respects its band, and the
    recurrence defect ``||A Q - Q T - W E_last^T|| / ||A||`` with the
    residual block ``W`` placed against the final block row.
    """
    if isinstance(A, DenseOperator):
        A = A.matrix
    A = np.asarray(A, dtype=np.float64)
    if dec.t_eff < 1 or dec.Q.shape[1] < 1:
        raise ValueError("decomposition holds no completed iterations")
    Q, T, m = dec.Q, dec.T, dec.m
    n = Q.shape[1]
    anorm = np.linalg.norm(A, 2)
    orth_err = float(np.linalg.norm(Q.T @ Q - np.eye(n), 2))
    projection_err = float(np.linalg.norm(Q.T @ A @ Q - T, 2) / anorm)
    i, j = np.indices(T.shape)
    bandwidth_ok = bool(np.all(T[np.abs(i - j) > m] == 0.0))
    defect = A @ Q - Q @ T
    defect[:, n - m :] -= dec.residual_block
    recurrence_err = float(np.linalg.norm(defect, 2) / anorm)
    return DecompositionReport(orth_err, projection_err, bandwidth_ok, recurrence_err)
