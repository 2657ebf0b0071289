"""CG, preconditioned CG, and block-CG iterates with exact error metrics.

Block-CG iterates are evaluated from a stored block Lanczos factorization:
the depth-``k`` iterate for shift ``mu`` and starting column ``i`` is ::

    x = Q_k (T_k + mu I)^{-1} E_1 R e_i ,

the minimizer of the ``(A + mu I)``-norm error over the depth-``k`` block
Krylov subspace.  Because that subspace does not depend on ``mu``, a single
factorization serves an entire grid of shifts; only the small banded solve
is repeated.  Plain CG is the single-column special case.  PCG runs the
standard three-term recurrence against a supplied preconditioner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .block_lanczos import (
    BlockKrylovDecomposition,
    ReorthPolicy,
    _factorize,
    krylov_decomposition,
    solve_projected,
)
from .errors import NumericalFailureError
from .matgen import SyntheticProblem
from .operator import SymmetricOperator


def shift_grid(values) -> np.ndarray:
    """Validate and sort a regularization-path grid (nonnegative, finite)."""
    grid = np.asarray(list(values), dtype=np.float64)
    if grid.size < 1:
        raise ValueError("shift grid must be nonempty")
    if not np.all(np.isfinite(grid)) or np.any(grid < 0):
        raise ValueError("shifts must be finite and nonnegative")
    return np.sort(grid)


@dataclass
class TraceRecord:
    """One experiment measurement: a method's iterate at (t, mu) plus costs."""

    method: str
    t: int
    matrix_loads: int
    matvecs: int
    mu: float
    rel_err_anorm: float | None
    residual_norm: float | None
    kappa_actual: float | None = None
    s: int | None = None
    ell: int | None = None


@dataclass
class ConvergenceTrace:
    records: list = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def extend(self, records) -> None:
        self.records.extend(records)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def _projected_solution(dec, mu, column, depth):
    """Solve ``(T_k + mu I) y = E_1 R e_col`` via banded Cholesky."""
    m = dec.m
    if not 1 <= column <= m:
        raise ValueError(f"column must lie in [1, {m}], got {column}")
    if mu < 0 or not np.isfinite(mu):
        raise ValueError(f"shift must be finite and nonnegative, got {mu}")
    n = depth * m
    rhs = np.zeros(n)
    rhs[:m] = dec.R[:, column - 1]
    return solve_projected(dec.T[:n, :n], m, mu, rhs)


def evaluate_bcg_iterate(
    dec: BlockKrylovDecomposition,
    mu: float,
    column: int = 1,
    depth: int | None = None,
) -> np.ndarray:
    """Block-CG iterate for shift ``mu`` and starting column ``column``.

    ``depth`` truncates the factorization to its leading blocks (default:
    all of them), so one deep factorization yields the whole iterate history
    at every shift.
    """
    depth = dec.t_eff if depth is None else int(depth)
    dec._check_depth(depth)
    y = _projected_solution(dec, mu, column, depth)
    return dec.basis(depth) @ y


def bcg_residual_norm(
    dec: BlockKrylovDecomposition,
    mu: float,
    column: int = 1,
    depth: int | None = None,
) -> float:
    """``||b - (A + mu I) x||`` of the evaluated iterate, load free.

    The residual lies in the next basis block, so its norm is read off the
    coupling block (or the stored residual block at full depth) times the
    trailing entries of the projected solution.
    """
    depth = dec.t_eff if depth is None else int(depth)
    dec._check_depth(depth)
    y = _projected_solution(dec, mu, column, depth)
    tail = y[-dec.m :]
    if depth < dec.t_eff:
        return float(np.linalg.norm(dec.coupling_block(depth) @ tail))
    return float(np.linalg.norm(dec.residual_block @ tail))


def evaluate_on_shift_grid(dec, grid, column=1, depth=None):
    """Iterates for every shift in ``grid`` from one factorization."""
    return [evaluate_bcg_iterate(dec, mu, column, depth) for mu in grid]


def cg_solve(
    op: SymmetricOperator,
    b: np.ndarray,
    mu: float,
    t: int,
    policy: ReorthPolicy = ReorthPolicy.full(),
) -> list:
    """CG iterates 1..t for ``(A + mu I) x = b``.

    Implemented as single-column block-CG: a depth-``t`` factorization is
    built (``t`` matrix-loads) and each iterate is evaluated from its leading
    principal part.  If the Krylov space becomes invariant early, the final
    iterate is repeated (it is already exact over the reachable space).
    """
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if np.linalg.norm(b) == 0.0:
        raise ValueError("right-hand side must be nonzero")
    dec = krylov_decomposition(op, b, depth=int(t), policy=policy)
    iterates = [evaluate_bcg_iterate(dec, mu, 1, k) for k in range(1, dec.t_eff + 1)]
    while len(iterates) < int(t):
        iterates.append(iterates[-1].copy())
    return iterates


def pcg_solve(
    op: SymmetricOperator,
    b: np.ndarray,
    mu: float,
    precond,
    t: int,
) -> list:
    """Preconditioned CG iterates 1..t via the three-term recurrence.

    ``precond`` must expose ``apply_inverse(mu, v)`` and be symmetric
    positive definite.  Each iteration consumes one matrix-load of ``A``
    (the ``mu``-shift is applied for free) plus one preconditioner solve.
    Loss of positivity in the recurrence scalars beyond roundoff is reported
    as a breakdown with its iteration index; stagnation at the attainable
    accuracy simply stops the recurrence and repeats the final iterate.
    """
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        raise ValueError("right-hand side must be nonzero")
    if mu < 0 or not np.isfinite(mu):
        raise ValueError(f"shift must be finite and nonnegative, got {mu}")
    t = int(t)
    x = np.zeros_like(b)
    r = b.copy()
    z = np.asarray(precond.apply_inverse(mu, r), dtype=np.float64)
    rz = float(r @ z)
    if rz <= 0:
        raise NumericalFailureError(
            "preconditioner is not positive definite on the initial residual",
            iteration=0,
        )
    p = z.copy()
    iterates: list[np.ndarray] = []
    for k in range(1, t + 1):
        v = op.apply_block(p) + mu * p
        pv = float(p @ v)
        scale = np.linalg.norm(p) * np.linalg.norm(v)
        if pv <= 0:
            if pv >= -1e-12 * scale:
                break  # search direction has collapsed to roundoff
            raise NumericalFailureError(
                f"recurrence breakdown: nonpositive curvature at iteration {k}",
                iteration=k,
            )
        alpha = rz / pv
        x = x + alpha * p
        r = r - alpha * v
        iterates.append(x.copy())
        z = np.asarray(precond.apply_inverse(mu, r), dtype=np.float64)
        rz_new = float(r @ z)
        if rz_new <= 0:
            if rz_new >= -1e-12 * (np.linalg.norm(r) * np.linalg.norm(z)):
                break  # converged to the attainable accuracy
            raise NumericalFailureError(
                f"recurrence breakdown: indefinite preconditioner at iteration {k}",
                iteration=k,
            )
        p = z + (rz_new / rz) * p
        rz = rz_new
    if not iterates:
        iterates.append(x.copy())
    while len(iterates) < t:
        iterates.append(iterates[-1].copy())
    return iterates


@dataclass
class SolveResult:
    """Outcome of an oracle-free solve: the iterate, its (free) residual
    norm, whether the target was met, and the loads spent."""

    x: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    matrix_loads: int


def solve_regularized(
    op: SymmetricOperator,
    b: np.ndarray,
    mu: float,
    rtol: float = 1e-10,
    max_iters: int | None = None,
    policy: ReorthPolicy = ReorthPolicy.full(),
) -> SolveResult:
    """Solve ``(A + mu I) x = b`` to a relative residual target.

    Production-mode entry point: no oracle is consulted.  The factorization
    is grown one block at a time and stops as soon as the recurrence's free
    residual estimate reaches ``rtol * ||b||`` (or the space is exhausted,
    or ``max_iters`` blocks were spent; defaults to the dimension).
    """
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if np.linalg.norm(b) == 0.0:
        raise ValueError("right-hand side must be nonzero")
    if not (rtol > 0):
        raise ValueError(f"rtol must be positive, got {rtol}")
    depth = op.dim if max_iters is None else min(int(max_iters), op.dim)
    start = op.counters()
    dec = _factorize(
        op, b[:, None], depth=depth, policy=policy, stop_mu=mu, stop_rtol=rtol
    )
    spent = op.counters()
    x = evaluate_bcg_iterate(dec, mu, 1)
    residual = bcg_residual_norm(dec, mu, 1)
    return SolveResult(
        x=x,
        residual_norm=residual,
        converged=residual <= rtol * np.linalg.norm(b),
        iterations=dec.t_eff,
        matrix_loads=spent.matrix_loads - start.matrix_loads,
    )


def a_norm_error(x: np.ndarray, mu: float, problem: SyntheticProblem, b: np.ndarray) -> float:
    """Relative ``(A + mu I)``-norm error of ``x`` against the exact solution.

    Computed entirely through the problem's retained eigendecomposition;
    never via iterative solves and never counted against operator counters.
    """
    xstar = problem.solve_shifted(np.asarray(b, dtype=np.float64).reshape(-1), mu)
    return problem.anorm(xstar - np.asarray(x).reshape(-1), mu) / problem.anorm(xstar, mu)


class IdentityPreconditioner:
    """The trivial preconditioner; PCG with it is plain CG."""

    descriptor = "identity"

    def apply_inverse(self, mu, v):
        return np.array(v, dtype=np.float64, copy=True)


class ExactInversePreconditioner:
    """Oracle preconditioner ``P = A + mu I`` from the retained factors.

    PCG with it converges in a single iteration; used to sanity-check the
    recurrence and the preconditioner contract.
    """

    descriptor = "exact_inverse"

    def __init__(self, problem: SyntheticProblem):
        self._problem = problem

    def apply_inverse(self, mu, v):
        return self._problem.solve_shifted(np.asarray(v, dtype=np.float64), mu)
