"""Block Krylov solvers for regularized SPD systems.

Augmented block conjugate gradient over shift-invariant block Krylov
subspaces, randomized Nystrom deflation preconditioning, block-Lanczos
matrix square roots for Gaussian sampling, and an experiment harness with
exact matrix-load accounting.
"""

from .block_lanczos import (
    BlockKrylovDecomposition,
    ReorthPolicy,
    block_lanczos,
    krylov_decomposition,
    verify_decomposition,
)
from .errors import ConfigError, NumericalFailureError
from .matgen import (
    SeededRng,
    SpectrumSpec,
    SyntheticProblem,
    gaussian_matrix,
    generate_problem,
    make_eigenvalues,
    make_operator,
)
from .nystrom import (
    DeflationPreconditioner,
    NystromApproximation,
    approximation_error_norm,
    condno_upper_bound,
    deflated_condition_number,
    effective_dimension,
    exact_deflation_preconditioner,
    make_deflation_preconditioner,
    nystrom_block_krylov,
    precond_condition_number,
)
from .operator import (
    ChunkedOperator,
    ChunkFileError,
    CostCounters,
    DenseOperator,
    SymmetricOperator,
    open_chunked,
    write_chunked,
)
from .sampling import (
    SampleRequest,
    SampleResult,
    block_isqrt_apply,
    block_sqrt_apply,
    draw_gaussian_samples,
    elliptic_K,
    max_deflation_rank,
    sample_error_bound,
    scalar_sqrt_integral,
    sqrt_error_constant,
)
from .solvers import (
    ConvergenceTrace,
    ExactInversePreconditioner,
    IdentityPreconditioner,
    SolveResult,
    TraceRecord,
    a_norm_error,
    bcg_residual_norm,
    cg_solve,
    evaluate_bcg_iterate,
    evaluate_on_shift_grid,
    pcg_solve,
    shift_grid,
    solve_regularized,
)

__version__ = "0.1.0"
