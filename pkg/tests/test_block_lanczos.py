import dataclasses

import numpy as np
import pytest

from bkspd.block_lanczos import (
    ReorthPolicy,
    block_lanczos,
    krylov_decomposition,
    verify_decomposition,
)
from bkspd.matgen import SeededRng, SpectrumSpec, gaussian_matrix, generate_problem
from bkspd.operator import DenseOperator
from bkspd.solvers import evaluate_bcg_iterate


def spd_problem(d, seed=0, kind="mild"):
    if kind == "fastdecay":
        spec = SpectrumSpec.fastdecay(d)
    else:
        spec = SpectrumSpec.explicit(np.logspace(0, -3, d))
    return generate_problem(spec, SeededRng(seed))


class TestLoadAccounting:
    def test_single_iteration_diagonal_example(self):
        op = DenseOperator(np.diag([4.0, 1.0]))
        dec = block_lanczos(op, np.array([1.0, 0.0]), t=1)
        np.testing.assert_allclose(dec.T, [[4.0]])
        np.testing.assert_allclose(dec.R, [[1.0]])
        assert dec.t_eff == 1
        assert op.counters().matrix_loads == 1

    @pytest.mark.parametrize("t,m", [(2, 1), (5, 1), (8, 3), (4, 6)])
    def test_t_iterations_cost_t_minus_one_loads(self, t, m):
        problem = spd_problem(60, seed=t + m)
        op = problem.operator()
        B = gaussian_matrix(60, m, SeededRng(1))
        block_lanczos(op, B, t=t)
        c = op.counters()
        assert c.matrix_loads == t - 1
        assert c.matvecs == (t - 1) * m

    def test_load_history_snapshots(self):
        problem = spd_problem(40)
        op = problem.operator()
        dec = krylov_decomposition(op, gaussian_matrix(40, 2, SeededRng(2)), depth=6)
        assert [h.matrix_loads for h in dec.load_history] == list(range(1, 7))
        assert [h.matvecs for h in dec.load_history] == [2 * k for k in range(1, 7)]


class TestDecompositionQuality:
    def test_full_space_starting_block(self):
        problem = spd_problem(6, seed=3)
        op = problem.operator()
        dec = block_lanczos(op, np.eye(6), t=1)
        np.testing.assert_allclose(dec.Q, np.eye(6), atol=1e-14)
        np.testing.assert_allclose(dec.T, problem.matrix, atol=1e-12)
        assert dec.terminated_early  # invariant subspace reached
        assert np.linalg.norm(dec.residual_block) <= 1e-10

    def test_orthonormality_and_projection(self):
        problem = spd_problem(30, seed=4)
        op = problem.operator()
        B = gaussian_matrix(30, 3, SeededRng(5))
        dec = block_lanczos(op, B, t=8)
        report = verify_decomposition(problem.matrix, dec)
        assert report.orth_err <= 1e-10
        assert report.projection_err <= 1e-8
        assert report.bandwidth_ok

    def test_verify_small_exact_scale(self):
        problem = spd_problem(10, seed=6)
        dec = krylov_decomposition(
            problem.operator(), gaussian_matrix(10, 2, SeededRng(7)), depth=5
        )
        report = verify_decomposition(problem.matrix, dec)
        assert report.orth_err <= 1e-10
        assert report.projection_err <= 1e-10
        assert report.recurrence_err <= 1e-10
        assert report.bandwidth_ok

    def test_initial_block_factorization(self):
        problem = spd_problem(25, seed=8)
        B = gaussian_matrix(25, 4, SeededRng(9))
        dec = krylov_decomposition(problem.operator(), B, depth=3)
        np.testing.assert_allclose(dec.Q[:, :4] @ dec.R, B, atol=1e-12)
        assert np.allclose(dec.R, np.triu(dec.R))

    def test_single_column_gives_tridiagonal(self):
        problem = spd_problem(20, seed=10)
        dec = krylov_decomposition(
            problem.operator(), gaussian_matrix(20, 1, SeededRng(11)), depth=8
        )
        i, j = np.indices(dec.T.shape)
        assert np.all(dec.T[np.abs(i - j) > 1] == 0)

    def test_krylov_span_matches_monomial_basis(self):
        problem = spd_problem(12, seed=12)
        A = problem.matrix
        B = gaussian_matrix(12, 2, SeededRng(13))
        dec = krylov_decomposition(problem.operator(), B, depth=3)
        K = np.hstack([B, A @ B, A @ A @ B])
        P, _ = np.linalg.qr(K)
        defect = dec.Q - P @ (P.T @ dec.Q)
        assert np.linalg.norm(defect, 2) <= 1e-8

    def test_monotone_containment(self):
        problem = spd_problem(40, seed=14)
        B = gaussian_matrix(40, 2, SeededRng(15))
        dec_small = krylov_decomposition(problem.operator(), B, depth=5)
        dec_large = krylov_decomposition(problem.operator(), B, depth=6)
        Q = dec_large.Q
        defect = dec_small.Q - Q @ (Q.T @ dec_small.Q)
        assert np.linalg.norm(defect, 2) <= 1e-10


class TestShiftInvariance:
    def test_shifted_projection_serves_shifted_operator(self):
        problem = spd_problem(30, seed=16)
        mu = 0.37
        B = gaussian_matrix(30, 3, SeededRng(17))
        dec = krylov_decomposition(problem.operator(), B, depth=6)
        shifted = DenseOperator(problem.matrix + mu * np.eye(30))
        dec_mu = krylov_decomposition(shifted, B, depth=6)
        x_via_shift = evaluate_bcg_iterate(dec, mu, 1)
        x_direct = evaluate_bcg_iterate(dec_mu, 0.0, 1)
        rel = np.linalg.norm(x_via_shift - x_direct) / np.linalg.norm(x_direct)
        assert rel <= 1e-8

    def test_blocks_agree_up_to_orthogonal_transform(self):
        problem = spd_problem(24, seed=18)
        B = gaussian_matrix(24, 2, SeededRng(19))
        dec = krylov_decomposition(problem.operator(), B, depth=4)
        shifted = DenseOperator(problem.matrix + 0.5 * np.eye(24))
        dec_mu = krylov_decomposition(shifted, B, depth=4)
        for k in range(4):
            Qa = dec.Q[:, 2 * k : 2 * k + 2]
            Qb = dec_mu.Q[:, 2 * k : 2 * k + 2]
            assert np.linalg.norm(Qa @ Qa.T - Qb @ Qb.T, 2) <= 1e-8


class TestPoliciesAndTermination:
    def test_no_reorthogonalization_still_satisfies_recurrence(self):
        problem = generate_problem(SpectrumSpec.fastdecay(200), SeededRng(20))
        dec = krylov_decomposition(
            problem.operator(),
            gaussian_matrix(200, 1, SeededRng(21)),
            depth=120,
            policy=ReorthPolicy.none(),
        )
        report = verify_decomposition(problem.matrix, dec)
        # Orthogonality degrades without reorthogonalization, but the
        # three-term recurrence itself stays accurate.
        assert np.isfinite(report.orth_err)
        assert report.recurrence_err <= 1e-10

    def test_partial_policy_runs(self):
        problem = spd_problem(50, seed=22)
        dec = krylov_decomposition(
            problem.operator(),
            gaussian_matrix(50, 2, SeededRng(23)),
            depth=10,
            policy=ReorthPolicy.partial(4),
        )
        assert dec.t_eff == 10

    def test_policy_parse(self):
        assert ReorthPolicy.parse("full").kind == "full"
        assert ReorthPolicy.parse("none").kind == "none"
        assert ReorthPolicy.parse("partial:7") == ReorthPolicy.partial(7)
        with pytest.raises(ValueError):
            ReorthPolicy.parse("sometimes")

    def test_early_termination_on_invariant_subspace(self):
        # Rank-4 perturbation of the identity: the Krylov space stops growing.
        rng = np.random.default_rng(24)
        U, _ = np.linalg.qr(rng.standard_normal((30, 4)))
        A = np.eye(30) + 10.0 * U @ U.T
        op = DenseOperator(A)
        b = rng.standard_normal(30)
        dec = krylov_decomposition(op, b, depth=12)
        assert dec.terminated_early
        assert dec.t_eff <= 6
        assert op.counters().matrix_loads == dec.t_eff

    def test_rejects_rank_deficient_start(self):
        problem = spd_problem(10, seed=25)
        B = np.ones((10, 2))
        with pytest.raises(ValueError, match="rank deficient"):
            block_lanczos(problem.operator(), B, t=3)

    def test_rejects_block_wider_than_dimension(self):
        problem = spd_problem(4, seed=25)
        B = np.random.default_rng(0).standard_normal((4, 6))
        with pytest.raises(ValueError, match="wider"):
            block_lanczos(problem.operator(), B, t=2)

    def test_rejects_non_finite_start(self):
        problem = spd_problem(5, seed=26)
        B = np.full((5, 1), np.nan)
        with pytest.raises(ValueError, match="non-finite"):
            block_lanczos(problem.operator(), B, t=2)

    def test_rejects_zero_iterations(self):
        problem = spd_problem(5, seed=27)
        with pytest.raises(ValueError):
            block_lanczos(problem.operator(), np.ones(5), t=0)

    def test_verify_rejects_empty_decomposition(self):
        problem = spd_problem(6, seed=28)
        dec = krylov_decomposition(problem.operator(), np.ones(6), depth=2)
        broken = dataclasses.replace(dec, t_eff=0, Q=dec.Q[:, :0])
        with pytest.raises(ValueError, match="no completed iterations"):
            verify_decomposition(problem.matrix, broken)
