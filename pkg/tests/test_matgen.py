import numpy as np
import pytest

from bkspd.matgen import (
    SeededRng,
    SpectrumSpec,
    gaussian_matrix,
    generate_problem,
    make_eigenvalues,
    make_operator,
)


class TestMakeEigenvalues:
    def test_explicit_passthrough(self):
        np.testing.assert_array_equal(
            make_eigenvalues(SpectrumSpec.explicit([4.0, 1.0])), [4.0, 1.0]
        )

    def test_fastdecay_geometric(self):
        lam = make_eigenvalues(SpectrumSpec.fastdecay(5, rate=0.5, lam1=1.0))
        np.testing.assert_allclose(lam, [1.0, 0.5, 0.25, 0.125, 0.0625], rtol=1e-15)

    def test_fastdecay_default_spread(self):
        lam = make_eigenvalues(SpectrumSpec.fastdecay(200))
        assert lam[-1] / lam[0] == pytest.approx(1e-8, rel=1e-10)

    def test_outliers_gap(self):
        lam = make_eigenvalues(SpectrumSpec.outliers(100, count=20, gap=1e3))
        assert lam[19] / lam[20] >= 1e3
        leading = np.sum(lam >= 1e3 * lam[20])
        assert leading == 20

    def test_bottom_gap(self):
        lam = make_eigenvalues(SpectrumSpec.bottom(100, count=20, gap=1e3))
        trailing = np.sum(lam <= lam[79] / 1e3)
        assert trailing == 20

    @pytest.mark.parametrize(
        "spec",
        [
            SpectrumSpec.fastdecay(200),
            SpectrumSpec.outliers(150, count=10, gap=50.0),
            SpectrumSpec.bottom(150, count=10, gap=50.0),
            SpectrumSpec.explicit([3.0, 2.0, 1.0]),
        ],
    )
    def test_sorted_positive(self, spec):
        lam = make_eigenvalues(spec)
        assert lam.size == spec.dim
        assert np.all(lam > 0)
        assert np.all(np.diff(lam) <= 0)

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            make_eigenvalues(SpectrumSpec.fastdecay(0))

    def test_rejects_bad_rate(self):
        with pytest.raises(ValueError):
            make_eigenvalues(SpectrumSpec.fastdecay(5, rate=1.5))

    def test_rejects_bad_gap(self):
        with pytest.raises(ValueError):
            make_eigenvalues(SpectrumSpec.outliers(10, count=2, gap=1.0))

    def test_rejects_nonpositive_explicit(self):
        with pytest.raises(ValueError):
            make_eigenvalues(SpectrumSpec.explicit([1.0, -2.0]))


class TestMakeOperator:
    def test_identity_spectrum_gives_identity(self):
        problem = make_operator(np.ones(3), SeededRng(7))
        np.testing.assert_allclose(problem.matrix, np.eye(3), atol=1e-14)

    def test_eigensolver_recovers_spectrum(self):
        problem = make_operator(np.array([4.0, 1.0]), SeededRng(123))
        w = np.linalg.eigvalsh(problem.matrix)
        np.testing.assert_allclose(np.sort(w), [1.0, 4.0], rtol=1e-12)

    def test_same_seed_bitwise_identical(self):
        a = make_operator(np.array([4.0, 1.0]), SeededRng(5)).matrix
        b = make_operator(np.array([4.0, 1.0]), SeededRng(5)).matrix
        np.testing.assert_array_equal(a, b)

    def test_different_streams_differ(self):
        a = make_operator(np.ones(4) * 2, SeededRng(5, 0)).matrix
        b = make_operator(np.ones(4) * 2, SeededRng(5, 1)).matrix
        assert not np.array_equal(a, b)

    def test_exactly_symmetric(self):
        A = make_operator(np.array([5.0, 2.0, 1.0]), SeededRng(9)).matrix
        np.testing.assert_array_equal(A, A.T)

    def test_haar_factor_orthonormal(self):
        problem = make_operator(np.linspace(10, 1, 50), SeededRng(2))
        V = problem.eigenvectors
        assert np.linalg.norm(V.T @ V - np.eye(50), 2) <= 1e-13

    def test_spectrum_fidelity_larger(self):
        # Per-eigenvalue relative fidelity; attainable when eps * kappa is
        # comfortably below the tolerance.
        lam = make_eigenvalues(SpectrumSpec.explicit(np.logspace(0, -4, 300)))
        problem = make_operator(lam, SeededRng(3))
        w = np.linalg.eigvalsh(problem.matrix)[::-1]
        assert np.max(np.abs(w - lam) / lam) <= 1e-10

    def test_spectrum_fidelity_ill_conditioned(self):
        # For kappa = 1e8 the float64 limit is absolute (scale-relative):
        # tiny eigenvalues cannot carry 1e-10 relative accuracy.
        lam = make_eigenvalues(SpectrumSpec.fastdecay(300))
        problem = make_operator(lam, SeededRng(3))
        w = np.linalg.eigvalsh(problem.matrix)[::-1]
        assert np.max(np.abs(w - lam)) / lam[0] <= 1e-13

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            make_operator(np.array([1.0, 0.0]), SeededRng(1))

    def test_oracle_solve_and_norm(self):
        problem = generate_problem(SpectrumSpec.explicit([4.0, 1.0]), SeededRng(1))
        b = np.array([1.0, 2.0])
        x = problem.solve_shifted(b, 0.5)
        np.testing.assert_allclose(
            (problem.matrix + 0.5 * np.eye(2)) @ x, b, rtol=1e-12
        )
        v = np.array([1.0, -1.0])
        direct = np.sqrt(v @ (problem.matrix + 0.5 * np.eye(2)) @ v)
        assert problem.anorm(v, 0.5) == pytest.approx(direct, rel=1e-12)

    def test_oracle_sqrt(self):
        problem = generate_problem(SpectrumSpec.explicit([9.0, 4.0, 1.0]), SeededRng(4))
        X = np.eye(3)
        S = problem.apply_sqrt(X)
        np.testing.assert_allclose(S @ S, problem.matrix, atol=1e-12)
        np.testing.assert_allclose(
            problem.apply_inv_sqrt(S), np.eye(3), atol=1e-10
        )


class TestGaussianMatrix:
    def test_deterministic(self):
        a = gaussian_matrix(10, 3, SeededRng(8, 2))
        b = gaussian_matrix(10, 3, SeededRng(8, 2))
        np.testing.assert_array_equal(a, b)

    def test_moments(self):
        x = gaussian_matrix(10_000, 1, SeededRng(0))
        assert abs(x.mean()) <= 0.04
        assert abs(x.var() - 1.0) <= 0.06

    def test_rejects_zero_columns(self):
        with pytest.raises(ValueError):
            gaussian_matrix(3, 0, SeededRng(1))
