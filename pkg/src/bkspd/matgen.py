"""Deterministic synthetic SPD test problems with prescribed spectra.

Problems are generated as ``A = V diag(lam) V^T`` with ``V`` Haar-distributed
orthogonal, and the factors are retained so that exact solutions, matrix
square roots, and deflated condition numbers can be computed independently
of the iterative machinery under test.  Everything is a pure function of a
``(seed, stream)`` pair backed by the counter-based Philox generator, so
repeated calls with the same arguments are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operator import DenseOperator

# Stream ids used by the harness to decorrelate the random ingredients of one
# experiment while keeping a single user-facing seed.
STREAM_MATRIX = 0
STREAM_RHS = 1
STREAM_SKETCH = 2
STREAM_SAMPLES = 3

_DEFAULT_SPREAD = 1e-8  # default lam_d / lam_1 for fastdecay spectra


@dataclass(frozen=True)
class SeededRng:
    """Value object naming a reproducible random stream.

    The generator is Philox (counter based) keyed by ``(seed, stream)``;
    identical pairs produce identical sequences across runs and platforms.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, stream: int) -> "SeededRng":
        return SeededRng(self.seed, stream)


@dataclass(frozen=True)
class SpectrumSpec:
    """Recipe for a positive, nonincreasing eigenvalue list of length ``dim``.

    Kinds:

    - ``fastdecay``: geometric decay ``lam_i = lam1 * rate**(i-1)``; the
      default rate makes ``lam_d / lam_1 = 1e-8``.
    - ``outliers``: ``count`` leading eigenvalues log-spaced in
      ``[gap, 10*gap]`` times the tail top, above a slow geometric tail with
      condition number ``tail_condition``.
    - ``bottom``: mirror image; ``count`` trailing eigenvalues log-spaced in
      ``[1/(10*gap), 1/gap]`` times the head bottom, below a slow geometric
      head with condition number ``tail_condition``.
    - ``explicit``: a user-supplied list.
    """

    kind: str
    dim: int
    rate: float | None = None
    lam1: float = 1.0
    count: int = 0
    gap: float = 0.0
    tail_condition: float = 100.0
    values: tuple = field(default_factory=tuple)

    @classmethod
    def fastdecay(cls, dim, rate=None, lam1=1.0):
        return cls(kind="fastdecay", dim=dim, rate=rate, lam1=lam1)

    @classmethod
    def outliers(cls, dim, count, gap, tail_condition=100.0):
        return cls(kind="outliers", dim=dim, count=count, gap=gap,
                   tail_condition=tail_condition)

    @classmethod
    def bottom(cls, dim, count, gap, tail_condition=100.0):
        return cls(kind="bottom", dim=dim, count=count, gap=gap,
                   tail_condition=tail_condition)

    @classmethod
    def explicit(cls, values):
        values = tuple(float(v) for v in values)
        return cls(kind="explicit", dim=len(values), values=values)


def _geometric(top: float, condition: float, n: int) -> np.ndarray:
    """``n`` log-spaced values from ``top`` down to ``top / condition``."""
    if n == 1:
        return np.array([top])
    return top * np.logspace(0.0, -np.log10(condition), n)


def make_eigenvalues(spec: SpectrumSpec) -> np.ndarray:
    """Generate the eigenvalue list for ``spec``; nonincreasing and positive."""
    d = int(spec.dim)
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")

    if spec.kind == "explicit":
        lam = np.asarray(spec.values, dtype=np.float64)
        if lam.size != d or np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise ValueError("explicit spectrum must be finite and positive")
        lam = np.sort(lam)[::-1].copy()
        return lam

    if spec.kind == "fastdecay":
        if d == 1:
            return np.array([spec.lam1])
        rate = spec.rate if spec.rate is not None else _DEFAULT_SPREAD ** (1.0 / (d - 1))
        if not (0.0 < rate < 1.0):
            raise ValueError(f"decay rate must lie in (0, 1), got {rate}")
        return spec.lam1 * rate ** np.arange(d)

    if spec.kind in ("outliers", "bottom"):
        r = int(spec.count)
        if r < 1 or r >= d:
            raise ValueError(f"outlier count must be in [1, dim), got {r}")
        if not (spec.gap > 1.0):
            raise ValueError(f"gap ratio must exceed 1, got {spec.gap}")
        if not (spec.tail_condition >= 1.0):
            raise ValueError("tail_condition must be >= 1")
        if spec.kind == "outliers":
            tail = _geometric(1.0, spec.tail_condition, d - r)
            top = np.logspace(np.log10(10.0 * spec.gap), np.log10(spec.gap), r)
            return np.concatenate([top, tail])
        head = _geometric(1.0, spec.tail_condition, d - r)
        low = head[-1] * np.logspace(-np.log10(spec.gap), -np.log10(10.0 * spec.gap), r)
        return np.concatenate([head, low])

    raise ValueError(f"unknown spectrum kind {spec.kind!r}")


@dataclass
class SyntheticProblem:
    """A generated dense SPD matrix together with its exact factors.

    The retained eigendecomposition is the oracle for exact solves, square
    roots, and error norms; it never touches operator counters.
    ``eigenvalues`` are nonincreasing and ``eigenvectors[:, i]`` matches
    ``eigenvalues[i]``.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def operator(self) -> DenseOperator:
        """Fresh dense operator with private counters."""
        return DenseOperator(self.matrix)

    def solve_shifted(self, b: np.ndarray, mu: float) -> np.ndarray:
        """Exact ``(A + mu I)^{-1} b`` through the eigendecomposition."""
        V, lam = self.eigenvectors, self.eigenvalues
        return V @ ((V.T @ b) / (lam + mu))

    def apply_sqrt(self, X: np.ndarray) -> np.ndarray:
        V, lam = self.eigenvectors, self.eigenvalues
        return V @ (np.sqrt(lam)[:, None] * (V.T @ np.atleast_2d(X.T).T))

    def apply_inv_sqrt(self, X: np.ndarray) -> np.ndarray:
        V, lam = self.eigenvectors, self.eigenvalues
        return V @ ((V.T @ np.atleast_2d(X.T).T) / np.sqrt(lam)[:, None])

    def anorm(self, x: np.ndarray, mu: float) -> float:
        """``sqrt(x^T (A + mu I) x)`` evaluated through the factors."""
        w = self.eigenvectors.T @ x
        return float(np.sqrt(np.sum((self.eigenvalues + mu) * w * w)))

    def condition_number(self, mu: float = 0.0) -> float:
        lam = self.eigenvalues
        return float((lam[0] + mu) / (lam[-1] + mu))


def make_operator(eigs: np.ndarray, rng: SeededRng) -> SyntheticProblem:
    """Conjugate ``diag(eigs)`` by a Haar-random orthogonal matrix.

    The orthogonal factor is the Q of a Gaussian matrix's QR factorization
    with the sign of R's diagonal fixed, which makes it Haar distributed and
    the construction deterministic under the seed.  The product is
    symmetrized to keep the matrix symmetric to machine precision.
    """
    lam = np.asarray(eigs, dtype=np.float64)
    if lam.ndim != 1 or lam.size < 1:
        raise ValueError("eigenvalue list must be a nonempty vector")
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise ValueError("eigenvalues must be finite and positive")
    d = lam.size
    gen = rng.generator()
    G = gen.standard_normal((d, d))
    V, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    V = V * signs
    A = (V * lam) @ V.T
    A = (A + A.T) / 2.0
    return SyntheticProblem(matrix=A, eigenvalues=lam.copy(), eigenvectors=V)


def generate_problem(spec: SpectrumSpec, rng: SeededRng) -> SyntheticProblem:
    """Convenience: :func:`make_eigenvalues` followed by :func:`make_operator`."""
    return make_operator(make_eigenvalues(spec), rng)


def gaussian_matrix(d: int, ell: int, rng: SeededRng) -> np.ndarray:
    """A ``d x ell`` matrix of independent standard normals, seed determined."""
    if d < 1 or ell < 1:
        raise ValueError(f"dimensions must be positive, got {d}x{ell}")
    return rng.generator().standard_normal((d, ell))
