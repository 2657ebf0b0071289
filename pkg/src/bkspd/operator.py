"""Symmetric positive definite operators with block-product cost accounting.

Operators are accessed exclusively through block matrix products.  Every
invocation of :meth:`SymmetricOperator.apply_block` counts as one
*matrix-load* (the matrix is streamed through memory once) and as many
matrix-vector products as the input has columns.  Two realizations are
provided: an in-memory dense operator and an out-of-core operator backed by
a chunked binary file that is read one row-chunk at a time.
"""

from __future__ import annotations

import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

CHUNK_MAGIC = b"BKSPD1\x00\x00"
_HEADER_BYTES = len(CHUNK_MAGIC) + 16  # magic + u64 dim + u64 chunk_rows
_SYMMETRY_RTOL = 1e-12


class ChunkFileError(ValueError):
    """Malformed chunked matrix file (bad magic, header, or length)."""


@dataclass
class CostCounters:
    """Running totals of block applies and matrix-vector products.

    ``matrix_loads`` counts block-apply invocations (one full pass over the
    matrix each, regardless of column count); ``matvecs`` counts the total
    number of columns pushed through the operator.
    """

    matrix_loads: int = 0
    matvecs: int = 0

    def snapshot(self) -> "CostCounters":
        return CostCounters(self.matrix_loads, self.matvecs)


class SymmetricOperator(ABC):
    """Abstract SPD operator accessed only through counted block products."""

    def __init__(self, dim: int):
        dim = int(dim)
        if dim < 1:
            raise ValueError(f"operator dimension must be positive, got {dim}")
        self._dim = dim
        self._counters = CostCounters()

    @property
    def dim(self) -> int:
        return self._dim

    def counters(self) -> CostCounters:
        """Snapshot of the cost counters (a copy; safe to retain)."""
        return self._counters.snapshot()

    def reset_counters(self) -> None:
        self._counters = CostCounters()

    def apply_block(self, X: np.ndarray) -> np.ndarray:
        """Compute ``A @ X``, charging one matrix-load and ``X.shape[1]`` matvecs.

        Accepts a ``(dim, n)`` block or a ``(dim,)`` vector (treated as one
        column and returned one-dimensional).
        """
        X = np.asarray(X, dtype=np.float64)
        vector_input = X.ndim == 1
        if vector_input:
            X = X[:, None]
        if X.ndim != 2:
            raise ValueError(f"expected a matrix or vector, got ndim={X.ndim}")
        if X.shape[0] != self._dim:
            raise ValueError(
                f"operator is {self._dim}x{self._dim} but input has shape "
                f"{X.shape[0]}x{X.shape[1]}"
            )
        if X.shape[1] < 1:
            raise ValueError("input block must have at least one column")
        if not np.all(np.isfinite(X)):
            raise ValueError("input block contains non-finite entries")
        out = self._apply(X)
        self._counters.matrix_loads += 1
        self._counters.matvecs += X.shape[1]
        return out[:, 0] if vector_input else out

    @abstractmethod
    def _apply(self, X: np.ndarray) -> np.ndarray:
        """Uncounted product ``A @ X`` for a validated ``(dim, n)`` block."""


def _check_symmetric(A: np.ndarray) -> None:
    scale = np.linalg.norm(A)
    if scale == 0.0:
        return
    if np.linalg.norm(A - A.T) > _SYMMETRY_RTOL * scale:
        raise ValueError("matrix is not symmetric within 1e-12 relative tolerance")


class DenseOperator(SymmetricOperator):
    """In-memory dense realization; validates symmetry at construction."""

    def __init__(self, matrix: np.ndarray):
        matrix = np.array(matrix, dtype=np.float64, copy=True)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix contains non-finite entries")
        _check_symmetric(matrix)
        super().__init__(matrix.shape[0])
        matrix.flags.writeable = False
        self._matrix = matrix

    @property
    def matrix(self) -> np.ndarray:
        """Read-only view of the stored matrix (for oracles and diagnostics)."""
        return self._matrix

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return self._matrix @ X


class ChunkedOperator(SymmetricOperator):
    """Out-of-core realization reading one row-chunk from disk per block apply.

    The backing file stores the matrix in row chunks of ``chunk_rows`` rows
    (the last chunk may be shorter).  A block apply streams the chunks in
    order, so the whole matrix is loaded exactly once per apply.
    """

    def __init__(self, path: str):
        self._path = str(path)
        with open(self._path, "rb") as f:
            header = f.read(_HEADER_BYTES)
        if len(header) < _HEADER_BYTES:
            raise ChunkFileError(
                f"file truncated inside header at byte {len(header)} "
                f"(need {_HEADER_BYTES} header bytes)"
            )
        if header[: len(CHUNK_MAGIC)] != CHUNK_MAGIC:
            raise ChunkFileError(
                f"bad magic bytes {header[: len(CHUNK_MAGIC)]!r}; "
                f"expected {CHUNK_MAGIC!r}"
            )
        dim, chunk_rows = struct.unpack("<QQ", header[len(CHUNK_MAGIC) :])
        if dim < 1 or chunk_rows < 1:
            raise ChunkFileError(
                f"invalid header: dim={dim}, chunk_rows={chunk_rows}"
            )
        expected = _HEADER_BYTES + 8 * dim * dim
        import os

        actual = os.path.getsize(self._path)
        if actual != expected:
            raise ChunkFileError(
                f"file has {actual} bytes but {expected} were expected; "
                f"data ends at byte offset {actual}"
            )
        super().__init__(dim)
        self._chunk_rows = int(chunk_rows)

    @property
    def chunk_rows(self) -> int:
        return self._chunk_rows

    @property
    def n_chunks(self) -> int:
        return -(-self._dim // self._chunk_rows)

    def _apply(self, X: np.ndarray) -> np.ndarray:
        d = self._dim
        out = np.empty((d, X.shape[1]), dtype=np.float64)
        with open(self._path, "rb") as f:
            f.seek(_HEADER_BYTES)
            for start in range(0, d, self._chunk_rows):
                rows = min(self._chunk_rows, d - start)
                chunk = np.fromfile(f, dtype="<f8", count=rows * d)
                chunk = chunk.reshape(rows, d)
                out[start : start + rows, :] = chunk @ X
        return out

    def dense(self) -> np.ndarray:
        """Read the full stored matrix into memory (testing/diagnostics)."""
        with open(self._path, "rb") as f:
            f.seek(_HEADER_BYTES)
            data = np.fromfile(f, dtype="<f8", count=self._dim * self._dim)
        return data.reshape(self._dim, self._dim)


def write_chunked(A: np.ndarray, chunk_rows: int, path: str) -> None:
    """Write a symmetric matrix to the chunked on-disk format.

    Layout: 8 magic bytes, little-endian u64 dimension, u64 chunk_rows, then
    the row chunks in order as float64 row-major with no padding.  Symmetry
    is validated once here (1e-12 relative); reads trust the file.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix contains non-finite entries")
    _check_symmetric(A)
    chunk_rows = int(chunk_rows)
    if chunk_rows < 1:
        raise ValueError(f"chunk_rows must be >= 1, got {chunk_rows}")
    d = A.shape[0]
    with open(path, "wb") as f:
        f.write(CHUNK_MAGIC)
        f.write(struct.pack("<QQ", d, chunk_rows))
        for start in range(0, d, chunk_rows):
            rows = np.ascontiguousarray(A[start : start + chunk_rows], dtype="<f8")
            f.write(rows.tobytes())


def open_chunked(path: str) -> ChunkedOperator:
    """Open a file written by :func:`write_chunked`."""
    return ChunkedOperator(path)
