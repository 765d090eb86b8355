"""
Complex linear-algebra helpers
Shared DFT, Kronecker, vectorization and least-squares routines

All matrices are 2-D complex128 numpy arrays. Vectorization is column-major
throughout the code base, so vec(A @ X @ B) == kron(B.T, A) @ vec(X).
"""
from typing import Tuple

import numpy as np
import scipy.linalg

from errors import DimensionError, RankDeficiencyError

# Default conditioning bound for solve_ls (smallest/largest singular value)
DEFAULT_MAX_CONDITION = 1e10


def as_complex_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-D complex matrix (1-D input becomes a column)"""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(-1, 1)
    elif m.ndim != 2:
        raise DimensionError(f"Expected a matrix, got {m.ndim}-D array")
    if m.size == 0:
        raise DimensionError("Matrix must have at least one entry")
    if not np.all(np.isfinite(m)):
        raise ValueError("Matrix entries must be finite")
    return m


def dft_matrix(n: int) -> np.ndarray:
    """Unitary n-point DFT matrix, entry (m1, m2) = exp(-j2π m1 m2 / n)/√n"""
    if n < 1:
        raise ValueError(f"DFT size must be positive, got {n}")
    return scipy.linalg.dft(n, scale="sqrtn")


def kron(a, b) -> np.ndarray:
    """Kronecker product with block (i, j) equal to a[i, j]·b"""
    return np.kron(as_complex_matrix(a), as_complex_matrix(b))


def vec(a) -> np.ndarray:
    """Column-major vectorization as an (rows·cols)×1 column"""
    m = as_complex_matrix(a)
    return m.reshape(-1, 1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of vec"""
    flat = np.asarray(v, dtype=complex).ravel()
    if flat.size != rows * cols:
        raise DimensionError(f"Cannot reshape {flat.size} entries into {rows}x{cols}")
    return flat.reshape(rows, cols, order="F")


def vec_stack(stack) -> np.ndarray:
    """Row b is vec(A_b)ᵀ for a (count, rows, cols) stack"""
    a = np.asarray(stack, dtype=complex)
    if a.ndim != 3:
        raise DimensionError(f"Expected a (count, rows, cols) stack, got shape {a.shape}")
    return a.transpose(0, 2, 1).reshape(a.shape[0], -1)


def unvec_stack(rows_matrix, rows: int, cols: int) -> np.ndarray:
    """Inverse of vec_stack; returns a (count, rows, cols) view when possible"""
    flat = np.asarray(rows_matrix, dtype=complex)
    if flat.ndim != 2 or flat.shape[1] != rows * cols:
        raise DimensionError(f"Cannot unvec rows of shape {flat.shape} into {rows}x{cols}")
    return flat.reshape(-1, cols, rows).transpose(0, 2, 1)


def pinv(a, tol: float = None) -> np.ndarray:
    """
    Moore-Penrose pseudo-inverse

    Args:
        a: matrix to invert
        tol: absolute singular-value cutoff; by default
            max(rows, cols)·eps·σ_max as in MATLAB's pinv

    Returns:
        cols×rows pseudo-inverse (zero matrix for a zero input)
    """
    m = as_complex_matrix(a)
    if tol is None:
        return scipy.linalg.pinv(m)
    if tol < 0:
        raise ValueError("Tolerance must be nonnegative")
    return scipy.linalg.pinv(m, atol=tol, rtol=0.0)


def svd(a) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD (u, s, vh) with a = u @ diag(s) @ vh and s descending"""
    m = as_complex_matrix(a)
    return scipy.linalg.svd(m, full_matrices=False)


def condition_number(a) -> float:
    """Ratio of largest to smallest singular value (inf when singular)"""
    s = scipy.linalg.svdvals(as_complex_matrix(a))
    if s[-1] <= 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def numerical_rank(a, rtol: float = None) -> int:
    """Number of singular values above rtol·σ_max"""
    m = as_complex_matrix(a)
    s = scipy.linalg.svdvals(m)
    if s[0] == 0.0:
        return 0
    if rtol is None:
        rtol = max(m.shape) * np.finfo(float).eps
    return int(np.sum(s > rtol * s[0]))


def solve_ls(a, y, max_condition: float = DEFAULT_MAX_CONDITION) -> np.ndarray:
    """
    Least-squares solution of a @ x ≈ y for a tall, full-column-rank a

    Raises:
        DimensionError: a is wide or y has the wrong length
        RankDeficiencyError: σ_min < σ_max / max_condition
    """
    m = as_complex_matrix(a)
    rhs = as_complex_matrix(y)
    rows, cols = m.shape
    if rows < cols:
        raise DimensionError(f"Least squares needs rows >= cols, got {rows}x{cols}")
    if rhs.shape[0] != rows:
        raise DimensionError(f"Right-hand side has {rhs.shape[0]} rows, expected {rows}")

    s = scipy.linalg.svdvals(m)
    if s[0] == 0.0 or s[-1] < s[0] / max_condition:
        raise RankDeficiencyError(
            f"Rank-deficient system: singular values span {s[0]:.3e} to {s[-1]:.3e}"
            f" (condition bound {max_condition:.1e})"
        )
    x, *_ = scipy.linalg.lstsq(m, rhs)
    return x


def is_unitary(a, atol: float = 1e-10) -> bool:
    """Check aᴴa = I entrywise within atol"""
    m = as_complex_matrix(a)
    if m.shape[0] != m.shape[1]:
        return False
    return bool(np.allclose(m.conj().T @ m, np.eye(m.shape[0]), rtol=0.0, atol=atol))


def complex_gaussian(rng: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric complex Gaussian samples with the given variance"""
    if variance < 0:
        raise ValueError("Variance must be nonnegative")
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
