"""Small dense complex linear algebra.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Every routine
accepts optional leading batch dimensions where that is meaningful
(``determinant``, ``cholesky``, ``solve_hermitian``), so that a whole
codebook or a whole block of Monte Carlo trials can be handled with one
call. Sizes are tiny (at most 2R x 2R with R <= 8), so the factorizations
loop over columns and vectorize over the batch.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, SingularMatrixError

__all__ = [
    "as_matrix",
    "matmul",
    "conj_transpose",
    "determinant",
    "cholesky",
    "cholesky_solve",
    "solve_hermitian",
    "hadamard_product",
    "rank",
    "max_abs",
]

DEFAULT_TOL = 1e-9


def as_matrix(a, ndim_min: int = 2) -> np.ndarray:
    """Convert ``a`` to a finite complex128 array with at least ``ndim_min`` dims."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim < ndim_min:
        raise DimensionError(f"expected at least {ndim_min} dimensions, got shape {arr.shape}")
    if arr.size == 0:
        raise DimensionError("empty matrix")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def _square(a: np.ndarray) -> int:
    if a.shape[-1] != a.shape[-2]:
        raise DimensionError(f"square matrix required, got shape {a.shape[-2:]}")
    return a.shape[-1]


def matmul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` with an explicit shape check."""
    a = as_matrix(a, 1)
    b = as_matrix(b, 1)
    inner_b = b.shape[0] if b.ndim == 1 else b.shape[-2]
    if a.shape[-1] != inner_b:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def conj_transpose(a) -> np.ndarray:
    """Conjugate transpose over the last two axes."""
    a = as_matrix(a)
    return np.conj(np.swapaxes(a, -1, -2))


def hadamard_product(a, b) -> np.ndarray:
    """Entry-wise product of two equally shaped matrices."""
    a = as_matrix(a, 1)
    b = as_matrix(b, 1)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def max_abs(a) -> float:
    """Max-norm ``max |a_ij|``."""
    return float(np.max(np.abs(a)))


def determinant(a):
    """Determinant by LU decomposition with partial pivoting.

    Parameters
    ----------
    a : array_like, shape (..., n, n)

    Returns
    -------
    complex or ndarray of complex
        A Python ``complex`` for a single matrix, otherwise an array with the
        batch shape.
    """
    a = as_matrix(a)
    n = _square(a)
    batch_shape = a.shape[:-2]
    work = a.reshape(-1, n, n).copy()
    nb = work.shape[0]
    rows = np.arange(nb)
    det = np.ones(nb, dtype=np.complex128)
    for c in range(n):
        p = np.argmax(np.abs(work[:, c:, c]), axis=1) + c
        swap = p != c
        if np.any(swap):
            top = work[rows, c].copy()
            work[rows, c] = work[rows, p]
            work[rows, p] = top
            det[swap] = -det[swap]
        piv = work[:, c, c]
        det *= piv
        safe = np.where(piv == 0, 1.0, piv)
        factors = work[:, c + 1:, c] / safe[:, None]
        work[:, c + 1:, c:] -= factors[:, :, None] * work[:, None, c, c:]
    if not batch_shape:
        return complex(det[0])
    return det.reshape(batch_shape)


def cholesky(a) -> np.ndarray:
    """Lower Cholesky factor of Hermitian positive-definite matrices.

    Only the lower triangle of ``a`` is read. Raises
    :class:`SingularMatrixError` as soon as a pivot is not strictly positive.
    """
    a = as_matrix(a)
    n = _square(a)
    low = np.zeros_like(a)
    for j in range(n):
        row = low[..., j, :j]
        d = a[..., j, j].real - np.sum(np.abs(row) ** 2, axis=-1)
        if np.any(~(d > 0)):
            raise SingularMatrixError("matrix is not Hermitian positive definite")
        djj = np.sqrt(d)
        low[..., j, j] = djj
        if j + 1 < n:
            off = a[..., j + 1:, j] - np.einsum("...ik,...k->...i", low[..., j + 1:, :j], np.conj(row))
            low[..., j + 1:, j] = off / djj[..., None]
    return low


def cholesky_solve(low: np.ndarray, y) -> np.ndarray:
    """Solve ``(L L^H) x = y`` given the factor from :func:`cholesky`."""
    y = np.asarray(y, dtype=np.complex128)
    n = low.shape[-1]
    if y.shape[-1] != n:
        raise DimensionError(f"rhs length {y.shape[-1]} does not match order {n}")
    y = np.broadcast_to(y, low.shape[:-1])
    z = np.empty(low.shape[:-1], dtype=np.complex128)
    for i in range(n):
        acc = np.einsum("...k,...k->...", low[..., i, :i], z[..., :i])
        z[..., i] = (y[..., i] - acc) / low[..., i, i]
    x = np.empty_like(z)
    for i in range(n - 1, -1, -1):
        # row i of L^H is conj of column i of L
        acc = np.einsum("...k,...k->...", np.conj(low[..., i + 1:, i]), x[..., i + 1:])
        x[..., i] = (z[..., i] - acc) / low[..., i, i].real
    return x


def solve_hermitian(a, y) -> np.ndarray:
    """Solve ``a x = y`` for Hermitian positive-definite ``a``."""
    return cholesky_solve(cholesky(a), y)


def rank(a, tol: float = DEFAULT_TOL) -> int:
    """Numerical rank by Gaussian elimination with complete pivoting.

    Counts pivots whose magnitude exceeds ``tol`` times the largest pivot
    (the first one, under complete pivoting).
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    work = as_matrix(a).copy()
    if work.ndim != 2:
        raise DimensionError("rank expects a single 2-D matrix")
    m, n = work.shape
    first = None
    r = 0
    for k in range(min(m, n)):
        sub = np.abs(work[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        piv = sub[i, j]
        if first is None:
            first = piv
            if first == 0:
                return 0
        if piv <= tol * first:
            break
        i += k
        j += k
        work[[k, i]] = work[[i, k]]
        work[:, [k, j]] = work[:, [j, k]]
        factors = work[k + 1:, k] / work[k, k]
        work[k + 1:, k:] -= np.outer(factors, work[k, k:])
        r += 1
    return r
