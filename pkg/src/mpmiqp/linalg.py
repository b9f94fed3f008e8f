"""Dense linear algebra for small/medium matrices.

Matrices are 2-D C-ordered float64 ``numpy`` arrays throughout the package
(row-major entries).  Everything here is a pure function on immutable
inputs; results are freshly allocated, finite, and stored at 64-bit
precision.  Intended scale: dimensions up to a few dozen for the block
routines, a few thousand for materialized quadratic-cost matrices.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

__all__ = [
    "DimensionError",
    "SingularMatrixError",
    "AsymmetricMatrixError",
    "NotPositiveDefiniteError",
    "as_matrix",
    "mat_mul",
    "mat_inverse",
    "sym_inv_sqrt",
    "is_positive_definite",
    "symmetrize",
    "asymmetry",
]

# Pivots smaller than this fraction of the largest entry are treated as zero.
SINGULARITY_RTOL = 1e-12
# Eigenvalues below this fraction of the trace disqualify a matrix as PD.
INV_SQRT_EIG_RTOL = 1e-12
# Allowed relative asymmetry before sym_inv_sqrt refuses the input.
SYMMETRY_RTOL = 1e-9


class DimensionError(ValueError):
    """Operand shapes are incompatible."""


class SingularMatrixError(ArithmeticError):
    """A pivot fell below the singularity tolerance."""


class AsymmetricMatrixError(ValueError):
    """Input was required to be symmetric but is not, beyond tolerance."""


class NotPositiveDefiniteError(ArithmeticError):
    """A symmetric input was required to be positive definite but is not."""


def as_matrix(a) -> np.ndarray:
    """Validate and return ``a`` as a 2-D float64 array with finite entries."""
    m = np.ascontiguousarray(a, dtype=float)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def _require_finite(m: np.ndarray) -> np.ndarray:
    if m.size and not np.all(np.isfinite(m)):
        raise ArithmeticError("operation produced non-finite entries")
    return m


def mat_mul(a, b) -> np.ndarray:
    """Matrix product ``a @ b`` with explicit shape checking."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return _require_finite(a @ b)


def symmetrize(a) -> np.ndarray:
    """Return ``(a + a^T) / 2``."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"cannot symmetrize non-square matrix {a.shape}")
    return 0.5 * (a + a.T)


def asymmetry(a: np.ndarray) -> float:
    """Max-norm of ``a - a^T`` relative to the largest entry of ``a``."""
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - a.T))) / scale


def mat_inverse(a) -> np.ndarray:
    """Inverse via LU factorization with partial pivoting.

    Raises SingularMatrixError when the smallest pivot magnitude falls
    below ``SINGULARITY_RTOL`` times the largest absolute entry of ``a``.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise DimensionError(f"cannot invert non-square matrix {a.shape}")
    if n == 0:
        return np.zeros((0, 0))
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        raise SingularMatrixError("zero matrix is singular")
    with warnings.catch_warnings():
        # exactly singular inputs are reported through the pivot check below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if np.min(pivots) < SINGULARITY_RTOL * scale:
        raise SingularMatrixError(
            f"matrix is singular to tolerance (pivot {np.min(pivots):.3e} "
            f"< {SINGULARITY_RTOL:.0e} * {scale:.3e})"
        )
    inv = scipy.linalg.lu_solve((lu, piv), np.eye(n), check_finite=False)
    return _require_finite(inv)


def sym_inv_sqrt(a) -> np.ndarray:
    """Inverse square root ``a^{-1/2}`` of a symmetric positive definite matrix.

    The input is symmetrized before the eigendecomposition; asymmetry beyond
    ``SYMMETRY_RTOL`` (relative) is rejected.  Eigenvalues not exceeding
    ``INV_SQRT_EIG_RTOL * trace(a)`` are rejected rather than clamped.
    The result R is symmetric and satisfies ``R @ a @ R = I``.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected square matrix, got {a.shape}")
    if a.shape[0] == 0:
        return np.zeros((0, 0))
    if asymmetry(a) > SYMMETRY_RTOL:
        raise AsymmetricMatrixError(
            f"matrix asymmetry {asymmetry(a):.3e} exceeds {SYMMETRY_RTOL:.0e}"
        )
    sym = symmetrize(a)
    eigvals, eigvecs = np.linalg.eigh(sym)
    threshold = INV_SQRT_EIG_RTOL * float(np.trace(sym))
    if eigvals[0] <= threshold:
        raise NotPositiveDefiniteError(
            f"smallest eigenvalue {eigvals[0]:.3e} is not above {threshold:.3e}"
        )
    inv_sqrt = (eigvecs * (1.0 / np.sqrt(eigvals))) @ eigvecs.T
    return _require_finite(symmetrize(inv_sqrt))


def is_positive_definite(a, tol: float = 1e-10) -> bool:
    """Cholesky-based positive definiteness test.

    True iff the factorization succeeds with every pivot (the diagonal
    residual before its square root) above ``tol`` times the largest
    diagonal entry.  Asymmetric input raises AsymmetricMatrixError.
    """
    a = as_matrix(a)
    n, m = a.shape
    if n != m:
        raise DimensionError(f"expected square matrix, got {a.shape}")
    if n == 0:
        return True
    if asymmetry(a) > SYMMETRY_RTOL:
        raise AsymmetricMatrixError(
            f"matrix asymmetry {asymmetry(a):.3e} exceeds {SYMMETRY_RTOL:.0e}"
        )
    max_diag = float(np.max(np.diag(a)))
    if max_diag <= 0.0:
        return False
    threshold = tol * max_diag
    chol = np.zeros((n, n))
    for k in range(n):
        pivot = a[k, k] - chol[k, :k] @ chol[k, :k]
        if not pivot > threshold:
            return False
        chol[k, k] = np.sqrt(pivot)
        if k + 1 < n:
            chol[k + 1 :, k] = (a[k + 1 :, k] - chol[k + 1 :, :k] @ chol[k, :k]) / chol[k, k]
    return True
