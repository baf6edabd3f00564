"""Symmetric positive-semidefinite matrix helpers.

Both operations go through a symmetric eigendecomposition (LAPACK ``eigh``),
so there is no compiled twin for them; they are cheap at the matrix sizes
used here (one row/column per task).
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, NotPSDError, SymmetryError

SYMMETRY_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-8


def validate_symmetric(a: np.ndarray, tol: float = SYMMETRY_TOL) -> None:
    """Raise unless ``a`` is a square matrix with ``|a - a.T|`` within ``tol``."""
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    gap = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    if gap > tol:
        raise SymmetryError(
            f"matrix is not symmetric: max |a - a.T| = {gap:.3e} exceeds {tol:.1e}"
        )


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric square root of a positive-semidefinite matrix.

    Eigenvalues in the small negative band above ``EIGENVALUE_FLOOR`` are
    treated as rounding noise and clamped to zero; anything below the floor
    raises ``NotPSDError``. The result is exactly symmetric and satisfies
    ``S @ S == a`` up to eigensolver accuracy.
    """
    validate_symmetric(a)
    vals, vecs = np.linalg.eigh(a)
    if vals.size and vals[0] < EIGENVALUE_FLOOR:
        raise NotPSDError(
            f"matrix has eigenvalue {vals[0]:.3e} below floor {EIGENVALUE_FLOOR:.1e}"
        )
    root = np.sqrt(np.clip(vals, 0.0, None))
    s = (vecs * root) @ vecs.T
    return 0.5 * (s + s.T)


def regularized_inverse(a: np.ndarray, eps: float) -> np.ndarray:
    """Inverse of ``a + eps * I`` for symmetric ``a``, via eigendecomposition.

    ``eps`` keeps the shifted matrix invertible when ``a`` is merely
    positive semidefinite; with ``eps = 0`` the caller must pass an
    invertible matrix. The result is exactly symmetric.
    """
    validate_symmetric(a)
    vals, vecs = np.linalg.eigh(a)
    inv = (vecs / (vals + eps)) @ vecs.T
    return 0.5 * (inv + inv.T)
