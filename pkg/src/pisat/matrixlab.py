"""Dense small-matrix utilities for M-matrix analysis.

Z-pattern and M-matrix classification, a diagonal similarity that makes
an M-matrix strictly column-dominant, and a diagonal scaling q that
makes diag(q) M + M^T diag(q) symmetric positive definite.  All
classification is deterministic and eigenvalue-free: it rests on LU
solves against the all-ones vector, which for Z-matrices is an exact
characterization (semipositivity).
"""

from __future__ import annotations

import numpy as np

from .errors import CertificateFailure, DimensionMismatch, NotMMatrix, NotSymmetric

# Margin used when asserting strict column dominance, measured relative
# to the (positive) diagonal entry of each column so it is scale-free.
DOMINANCE_SLACK = 1e-12


def as_square_matrix(m) -> np.ndarray:
    """Validate and return ``m`` as a finite square float array."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise DimensionMismatch(f"expected a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite")
    return arr


def is_z_pattern(m) -> bool:
    """True iff every off-diagonal entry of ``m`` is <= 0."""
    arr = as_square_matrix(m)
    off = arr.copy()
    np.fill_diagonal(off, 0.0)
    return bool(np.all(off <= 0.0))


def is_m_matrix(m) -> bool:
    """True iff ``m`` is a Z-matrix with every eigenvalue in the open
    right half plane.

    Decided without eigenvalues: an invertible Z-matrix is an M-matrix
    exactly when some d > 0 satisfies m d > 0, so it suffices to solve
    m d = 1 and check the sign of d.  A singular or numerically
    unreliable solve counts as "not an M-matrix".
    """
    arr = as_square_matrix(m)
    if not is_z_pattern(arr):
        return False
    ones = np.ones(arr.shape[0])
    try:
        d = np.linalg.solve(arr, ones)
    except np.linalg.LinAlgError:
        return False
    if not np.all(np.isfinite(d)):
        return False
    # reject garbage from a nearly singular solve
    scale = 1.0 + np.max(np.abs(arr)) * np.max(np.abs(d))
    if np.max(np.abs(arr @ d - ones)) > 1e-8 * scale:
        return False
    return bool(np.all(d > 0.0))


def is_strictly_column_dominant(m, slack: float = DOMINANCE_SLACK) -> bool:
    """Strict diagonal dominance of every column, positive diagonal
    required; the margin is compared against ``slack`` after dividing by
    the diagonal entry."""
    arr = as_square_matrix(m)
    diag = np.diag(arr)
    if np.any(diag <= 0.0):
        return False
    off = np.sum(np.abs(arr), axis=0) - np.abs(diag)
    return bool(np.all((diag - off) / diag > slack))


def column_dominance_scaling(m) -> np.ndarray:
    """Positive d such that diag(d) m diag(1/d) is strictly column-dominant.

    Solves m^T d = 1.  For an M-matrix this d is positive and gives each
    column j the weighted margin d_j m_jj - sum_{i != j} d_i |m_ij| = 1.

    Raises NotMMatrix if ``m`` fails :func:`is_m_matrix`.
    """
    arr = as_square_matrix(m)
    if not is_m_matrix(arr):
        raise NotMMatrix("column dominance scaling requires an M-matrix")
    d = np.linalg.solve(arr.T, np.ones(arr.shape[0]))
    scaled = d[:, None] * arr / d[None, :]
    if not is_strictly_column_dominant(scaled):
        raise CertificateFailure("constructed scaling failed the dominance check")
    return d


def diagonal_lyapunov_scaling(m) -> np.ndarray:
    """Positive q with diag(q) m + m^T diag(q) symmetric positive definite.

    Uses q_i = v_i / w_i where m w = 1 and m^T v = 1.  The result is
    verified by a Cholesky factorization; an uncertified scaling is never
    returned (CertificateFailure instead).
    """
    arr = as_square_matrix(m)
    if not is_m_matrix(arr):
        raise NotMMatrix("diagonal Lyapunov scaling requires an M-matrix")
    ones = np.ones(arr.shape[0])
    w = np.linalg.solve(arr, ones)
    v = np.linalg.solve(arr.T, ones)
    q = v / w
    sym = q[:, None] * arr + arr.T * q[None, :]
    if not is_spd(sym):
        raise CertificateFailure("diag(q) m + m^T diag(q) is not positive definite")
    return q


def is_spd(m, sym_tol: float = 1e-12) -> bool:
    """True iff ``m`` is symmetric positive definite.

    Symmetry is required up to a relative tolerance (NotSymmetric
    otherwise); definiteness is decided by attempting a Cholesky
    factorization, i.e. all pivots must be positive.
    """
    arr = as_square_matrix(m)
    scale = max(float(np.max(np.abs(arr))), 1.0)
    if np.max(np.abs(arr - arr.T)) > sym_tol * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")
    try:
        np.linalg.cholesky(0.5 * (arr + arr.T))
    except np.linalg.LinAlgError:
        return False
    return True
