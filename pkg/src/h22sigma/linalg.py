"""Dense SPD factorizations, log-determinants and selected inverse entries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular


class NotPositiveDefinite(np.linalg.LinAlgError):
    """Raised when a Cholesky pivot is not strictly positive (or not finite)."""


@dataclass(frozen=True)
class SpdFactor:
    """Lower Cholesky factor ``L`` with ``L @ L.T == M``."""

    lower: np.ndarray

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.lower @ self.lower.T


def factor(m) -> SpdFactor:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    if m.shape[0] == 0:
        return SpdFactor(np.zeros((0, 0)))
    try:
        low = np.linalg.cholesky(m)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if not np.all(np.diag(low) > 0):
        raise NotPositiveDefinite("zero pivot")
    return SpdFactor(low)


def logdet(f: SpdFactor) -> float:
    return 2.0 * float(np.sum(np.log(np.diag(f.lower))))


def inverse_column(f: SpdFactor, y: int) -> np.ndarray:
    """Column ``y`` of ``M^{-1}`` via forward and back substitution."""
    if not 0 <= y < f.n:
        raise IndexError(f"index {y} out of range for size {f.n}")
    e = np.zeros(f.n)
    e[y] = 1.0
    z = solve_triangular(f.lower, e, lower=True)
    return solve_triangular(f.lower.T, z, lower=False)


def inverse_entry(f: SpdFactor, x: int, y: int) -> float:
    if not 0 <= x < f.n:
        raise IndexError(f"index {x} out of range for size {f.n}")
    return float(inverse_column(f, y)[x])


def inverse(f: SpdFactor) -> np.ndarray:
    linv = solve_triangular(f.lower, np.eye(f.n), lower=True)
    return linv.T @ linv


def det_minor(m, deleted) -> float:
    """Determinant of ``m`` with the rows and columns in ``deleted`` removed.

    The empty matrix has determinant 1.
    """
    m = np.asarray(m, dtype=float)
    keep = np.setdiff1d(np.arange(m.shape[0]), np.fromiter(deleted, dtype=np.int64))
    if keep.size == 0:
        return 1.0
    return float(np.linalg.det(m[np.ix_(keep, keep)]))
