"""
C2ED2 - Dense Linear Algebra
Least squares by orthogonal decomposition, annihilator projections,
and numerical rank diagnostics. Normal equations are never formed.
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np
from scipy import linalg

from ..config import get_settings
from ..errors import NumericalError


class RankReport(NamedTuple):
    """Effective rank and condition estimate of a matrix"""
    rank: int
    condition: float


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    return a


def _relative_tol(shape, tol: Optional[float]) -> float:
    if tol is not None:
        return tol
    override = get_settings().rank_tol
    eps = np.finfo(float).eps
    return (override or eps) * max(shape)


def rank_report(A, tol: Optional[float] = None) -> RankReport:
    """
    Effective rank: singular values above tol * largest singular value.
    Default tol is machine epsilon * max(p, q).
    """
    A = _as_matrix(A)
    if A.size == 0:
        raise ValueError("rank_report needs a nonempty matrix")

    s = linalg.svdvals(A)
    if s[0] == 0.0:
        return RankReport(0, float("inf"))

    cutoff = _relative_tol(A.shape, tol) * s[0]
    rank = int(np.sum(s > cutoff))
    return RankReport(rank, float(s[0] / s[rank - 1]))


def least_squares(design, response, tol: Optional[float] = None) -> np.ndarray:
    """
    Minimise ||design @ B - response||_F via thin QR.
    Returns a q x c coefficient matrix (q-vector for a 1-d response).
    """
    design = _as_matrix(design)
    vector = np.ndim(response) == 1
    response = _as_matrix(response)

    p, q = design.shape
    if response.shape[0] != p:
        raise ValueError(f"design has {p} rows, response has {response.shape[0]}")
    if q == 0 or response.shape[1] == 0:
        coef = np.zeros((q, response.shape[1]))
        return coef[:, 0] if vector else coef
    if p < q:
        raise NumericalError(
            f"underdetermined least squares: {p} rows < {q} columns",
            effective_rank=min(p, q),
        )

    report = rank_report(design, tol)
    if report.rank < q:
        raise NumericalError(
            f"rank-deficient design: effective rank {report.rank} < {q} columns "
            f"(condition {report.condition:.3g})",
            effective_rank=report.rank,
            condition=report.condition,
        )

    Q, R = linalg.qr(design, mode="economic")
    coef = linalg.solve_triangular(R, Q.T @ response)
    return coef[:, 0] if vector else coef


@dataclass(frozen=True)
class Annihilator:
    """
    M_A = I - A (A'A)^-1 A', held as an orthonormal basis of col(A).
    Applying it never forms the p x p matrix.
    """
    source: np.ndarray
    rank: int
    condition: float
    basis: np.ndarray

    @classmethod
    def from_matrix(cls, A, tol: Optional[float] = None) -> "Annihilator":
        """Factor A once for repeated projections"""
        A = _as_matrix(A)
        p, q = A.shape
        if q == 0:
            return cls(A, 0, 1.0, np.zeros((p, 0)))

        report = rank_report(A, tol)
        if report.rank < min(p, q):
            raise NumericalError(
                f"annihilator source is rank deficient: rank {report.rank} of {q} columns",
                effective_rank=report.rank,
                condition=report.condition,
            )

        U, _, _ = linalg.svd(A, full_matrices=False)
        return cls(A, report.rank, report.condition, U[:, : report.rank])

    @property
    def n_rows(self) -> int:
        return self.source.shape[0]

    def apply(self, B) -> np.ndarray:
        """Return M_A B"""
        vector = np.ndim(B) == 1
        B = _as_matrix(B)
        if B.shape[0] != self.n_rows:
            raise ValueError(f"annihilator has {self.n_rows} rows, operand has {B.shape[0]}")

        if self.rank == self.n_rows:
            out = np.zeros_like(B)
        else:
            out = B - self.basis @ (self.basis.T @ B)
        return out[:, 0] if vector else out

    def matrix(self) -> np.ndarray:
        """Explicit p x p projector, for diagnostics and tests"""
        return self.apply(np.eye(self.n_rows))


def annihilate(A, B, tol: Optional[float] = None) -> np.ndarray:
    """M_A B: residual of B after projecting on the columns of A"""
    return Annihilator.from_matrix(A, tol).apply(B)


def collinear_columns(A, tol: Optional[float] = None) -> List[int]:
    """Indices of columns a pivoted QR pushes past the effective rank"""
    A = _as_matrix(A)
    if A.shape[1] == 0:
        return []

    rank = rank_report(A, tol).rank
    _, _, piv = linalg.qr(A, mode="economic", pivoting=True)
    return sorted(int(j) for j in piv[rank:])
