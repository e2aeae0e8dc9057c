"""Small dense complex linear algebra: kernels, rank decisions, solves."""
import logging

import numpy as np
import scipy.linalg

from config import settings
from models.errors import IllConditioned, RankDeficiency

logger = logging.getLogger(__name__)

# Relative singular values in [rank_tol * AMBIGUITY, rank_tol) cannot be
# classified as zero or nonzero with confidence.
AMBIGUITY = 1e-3


def column_scales(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=0)
    norms[norms == 0.0] = 1.0
    return norms


def numerical_rank(matrix: np.ndarray, rank_tol: float | None = None, what: str = "matrix") -> int:
    rank_tol = settings.rank_tol if rank_tol is None else rank_tol
    if matrix.size == 0:
        return 0
    sv = scipy.linalg.svd(matrix, compute_uv=False)
    if sv[0] == 0.0:
        return 0
    rel = sv / sv[0]
    ambiguous = (rel < rank_tol) & (rel >= rank_tol * AMBIGUITY)
    if np.any(ambiguous):
        raise RankDeficiency(
            f"{what} is numerically rank-ambiguous: relative singular values {rel[ambiguous]} "
            f"lie just below the threshold {rank_tol:g}"
        )
    return int(np.sum(rel >= rank_tol))


def nullspace(matrix: np.ndarray, rank_tol: float | None = None, what: str = "constraint matrix") -> np.ndarray:
    """Orthonormal kernel basis (as columns) after column equilibration.

    Columns are scaled to unit norm before the SVD; the returned vectors are
    mapped back to the original unknowns and renormalized.
    """
    rows, cols = matrix.shape
    if rows == 0:
        return np.eye(cols, dtype=complex)
    scales = column_scales(matrix)
    scaled = matrix / scales
    rank = numerical_rank(scaled, rank_tol, what)
    _, _, vh = scipy.linalg.svd(scaled)
    kernel = vh[rank:].conj().T / scales[:, None]
    logger.debug(f"{what}: {rows}x{cols}, rank {rank}, kernel dimension {kernel.shape[1]}")
    if kernel.shape[1]:
        kernel, _ = np.linalg.qr(kernel)
    return kernel


def canonical_basis(kernel: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of span(kernel).

    A column-pivoted QR of the transposed kernel puts the span in echelon
    form (ordered by pivot unknown); a second QR orthonormalizes it and
    the phases are fixed by making the triangular diagonal real positive.
    """
    if kernel.shape[1] == 0:
        return kernel
    _, r, piv = scipy.linalg.qr(kernel.T, mode="economic", pivoting=True)
    echelon = np.zeros_like(r)
    echelon[:, piv] = r
    q, rr = np.linalg.qr(echelon.T)
    diag = np.diag(rr)
    mods = np.abs(diag)
    phases = np.where(mods > 0, diag / np.where(mods > 0, mods, 1.0), 1.0)
    return q * phases[None, :]


def condition(matrix: np.ndarray) -> float:
    return float(np.linalg.cond(matrix))


def conditioned_solve(matrix: np.ndarray, rhs: np.ndarray, what: str = "linear system", error=IllConditioned) -> np.ndarray:
    """LU solve with partial pivoting, refusing systems above the condition limit."""
    scales = column_scales(matrix)
    scaled = matrix / scales
    cond = condition(scaled)
    logger.debug(f"{what}: condition number {cond:.3e}")
    if not np.isfinite(cond) or cond > settings.max_condition:
        raise error(f"{what} is ill-conditioned (condition number {cond:.3e} > {settings.max_condition:.1e})")
    solution = scipy.linalg.solve(scaled, rhs)
    if solution.ndim == 1:
        return solution / scales
    return solution / scales[:, None]
