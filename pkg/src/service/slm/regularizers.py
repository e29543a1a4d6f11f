"""Singular-value penalties and the truncated-SVD machinery behind the solvers."""

from dataclasses import dataclass
from typing import TypeVar

import numpy as np
from loguru import logger

from src.handlers.exceptions import NumericalFailureError, ValidationFailedError
from src.service.slm.matrices import LiftedMatrix
from src.utils.schemas import Regularizer

MatrixLike = TypeVar("MatrixLike", LiftedMatrix, np.ndarray)


def _entries(m: LiftedMatrix | np.ndarray) -> np.ndarray:
    return m.entries if isinstance(m, LiftedMatrix) else np.asarray(m)


def _rewrap(template: MatrixLike, entries: np.ndarray) -> MatrixLike:
    if isinstance(template, LiftedMatrix):
        return LiftedMatrix(entries, template.provenance, template.block_layout, template.block_width)
    return entries


def _check_rank(entries: np.ndarray, r: int) -> None:
    limit = min(entries.shape)
    if not 0 <= r < limit:
        msg = f"Rank parameter r={r} must satisfy 0 <= r < {limit}"
        raise ValidationFailedError(msg)


def nuclear_norm(m: LiftedMatrix | np.ndarray) -> float:
    """Sum of singular values."""
    return float(np.linalg.svd(_entries(m), compute_uv=False).sum())


def rank_residual(m: LiftedMatrix | np.ndarray, r: int) -> float:
    """Squared Frobenius distance to the best rank-``r`` approximation, ``sum_{i>r} sigma_i^2``."""
    entries = _entries(m)
    _check_rank(entries, r)
    sv = np.linalg.svd(entries, compute_uv=False)
    return float(np.sum(sv[r:] ** 2))


def rank_r_approx(m: MatrixLike, r: int) -> MatrixLike:
    """Best rank-``r`` approximation by truncating the SVD.

    Ties between ``sigma_r`` and ``sigma_{r+1}`` keep the first ``r`` triplets in the order
    the SVD returns them, which is still an Eckart-Young minimizer.
    """
    entries = _entries(m)
    _check_rank(entries, r)
    u, s, vh = np.linalg.svd(entries, full_matrices=False)
    approx = (u[:, :r] * s[:r]) @ vh[:r]
    if np.isrealobj(entries):
        approx = approx.real
    return _rewrap(m, approx)


def singular_value_threshold(m: MatrixLike, tau: float) -> MatrixLike:
    """Soft-threshold the singular values by ``tau`` (proximal map of ``tau * ||.||_*``)."""
    entries = _entries(m)
    u, s, vh = np.linalg.svd(entries, full_matrices=False)
    shrunk = np.maximum(s - tau, 0.0)
    out = (u * shrunk) @ vh
    if np.isrealobj(entries):
        out = out.real
    return _rewrap(m, out)


def evaluate(reg: Regularizer, m: LiftedMatrix | np.ndarray) -> float:
    """Evaluate the configured penalty ``J`` on a lifted matrix."""
    if reg.kind == "nuclear":
        return nuclear_norm(m)
    return rank_residual(m, reg.r)


@dataclass(frozen=True)
class RankEstimate:
    """Estimated rank and whether the spectrum had no usable gap."""

    rank: int
    flat: bool = False


def estimate_rank(singular_values: np.ndarray, tau: float = 0.05, window: int | None = None) -> RankEstimate:
    """Pick the rank where the singular-value plot flattens out.

    The rank is the index ``r`` (1-based) maximizing ``sigma_r / sigma_{r+1}`` among indices
    with ``sigma_{r+1} <= tau * sigma_1``, searched over the first ``window`` ratios.

    Args:
        singular_values (np.ndarray): Nonincreasing, nonnegative spectrum.
        tau (float): Relative level the next singular value must fall below.
        window (int | None): Number of leading ratios searched (all when ``None``).

    Returns:
        RankEstimate: The rank (at least 1) and a flag set when no gap exists.
    """
    sv = np.asarray(singular_values, dtype=float)
    if sv.ndim != 1 or sv.size == 0:
        msg = "Rank estimation needs a nonempty 1-D spectrum"
        raise ValidationFailedError(msg)
    if np.any(sv < 0) or np.any(np.diff(sv) > 0):
        msg = "Rank estimation needs a nonincreasing, nonnegative spectrum"
        raise ValidationFailedError(msg)
    if sv[0] == 0:
        msg = "Cannot estimate the rank of an all-zero spectrum"
        raise NumericalFailureError(msg)
    if sv.size == 1:
        return RankEstimate(rank=1)

    head, tail = sv[:-1], sv[1:]
    limit = head.size if window is None else max(1, min(window, head.size))
    # Values at rounding level count as zero.
    floor = np.finfo(float).eps * sv.size * sv[0]
    ratios = np.maximum(head, floor) / np.maximum(tail, floor)
    eligible = tail <= tau * sv[0]
    eligible[limit:] = False
    if not np.any(eligible):
        logger.warning(f"No singular-value gap below tau={tau}; falling back to full rank {sv.size}")
        return RankEstimate(rank=int(sv.size), flat=True)

    candidates = np.where(eligible, ratios, -np.inf)
    return RankEstimate(rank=int(np.argmax(candidates)) + 1)
