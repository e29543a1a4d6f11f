"""Nullspace estimation from autocalibration (ACS) data."""

import numpy as np
from loguru import logger

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import ComplexGrid
from src.service.slm import estimate_rank, lift_c
from src.service.solvers.models import NullspaceBasis
from src.utils.schemas import NeighborhoodSpec


def estimate_nullspace(
    acs: ComplexGrid,
    n: NeighborhoodSpec,
    rank_hint: int | None = None,
    tau: float = 0.05,
    tol: float = 0.05,
) -> NullspaceBasis:
    """Right singular vectors of the calibration C-matrix beyond its (estimated) rank.

    Args:
        acs (ComplexGrid): Fully sampled calibration k-space, all channels, one shot.
        n (NeighborhoodSpec): Neighborhood of the C-matrix.
        rank_hint (int | None): Rank to use instead of the spectrum heuristic.
        tau (float): Threshold of the rank heuristic.
        tol (float): Allowed ``||C N||_F / ||C||_F`` before the basis is flagged.

    Returns:
        NullspaceBasis: Orthonormal null vectors (possibly none), the rank used and diagnostics.
    """
    if acs.ns != 1:
        msg = f"ACS data must hold a single shot, got ns={acs.ns}"
        raise ValidationFailedError(msg)
    entries = lift_c(acs, n).entries
    cols = entries.shape[1]
    # Wide liftings need the full set of right singular vectors.
    _, sv, vh = np.linalg.svd(entries, full_matrices=entries.shape[0] < cols)
    spectrum = np.zeros(cols)
    spectrum[: sv.size] = sv
    vectors = vh.conj().T

    if rank_hint is None:
        rank = estimate_rank(spectrum, tau=tau).rank
    elif 0 <= rank_hint <= cols:
        rank = rank_hint
    else:
        msg = f"rank_hint={rank_hint} must lie in [0, {cols}]"
        raise ValidationFailedError(msg)

    basis = vectors[:, rank:]
    total = float(np.linalg.norm(entries))
    residual = float(np.linalg.norm(entries @ basis)) / total if basis.shape[1] and total > 0 else 0.0
    flagged = basis.shape[1] == 0 or residual > tol
    if basis.shape[1] == 0:
        logger.warning(f"Nullspace is empty: rank {rank} equals the column count {cols}")
    elif residual > tol:
        logger.warning(f"Nullspace residual {residual:.3g} exceeds tolerance {tol:.3g}")
    logger.info(f"Nullspace: rank {rank} of {cols} columns, nullity {basis.shape[1]}")
    return NullspaceBasis(basis, source_rank=rank, residual_ratio=residual, flagged=flagged)
