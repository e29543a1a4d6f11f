"""Tests for singular-value penalties and rank estimation."""
# ruff: noqa: S101, PLR2004

import numpy as np
import pytest

from src.handlers.exceptions import NumericalFailureError, ValidationFailedError
from src.service.slm import (
    estimate_rank,
    evaluate,
    nuclear_norm,
    rank_r_approx,
    rank_residual,
    singular_value_threshold,
)
from src.utils.schemas import Regularizer

DIAG = np.diag([3.0, 2.0, 1.0])


class TestPenalties:
    """Tests for the nuclear norm and the rank residual."""

    def test_nuclear_norm(self) -> None:
        """Sum of singular values."""
        assert nuclear_norm(DIAG) == pytest.approx(6.0)

    def test_rank_residual(self) -> None:
        """Energy beyond the first r singular values."""
        assert rank_residual(DIAG, 1) == pytest.approx(5.0)
        assert rank_residual(DIAG, 0) == pytest.approx(14.0)

    def test_rank_out_of_range_raises(self) -> None:
        """The rank must stay below the smaller dimension."""
        with pytest.raises(ValidationFailedError, match="0 <= r < 3"):
            rank_residual(DIAG, 3)

    def test_evaluate_dispatches_on_kind(self) -> None:
        """The configured penalty is evaluated."""
        assert evaluate(Regularizer(kind="nuclear"), DIAG) == pytest.approx(6.0)
        assert evaluate(Regularizer(kind="rank_residual", r=2), DIAG) == pytest.approx(1.0)

    def test_rank_r_approx_keeps_leading_triplets(self) -> None:
        """Truncation keeps the largest singular value only."""
        np.testing.assert_allclose(rank_r_approx(DIAG, 1), np.diag([3.0, 0.0, 0.0]), atol=1e-12)

    def test_threshold_shrinks_and_clips(self) -> None:
        """Soft thresholding subtracts tau and clips at zero."""
        np.testing.assert_allclose(singular_value_threshold(DIAG, 1.5), np.diag([1.5, 0.5, 0.0]), atol=1e-12)

    def test_complex_input_stays_complex(self, rng: np.random.Generator) -> None:
        """The best approximation of a complex matrix is complex."""
        m = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
        approx = rank_r_approx(m, 2)
        assert np.iscomplexobj(approx)
        assert np.linalg.matrix_rank(approx) == 2


class TestEstimateRank:
    """Tests for the spectrum-gap rank heuristic."""

    def test_picks_largest_gap_below_tau(self) -> None:
        """The gap after the third value is the largest eligible one."""
        estimate = estimate_rank(np.array([10, 9, 8, 0.1, 0.09, 0.08]), tau=0.05)
        assert estimate.rank == 3
        assert not estimate.flat

    def test_exact_zeros(self) -> None:
        """Trailing exact zeros mark the rank."""
        assert estimate_rank(np.array([5.0, 4.0, 0.0, 0.0])).rank == 2

    def test_flat_spectrum_falls_back_to_full_rank(self) -> None:
        """Without a gap the full rank is returned and flagged."""
        estimate = estimate_rank(np.ones(3))
        assert estimate.rank == 3
        assert estimate.flat

    def test_zero_spectrum_raises(self) -> None:
        """An all-zero spectrum has no rank to estimate."""
        with pytest.raises(NumericalFailureError):
            estimate_rank(np.zeros(4))

    def test_increasing_spectrum_raises(self) -> None:
        """Spectra must be sorted in descending order."""
        with pytest.raises(ValidationFailedError, match="nonincreasing"):
            estimate_rank(np.array([1.0, 2.0]))


# =============================================================================
# Penalty Property Tests
# =============================================================================


def _unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
    return q


class TestPenaltyProperties:
    """Invariance, optimality and convexity of the two penalties."""

    def test_penalties_are_unitarily_invariant(self, rng: np.random.Generator) -> None:
        """``J(U M V) = J(M)`` for unitary ``U`` and ``V``."""
        m = rng.standard_normal((7, 5)) + 1j * rng.standard_normal((7, 5))
        rotated = _unitary(rng, 7) @ m @ _unitary(rng, 5)
        assert nuclear_norm(rotated) == pytest.approx(nuclear_norm(m), rel=1e-12)
        for r in range(5):
            assert rank_residual(rotated, r) == pytest.approx(rank_residual(m, r), rel=1e-10, abs=1e-12)

    def test_truncation_is_the_closest_rank_r_matrix(self, rng: np.random.Generator) -> None:
        """No random rank-2 matrix beats the truncated SVD, whose error is the rank residual."""
        m = rng.standard_normal((8, 6)) + 1j * rng.standard_normal((8, 6))
        best = np.linalg.norm(m - rank_r_approx(m, 2)) ** 2
        assert best == pytest.approx(rank_residual(m, 2), rel=1e-10)
        for _ in range(20):
            left = rng.standard_normal((8, 2)) + 1j * rng.standard_normal((8, 2))
            right = rng.standard_normal((2, 6)) + 1j * rng.standard_normal((2, 6))
            candidate = left @ right
            scale = np.vdot(candidate, m) / np.vdot(candidate, candidate)
            assert np.linalg.norm(m - scale * candidate) ** 2 >= best - 1e-9

    def test_nuclear_norm_is_convex(self, rng: np.random.Generator) -> None:
        """The midpoint never costs more than the average of the endpoints."""
        for _ in range(10):
            a = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
            b = rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4))
            assert nuclear_norm((a + b) / 2) <= (nuclear_norm(a) + nuclear_norm(b)) / 2 + 1e-12

    def test_rank_residual_is_not_convex(self) -> None:
        """Two rank-one matrices average to a rank-two matrix with positive residual."""
        a = np.diag([1.0, 0.0])
        b = np.diag([0.0, 1.0])
        assert rank_residual(a, 1) == pytest.approx(0.0, abs=1e-15)
        assert rank_residual(b, 1) == pytest.approx(0.0, abs=1e-15)
        assert rank_residual((a + b) / 2, 1) == pytest.approx(0.25)
