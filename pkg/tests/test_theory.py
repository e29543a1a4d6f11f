"""Tests for feasible pairs, the sign-flip symmetry and landscape scans."""
# ruff: noqa: S101, PLR2004

import numpy as np
import pytest

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import SamplingPattern, apply_sampling
from src.service.slm import estimate_rank, lift_pair, singular_values
from src.service.theory import (
    FeasiblePair,
    check_corollaries,
    format_theorem_report,
    landscape_scan,
    make_feasible_pair,
    make_flipped_pair,
    random_feasible_pair,
    run_theorem_suite,
    spectrum_discrepancy,
    verify_sign_flip_symmetry,
    zero_filled_pair,
)
from src.utils.schemas import NeighborhoodSpec, Regularizer
from tests.conftest import exponential_sum_grid

NUCLEAR = Regularizer(kind="nuclear")

# =============================================================================
# Feasible Pair Tests
# =============================================================================


class TestFeasiblePairs:
    """Tests for pair construction and flipping."""

    def test_flipped_pair_is_feasible(self, random_pair: FeasiblePair) -> None:
        """Flipping keeps every measured sample."""
        flipped = make_flipped_pair(random_pair)
        for original, after in zip(random_pair.measured(), flipped.measured(), strict=True):
            np.testing.assert_array_equal(original.samples, after.samples)

    def test_flipped_pair_differs_off_the_data(self, random_pair: FeasiblePair) -> None:
        """Unmeasured lines change sign."""
        flipped = make_flipped_pair(random_pair)
        np.testing.assert_array_equal(flipped.k_plus.data[:, 1::2], -random_pair.k_plus.data[:, 1::2])
        np.testing.assert_array_equal(flipped.k_minus.data[:, ::2], -random_pair.k_minus.data[:, ::2])

    def test_zero_filled_pair_is_its_own_flip(self, random_pair: FeasiblePair) -> None:
        """With zeros off the data the flip changes nothing."""
        pair = zero_filled_pair(*random_pair.measured())
        assert pair.is_zero_filled()
        flipped = make_flipped_pair(pair)
        np.testing.assert_array_equal(flipped.k_plus.data, pair.k_plus.data)
        np.testing.assert_array_equal(flipped.k_minus.data, pair.k_minus.data)

    def test_random_pair_is_not_zero_filled(self, random_pair: FeasiblePair) -> None:
        """Random fill values are nonzero."""
        assert not random_pair.is_zero_filled()


# =============================================================================
# Sign-Flip Symmetry Tests
# =============================================================================


class TestSignFlipSymmetry:
    """Tests for the spectrum invariance under the sign flip."""

    @pytest.mark.parametrize("kind", ["C", "S"])
    def test_spectra_match(self, rng: np.random.Generator, neighborhood: NeighborhoodSpec, kind: str) -> None:
        """Random pairs and their flips share singular values to 1e-9."""
        for _ in range(5):
            pair = random_feasible_pair(rng, 16, 16, 2)
            check = verify_sign_flip_symmetry(pair, neighborhood, kind)  # type: ignore[arg-type]
            assert check.passed
            assert check.max_rel_diff <= 1e-9
            assert check.sv_original.shape == check.sv_flipped.shape

    def test_discrepancy_is_relative_to_largest_value(self) -> None:
        """Differences are scaled by the leading singular value."""
        assert spectrum_discrepancy(np.array([10.0, 1.0]), np.array([10.0, 1.5])) == pytest.approx(0.05)
        assert spectrum_discrepancy(np.zeros(2), np.zeros(2)) == 0.0

    def test_suite_reports_every_configuration(self) -> None:
        """One report per (radius, channels, kind), all passing."""
        reports = run_theorem_suite(radii=(1,), channels=(1, 2), kinds=("C", "S"), trials=3, size=8)
        assert len(reports) == 4
        assert all(report.passed for report in reports)
        text = format_theorem_report(reports)
        assert text.splitlines()[0] == "radius channels kind trials worst_rel_diff status"
        assert text.endswith("overall PASS\n")

    def test_full_configuration_grid_passes(self) -> None:
        """Radius 1 to 3, one to four channels, both liftings: spectra agree to 1e-9 on 16x16 grids."""
        reports = run_theorem_suite(trials=2, size=16, seed=11)
        assert {(r.radius, r.channels, r.kind) for r in reports} == {
            (radius, channels, kind) for radius in (1, 2, 3) for channels in (1, 2, 4) for kind in ("C", "S")
        }
        assert all(report.passed for report in reports)
        assert max(report.worst_rel_diff for report in reports) <= 1e-9

    def test_suite_rejects_zero_trials(self) -> None:
        """At least one trial is required."""
        with pytest.raises(ValidationFailedError, match="at least one trial"):
            run_theorem_suite(trials=0)


# =============================================================================
# Landscape Tests
# =============================================================================


class TestLandscape:
    """Tests for the cost along the pair-to-flip slice."""

    def test_endpoints_cost_the_same(self, random_pair: FeasiblePair, neighborhood: NeighborhoodSpec) -> None:
        """Both endpoints have the same penalty."""
        points = landscape_scan(random_pair, make_flipped_pair(random_pair), NUCLEAR, neighborhood, alphas=[0, 1])
        assert points[0][0] == 0.0
        assert points[1][1] == pytest.approx(points[0][1], rel=1e-9)

    def test_rejects_weights_outside_unit_interval(
        self,
        random_pair: FeasiblePair,
        neighborhood: NeighborhoodSpec,
    ) -> None:
        """Mixing weights lie in [0, 1]."""
        with pytest.raises(ValidationFailedError, match=r"\[0, 1\]"):
            landscape_scan(random_pair, random_pair, NUCLEAR, neighborhood, alphas=[1.5])

    def test_rejects_endpoints_for_different_data(
        self,
        rng: np.random.Generator,
        random_pair: FeasiblePair,
        neighborhood: NeighborhoodSpec,
    ) -> None:
        """Both endpoints must fit the same measurements."""
        other = random_feasible_pair(rng, 16, 16, 2)
        with pytest.raises(ValidationFailedError, match="same measured data"):
            landscape_scan(random_pair, other, NUCLEAR, neighborhood)

    def test_nuclear_slice_is_bounded_and_minimal_at_zero_fill(
        self,
        random_pair: FeasiblePair,
        neighborhood: NeighborhoodSpec,
    ) -> None:
        """The convex penalty never exceeds the endpoints and bottoms out at the midpoint."""
        report = check_corollaries(random_pair, NUCLEAR, neighborhood, alphas=np.linspace(0, 1, 11))
        assert report.required
        assert report.slice_bound_holds
        assert report.zero_filled_is_slice_min
        assert report.passed
        assert not report.degenerate
        assert len(report.landscape) == 11
        assert report.landscape[5][1] == pytest.approx(report.zero_filled_cost, rel=1e-9)

    def test_rank_residual_is_reported_not_required(
        self,
        random_pair: FeasiblePair,
        neighborhood: NeighborhoodSpec,
    ) -> None:
        """The non-convex penalty never fails the report."""
        report = check_corollaries(random_pair, Regularizer(kind="rank_residual", r=10), neighborhood, alphas=[0, 1])
        assert not report.required
        assert report.passed

    def test_rank_residual_slice_rises_at_the_zero_filled_pair(self, rng: np.random.Generator) -> None:
        """A ghost-free pair of exact rank r costs nothing; halfway to its flip the cost is far above it."""
        truth = exponential_sum_grid(rng, n_terms=3, nc=2)
        d_plus = apply_sampling(truth, SamplingPattern.epi(16, "positive"))
        d_minus = apply_sampling(truth, SamplingPattern.epi(16, "negative"))
        pair = make_feasible_pair(d_plus, d_minus, truth.data, truth.data)
        n = NeighborhoodSpec(radius=2)
        rank = estimate_rank(singular_values(lift_pair(pair.k_plus, pair.k_minus, n))).rank
        assert rank == 3
        report = check_corollaries(pair, Regularizer(kind="rank_residual", r=rank), n, alphas=[0.0, 0.5, 1.0])
        assert report.zero_filled_cost > 1.5 * report.endpoint_costs[0]
        assert report.zero_filled_cost > 1e-6 * np.linalg.norm(truth.data) ** 2
        assert not report.slice_bound_holds
        assert report.passed
