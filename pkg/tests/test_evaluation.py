"""Tests for scoring, coil combination and experiment reports."""
# ruff: noqa: S101, PLR2004

from unittest.mock import Mock

import numpy as np
import pytest

from src.handlers.exceptions import NumericalFailureError, ValidationFailedError
from src.service.evaluation import (
    DEFAULT_RANKING,
    REPORT_COLUMNS,
    ExperimentReport,
    MethodSpec,
    calibration_rank,
    check_ordering,
    coil_combine_pca,
    default_methods,
    ghost_ratio,
    ghost_region,
    run_experiment_matrix,
    score_pair,
    with_rank,
    zero_fill_baseline,
)
from src.service.kspace import ComplexGrid
from src.service.simulation import simulate_epi
from src.service.solvers import Reconstructor
from src.utils.schemas import ExperimentRow, ReconConfig, Regularizer, SimScenario
from tests.conftest import random_complex


def _band_support(ny: int = 8) -> np.ndarray:
    support = np.zeros((8, ny), dtype=bool)
    support[:, :2] = True
    return support


# =============================================================================
# Image Metric Tests
# =============================================================================


class TestCoilCombination:
    """Tests for the PCA coil combination."""

    def test_rank_one_channels_combine_to_full_energy(self, rng: np.random.Generator) -> None:
        """Channels ``s_c * f`` combine to ``||s|| * |f|``."""
        f = random_complex(rng, (8, 8))
        images = ComplexGrid(np.stack([f, 2j * f], axis=-1)[..., np.newaxis], "image")
        combined = coil_combine_pca(images)
        assert combined.shape == (8, 8, 1, 1)
        np.testing.assert_allclose(np.abs(combined.data[:, :, 0, 0]), np.sqrt(5) * np.abs(f), rtol=1e-10)

    def test_invariant_to_unitary_channel_mixing(self, rng: np.random.Generator) -> None:
        """Mixing the channels by a unitary matrix leaves the combined magnitude unchanged."""
        images = ComplexGrid(random_complex(rng, (8, 8, 3, 2)), "image")
        unitary, _ = np.linalg.qr(random_complex(rng, (3, 3)))
        mixed = images.with_data(np.einsum("xycs,cd->xyds", images.data, unitary))
        np.testing.assert_allclose(
            np.abs(coil_combine_pca(mixed).data),
            np.abs(coil_combine_pca(images).data),
            rtol=1e-9,
            atol=1e-12,
        )

    def test_single_channel_raises(self) -> None:
        """PCA needs at least two channels."""
        with pytest.raises(ValidationFailedError, match="at least two channels"):
            coil_combine_pca(ComplexGrid(np.ones((4, 4, 1, 1)), "image"))


class TestGhostRatio:
    """Tests for the half-FOV ghost metric."""

    def test_ghost_region_is_shifted_support(self) -> None:
        """The region is the support moved by ny/2, minus the support."""
        region = ghost_region(_band_support())
        assert region[:, 4:6].all()
        assert region.sum() == 16

    def test_clean_image_scores_zero(self) -> None:
        """No energy outside the object means no ghost."""
        support = _band_support()
        assert ghost_ratio(support.astype(complex), support) == 0.0

    def test_ghost_energy_ratio(self) -> None:
        """Half-amplitude ghosts carry a quarter of the object energy."""
        support = _band_support()
        image = support.astype(complex)
        image[:, 4:6] = 0.5
        assert ghost_ratio(image, support) == pytest.approx(0.25)

    def test_support_covering_its_shift_raises(self) -> None:
        """A full-FOV object leaves no room for ghosts."""
        with pytest.raises(ValidationFailedError, match="Ghost region is empty"):
            ghost_ratio(np.ones((4, 4)), np.ones((4, 4), dtype=bool))

    def test_dark_support_raises(self) -> None:
        """The object must carry energy."""
        with pytest.raises(NumericalFailureError, match="no energy"):
            ghost_ratio(np.zeros((8, 8)), _band_support())


class TestScoring:
    """Tests for baselines and pair scores."""

    def test_zero_fill_baseline_restores_unphased_kspace(self) -> None:
        """Without a phase error interleaving the polarities is exact."""
        acq = simulate_epi(SimScenario(nx=32, ny=32, nc=2, acs_lines=8))
        baseline = zero_fill_baseline(acq.d_plus, acq.d_minus)
        np.testing.assert_allclose(baseline.data, acq.k_plus_ref.data)

    def test_references_score_zero(self, small_scenario: SimScenario) -> None:
        """The noiseless references are a perfect reconstruction."""
        acq = simulate_epi(small_scenario)
        score = score_pair(acq.k_plus_ref, acq.k_minus_ref, acq)
        assert score.nrmse == 0.0
        assert score.nrmse_combined == pytest.approx(0.0, abs=1e-12)
        assert score.ghost_ratio == pytest.approx(0.0, abs=1e-12)

    def test_zero_fill_shows_ghosts(self, small_scenario: SimScenario) -> None:
        """A phase difference between polarities puts energy into the ghost region."""
        acq = simulate_epi(small_scenario)
        baseline = zero_fill_baseline(acq.d_plus, acq.d_minus)
        score = score_pair(baseline, baseline, acq)
        assert score.nrmse > 0.1
        assert score.ghost_ratio > 1e-3


# =============================================================================
# Method and Report Tests
# =============================================================================


class TestMethods:
    """Tests for method specs and rank selection."""

    def test_default_methods(self, reconstructor: Reconstructor) -> None:
        """Every known name maps to a spec; AC-LORAKS uses the S matrix."""
        specs = default_methods(reconstructor, ["ac_loraks", "sense", "zero_fill"])
        assert [spec.name for spec in specs] == ["ac_loraks", "sense", "zero_fill"]
        assert specs[0].config is not None
        assert specs[0].config.matrix_kind == "S"
        assert specs[2].config is None

    def test_unknown_method_raises(self, reconstructor: Reconstructor) -> None:
        """Method names are checked."""
        with pytest.raises(ValidationFailedError, match="Unknown method"):
            default_methods(reconstructor, ["grappa"])

    def test_with_rank(self) -> None:
        """Only rank-residual penalties take a rank."""
        residual = ReconConfig(regularizer=Regularizer(kind="rank_residual", r=3))
        nuclear = ReconConfig(regularizer=Regularizer(kind="nuclear"))
        assert with_rank(residual, 12).regularizer.r == 12
        assert with_rank(nuclear, 12) is nuclear

    def test_calibration_rank_is_doubled(self, small_scenario: SimScenario, reconstructor: Reconstructor) -> None:
        """The joint lifting gets twice the calibration rank."""
        acq = simulate_epi(small_scenario)
        rank = calibration_rank(acq.acs, reconstructor.default_config())
        assert rank > 0
        assert rank % 2 == 0


class TestExperimentReport:
    """Tests for report formatting and the ordering check."""

    def test_csv_columns(self) -> None:
        """Fixed column order, 6 significant digits, optional wall time."""
        report = ExperimentReport([ExperimentRow(scenario="s", method="m", acceleration=2, nrmse=0.1234567)])
        lines = report.to_csv().splitlines()
        assert lines[0] == ",".join(REPORT_COLUMNS)
        assert lines[1].startswith("s,m,2,0.123457,nan,nan,0,ok")
        timed = report.to_csv(include_wall_time=True).splitlines()
        assert timed[0].endswith(",wall_time")

    def test_ordering_without_flags(self) -> None:
        """A clear margin raises no flag."""
        report = ExperimentReport(
            [
                ExperimentRow(scenario="s", method="ac_loraks", acceleration=1, nrmse=0.1),
                ExperimentRow(scenario="s", method="sense", acceleration=1, nrmse=0.2),
            ],
        )
        assert check_ordering(report, ("ac_loraks", "sense"), margin=0.05) == []

    def test_ordering_flags_small_margin(self) -> None:
        """A better-ranked method must win by the margin."""
        report = ExperimentReport(
            [
                ExperimentRow(scenario="s", method="ac_loraks", acceleration=1, nrmse=0.1),
                ExperimentRow(scenario="s", method="sense", acceleration=1, nrmse=0.102),
                ExperimentRow(scenario="s", method="zero_fill", acceleration=1, status="error:ValueError"),
            ],
        )
        flags = check_ordering(report, ("ac_loraks", "sense", "zero_fill"), margin=0.05)
        assert len(flags) == 1
        assert (flags[0].better, flags[0].worse) == ("ac_loraks", "sense")
        assert flags[0].margin == pytest.approx(0.002 / 0.102)


class TestRunExperimentMatrix:
    """Tests for run_experiment_matrix."""

    def test_no_methods_gives_empty_report(self, small_scenario: SimScenario, reconstructor: Reconstructor) -> None:
        """Nothing to run, nothing reported."""
        assert run_experiment_matrix([small_scenario], [], [1], reconstructor).rows == []

    def test_zero_fill_rows(self, small_scenario: SimScenario, reconstructor: Reconstructor) -> None:
        """Every (scenario, R) gets a scored row and the sink sees each reconstruction."""
        sink = Mock()
        report = run_experiment_matrix([small_scenario], [MethodSpec("zero_fill")], [2, 1], reconstructor, sink)
        assert [row.acceleration for row in report.rows] == [1, 2]
        assert all(row.status == "ok" and row.iterations == 0 for row in report.rows)
        assert all(np.isfinite(row.nrmse) for row in report.rows)
        assert sink.call_count == 2
        assert sink.call_args.args[1] == "zero_fill"

    def test_solver_failure_becomes_error_row(self, small_scenario: SimScenario) -> None:
        """A failing method is reported, not raised."""
        failing = Mock()
        failing.reconstruct.side_effect = NumericalFailureError("diverged")
        method = MethodSpec("sense", ReconConfig(mode="sense"), auto_rank=False)
        report = run_experiment_matrix([small_scenario], [method], [1], failing)
        assert report.rows[0].status == "error:NumericalFailureError"
        assert np.isnan(report.rows[0].nrmse)

    def test_full_method_matrix_feeds_the_ordering_check(
        self,
        small_scenario: SimScenario,
        reconstructor: Reconstructor,
    ) -> None:
        """Every ranked method gets a row at R = 1, 2, 3 and the ordering check only names ranked pairs."""
        report = run_experiment_matrix([small_scenario], default_methods(reconstructor), [1, 2, 3], reconstructor)
        cells = {(row.method, row.acceleration) for row in report.rows}
        assert cells == {(name, r) for name in DEFAULT_RANKING for r in (1, 2, 3)}
        assert all(row.status == "ok" for row in report.rows if row.method == "zero_fill")
        adjacent = set(zip(DEFAULT_RANKING, DEFAULT_RANKING[1:], strict=False))
        assert all((flag.better, flag.worse) in adjacent for flag in check_ordering(report))
