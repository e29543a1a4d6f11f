"""Scoring reconstructions against simulated ground truth and assembling experiment reports."""

import csv
import io
import time
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from src.handlers.exceptions import NumericalFailureError, ValidationFailedError
from src.service.kspace import ComplexGrid, MeasuredData, ifft2c, nrmse, zero_fill
from src.service.simulation import SimulatedAcquisition, simulate_epi
from src.service.slm import estimate_rank, lift, singular_values
from src.service.solvers import Reconstructor
from src.utils.schemas import ExperimentRow, ReconConfig, Regularizer, SimScenario

REPORT_COLUMNS = (
    "scenario",
    "method",
    "R",
    "nrmse",
    "nrmse_combined",
    "ghost_ratio",
    "iterations",
    "status",
)
ZERO_FILL = "zero_fill"
DEFAULT_RANKING = ("ac_loraks", "sense", "mussels_baseline", ZERO_FILL)

ReconstructionSink = Callable[[SimulatedAcquisition, str, ComplexGrid, ComplexGrid], None]


def coil_combine_pca(images: ComplexGrid) -> ComplexGrid:
    """Project the channels onto their first principal component.

    The covariance is taken over every pixel and shot. The output holds the coefficients of
    that component, so its energy equals the largest covariance eigenvalue.

    Args:
        images (ComplexGrid): Multi-channel images, ``nc >= 2``.

    Returns:
        ComplexGrid: Single-channel images of the same domain.
    """
    if images.nc < 2:  # noqa: PLR2004
        msg = f"PCA coil combination needs at least two channels, got {images.nc}"
        raise ValidationFailedError(msg)
    samples = np.moveaxis(images.data, 2, -1).reshape(-1, images.nc)
    covariance = samples.conj().T @ samples
    if not np.any(covariance):
        msg = "Channel covariance is all zero"
        raise NumericalFailureError(msg)
    _, vectors = np.linalg.eigh(covariance)
    weights = vectors[:, -1]
    combined = (samples @ weights).reshape(images.nx, images.ny, images.ns)
    return images.with_data(combined[:, :, np.newaxis, :])


def ghost_region(support_mask: np.ndarray) -> np.ndarray:
    """Support shifted by half the phase-encode field of view, minus the support itself."""
    mask = np.asarray(support_mask, dtype=bool)
    return np.roll(mask, mask.shape[1] // 2, axis=1) & ~mask


def ghost_ratio(img: ComplexGrid | np.ndarray, support_mask: np.ndarray) -> float:
    """Energy in the half-FOV ghost region divided by the energy on the object support.

    Args:
        img (ComplexGrid | np.ndarray): Image indexed ``(x, y, ...)``; trailing axes are summed.
        support_mask (np.ndarray): Boolean ``(nx, ny)`` object support.

    Returns:
        float: The ratio (nonnegative).
    """
    data = img.data if isinstance(img, ComplexGrid) else np.asarray(img)
    mask = np.asarray(support_mask, dtype=bool)
    if mask.shape != data.shape[:2]:
        msg = f"Support mask {mask.shape} does not match the image {data.shape[:2]}"
        raise ValidationFailedError(msg)
    if not mask.any():
        msg = "Support mask is empty"
        raise ValidationFailedError(msg)
    ghosts = ghost_region(mask)
    if not ghosts.any():
        msg = "Ghost region is empty: the support covers its own half-FOV shift"
        raise ValidationFailedError(msg)
    energy = np.abs(data) ** 2
    energy = energy.reshape(*energy.shape[:2], -1).sum(axis=-1)
    inside = float(energy[mask].sum())
    if inside == 0:
        msg = "Image has no energy on the support"
        raise NumericalFailureError(msg)
    return float(energy[ghosts].sum()) / inside


def zero_fill_baseline(d_plus: MeasuredData, d_minus: MeasuredData) -> ComplexGrid:
    """Naive reconstruction: interleave both polarities into a single k-space."""
    nx = d_plus.samples.shape[0]
    plus = zero_fill(d_plus, nx)
    return plus.with_data(plus.data + zero_fill(d_minus, nx).data)


def combined_image(k: ComplexGrid) -> ComplexGrid:
    """Image of a k-space grid after PCA coil combination (or its single channel)."""
    images = ComplexGrid(ifft2c(k.data), "image")
    return coil_combine_pca(images) if images.nc > 1 else images


def combined_magnitude(k: ComplexGrid) -> np.ndarray:
    """Magnitude of :func:`combined_image`."""
    return np.abs(combined_image(k).data)


@dataclass(frozen=True)
class Score:
    """Error metrics of one reconstructed pair."""

    nrmse: float
    nrmse_combined: float
    ghost_ratio: float


def score_pair(k_plus: ComplexGrid, k_minus: ComplexGrid, acq: SimulatedAcquisition) -> Score:
    """Compare a reconstructed pair with the noiseless per-polarity references."""
    estimate = np.stack([k_plus.data, k_minus.data])
    reference = np.stack([acq.k_plus_ref.data, acq.k_minus_ref.data])
    complex_error = nrmse(estimate, reference)
    combined_est = np.stack([combined_magnitude(k_plus), combined_magnitude(k_minus)])
    combined_ref = np.stack([combined_magnitude(acq.k_plus_ref), combined_magnitude(acq.k_minus_ref)])
    images = np.concatenate([ifft2c(k_plus.data), ifft2c(k_minus.data)], axis=-1)
    return Score(complex_error, nrmse(combined_est, combined_ref), ghost_ratio(images, acq.support))


@dataclass(frozen=True)
class MethodSpec:
    """A named reconstruction method; ``auto_rank`` derives ``r`` from the calibration spectrum."""

    name: str
    config: ReconConfig | None = None
    auto_rank: bool = True


def default_methods(reconstructor: Reconstructor, names: Sequence[str] = DEFAULT_RANKING) -> list[MethodSpec]:
    """Method specs with the settings' defaults for the requested names."""
    specs = []
    for name in names:
        if name == ZERO_FILL:
            specs.append(MethodSpec(ZERO_FILL))
        elif name == "ac_loraks":
            specs.append(MethodSpec(name, reconstructor.default_config(mode=name, matrix_kind="S")))
        elif name in ("sense", "mussels_baseline", "unconstrained"):
            specs.append(MethodSpec(name, reconstructor.default_config(mode=name)))
        else:
            msg = f"Unknown method '{name}'"
            raise ValidationFailedError(msg)
    return specs


def calibration_rank(acs: ComplexGrid, cfg: ReconConfig) -> int:
    """Rank of the joint two-polarity lifting, estimated as twice the rank of the calibration lifting."""
    spectrum = singular_values(lift(acs, cfg.neighborhood, cfg.matrix_kind))
    return 2 * estimate_rank(spectrum, tau=cfg.rank_tau).rank


def with_rank(cfg: ReconConfig, rank: int) -> ReconConfig:
    """Replace the rank of a rank-residual penalty; other penalties are returned unchanged."""
    if cfg.regularizer.kind != "rank_residual":
        return cfg
    return cfg.model_copy(update={"regularizer": Regularizer(kind="rank_residual", r=rank)})


def run_method(
    method: MethodSpec,
    acq: SimulatedAcquisition,
    reconstructor: Reconstructor,
) -> tuple[ComplexGrid, ComplexGrid, int]:
    """Reconstruct one acquisition with one method; returns the pair and the iteration count."""
    if method.name == ZERO_FILL or method.config is None:
        baseline = zero_fill_baseline(acq.d_plus, acq.d_minus)
        return baseline, baseline, 0
    cfg = method.config
    if method.auto_rank:
        cfg = with_rank(cfg, calibration_rank(acq.acs, cfg))
    result = reconstructor.reconstruct(cfg, acq.d_plus, acq.d_minus, maps=acq.maps, acs=acq.acs)
    return result.k_plus, result.k_minus, result.iterations


@dataclass
class ExperimentReport:
    """Rows of an experiment matrix, sorted by scenario, acceleration and method."""

    rows: list[ExperimentRow] = field(default_factory=list)

    def sort(self) -> "ExperimentReport":
        """Sort rows in place and return the report."""
        self.rows.sort(key=lambda row: (row.scenario, row.acceleration, row.method))
        return self

    def to_csv(self, *, include_wall_time: bool = False) -> str:
        """CSV text with a fixed column order and 6 significant digits."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow([*REPORT_COLUMNS, "wall_time"] if include_wall_time else REPORT_COLUMNS)
        for row in self.rows:
            values = [
                row.scenario,
                row.method,
                row.acceleration,
                f"{row.nrmse:.6g}",
                f"{row.nrmse_combined:.6g}",
                f"{row.ghost_ratio:.6g}",
                row.iterations,
                row.status,
            ]
            if include_wall_time:
                values.append(f"{row.wall_time:.6g}")
            writer.writerow(values)
        return buffer.getvalue()

    def lookup(self, scenario: str, acceleration: int, method: str) -> ExperimentRow | None:
        """Row of one (scenario, R, method), if present."""
        for row in self.rows:
            if (row.scenario, row.acceleration, row.method) == (scenario, acceleration, method):
                return row
        return None


def run_experiment_matrix(
    scenarios: Sequence[SimScenario],
    methods: Sequence[MethodSpec],
    accelerations: Sequence[int],
    reconstructor: Reconstructor,
    on_reconstruction: ReconstructionSink | None = None,
) -> ExperimentReport:
    """Simulate every (scenario, R) and score every method on it.

    Solver failures become rows with an ``error`` status instead of aborting the report.

    Args:
        scenarios (Sequence[SimScenario]): Scenarios; their ``acceleration`` is replaced by each R.
        methods (Sequence[MethodSpec]): Methods to compare.
        accelerations (Sequence[int]): Acceleration factors.
        reconstructor (Reconstructor): Solver service.
        on_reconstruction (ReconstructionSink | None): Called with every successful reconstruction.

    Returns:
        ExperimentReport: Sorted rows.
    """
    report = ExperimentReport()
    if not methods:
        return report
    for scenario in scenarios:
        for acceleration in accelerations:
            acq = simulate_epi(scenario.model_copy(update={"acceleration": acceleration}))
            for method in methods:
                report.rows.append(_score_method(method, acq, reconstructor, on_reconstruction))
    return report.sort()


def _score_method(
    method: MethodSpec,
    acq: SimulatedAcquisition,
    reconstructor: Reconstructor,
    on_reconstruction: ReconstructionSink | None,
) -> ExperimentRow:
    scenario = acq.scenario
    row = ExperimentRow(scenario=scenario.scenario_id, method=method.name, acceleration=scenario.acceleration)
    start = time.perf_counter()
    try:
        k_plus, k_minus, iterations = run_method(method, acq, reconstructor)
        score = score_pair(k_plus, k_minus, acq)
        if on_reconstruction is not None:
            on_reconstruction(acq, method.name, k_plus, k_minus)
    except Exception as exc:  # noqa: BLE001
        logger.exception(f"{method.name} failed on {scenario.scenario_id} (R={scenario.acceleration})")
        row.status = f"error:{type(exc).__name__}"
    else:
        row.nrmse, row.nrmse_combined, row.ghost_ratio = score.nrmse, score.nrmse_combined, score.ghost_ratio
        row.iterations = iterations
        logger.info(
            f"{scenario.scenario_id} R={scenario.acceleration} {method.name}: "
            f"nrmse={score.nrmse:.4g} ghost={score.ghost_ratio:.4g}",
        )
    row.wall_time = time.perf_counter() - start
    return row


@dataclass(frozen=True)
class OrderingFlag:
    """A pair of methods whose NRMSE margin fell short of the expected ordering."""

    scenario: str
    acceleration: int
    better: str
    worse: str
    margin: float


def check_ordering(
    report: ExperimentReport,
    ranking: Sequence[str] = DEFAULT_RANKING,
    margin: float = 0.05,
) -> list[OrderingFlag]:
    """Flag adjacent methods in ``ranking`` whose relative NRMSE gap is below ``margin``.

    A method ranked better must beat the next one by ``(worse - better) / worse >= margin``.
    Missing or failed rows are skipped.
    """
    flags = []
    keys = sorted({(row.scenario, row.acceleration) for row in report.rows})
    for scenario, acceleration in keys:
        for better, worse in zip(ranking, ranking[1:], strict=False):
            a = report.lookup(scenario, acceleration, better)
            b = report.lookup(scenario, acceleration, worse)
            if a is None or b is None or a.status != "ok" or b.status != "ok":
                continue
            gap = (b.nrmse - a.nrmse) / b.nrmse if b.nrmse > 0 else 0.0
            if not gap >= margin:
                flags.append(OrderingFlag(scenario, acceleration, better, worse, gap))
                logger.warning(
                    f"{scenario} R={acceleration}: {better} vs {worse} margin {gap:.3g} below {margin:.3g}",
                )
    return flags
