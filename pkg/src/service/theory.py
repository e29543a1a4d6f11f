"""Sign-flip symmetry of structured low-rank liftings.

Builds feasible solution pairs for two-polarity EPI data, checks that negating every
unmeasured line leaves the singular values of the joint lifted matrix unchanged, and scans
the cost along the straight line between a pair and its flipped counterpart.
"""

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from loguru import logger
from tqdm import tqdm

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import (
    ComplexGrid,
    MeasuredData,
    SamplingPattern,
    apply_sampling,
    patterns_per_shot,
    sampling_mask,
    sign_flip_unmeasured,
    zero_fill,
)
from src.service.slm import evaluate, lift_pair, singular_values
from src.utils.schemas import MatrixKind, NeighborhoodSpec, Regularizer

PairObjective = Callable[[ComplexGrid, ComplexGrid], float]

DEFAULT_LANDSCAPE_POINTS = 101
DEFAULT_THRESHOLD = 1e-9
SLICE_SLACK = 1e-9


@dataclass(frozen=True)
class FeasiblePair:
    """Full-grid RO+ / RO- estimates that agree exactly with the measured lines."""

    k_plus: ComplexGrid
    k_minus: ComplexGrid
    pattern_plus: tuple[SamplingPattern, ...]
    pattern_minus: tuple[SamplingPattern, ...]

    def __post_init__(self) -> None:
        """Normalize the patterns to one per shot and check grid compatibility."""
        if self.k_plus.shape != self.k_minus.shape:
            msg = f"Pair grids differ in shape: {self.k_plus.shape} vs {self.k_minus.shape}"
            raise ValidationFailedError(msg)
        ns = self.k_plus.ns
        object.__setattr__(self, "pattern_plus", patterns_per_shot(self.pattern_plus, ns))
        object.__setattr__(self, "pattern_minus", patterns_per_shot(self.pattern_minus, ns))

    def measured(self) -> tuple[MeasuredData, MeasuredData]:
        """The data both grids are consistent with."""
        return apply_sampling(self.k_plus, self.pattern_plus), apply_sampling(self.k_minus, self.pattern_minus)

    def is_zero_filled(self) -> bool:
        """Whether every unmeasured entry is zero."""
        shape = self.k_plus.shape
        plus = ~sampling_mask(self.pattern_plus, shape)
        minus = ~sampling_mask(self.pattern_minus, shape)
        return not (np.any(self.k_plus.data[plus]) or np.any(self.k_minus.data[minus]))


def _fill(d: MeasuredData, fill: np.ndarray | None, nx: int) -> ComplexGrid:
    measured = zero_fill(d, nx)
    if fill is None:
        return measured
    fill = np.asarray(fill, dtype=np.complex128)
    if fill.shape != measured.shape:
        msg = f"Fill values must have the grid shape {measured.shape}, got {fill.shape}"
        raise ValidationFailedError(msg)
    mask = sampling_mask(d.patterns, measured.shape)
    return measured.with_data(np.where(mask, measured.data, fill))


def make_feasible_pair(
    d_plus: MeasuredData,
    d_minus: MeasuredData,
    y: np.ndarray | None = None,
    z: np.ndarray | None = None,
    nx: int | None = None,
) -> FeasiblePair:
    """Complete measured RO+ / RO- data with arbitrary values on the unmeasured lines.

    Args:
        d_plus (MeasuredData): Lines read with the positive gradient.
        d_minus (MeasuredData): Lines read with the negative gradient.
        y (np.ndarray | None): Full-grid values whose unmeasured entries fill RO+ (zeros if omitted).
        z (np.ndarray | None): Same for RO-.
        nx (int | None): Readout size of the grid (the sample block's by default).

    Returns:
        FeasiblePair: The completed pair.
    """
    return FeasiblePair(
        k_plus=_fill(d_plus, y, nx or d_plus.samples.shape[0]),
        k_minus=_fill(d_minus, z, nx or d_minus.samples.shape[0]),
        pattern_plus=d_plus.patterns,
        pattern_minus=d_minus.patterns,
    )


def zero_filled_pair(d_plus: MeasuredData, d_minus: MeasuredData) -> FeasiblePair:
    """The trivial feasible pair: measured lines, zeros elsewhere."""
    return make_feasible_pair(d_plus, d_minus)


def _random_complex(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_feasible_pair(  # noqa: PLR0913
    rng: np.random.Generator,
    nx: int,
    ny: int,
    nc: int = 1,
    ns: int = 1,
    acceleration: int = 1,
) -> FeasiblePair:
    """Random measured data on the EPI lines, completed with random fill values."""
    shape = (nx, ny, nc, ns)
    plus = [SamplingPattern.epi(ny, "positive", acceleration, shot, ns) for shot in range(ns)]
    minus = [SamplingPattern.epi(ny, "negative", acceleration, shot, ns) for shot in range(ns)]
    d_plus = apply_sampling(ComplexGrid(_random_complex(rng, shape)), plus)
    d_minus = apply_sampling(ComplexGrid(_random_complex(rng, shape)), minus)
    return make_feasible_pair(d_plus, d_minus, _random_complex(rng, shape), _random_complex(rng, shape))


def make_flipped_pair(p: FeasiblePair) -> FeasiblePair:
    """Negate the unmeasured lines of both grids; the result stays feasible."""
    return FeasiblePair(
        k_plus=sign_flip_unmeasured(p.k_plus, p.pattern_plus),
        k_minus=sign_flip_unmeasured(p.k_minus, p.pattern_minus),
        pattern_plus=p.pattern_plus,
        pattern_minus=p.pattern_minus,
    )


@dataclass(frozen=True)
class TheoremCheck:
    """Spectra of a pair and its flipped counterpart."""

    sv_original: np.ndarray
    sv_flipped: np.ndarray
    max_rel_diff: float
    passed: bool


def spectrum_discrepancy(sv_a: np.ndarray, sv_b: np.ndarray) -> float:
    """Largest singular-value difference relative to the largest singular value."""
    scale = max(float(sv_a[0]) if sv_a.size else 0.0, float(sv_b[0]) if sv_b.size else 0.0)
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(sv_a - sv_b)) / scale)


def verify_sign_flip_symmetry(
    p: FeasiblePair,
    n: NeighborhoodSpec,
    matrix_kind: MatrixKind = "C",
    threshold: float = DEFAULT_THRESHOLD,
) -> TheoremCheck:
    """Compare the joint-lifting spectra of ``p`` and of its flipped pair.

    Args:
        p (FeasiblePair): Pair to check.
        n (NeighborhoodSpec): Lifting neighborhood.
        matrix_kind (MatrixKind): ``"C"`` or ``"S"``.
        threshold (float): Pass level for the relative discrepancy.

    Returns:
        TheoremCheck: Both descending spectra, their discrepancy and the pass flag.
    """
    flipped = make_flipped_pair(p)
    sv_original = singular_values(lift_pair(p.k_plus, p.k_minus, n, matrix_kind))
    sv_flipped = singular_values(lift_pair(flipped.k_plus, flipped.k_minus, n, matrix_kind))
    diff = spectrum_discrepancy(sv_original, sv_flipped)
    return TheoremCheck(sv_original, sv_flipped, diff, diff <= threshold)


def lifted_objective(reg: Regularizer, n: NeighborhoodSpec, kind: MatrixKind) -> PairObjective:
    """``J`` of the joint lifting of a pair."""

    def objective(k_plus: ComplexGrid, k_minus: ComplexGrid) -> float:
        return evaluate(reg, lift_pair(k_plus, k_minus, n, kind))

    return objective


def _check_same_data(p1: FeasiblePair, p2: FeasiblePair) -> None:
    if p1.k_plus.shape != p2.k_plus.shape:
        msg = "Landscape endpoints have different grid shapes"
        raise ValidationFailedError(msg)
    for a, b in zip(p1.measured(), p2.measured(), strict=True):
        if a.patterns != b.patterns or not np.array_equal(a.samples, b.samples):
            msg = "Landscape endpoints are not feasible for the same measured data"
            raise ValidationFailedError(msg)


def landscape_scan(  # noqa: PLR0913
    p1: FeasiblePair,
    p2: FeasiblePair,
    reg: Regularizer,
    n: NeighborhoodSpec,
    kind: MatrixKind = "C",
    alphas: Sequence[float] | None = None,
    objective: PairObjective | None = None,
) -> list[tuple[float, float]]:
    """Evaluate the cost along ``(1 - alpha) * p1 + alpha * p2``.

    ``alpha = 0`` is ``p1`` and ``alpha = 1`` is ``p2``; with ``p2`` the flipped ``p1`` the
    midpoint is exactly the zero-filled pair.

    Args:
        p1 (FeasiblePair): First endpoint.
        p2 (FeasiblePair): Second endpoint, feasible for the same data.
        reg (Regularizer): Penalty used when no ``objective`` is given.
        n (NeighborhoodSpec): Lifting neighborhood.
        kind (MatrixKind): Lifting kind.
        alphas (Sequence[float] | None): Mixing weights in ``[0, 1]``; 101 uniform points by default.
        objective (PairObjective | None): Cost of a ``(k_plus, k_minus)`` pair; ``J`` of the lifting by default.

    Returns:
        list[tuple[float, float]]: ``(alpha, cost)`` in the order of ``alphas``.
    """
    _check_same_data(p1, p2)
    alphas = np.linspace(0.0, 1.0, DEFAULT_LANDSCAPE_POINTS) if alphas is None else np.asarray(alphas, dtype=float)
    if np.any((alphas < 0) | (alphas > 1)):
        msg = "Landscape weights must lie in [0, 1]"
        raise ValidationFailedError(msg)
    cost = objective or lifted_objective(reg, n, kind)
    points = []
    for alpha in alphas:
        k_plus = p1.k_plus.with_data((1 - alpha) * p1.k_plus.data + alpha * p2.k_plus.data)
        k_minus = p1.k_minus.with_data((1 - alpha) * p1.k_minus.data + alpha * p2.k_minus.data)
        points.append((float(alpha), float(cost(k_plus, k_minus))))
    return points


@dataclass(frozen=True)
class CorollaryReport:
    """Slice behaviour between a pair and its flipped counterpart."""

    regularizer: str
    endpoint_costs: tuple[float, float]
    zero_filled_cost: float
    slice_max: float
    slice_min: float
    slice_bound_holds: bool
    zero_filled_is_slice_min: bool
    degenerate: bool
    landscape: list[tuple[float, float]] = field(default_factory=list)

    @property
    def required(self) -> bool:
        """The slice bound is a theorem only for the convex penalty."""
        return self.regularizer == "nuclear"

    @property
    def passed(self) -> bool:
        """Whether every required statement holds."""
        return self.slice_bound_holds or not self.required


def check_corollaries(
    p: FeasiblePair,
    reg: Regularizer,
    n: NeighborhoodSpec,
    kind: MatrixKind = "C",
    alphas: Sequence[float] | None = None,
) -> CorollaryReport:
    """Scan the slice from ``p`` to its flipped pair and summarize it.

    For the nuclear norm every point of the slice must cost no more than the endpoints.
    For the rank residual the same facts are only reported.
    """
    flipped = make_flipped_pair(p)
    points = landscape_scan(p, flipped, reg, n, kind, alphas)
    costs = np.array([c for _, c in points])
    endpoint = (points[0][1], points[-1][1])
    zero_cost = float(lifted_objective(reg, n, kind)(*_midpoint(p, flipped)))
    bound = max(endpoint) * (1 + SLICE_SLACK)
    report = CorollaryReport(
        regularizer=reg.kind,
        endpoint_costs=endpoint,
        zero_filled_cost=zero_cost,
        slice_max=float(costs.max()),
        slice_min=float(costs.min()),
        slice_bound_holds=bool(np.all(costs <= bound)),
        zero_filled_is_slice_min=bool(zero_cost <= costs.min() * (1 + SLICE_SLACK)),
        degenerate=p.is_zero_filled(),
        landscape=points,
    )
    if report.degenerate:
        logger.info("Pair is zero-filled; the slice degenerates to a point")
    if report.required and not report.slice_bound_holds:
        logger.warning(f"Slice bound violated: max cost {report.slice_max:.6g} > endpoint {max(endpoint):.6g}")
    return report


def _midpoint(p1: FeasiblePair, p2: FeasiblePair) -> tuple[ComplexGrid, ComplexGrid]:
    return (
        p1.k_plus.with_data(0.5 * p1.k_plus.data + 0.5 * p2.k_plus.data),
        p1.k_minus.with_data(0.5 * p1.k_minus.data + 0.5 * p2.k_minus.data),
    )


@dataclass(frozen=True)
class TheoremReport:
    """Outcome of the sign-flip check over the trials of one configuration."""

    radius: int
    channels: int
    kind: MatrixKind
    trials: int
    worst_rel_diff: float
    passed: bool


def run_theorem_suite(  # noqa: PLR0913
    radii: Iterable[int] = (1, 2, 3),
    channels: Iterable[int] = (1, 2, 4),
    kinds: Iterable[MatrixKind] = ("C", "S"),
    trials: int = 100,
    size: int = 16,
    seed: int = 0,
    threshold: float = DEFAULT_THRESHOLD,
    *,
    show_progress: bool = False,
) -> list[TheoremReport]:
    """Check the sign-flip symmetry on random feasible pairs over a grid of configurations.

    Args:
        radii (Iterable[int]): Neighborhood radii.
        channels (Iterable[int]): Channel counts.
        kinds (Iterable[MatrixKind]): Lifting kinds.
        trials (int): Random pairs per configuration.
        size (int): Grid size (square).
        seed (int): Seed of the random stream shared by all configurations.
        threshold (float): Pass level.
        show_progress (bool): Show a progress bar on standard error.

    Returns:
        list[TheoremReport]: One report per (radius, channels, kind).
    """
    if trials < 1:
        msg = f"Theorem suite needs at least one trial, got {trials}"
        raise ValidationFailedError(msg)
    rng = np.random.default_rng(seed)
    configurations = list(product(radii, channels, kinds))
    reports = []
    bar = tqdm(total=len(configurations) * trials, desc="Sign-flip checks", disable=not show_progress)
    for radius, nc, kind in configurations:
        neighborhood = NeighborhoodSpec(radius=radius)
        worst = 0.0
        for _ in range(trials):
            pair = random_feasible_pair(rng, size, size, nc)
            worst = max(worst, verify_sign_flip_symmetry(pair, neighborhood, kind, threshold).max_rel_diff)
            bar.update(1)
        reports.append(TheoremReport(radius, nc, kind, trials, worst, worst <= threshold))
        logger.debug(f"radius={radius} nc={nc} kind={kind}: worst discrepancy {worst:.3e}")
    bar.close()
    failed = [r for r in reports if not r.passed]
    logger.info(f"Sign-flip suite: {len(reports) - len(failed)}/{len(reports)} configurations passed")
    return reports


def format_theorem_report(reports: Sequence[TheoremReport]) -> str:
    """Plain-text pass/fail table."""
    lines = ["radius channels kind trials worst_rel_diff status"]
    lines.extend(
        f"{r.radius} {r.channels} {r.kind} {r.trials} {r.worst_rel_diff:.3e} {'PASS' if r.passed else 'FAIL'}"
        for r in reports
    )
    overall = "PASS" if all(r.passed for r in reports) else "FAIL"
    lines.append(f"overall {overall}")
    return "\n".join(lines) + "\n"
