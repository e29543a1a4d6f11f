"""Ghost-correction formulations: unconstrained completion, SENSE-based and calibrated (AC) variants."""

from collections.abc import Callable

import numpy as np
from loguru import logger

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import ComplexGrid, MeasuredData, fft2c, ifft2c, sampling_mask, zero_fill
from src.service.slm import LiftingOperator, evaluate, lift_pair
from src.service.solvers.mm import OuterLoopOutcome, SurrogateProblem, mm_outer_loop
from src.service.solvers.models import NullspaceBasis, ReconResult, SenseMaps
from src.utils.schemas import ReconConfig

STACK_AXES = (1, 2)
PairObjective = Callable[[ComplexGrid, ComplexGrid], float]


def _grid_shape(d_plus: MeasuredData, d_minus: MeasuredData) -> tuple[int, int, int, int]:
    nx, _, nc, ns = d_plus.samples.shape
    if (d_minus.samples.shape[0], d_minus.samples.shape[2], d_minus.samples.shape[3]) != (nx, nc, ns):
        msg = f"RO+ and RO- data disagree: {d_plus.samples.shape} vs {d_minus.samples.shape}"
        raise ValidationFailedError(msg)
    if d_plus.ny != d_minus.ny:
        msg = f"RO+ and RO- data disagree on ny: {d_plus.ny} vs {d_minus.ny}"
        raise ValidationFailedError(msg)
    return nx, d_plus.ny, nc, ns


def _measured_stack(d_plus: MeasuredData, d_minus: MeasuredData) -> tuple[np.ndarray, np.ndarray]:
    """Zero-filled data and sampling masks, both stacked as ``(2, nx, ny, nc, ns)``."""
    shape = _grid_shape(d_plus, d_minus)
    data = np.stack([zero_fill(d_plus, shape[0]).data, zero_fill(d_minus, shape[0]).data])
    mask = np.stack([sampling_mask(d_plus.patterns, shape), sampling_mask(d_minus.patterns, shape)])
    return data, mask


def _require_mode(cfg: ReconConfig, *modes: str) -> None:
    if cfg.mode not in modes:
        msg = f"Configuration mode '{cfg.mode}' cannot be solved here (expected one of {modes})"
        raise ValidationFailedError(msg)


def _kspace_pair(stack: np.ndarray) -> tuple[ComplexGrid, ComplexGrid]:
    return ComplexGrid(stack[0], "kspace"), ComplexGrid(stack[1], "kspace")


def _perturb(x: np.ndarray, free: np.ndarray, reference: np.ndarray, cfg: ReconConfig) -> np.ndarray:
    """Seeded complex Gaussian noise on the ``free`` entries, scaled to the RMS of ``reference``."""
    rng = np.random.default_rng(cfg.init_seed)
    level = cfg.init_scale * float(np.sqrt(np.mean(np.abs(reference) ** 2)))
    noise = (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)) * (level / np.sqrt(2))
    logger.debug(f"Perturbed start: noise level {level:.3g} on {int(np.count_nonzero(free))} entries")
    return np.where(free, x + noise, x)


def _initial_kspace(
    cfg: ReconConfig,
    zero_filled: np.ndarray,
    mask: np.ndarray,
    initial: tuple[ComplexGrid, ComplexGrid] | None,
) -> np.ndarray:
    """Starting k-space stack for the completion solvers.

    The zero-filled stack is invariant under the unmeasured-line sign flip of either polarity, so an MM
    iteration started there stays on flip-invariant pairs. ``perturbed`` breaks that symmetry with seeded
    noise on the unmeasured entries.
    """
    if cfg.init == "perturbed":
        return _perturb(zero_filled, ~mask, zero_filled[mask], cfg)
    if cfg.init == "zero_filled" or initial is None:
        if cfg.init == "provided":
            logger.warning("init=provided without an initial estimate; starting from zero-filled data")
        return zero_filled
    start = np.stack([initial[0].data, initial[1].data])
    if start.shape != zero_filled.shape:
        msg = f"Initial estimate has shape {start.shape[1:]}, expected {zero_filled.shape[1:]}"
        raise ValidationFailedError(msg)
    return start


def _log_outcome(name: str, outcome: OuterLoopOutcome) -> None:
    status = "converged" if outcome.converged else "stopped at the iteration cap"
    logger.info(
        f"{name}: {status} after {outcome.iterations} iterations, "
        f"cost {outcome.cost_trace[0]:.6g} -> {outcome.cost_trace[-1]:.6g}",
    )


def solve_unconstrained(
    d_plus: MeasuredData,
    d_minus: MeasuredData,
    cfg: ReconConfig,
    initial: tuple[ComplexGrid, ComplexGrid] | None = None,
) -> ReconResult:
    """Complete both polarity grids so their joint lifting is low rank, keeping measured entries.

    The zero-filled start is a fixed point: each polarity and its sign-flipped counterpart score the same, so
    the iterates never leave the flip-invariant pairs and the unmeasured lines stay zero. Use
    ``init="perturbed"`` or ``init="provided"`` to start off that set.

    Args:
        d_plus (MeasuredData): RO+ lines.
        d_minus (MeasuredData): RO- lines, disjoint from RO+ in every shot.
        cfg (ReconConfig): Configuration in ``unconstrained`` mode.
        initial (tuple[ComplexGrid, ComplexGrid] | None): Warm start used with ``init="provided"``.

    Returns:
        ReconResult: Full grids whose measured entries equal the input exactly.
    """
    _require_mode(cfg, "unconstrained")
    for p_plus, p_minus in zip(d_plus.patterns, d_minus.patterns, strict=True):
        if not p_plus.is_disjoint(p_minus):
            msg = "RO+ and RO- sampling patterns overlap"
            raise ValidationFailedError(msg)
    zero_filled, mask = _measured_stack(d_plus, d_minus)
    lifting = LiftingOperator(zero_filled.shape[1:], cfg.neighborhood, cfg.matrix_kind)
    problem = SurrogateProblem(lifting=lifting, weight=1.0, x_fixed=zero_filled, free=~mask)
    logger.info(f"Unconstrained {cfg.matrix_kind}-matrix completion, {cfg.regularizer.kind} penalty")
    outcome = mm_outer_loop(problem, cfg.regularizer, cfg, _initial_kspace(cfg, zero_filled, mask, initial))
    _log_outcome("unconstrained", outcome)
    x = np.where(mask, zero_filled, outcome.x)
    k_plus, k_minus = _kspace_pair(x)
    return ReconResult(k_plus, k_minus, outcome.cost_trace, outcome.converged, outcome.iterations, mode=cfg.mode)


class SenseEncoding:
    """Per-channel sensitivity modulation followed by the centered Fourier transform.

    Works on polarity-stacked images ``(2, nx, ny, 1, ns)`` and k-space ``(2, nx, ny, nc, ns)``.
    """

    def __init__(self, maps: SenseMaps) -> None:
        """Broadcast the maps over the polarity and shot axes."""
        self.maps = maps
        self._coils = maps.maps[np.newaxis, :, :, :, np.newaxis]

    def forward(self, rho: np.ndarray) -> np.ndarray:
        """``E rho``."""
        return fft2c(self._coils * rho, axes=STACK_AXES)

    def adjoint(self, k: np.ndarray) -> np.ndarray:
        """``E^H k``: coil images combined with conjugate sensitivities."""
        return np.sum(np.conj(self._coils) * ifft2c(k, axes=STACK_AXES), axis=3, keepdims=True)


def _fourier(rho: np.ndarray) -> np.ndarray:
    return fft2c(rho, axes=STACK_AXES)


def _inverse_fourier(k: np.ndarray) -> np.ndarray:
    return ifft2c(k, axes=STACK_AXES)


def sense_combine(k: ComplexGrid, maps: SenseMaps) -> ComplexGrid:
    """Apply ``E^H`` to one polarity grid: one image per shot, ``(nx, ny, 1, ns)``."""
    if k.shape[:3] != (*maps.spatial_shape, maps.nc):
        msg = f"Grid {k.shape} does not match sensitivity maps {maps.maps.shape}"
        raise ValidationFailedError(msg)
    image = SenseEncoding(maps).adjoint(k.data[np.newaxis])[0]
    return ComplexGrid(image, "image")


def _check_maps(maps: SenseMaps, shape: tuple[int, ...]) -> None:
    nx, ny, nc, _ = shape
    if maps.spatial_shape != (nx, ny) or maps.nc != nc:
        msg = f"Sensitivity maps {maps.maps.shape} do not cover a {nx}x{ny} grid with {nc} channels"
        raise ValidationFailedError(msg)


def _sense_problem(
    zero_filled: np.ndarray,
    mask: np.ndarray,
    maps: SenseMaps,
    cfg: ReconConfig,
) -> tuple[SurrogateProblem, SenseEncoding]:
    encoding = SenseEncoding(maps)
    nx, ny, nc, ns = zero_filled.shape[1:]

    def data_normal(rho: np.ndarray) -> np.ndarray:
        return encoding.adjoint(mask * encoding.forward(rho))

    def data_cost(rho: np.ndarray) -> float:
        return float(np.sum(np.abs(mask * encoding.forward(rho) - zero_filled) ** 2))

    if cfg.mode == "mussels_baseline":
        lifting = LiftingOperator((nx, ny, 1, ns), cfg.neighborhood, cfg.matrix_kind)
        encode, encode_adjoint = _fourier, _inverse_fourier
    else:
        lifting = LiftingOperator((nx, ny, nc, ns), cfg.neighborhood, cfg.matrix_kind)
        encode, encode_adjoint = encoding.forward, encoding.adjoint
    problem = SurrogateProblem(
        lifting=lifting,
        weight=cfg.lam,
        x_fixed=np.zeros((2, nx, ny, 1, ns), dtype=np.complex128),
        encode=encode,
        encode_adjoint=encode_adjoint,
        data_normal=data_normal,
        data_rhs=encoding.adjoint(zero_filled),
        data_cost=data_cost,
    )
    return problem, encoding


def solve_sense_loraks(
    d_plus: MeasuredData,
    d_minus: MeasuredData,
    maps: SenseMaps,
    cfg: ReconConfig,
    initial: tuple[ComplexGrid, ComplexGrid] | None = None,
) -> ReconResult:
    """One SENSE image per polarity and shot, coupled through a low-rank penalty.

    Minimizes ``||E+ rho+ - d+||^2 + ||E- rho- - d-||^2 + lam * J(L(E rho+, E rho-))``. In
    ``mussels_baseline`` mode the lifting sees the single-channel transforms ``F rho`` instead.

    Args:
        d_plus (MeasuredData): RO+ lines.
        d_minus (MeasuredData): RO- lines.
        maps (SenseMaps): Normalized coil sensitivities (or a binary support mask).
        cfg (ReconConfig): Configuration in ``sense`` or ``mussels_baseline`` mode.
        initial (tuple[ComplexGrid, ComplexGrid] | None): Image-domain warm start for ``init="provided"``.

    Returns:
        ReconResult: Images per polarity and their per-channel k-space ``E rho``.
    """
    _require_mode(cfg, "sense", "mussels_baseline")
    zero_filled, mask = _measured_stack(d_plus, d_minus)
    _check_maps(maps, zero_filled.shape[1:])
    problem, encoding = _sense_problem(zero_filled, mask, maps, cfg)
    start = encoding.adjoint(zero_filled)
    if cfg.init == "perturbed":
        start = _perturb(start, np.ones(start.shape, dtype=bool), start, cfg)
    if cfg.init == "provided" and initial is not None:
        start = np.stack([initial[0].data, initial[1].data])
        if start.shape != problem.x_fixed.shape:
            msg = f"Initial images have shape {start.shape[1:]}, expected {problem.x_fixed.shape[1:]}"
            raise ValidationFailedError(msg)
    logger.info(f"{cfg.mode}: lam={cfg.lam:.3g}, {cfg.matrix_kind}-matrix, {cfg.regularizer.kind} penalty")
    outcome = mm_outer_loop(problem, cfg.regularizer, cfg, start)
    _log_outcome(cfg.mode, outcome)
    k_plus, k_minus = _kspace_pair(encoding.forward(outcome.x))
    images = (ComplexGrid(outcome.x[0], "image"), ComplexGrid(outcome.x[1], "image"))
    return ReconResult(
        k_plus,
        k_minus,
        outcome.cost_trace,
        outcome.converged,
        outcome.iterations,
        images=images,
        mode=cfg.mode,
    )


class NullspacePenalty:
    """``sum_{p, s} ||C(k_{p,s}) N||_F^2`` over polarity-stacked k-space."""

    def __init__(self, shape: tuple[int, int, int, int], nullspace: NullspaceBasis, cfg: ReconConfig) -> None:
        """Check the basis matches one channel-concatenated C-matrix block."""
        self.lifting = LiftingOperator(shape, cfg.neighborhood, "C")
        self.block = shape[2] * self.lifting.n_offsets
        if nullspace.n.shape[0] != self.block:
            msg = (
                f"Nullspace basis has {nullspace.n.shape[0]} rows but the neighborhood gives "
                f"{self.block} columns per polarity"
            )
            raise ValidationFailedError(msg)
        self.basis = nullspace.n
        self.projector = nullspace.projector

    def _blocks(self, x: np.ndarray) -> np.ndarray:
        return self.lifting.forward(x).reshape(self.lifting.n_centers, -1, self.block)

    def value(self, x: np.ndarray) -> float:
        """Penalty value."""
        return float(np.sum(np.abs(self._blocks(x) @ self.basis) ** 2))

    def normal(self, x: np.ndarray) -> np.ndarray:
        """``C^H (C(x) N N^H)``."""
        filtered = self._blocks(x) @ self.projector
        return self.lifting.adjoint(filtered.reshape(self.lifting.n_centers, -1))


def solve_ac_loraks(
    d_plus: MeasuredData,
    d_minus: MeasuredData,
    nullspace: NullspaceBasis,
    cfg: ReconConfig,
    initial: tuple[ComplexGrid, ComplexGrid] | None = None,
) -> ReconResult:
    """Fill unmeasured entries so calibration null vectors annihilate both polarities.

    Minimizes ``sum ||C(k) N||^2 + lam * J(L(k+, k-))`` with measured entries held fixed.

    Args:
        d_plus (MeasuredData): RO+ lines.
        d_minus (MeasuredData): RO- lines.
        nullspace (NullspaceBasis): Null vectors estimated from calibration data.
        cfg (ReconConfig): Configuration in ``ac_loraks`` mode.
        initial (tuple[ComplexGrid, ComplexGrid] | None): Warm start for ``init="provided"``.

    Returns:
        ReconResult: Full grids whose measured entries equal the input exactly.
    """
    _require_mode(cfg, "ac_loraks")
    zero_filled, mask = _measured_stack(d_plus, d_minus)
    shape = zero_filled.shape[1:]
    penalty = NullspacePenalty(shape, nullspace, cfg)
    if nullspace.is_empty and cfg.lam == 0:
        logger.warning("Empty nullspace and lam=0: nothing to minimize, returning zero-filled data")
        k_plus, k_minus = _kspace_pair(zero_filled)
        return ReconResult(k_plus, k_minus, [0.0], converged=True, iterations=0, mode=cfg.mode)

    with_basis = not nullspace.is_empty
    problem = SurrogateProblem(
        lifting=LiftingOperator(shape, cfg.neighborhood, cfg.matrix_kind),
        weight=cfg.lam,
        x_fixed=zero_filled,
        free=~mask,
        data_normal=penalty.normal if with_basis else None,
        data_cost=penalty.value if with_basis else None,
    )
    logger.info(f"AC-LORAKS: nullity {nullspace.nullity}, lam={cfg.lam:.3g}, {cfg.matrix_kind}-matrix")
    outcome = mm_outer_loop(problem, cfg.regularizer, cfg, _initial_kspace(cfg, zero_filled, mask, initial))
    _log_outcome("ac_loraks", outcome)
    x = np.where(mask, zero_filled, outcome.x)
    k_plus, k_minus = _kspace_pair(x)
    return ReconResult(k_plus, k_minus, outcome.cost_trace, outcome.converged, outcome.iterations, mode=cfg.mode)


def unconstrained_objective(cfg: ReconConfig) -> PairObjective:
    """``J`` of the joint lifting of a k-space pair."""

    def objective(k_plus: ComplexGrid, k_minus: ComplexGrid) -> float:
        return evaluate(cfg.regularizer, lift_pair(k_plus, k_minus, cfg.neighborhood, cfg.matrix_kind))

    return objective


def ac_loraks_objective(nullspace: NullspaceBasis, cfg: ReconConfig) -> PairObjective:
    """Calibrated objective of a k-space pair: nullspace penalty plus ``lam * J``."""

    def objective(k_plus: ComplexGrid, k_minus: ComplexGrid) -> float:
        penalty = NullspacePenalty(k_plus.shape, nullspace, cfg)
        value = penalty.value(np.stack([k_plus.data, k_minus.data]))
        if cfg.lam > 0:
            lifted = lift_pair(k_plus, k_minus, cfg.neighborhood, cfg.matrix_kind)
            value += cfg.lam * evaluate(cfg.regularizer, lifted)
        return value

    return objective


def sense_objective(
    d_plus: MeasuredData,
    d_minus: MeasuredData,
    maps: SenseMaps,
    cfg: ReconConfig,
) -> PairObjective:
    """SENSE objective evaluated at the images ``E^H k`` of a k-space pair."""
    zero_filled, mask = _measured_stack(d_plus, d_minus)
    _check_maps(maps, zero_filled.shape[1:])
    problem, encoding = _sense_problem(zero_filled, mask, maps, cfg)

    def objective(k_plus: ComplexGrid, k_minus: ComplexGrid) -> float:
        rho = encoding.adjoint(np.stack([k_plus.data, k_minus.data]))
        value = problem.data_value(rho)
        if cfg.lam > 0:
            lifted = problem.lifting.wrap(problem.lifted(rho))
            value += cfg.lam * evaluate(cfg.regularizer, lifted)
        return value

    return objective
