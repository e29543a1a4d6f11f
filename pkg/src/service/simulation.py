"""Simulated two-polarity EPI acquisitions: phantoms, coil maps, phase errors, sampling and noise."""

from dataclasses import dataclass

import numpy as np
from loguru import logger

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import ComplexGrid, MeasuredData, SamplingPattern, apply_sampling, fft2c
from src.service.solvers import SenseMaps
from src.utils.schemas import PhantomKind, PhaseErrorModel, SimScenario

MIN_PHANTOM_SIZE = 32
COIL_WIDTH = 2.0

# (intensity, semi-axis x, semi-axis y, center x, center y, rotation in degrees), modified Shepp-Logan.
SHEPP_LOGAN_ELLIPSES: tuple[tuple[float, float, float, float, float, float], ...] = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
)

# (intensity, radius, center x, center y); the outer disc spans under half of each axis.
DISCS: tuple[tuple[float, float, float, float], ...] = (
    (1.0, 0.45, 0.0, 0.0),
    (0.5, 0.12, 0.15, 0.1),
    (-0.4, 0.1, -0.15, -0.12),
    (0.3, 0.06, 0.05, -0.25),
)

PHASE_PRESETS: dict[str, PhaseErrorModel] = {
    "none": PhaseErrorModel(),
    "constant": PhaseErrorModel(kind="constant", coefficients=(np.pi / 2,)),
    "linear_1d": PhaseErrorModel(kind="linear_1d", coefficients=(0.3, 0.05)),
    "polynomial_2d": PhaseErrorModel(kind="polynomial_2d", coefficients=(0.4, 0.3, -0.2, 0.25, 0.15, -0.1)),
    "exaggerated": PhaseErrorModel(kind="polynomial_2d", coefficients=(1.2, 0.9, -0.6, 0.8, 0.5, -0.4)),
}


def normalized_coordinates(nx: int, ny: int) -> tuple[np.ndarray, np.ndarray]:
    """Pixel coordinates ``(i - n/2) / (n/2)`` in ``[-1, 1)`` for both axes, ``ij`` indexing."""
    u = (np.arange(nx) - nx / 2) / (nx / 2)
    v = (np.arange(ny) - ny / 2) / (ny / 2)
    return np.meshgrid(u, v, indexing="ij")


def _ellipse_mask(  # noqa: PLR0913
    u: np.ndarray,
    v: np.ndarray,
    a: float,
    b: float,
    x0: float,
    y0: float,
    phi: float,
) -> np.ndarray:
    angle = np.deg2rad(phi)
    du, dv = u - x0, v - y0
    ur = du * np.cos(angle) + dv * np.sin(angle)
    vr = -du * np.sin(angle) + dv * np.cos(angle)
    return (ur / a) ** 2 + (vr / b) ** 2 <= 1.0


def make_phantom(nx: int, ny: int, kind: PhantomKind = "shepp_logan") -> ComplexGrid:
    """Rasterize a real, nonnegative phantom whose support lies strictly inside the field of view.

    Args:
        nx (int): Readout size (at least 32).
        ny (int): Phase-encode size (at least 32).
        kind (PhantomKind): ``shepp_logan`` or ``discs`` (the latter spans under half of each axis).

    Returns:
        ComplexGrid: Image-domain grid with one channel and one shot.
    """
    if min(nx, ny) < MIN_PHANTOM_SIZE:
        msg = f"Phantoms need at least {MIN_PHANTOM_SIZE}x{MIN_PHANTOM_SIZE} pixels, got {nx}x{ny}"
        raise ValidationFailedError(msg)
    u, v = normalized_coordinates(nx, ny)
    image = np.zeros((nx, ny))
    if kind == "shepp_logan":
        for intensity, a, b, x0, y0, phi in SHEPP_LOGAN_ELLIPSES:
            image += intensity * _ellipse_mask(u, v, a, b, x0, y0, phi)
    elif kind == "discs":
        for intensity, radius, x0, y0 in DISCS:
            image += intensity * _ellipse_mask(u, v, radius, radius, x0, y0, 0.0)
    else:
        msg = f"Unknown phantom kind: {kind}"
        raise ValidationFailedError(msg)
    # Overlapping ellipses cancel to rounding level.
    image = np.where(image > 1e-12, image, 0.0)
    return ComplexGrid.from_array(image.astype(np.complex128), "image")


def phantom_support(nx: int, ny: int, kind: PhantomKind = "shepp_logan") -> np.ndarray:
    """Filled outline of a phantom (its outermost shape), used to score ghosts."""
    u, v = normalized_coordinates(nx, ny)
    if kind == "shepp_logan":
        _, a, b, x0, y0, phi = SHEPP_LOGAN_ELLIPSES[0]
        return _ellipse_mask(u, v, a, b, x0, y0, phi)
    _, radius, x0, y0 = DISCS[0]
    return _ellipse_mask(u, v, radius, radius, x0, y0, 0.0)


def make_sensitivities(nx: int, ny: int, nc: int) -> SenseMaps:
    """Smooth complex Gaussian-lobe coil profiles around the perimeter, sum-of-squares normalized.

    Args:
        nx (int): Readout size.
        ny (int): Phase-encode size.
        nc (int): Number of coils.

    Returns:
        SenseMaps: Maps normalized on the whole grid; a constant map when ``nc = 1``.
    """
    if nc < 1:
        msg = f"Need at least one coil, got {nc}"
        raise ValidationFailedError(msg)
    if nc == 1:
        return SenseMaps(np.ones((nx, ny, 1), dtype=np.complex128))
    xx, yy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
    width = COIL_WIDTH * min(nx, ny)
    radius = min(nx, ny) / 2
    profiles = []
    for coil in range(nc):
        theta = 2 * np.pi * coil / nc
        cx = radius * np.cos(theta) + nx / 2
        cy = radius * np.sin(theta) + ny / 2
        magnitude = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * width))
        ramp = np.pi * ((xx - nx / 2) * np.cos(theta) + (yy - ny / 2) * np.sin(theta)) / (4 * max(nx, ny))
        profiles.append(magnitude * np.exp(1j * (theta + ramp)))
    return SenseMaps.normalized(np.stack(profiles, axis=-1))


def phase_map(model: PhaseErrorModel, nx: int, ny: int) -> np.ndarray:
    """Phase error in radians on the ``(nx, ny)`` grid."""
    c = model.coefficients
    if model.kind == "none":
        return np.zeros((nx, ny))
    if model.kind == "constant":
        return np.full((nx, ny), c[0])
    if model.kind == "linear_1d":
        readout = np.arange(nx) - nx / 2
        return np.broadcast_to((c[0] + c[1] * readout)[:, np.newaxis], (nx, ny)).copy()
    u, v = normalized_coordinates(nx, ny)
    return c[0] + c[1] * u + c[2] * v + c[3] * u**2 + c[4] * u * v + c[5] * v**2


def apply_phase_error(img: ComplexGrid, m: PhaseErrorModel) -> ComplexGrid:
    """Multiply every channel and shot by ``exp(i * phi(x, y))``."""
    if img.domain != "image":
        msg = "Phase errors are applied to image-domain grids"
        raise ValidationFailedError(msg)
    if m.kind == "none":
        return img
    factor = np.exp(1j * phase_map(m, img.nx, img.ny))
    return img.with_data(img.data * factor[:, :, np.newaxis, np.newaxis])


def phase_preset(name: str, scale: float = 1.0) -> PhaseErrorModel:
    """Named phase-error model with every coefficient multiplied by ``scale``."""
    if name not in PHASE_PRESETS:
        msg = f"Unknown phase preset '{name}'; choose from {sorted(PHASE_PRESETS)}"
        raise ValidationFailedError(msg)
    preset = PHASE_PRESETS[name]
    return PhaseErrorModel(kind=preset.kind, coefficients=tuple(scale * c for c in preset.coefficients))


@dataclass(frozen=True)
class SimulatedAcquisition:
    """Measured data plus every ground truth needed to score a reconstruction."""

    scenario: SimScenario
    d_plus: MeasuredData
    d_minus: MeasuredData
    acs: ComplexGrid
    truth: ComplexGrid
    maps: SenseMaps
    support: np.ndarray
    k_plus_ref: ComplexGrid
    k_minus_ref: ComplexGrid
    image_plus_ref: ComplexGrid
    image_minus_ref: ComplexGrid


def _noise(rng: np.random.Generator, shape: tuple[int, ...], sigma: float) -> np.ndarray:
    """Circular complex Gaussian noise with standard deviation ``sigma``."""
    if sigma == 0:
        return np.zeros(shape, dtype=np.complex128)
    return sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def _coil_images(phantom: ComplexGrid, maps: SenseMaps) -> ComplexGrid:
    return ComplexGrid(phantom.data[:, :, :1, :1] * maps.maps[:, :, :, np.newaxis], "image")


def simulate_epi(
    scn: SimScenario,
    phantom: ComplexGrid | None = None,
    maps: SenseMaps | None = None,
) -> SimulatedAcquisition:
    """Simulate one interleaved EPI acquisition with polarity-dependent phase errors.

    Args:
        scn (SimScenario): Grid, coils, shots, acceleration, phase models, noise and seed.
        phantom (ComplexGrid | None): Ground-truth image (``scn.phantom`` is rasterized if omitted).
        maps (SenseMaps | None): Coil sensitivities (simulated if omitted).

    Returns:
        SimulatedAcquisition: RO+ / RO- data, ACS, truths and noiseless references.
    """
    rng = np.random.default_rng(scn.seed)
    default_phantom = phantom is None
    phantom = make_phantom(scn.nx, scn.ny, scn.phantom) if phantom is None else phantom
    maps = make_sensitivities(scn.nx, scn.ny, scn.nc) if maps is None else maps
    if phantom.shape[:2] != (scn.nx, scn.ny) or maps.maps.shape != (scn.nx, scn.ny, scn.nc):
        msg = f"Phantom {phantom.shape} / maps {maps.maps.shape} do not match the scenario grid"
        raise ValidationFailedError(msg)
    coil_images = _coil_images(phantom, maps)
    if default_phantom:
        support = phantom_support(scn.nx, scn.ny, scn.phantom)
    else:
        support = np.abs(phantom.data[:, :, 0, 0]) > 0

    measured: list[MeasuredData] = []
    references: list[ComplexGrid] = []
    images: list[ComplexGrid] = []
    for polarity in ("positive", "negative"):
        kspace, phased = [], []
        for shot in range(scn.ns):
            model = scn.phase_for(polarity, shot)
            kspace.append(fft2c(apply_phase_error(coil_images, model).data[..., 0]))
            phased.append(apply_phase_error(phantom, model).data[:, :, 0, 0])
        reference = ComplexGrid(np.stack(kspace, axis=-1))
        patterns = [SamplingPattern.epi(scn.ny, polarity, scn.acceleration, s, scn.ns) for s in range(scn.ns)]
        clean = apply_sampling(reference, patterns)
        noisy = clean.samples + _noise(rng, clean.samples.shape, scn.noise_sigma)
        measured.append(MeasuredData(patterns=clean.patterns, samples=noisy))
        references.append(reference)
        images.append(ComplexGrid(np.stack(phased, axis=-1)[:, :, np.newaxis, :], "image"))

    calibration = fft2c(apply_phase_error(coil_images, scn.acs_phase).data[..., 0])
    first = scn.ny // 2 - scn.acs_lines // 2
    acs_data = calibration[:, first : first + scn.acs_lines, :, np.newaxis]
    acs = ComplexGrid(acs_data + _noise(rng, acs_data.shape, scn.noise_sigma))

    logger.info(
        f"Simulated '{scn.scenario_id}': {scn.nx}x{scn.ny}, nc={scn.nc}, ns={scn.ns}, R={scn.acceleration}, "
        f"sigma={scn.noise_sigma:.3g}",
    )
    return SimulatedAcquisition(
        scenario=scn,
        d_plus=measured[0],
        d_minus=measured[1],
        acs=acs,
        truth=phantom,
        maps=maps,
        support=support,
        k_plus_ref=references[0],
        k_minus_ref=references[1],
        image_plus_ref=images[0],
        image_minus_ref=images[1],
    )


def standard_phantom_suite(
    accelerations: tuple[int, ...] = (1, 2, 3),
    phase: str = "polynomial_2d",
    seed: int = 0,
    size: int = 64,
) -> list[SimScenario]:
    """Eight-channel Shepp-Logan scenarios with a phase error on RO- only, one per acceleration."""
    return [
        SimScenario(
            scenario_id=f"phantom8_{phase}_R{r}",
            nx=size,
            ny=size,
            nc=8,
            acceleration=r,
            phantom="shepp_logan",
            phase_negative=[phase_preset(phase)],
            seed=seed,
        )
        for r in accelerations
    ]


def single_channel_loose_fov(seed: int = 0, size: int = 64, phase: str = "polynomial_2d") -> SimScenario:
    """One coil, small disc phantom (loose field of view), R = 1."""
    return SimScenario(
        scenario_id=f"discs1_{phase}",
        nx=size,
        ny=size,
        nc=1,
        phantom="discs",
        phase_negative=[phase_preset(phase)],
        seed=seed,
    )


def single_channel_tight_fov(seed: int = 0, size: int = 64, phase: str = "polynomial_2d") -> SimScenario:
    """One coil, Shepp-Logan filling most of the field of view, R = 1."""
    return SimScenario(
        scenario_id=f"phantom1_{phase}",
        nx=size,
        ny=size,
        nc=1,
        phantom="shepp_logan",
        phase_negative=[phase_preset(phase)],
        seed=seed,
    )
