"""Sampling, zero-filling, sign-flip and Fourier operators plus the NRMSE metric."""

import numpy as np

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace.grid import ComplexGrid, MeasuredData, PatternLike, patterns_per_shot

SPATIAL_AXES = (0, 1)


def _require_kspace(grid: ComplexGrid) -> None:
    if grid.domain != "kspace":
        msg = f"Expected a k-space grid, got domain={grid.domain}"
        raise ValidationFailedError(msg)


def apply_sampling(k: ComplexGrid, patterns: PatternLike) -> MeasuredData:
    """Keep the phase-encode lines each shot measures (the A operator).

    Args:
        k (ComplexGrid): Full k-space grid.
        patterns (PatternLike): One pattern for every shot, or a per-shot sequence.

    Returns:
        MeasuredData: The rows of ``k`` at the kept lines, order preserved.
    """
    _require_kspace(k)
    per_shot = patterns_per_shot(patterns, k.ns)
    for pattern in per_shot:
        if pattern.ny != k.ny:
            msg = f"Sampling pattern expects ny={pattern.ny} but grid has ny={k.ny}"
            raise ValidationFailedError(msg)
    blocks = [k.data[..., shot][:, list(p.kept_lines), :] for shot, p in enumerate(per_shot)]
    return MeasuredData(patterns=per_shot, samples=np.stack(blocks, axis=-1))


def zero_fill(d: MeasuredData, nx: int | None = None) -> ComplexGrid:
    """Place measured samples on the full grid with zeros elsewhere (the A^H operator)."""
    nx = d.samples.shape[0] if nx is None else nx
    _, _, nc, ns = d.samples.shape
    data = np.zeros((nx, d.ny, nc, ns), dtype=np.complex128)
    for shot, pattern in enumerate(d.patterns):
        data[..., shot][:, list(pattern.kept_lines), :] = d.samples[..., shot]
    return ComplexGrid(data, "kspace")


def sign_flip_unmeasured(k: ComplexGrid, patterns: PatternLike) -> ComplexGrid:
    """Negate every line a pattern does not keep.

    The map is a linear involution. For the even-line pattern at ``R = 1`` it is the
    modulation ``(-1)^y``, which shifts the image by half the field of view.
    """
    _require_kspace(k)
    signs = np.ones((1, k.ny, 1, k.ns))
    for shot, pattern in enumerate(patterns_per_shot(patterns, k.ns)):
        signs[0, :, 0, shot] = np.where(pattern.mask(), 1.0, -1.0)
    return k.with_data(k.data * signs)


def fft2c(x: np.ndarray, axes: tuple[int, int] = SPATIAL_AXES) -> np.ndarray:
    """Orthonormal centered 2-D DFT over ``axes`` (the leading two by default)."""
    tmp = np.fft.ifftshift(x, axes=axes)
    tmp = np.fft.fft2(tmp, axes=axes, norm="ortho")
    return np.fft.fftshift(tmp, axes=axes)


def ifft2c(x: np.ndarray, axes: tuple[int, int] = SPATIAL_AXES) -> np.ndarray:
    """Inverse of :func:`fft2c`."""
    tmp = np.fft.ifftshift(x, axes=axes)
    tmp = np.fft.ifft2(tmp, axes=axes, norm="ortho")
    return np.fft.fftshift(tmp, axes=axes)


def fft2_centered(g: ComplexGrid) -> ComplexGrid:
    """Image grid to k-space grid, per channel and shot."""
    if g.domain != "image":
        msg = "fft2_centered expects an image-domain grid"
        raise ValidationFailedError(msg)
    return g.with_data(fft2c(g.data), "kspace")


def ifft2_centered(g: ComplexGrid) -> ComplexGrid:
    """K-space grid to image grid, per channel and shot."""
    _require_kspace(g)
    return g.with_data(ifft2c(g.data), "image")


def nrmse(est: ComplexGrid | np.ndarray, ref: ComplexGrid | np.ndarray, *, align_phase: bool = False) -> float:
    """Normalized root-mean-squared error ``||est - ref|| / ||ref||`` on complex values.

    Args:
        est (ComplexGrid | np.ndarray): Estimate.
        ref (ComplexGrid | np.ndarray): Reference of the same shape.
        align_phase (bool): Rotate ``est`` by the global phase that best matches ``ref`` first.

    Returns:
        float: The NRMSE.
    """
    est_arr = est.data if isinstance(est, ComplexGrid) else np.asarray(est)
    ref_arr = ref.data if isinstance(ref, ComplexGrid) else np.asarray(ref)
    if est_arr.shape != ref_arr.shape:
        msg = f"NRMSE shape mismatch: {est_arr.shape} vs {ref_arr.shape}"
        raise ValidationFailedError(msg)
    ref_norm = np.linalg.norm(ref_arr.ravel())
    if ref_norm == 0:
        msg = "NRMSE reference is all zero"
        raise ValidationFailedError(msg)
    if align_phase:
        overlap = np.vdot(est_arr, ref_arr)
        if overlap != 0:
            est_arr = est_arr * np.exp(1j * np.angle(overlap))
    return float(np.linalg.norm((est_arr - ref_arr).ravel()) / ref_norm)
