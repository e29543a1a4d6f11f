"""Utilities for dumping reconstructed images as 8-bit portable graymaps."""

from pathlib import Path
from typing import Literal

import numpy as np
from loguru import logger
from PIL import Image

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import ComplexGrid

GraymapKind = Literal["magnitude", "phase"]

GRAY_LEVELS = 255


def to_gray_levels(image: np.ndarray, kind: GraymapKind = "magnitude") -> np.ndarray:
    """Map a complex 2-D image to ``uint8``.

    Magnitude is scaled so the maximum becomes 255 (an all-zero image stays black); phase maps
    ``[-pi, pi]`` linearly onto ``[0, 255]``.

    Args:
        image (np.ndarray): Complex image indexed ``(x, y)``.
        kind (GraymapKind): Which component to render.

    Returns:
        np.ndarray: Gray levels indexed ``(y, x)`` so phase-encode lines are image rows.
    """
    image = np.asarray(image)
    if image.ndim != 2:  # noqa: PLR2004
        msg = f"Graymaps are 2-D, got shape {image.shape}"
        raise ValidationFailedError(msg)
    if kind == "magnitude":
        magnitude = np.abs(image)
        peak = float(magnitude.max())
        levels = magnitude / peak * GRAY_LEVELS if peak > 0 else np.zeros_like(magnitude)
    elif kind == "phase":
        levels = (np.angle(image) + np.pi) / (2 * np.pi) * GRAY_LEVELS
    else:
        msg = f"Unknown graymap kind: {kind}"
        raise ValidationFailedError(msg)
    return np.clip(np.rint(levels), 0, GRAY_LEVELS).astype(np.uint8).T


def write_graymap(path: str | Path, image: np.ndarray, kind: GraymapKind = "magnitude") -> Path:
    """Write one complex 2-D image as a binary PGM file.

    Args:
        path (str | Path): Target ``.pgm`` path; parent directories are created.
        image (np.ndarray): Complex image indexed ``(x, y)``.
        kind (GraymapKind): ``magnitude`` or ``phase``.

    Returns:
        Path: The written path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(to_gray_levels(image, kind)).save(path, format="PPM")
    logger.debug(f"Wrote {kind} graymap {path.name}")
    return path


def write_grid_graymaps(out_dir: str | Path, name: str, grid: ComplexGrid) -> list[Path]:
    """Dump magnitude and phase of every channel and shot of an image-domain grid.

    Files are named ``<name>_c<channel>_s<shot>_<kind>.pgm``.
    """
    if grid.domain != "image":
        msg = f"Graymaps are written from image-domain grids, got '{grid.domain}'"
        raise ValidationFailedError(msg)
    out_dir = Path(out_dir)
    written = []
    for channel in range(grid.nc):
        for shot in range(grid.ns):
            plane = grid.data[:, :, channel, shot]
            for kind in ("magnitude", "phase"):
                written.append(write_graymap(out_dir / f"{name}_c{channel}_s{shot}_{kind}.pgm", plane, kind))
    return written
