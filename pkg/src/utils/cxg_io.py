"""Reading and writing CXG complex arrays.

A CXG array is a pair of files sharing a stem: ``<stem>.cxg.json`` holds the header
(``dims`` as ``[nx, ny, nc, ns]``, the ``domain`` flag and ``dtype`` ``"c64"``) and
``<stem>.cxg.bin`` holds little-endian float64 ``(re, im)`` pairs with ``x`` varying fastest,
then ``y``, channel and shot.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np
from loguru import logger

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import ComplexGrid, MeasuredData, SamplingPattern, apply_sampling, zero_fill
from src.service.solvers import NullspaceBasis, SenseMaps

HEADER_SUFFIX = ".cxg.json"
DATA_SUFFIX = ".cxg.bin"
CXG_DTYPE = "c64"
WIRE_DTYPE = np.dtype("<c16")
CXG_NDIM = 4


def cxg_paths(stem: str | Path) -> tuple[Path, Path]:
    """Header and data paths of a CXG stem."""
    stem = Path(stem)
    return stem.with_name(stem.name + HEADER_SUFFIX), stem.with_name(stem.name + DATA_SUFFIX)


def write_array(stem: str | Path, data: np.ndarray, domain: str = "kspace", **extra: Any) -> list[Path]:  # noqa: ANN401
    """Write a 4-D complex array; ``extra`` keys are stored in the header.

    Returns:
        list[Path]: The header and data paths written.
    """
    data = np.asarray(data)
    if data.ndim != CXG_NDIM:
        msg = f"CXG arrays have 4 axes, got shape {data.shape}"
        raise ValidationFailedError(msg)
    header_path, data_path = cxg_paths(stem)
    header_path.parent.mkdir(parents=True, exist_ok=True)
    header = {"dims": list(data.shape), "domain": domain, "dtype": CXG_DTYPE, **extra}
    header_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    data_path.write_bytes(np.asarray(data, dtype=WIRE_DTYPE).ravel(order="F").tobytes())
    logger.debug(f"Wrote CXG {header_path.name} dims={list(data.shape)}")
    return [header_path, data_path]


def read_header(stem: str | Path) -> dict[str, Any]:
    """Parse and validate the header of a CXG stem."""
    header_path, _ = cxg_paths(stem)
    if not header_path.is_file():
        msg = f"CXG header not found: {header_path}"
        raise ValidationFailedError(msg)
    try:
        header = json.loads(header_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        msg = f"CXG header {header_path} is not valid JSON: {exc}"
        raise ValidationFailedError(msg) from exc
    dims = header.get("dims")
    if not isinstance(dims, list) or len(dims) != CXG_NDIM or not all(isinstance(d, int) and d >= 0 for d in dims):
        msg = f"CXG header {header_path} needs dims [nx, ny, nc, ns], got {dims!r}"
        raise ValidationFailedError(msg)
    if header.get("dtype") != CXG_DTYPE:
        msg = f"CXG header {header_path} has unsupported dtype {header.get('dtype')!r}"
        raise ValidationFailedError(msg)
    return header


def read_array(stem: str | Path) -> tuple[np.ndarray, dict[str, Any]]:
    """Read a CXG array and its header."""
    header = read_header(stem)
    _, data_path = cxg_paths(stem)
    if not data_path.is_file():
        msg = f"CXG data file not found: {data_path}"
        raise ValidationFailedError(msg)
    raw = np.frombuffer(data_path.read_bytes(), dtype=WIRE_DTYPE)
    dims = tuple(header["dims"])
    if raw.size != int(np.prod(dims)):
        msg = f"CXG data {data_path} holds {raw.size} samples, header dims {list(dims)} need {int(np.prod(dims))}"
        raise ValidationFailedError(msg)
    return raw.reshape(dims, order="F").astype(np.complex128), header


def write_cxg(stem: str | Path, grid: ComplexGrid) -> list[Path]:
    """Write a grid with its domain flag."""
    return write_array(stem, grid.data, grid.domain, content="grid")


def read_cxg(stem: str | Path) -> ComplexGrid:
    """Read a grid written by :func:`write_cxg` (or any CXG array with a grid domain)."""
    data, header = read_array(stem)
    domain = header.get("domain", "kspace")
    if domain not in ("kspace", "image"):
        msg = f"CXG {stem} has domain {domain!r}, expected 'kspace' or 'image'"
        raise ValidationFailedError(msg)
    return ComplexGrid(data, domain)


def write_measured(stem: str | Path, d: MeasuredData, nx: int | None = None) -> list[Path]:
    """Write measured lines as their zero-filled grid; the per-shot line sets go in the header."""
    grid = zero_fill(d, nx)
    return write_array(
        stem,
        grid.data,
        "kspace",
        content="measured",
        polarity=d.polarity,
        acceleration=d.pattern.acceleration,
        kept_lines=[list(p.kept_lines) for p in d.patterns],
    )


def read_measured(stem: str | Path) -> MeasuredData:
    """Read measured lines written by :func:`write_measured`."""
    data, header = read_array(stem)
    lines = header.get("kept_lines")
    if header.get("content") != "measured" or not isinstance(lines, list):
        msg = f"CXG {stem} does not hold measured data (no kept_lines in its header)"
        raise ValidationFailedError(msg)
    ny = data.shape[1]
    patterns = [
        SamplingPattern(
            ny=ny,
            kept_lines=tuple(shot_lines),
            polarity=header.get("polarity", "positive"),
            acceleration=int(header.get("acceleration", 1)),
        )
        for shot_lines in lines
    ]
    return apply_sampling(ComplexGrid(data), patterns)


def write_maps(stem: str | Path, maps: SenseMaps) -> list[Path]:
    """Write sensitivity maps as a one-shot image-domain array with their support."""
    return write_array(
        stem,
        maps.maps[..., np.newaxis],
        "image",
        content="maps",
        support=np.argwhere(maps.support).tolist(),
    )


def read_maps(stem: str | Path) -> SenseMaps:
    """Read sensitivity maps written by :func:`write_maps`."""
    data, header = read_array(stem)
    support = None
    if header.get("support") is not None:
        support = np.zeros(data.shape[:2], dtype=bool)
        indices = np.asarray(header["support"], dtype=int).reshape(-1, 2)
        support[indices[:, 0], indices[:, 1]] = True
    return SenseMaps(data[..., 0], support)


def write_nullspace(stem: str | Path, basis: NullspaceBasis) -> list[Path]:
    """Write a calibration nullspace as a ``(rows, nullity, 1, 1)`` array."""
    return write_array(
        stem,
        basis.n[:, :, np.newaxis, np.newaxis],
        "kspace",
        content="nullspace",
        source_rank=basis.source_rank,
        residual_ratio=basis.residual_ratio,
        flagged=basis.flagged,
    )


def read_nullspace(stem: str | Path) -> NullspaceBasis:
    """Read a calibration nullspace written by :func:`write_nullspace`."""
    data, header = read_array(stem)
    if header.get("content") != "nullspace":
        msg = f"CXG {stem} does not hold a nullspace basis"
        raise ValidationFailedError(msg)
    return NullspaceBasis(
        data[:, :, 0, 0],
        source_rank=int(header.get("source_rank", 0)),
        residual_ratio=float(header.get("residual_ratio", 0.0)),
        flagged=bool(header.get("flagged", False)),
    )
