"""CSV writers, file digests and the atomic run-manifest writer."""

import csv
import hashlib
import io
import os
import tempfile
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np
from loguru import logger

from src.utils.schemas import RunManifest

DIGEST_CHUNK = 1 << 20


def write_text_atomic(path: str | Path, text: str) -> Path:
    """Write text through a temporary file in the same directory, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as tmp_file:
            tmp_file.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    return path


def _csv_text(header: Sequence[str] | None, rows: Iterable[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def spectrum_csv(sv: np.ndarray) -> str:
    """One singular value per line, in descending order."""
    values = np.sort(np.asarray(sv, dtype=float).ravel())[::-1]
    return "".join(f"{value:.10e}\n" for value in values)


def write_spectrum_csv(path: str | Path, sv: np.ndarray) -> Path:
    """Dump a singular-value spectrum."""
    return write_text_atomic(path, spectrum_csv(sv))


def write_landscape_csv(path: str | Path, points: Sequence[tuple[float, float]]) -> Path:
    """Dump ``(alpha, cost)`` pairs of a landscape scan."""
    rows = ([f"{alpha:.6g}", f"{cost:.10e}"] for alpha, cost in points)
    return write_text_atomic(path, _csv_text(("alpha", "cost"), rows))


def write_cost_trace_csv(path: str | Path, trace: Sequence[float]) -> Path:
    """Dump the outer-loop cost history, one row per recorded iteration."""
    rows = ([str(i), f"{cost:.10e}"] for i, cost in enumerate(trace))
    return write_text_atomic(path, _csv_text(("iteration", "cost"), rows))


def file_digest(path: str | Path) -> str:
    """SHA256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(DIGEST_CHUNK), b""):
            digest.update(chunk)
    return digest.hexdigest()


def digests(paths: Iterable[str | Path], root: str | Path | None = None) -> dict[str, str]:
    """Digest of every file, keyed by its path relative to ``root`` (or as given), sorted by key."""
    result = {}
    for path in paths:
        path = Path(path)
        key = path.relative_to(root).as_posix() if root is not None else path.as_posix()
        result[key] = file_digest(path)
    return dict(sorted(result.items()))


def write_manifest(out_dir: str | Path, manifest: RunManifest, name: str = "manifest.json") -> Path:
    """Write the run manifest atomically next to the outputs it describes."""
    path = write_text_atomic(Path(out_dir) / name, manifest.model_dump_json(indent=2) + "\n")
    logger.info(f"Manifest written to {path}")
    return path
