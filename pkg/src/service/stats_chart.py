"""Charts of singular-value spectra and landscape scans."""

from collections.abc import Sequence
from pathlib import Path

import matplotlib as mpl
import numpy as np
from matplotlib import pyplot as plt

from src.handlers.exceptions import ValidationFailedError

# Use non-interactive backend for batch runs
mpl.use("Agg")

CHART_DPI = 150


def _save(fig: plt.Figure, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # No software tag in the PNG metadata
    fig.savefig(path, dpi=CHART_DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def generate_spectrum_chart(spectra: dict[str, np.ndarray], path: str | Path, title: str = "Singular values") -> Path:
    """Plot one or more descending spectra on a log scale.

    Args:
        spectra: Curve label mapped to singular values.
        path: Target PNG path.
        title: Chart title.

    Returns:
        Path to the written PNG file.
    """
    if not spectra:
        msg = "spectra dictionary cannot be empty"
        raise ValidationFailedError(msg)

    fig, ax = plt.subplots(figsize=(8, 5))
    for (label, values), style in zip(spectra.items(), ("-", "--", ":", "-."), strict=False):
        values = np.asarray(values, dtype=float)
        # Zeros cannot be drawn on a log axis
        floor = max(float(values.max()) * 1e-16, np.finfo(float).tiny) if values.size else 1.0
        ax.semilogy(np.arange(1, values.size + 1), np.maximum(values, floor), style, label=label, linewidth=1.5)

    ax.set_xlabel("Index", fontsize=12, fontweight="bold")
    ax.set_ylabel("Singular value", fontsize=12, fontweight="bold")
    ax.set_title(title, fontsize=14, fontweight="bold", pad=20)
    ax.legend()
    ax.grid(alpha=0.3, linestyle="--")
    ax.set_axisbelow(True)
    return _save(fig, path)


def generate_landscape_chart(
    points: Sequence[tuple[float, float]],
    path: str | Path,
    title: str = "Cost along the slice",
) -> Path:
    """Plot ``(alpha, cost)`` pairs with the zero-filled midpoint marked."""
    if not points:
        msg = "points cannot be empty"
        raise ValidationFailedError(msg)

    alphas, costs = zip(*points, strict=True)
    fig, ax = plt.subplots(figsize=(8, 5))
    ax.plot(alphas, costs, color="#4A90E2", linewidth=2)
    ax.axvline(0.5, color="#2E5C8A", alpha=0.6, linestyle="--", label="zero-filled")

    ax.set_xlabel("alpha", fontsize=12, fontweight="bold")
    ax.set_ylabel("Cost", fontsize=12, fontweight="bold")
    ax.set_title(title, fontsize=14, fontweight="bold", pad=20)
    ax.legend()
    ax.grid(alpha=0.3, linestyle="--")
    ax.set_axisbelow(True)
    return _save(fig, path)
