"""Grid and sampling containers shared by every service.

Arrays are indexed ``(x, y, channel, shot)``: ``x`` is the readout axis and ``y`` the
phase-encode axis. Line 0 is the most negative phase-encode frequency and "even" lines
are the indices ``y % 2 == 0``.
"""

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np

from src.handlers.exceptions import ValidationFailedError

Domain = Literal["kspace", "image"]
Polarity = Literal["positive", "negative"]

MIN_GRID_SIZE = 2
GRID_NDIM = 4


@dataclass(frozen=True)
class ComplexGrid:
    """Complex samples on a Cartesian grid with channel and shot axes."""

    data: np.ndarray
    domain: Domain = "kspace"

    def __post_init__(self) -> None:
        """Validate shape and finiteness and freeze the underlying buffer."""
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != GRID_NDIM:
            msg = f"Grid data must have 4 axes (x, y, channel, shot), got shape {data.shape}"
            raise ValidationFailedError(msg)
        nx, ny, nc, ns = data.shape
        if nx < MIN_GRID_SIZE or ny < MIN_GRID_SIZE:
            msg = f"Grid needs nx, ny >= 2, got {nx}x{ny}"
            raise ValidationFailedError(msg)
        if ny % 2:
            msg = f"Phase-encode count must be even, got ny={ny}"
            raise ValidationFailedError(msg)
        if nc < 1 or ns < 1:
            msg = f"Grid needs at least one channel and one shot, got nc={nc}, ns={ns}"
            raise ValidationFailedError(msg)
        if not np.all(np.isfinite(data)):
            msg = "Grid data contains nonfinite entries"
            raise ValidationFailedError(msg)
        if self.domain not in ("kspace", "image"):
            msg = f"Unknown grid domain: {self.domain}"
            raise ValidationFailedError(msg)
        data = data.copy()
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, nx: int, ny: int, nc: int = 1, ns: int = 1, domain: Domain = "kspace") -> "ComplexGrid":
        """Return an all-zero grid."""
        return cls(np.zeros((nx, ny, nc, ns), dtype=np.complex128), domain)

    @classmethod
    def from_array(cls, array: np.ndarray, domain: Domain = "kspace") -> "ComplexGrid":
        """Wrap a 2-D, 3-D or 4-D array, appending missing channel/shot axes."""
        array = np.asarray(array)
        while array.ndim < GRID_NDIM:
            array = array[..., np.newaxis]
        return cls(array, domain)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        """Return ``(nx, ny, nc, ns)``."""
        return self.data.shape  # type: ignore[return-value]

    @property
    def nx(self) -> int:
        """Readout samples."""
        return self.data.shape[0]

    @property
    def ny(self) -> int:
        """Phase-encode lines."""
        return self.data.shape[1]

    @property
    def nc(self) -> int:
        """Channels."""
        return self.data.shape[2]

    @property
    def ns(self) -> int:
        """Shots."""
        return self.data.shape[3]

    def with_data(self, data: np.ndarray, domain: Domain | None = None) -> "ComplexGrid":
        """Return a grid with new samples and the same (or a new) domain flag."""
        return ComplexGrid(data, self.domain if domain is None else domain)

    def norm(self) -> float:
        """Euclidean norm over all entries."""
        return float(np.linalg.norm(self.data.ravel()))

    def inner(self, other: "ComplexGrid") -> complex:
        """Complex inner product ``<self, other>`` (conjugate-linear in ``self``)."""
        return complex(np.vdot(self.data, other.data))


@dataclass(frozen=True)
class SamplingPattern:
    """Phase-encode lines measured by one readout polarity (the A+/A- operators)."""

    ny: int
    kept_lines: tuple[int, ...]
    polarity: Polarity = "positive"
    acceleration: int = 1

    def __post_init__(self) -> None:
        """Check the line set is nonempty, strictly increasing and inside the grid."""
        lines = tuple(int(line) for line in self.kept_lines)
        if not lines:
            msg = "A sampling pattern needs at least one kept line"
            raise ValidationFailedError(msg)
        if any(b <= a for a, b in zip(lines, lines[1:], strict=False)):
            msg = f"Kept lines must be strictly increasing: {lines}"
            raise ValidationFailedError(msg)
        if lines[0] < 0 or lines[-1] >= self.ny:
            msg = f"Kept lines must lie in [0, {self.ny}), got {lines[0]}..{lines[-1]}"
            raise ValidationFailedError(msg)
        if self.acceleration < 1:
            msg = f"Acceleration must be >= 1, got {self.acceleration}"
            raise ValidationFailedError(msg)
        object.__setattr__(self, "kept_lines", lines)

    @classmethod
    def epi(  # noqa: PLR0913
        cls,
        ny: int,
        polarity: Polarity,
        acceleration: int = 1,
        shot: int = 0,
        n_shots: int = 1,
        offset: int = 0,
    ) -> "SamplingPattern":
        """Build the lines one polarity of one interleaved EPI shot measures.

        Shot ``s`` visits lines ``offset + s*R + n_shots*R*m``; even ``m`` are read out with the
        positive gradient, odd ``m`` with the negative one. With one shot and ``R = 1`` this is
        the even/odd split.

        Args:
            ny (int): Number of phase-encode lines.
            polarity (Polarity): Readout polarity.
            acceleration (int): Parallel imaging acceleration R.
            shot (int): Shot index.
            n_shots (int): Number of interleaved shots.
            offset (int): Global line offset.

        Returns:
            SamplingPattern: The pattern for that polarity and shot.
        """
        step = n_shots * acceleration
        start = offset + shot * acceleration + (step if polarity == "negative" else 0)
        lines = tuple(range(start, ny, 2 * step))
        return cls(ny=ny, kept_lines=lines, polarity=polarity, acceleration=acceleration)

    def mask(self) -> np.ndarray:
        """Boolean mask over phase-encode lines."""
        mask = np.zeros(self.ny, dtype=bool)
        mask[list(self.kept_lines)] = True
        return mask

    def is_disjoint(self, other: "SamplingPattern") -> bool:
        """Whether two patterns share no line."""
        return not set(self.kept_lines) & set(other.kept_lines)


PatternLike = SamplingPattern | Sequence[SamplingPattern]


def patterns_per_shot(patterns: PatternLike, ns: int) -> tuple[SamplingPattern, ...]:
    """Broadcast a single pattern to every shot or validate a per-shot sequence."""
    if isinstance(patterns, SamplingPattern):
        return (patterns,) * ns
    patterns = tuple(patterns)
    if len(patterns) != ns:
        msg = f"Expected one sampling pattern per shot ({ns}), got {len(patterns)}"
        raise ValidationFailedError(msg)
    return patterns


@dataclass(frozen=True)
class MeasuredData:
    """Samples on the kept lines of each shot, indexed ``(x, kept_line, channel, shot)``."""

    patterns: tuple[SamplingPattern, ...]
    samples: np.ndarray

    def __post_init__(self) -> None:
        """Validate the sample block against its patterns."""
        samples = np.asarray(self.samples, dtype=np.complex128)
        if samples.ndim != GRID_NDIM:
            msg = f"Measured samples must have 4 axes, got shape {samples.shape}"
            raise ValidationFailedError(msg)
        patterns = patterns_per_shot(self.patterns, samples.shape[-1])
        n_kept = {len(p.kept_lines) for p in patterns}
        if len(n_kept) != 1 or samples.shape[1] != n_kept.pop():
            msg = "Every shot must keep the same number of lines as the sample block holds"
            raise ValidationFailedError(msg)
        if len({p.ny for p in patterns}) != 1:
            msg = "Per-shot patterns disagree on the phase-encode count"
            raise ValidationFailedError(msg)
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "patterns", patterns)

    @property
    def pattern(self) -> SamplingPattern:
        """Pattern of the first shot (the only one for single-shot data)."""
        return self.patterns[0]

    @property
    def ny(self) -> int:
        """Phase-encode count of the full grid."""
        return self.patterns[0].ny

    @property
    def polarity(self) -> Polarity:
        """Readout polarity shared by the patterns."""
        return self.patterns[0].polarity

    def sample_count(self) -> int:
        """Number of complex samples."""
        return int(self.samples.size)


def sampling_mask(patterns: PatternLike, shape: tuple[int, int, int, int]) -> np.ndarray:
    """Boolean mask of measured entries for a ``(nx, ny, nc, ns)`` grid."""
    _, ny, _, ns = shape
    mask = np.zeros(shape, dtype=bool)
    for shot, pattern in enumerate(patterns_per_shot(patterns, ns)):
        if pattern.ny != ny:
            msg = f"Pattern expects ny={pattern.ny}, grid has ny={ny}"
            raise ValidationFailedError(msg)
        mask[..., shot][:, list(pattern.kept_lines), :] = True
    return mask
