"""Value types shared by the reconstruction formulations."""

from dataclasses import dataclass, field

import numpy as np

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import ComplexGrid

MAPS_NDIM = 3
MATRIX_NDIM = 2
NORMALIZATION_TOL = 1e-10
ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True)
class SenseMaps:
    """Coil sensitivities indexed ``(x, y, channel)``, sum-of-squares normalized on their support."""

    maps: np.ndarray
    support: np.ndarray | None = None

    def __post_init__(self) -> None:
        """Check the shape, the normalization and that maps vanish off the support."""
        maps = np.asarray(self.maps, dtype=np.complex128)
        if maps.ndim != MAPS_NDIM:
            msg = f"Sensitivity maps must have 3 axes (x, y, channel), got shape {maps.shape}"
            raise ValidationFailedError(msg)
        energy = np.sum(np.abs(maps) ** 2, axis=-1)
        support = energy > 0 if self.support is None else np.asarray(self.support, dtype=bool)
        if support.shape != maps.shape[:2]:
            msg = f"Support mask shape {support.shape} does not match maps {maps.shape[:2]}"
            raise ValidationFailedError(msg)
        if not support.any():
            msg = "Sensitivity maps have an empty support"
            raise ValidationFailedError(msg)
        if np.any(maps[~support] != 0):
            msg = "Sensitivity maps must vanish outside their support"
            raise ValidationFailedError(msg)
        deviation = float(np.max(np.abs(energy[support] - 1.0)))
        if deviation > NORMALIZATION_TOL:
            msg = f"Sensitivity maps are not sum-of-squares normalized (max deviation {deviation:.3e})"
            raise ValidationFailedError(msg)
        maps.flags.writeable = False
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "support", support)

    @classmethod
    def normalized(cls, raw: np.ndarray, support: np.ndarray | None = None) -> "SenseMaps":
        """Divide raw profiles by their root sum of squares (zero where every profile is zero)."""
        raw = np.asarray(raw, dtype=np.complex128)
        sos = np.sqrt(np.sum(np.abs(raw) ** 2, axis=-1, keepdims=True))
        maps = np.divide(raw, sos, out=np.zeros_like(raw), where=sos > 0)
        if support is not None:
            maps = maps * np.asarray(support, dtype=bool)[..., np.newaxis]
        return cls(maps, support)

    @classmethod
    def from_support(cls, mask: np.ndarray) -> "SenseMaps":
        """Single-channel binary mask used in place of a coil map."""
        mask = np.asarray(mask, dtype=bool)
        return cls(mask[..., np.newaxis].astype(np.complex128), mask)

    @property
    def nc(self) -> int:
        """Channels."""
        return self.maps.shape[2]

    @property
    def spatial_shape(self) -> tuple[int, int]:
        """Return ``(nx, ny)``."""
        return self.maps.shape[0], self.maps.shape[1]


@dataclass(frozen=True)
class NullspaceBasis:
    """Approximate right nullspace of a calibration C-matrix, one column per null vector."""

    n: np.ndarray
    source_rank: int
    residual_ratio: float = 0.0
    flagged: bool = False

    def __post_init__(self) -> None:
        """Check the basis is a 2-D matrix with orthonormal columns."""
        basis = np.asarray(self.n, dtype=np.complex128)
        if basis.ndim != MATRIX_NDIM:
            msg = f"Nullspace basis must be a matrix, got shape {basis.shape}"
            raise ValidationFailedError(msg)
        if basis.shape[1]:
            gram = basis.conj().T @ basis
            error = float(np.max(np.abs(gram - np.eye(basis.shape[1]))))
            if error > ORTHONORMALITY_TOL:
                msg = f"Nullspace columns are not orthonormal (max Gram error {error:.3e})"
                raise ValidationFailedError(msg)
        basis.flags.writeable = False
        object.__setattr__(self, "n", basis)

    @property
    def nullity(self) -> int:
        """Number of null vectors."""
        return self.n.shape[1]

    @property
    def is_empty(self) -> bool:
        """Whether no null vector was kept."""
        return self.nullity == 0

    @property
    def projector(self) -> np.ndarray:
        """``N N^H``."""
        return self.n @ self.n.conj().T


@dataclass(frozen=True)
class ReconResult:
    """Reconstructed per-polarity k-space, optional SENSE images and the outer-loop history."""

    k_plus: ComplexGrid
    k_minus: ComplexGrid
    cost_trace: list[float] = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    images: tuple[ComplexGrid, ComplexGrid] | None = None
    mode: str = "unconstrained"

    @property
    def grids(self) -> tuple[ComplexGrid, ComplexGrid]:
        """Return ``(k_plus, k_minus)``."""
        return self.k_plus, self.k_minus

    @property
    def final_cost(self) -> float:
        """Last recorded cost (``nan`` when nothing was recorded)."""
        return self.cost_trace[-1] if self.cost_trace else float("nan")
