"""LORAKS C- and S-matrix liftings, their adjoints and polarity concatenation.

Every lifting works on a polarity-stacked array of shape ``(P, nx, ny, nc, ns)``. Rows index
valid neighborhood centers (for S, each center contributes two real rows). Column blocks
are ordered shot-major, then polarity, then channel; each block holds one column per
neighborhood offset (two per offset for S: filter real parts, then imaginary parts).
"""

from dataclasses import dataclass

import numpy as np

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import ComplexGrid, Polarity
from src.utils.schemas import MatrixKind, NeighborhoodSpec

POLARITIES: tuple[Polarity, Polarity] = ("positive", "negative")
BlockKey = tuple[int, str, int]


@dataclass(frozen=True)
class LiftedMatrix:
    """Dense structured matrix produced by lifting k-space data."""

    entries: np.ndarray
    provenance: MatrixKind
    block_layout: tuple[BlockKey, ...]
    block_width: int

    @property
    def rows(self) -> int:
        """Row count."""
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        """Column count."""
        return self.entries.shape[1]


def mirror_indices(x: np.ndarray) -> np.ndarray:
    """Reorder both spatial axes so that ``out[i, j] = x[(nx - i) % nx, (ny - j) % ny]``.

    With index ``i`` at frequency ``i - n/2`` this is evaluation at ``-k``.
    """
    flipped = x[:, ::-1, ::-1]
    return np.roll(flipped, shift=(1, 1), axis=(1, 2))


class LiftingOperator:
    """Forward and adjoint lifting for a fixed grid shape, neighborhood and matrix kind."""

    def __init__(
        self,
        grid_shape: tuple[int, int, int, int],
        neighborhood: NeighborhoodSpec,
        kind: MatrixKind = "C",
        n_polarities: int = 2,
    ) -> None:
        """Precompute center ranges and check the grid supports the neighborhood.

        Args:
            grid_shape (tuple[int, int, int, int]): ``(nx, ny, nc, ns)`` of one polarity.
            neighborhood (NeighborhoodSpec): Neighborhood shape and radius.
            kind (MatrixKind): ``"C"`` (Toeplitz) or ``"S"`` (Toeplitz + conjugate Hankel).
            n_polarities (int): Number of stacked polarity grids.
        """
        nx, ny, nc, ns = grid_shape
        if kind == "S" and (nx % 2 or ny % 2):
            msg = f"S-matrix lifting needs even grid dimensions symmetric about the center, got {nx}x{ny}"
            raise ValidationFailedError(msg)
        xs, ys = neighborhood.center_ranges(nx, ny, kind)
        if len(xs) == 0 or len(ys) == 0:
            msg = f"Grid {nx}x{ny} is too small for a radius-{neighborhood.radius} neighborhood ({kind} matrix)"
            raise ValidationFailedError(msg)
        self.grid_shape = grid_shape
        self.neighborhood = neighborhood
        self.kind: MatrixKind = kind
        self.n_polarities = n_polarities
        self.xs = xs
        self.ys = ys
        self.n_centers = len(xs) * len(ys)
        self.offsets = neighborhood.offsets
        self.n_offsets = len(self.offsets)
        self.block_width = self.n_offsets * (2 if kind == "S" else 1)
        self.block_layout: tuple[BlockKey, ...] = tuple(
            (channel, POLARITIES[p] if n_polarities == len(POLARITIES) else "positive", shot)
            for shot in range(ns)
            for p in range(n_polarities)
            for channel in range(nc)
        )

    @property
    def stacked_shape(self) -> tuple[int, ...]:
        """Shape of the polarity-stacked input."""
        return (self.n_polarities, *self.grid_shape)

    @property
    def matrix_shape(self) -> tuple[int, int]:
        """Shape of the lifted matrix."""
        rows = self.n_centers * (2 if self.kind == "S" else 1)
        return rows, len(self.block_layout) * self.block_width

    def _slices(self, offset: np.ndarray) -> tuple[slice, slice]:
        dx, dy = int(offset[0]), int(offset[1])
        return (
            slice(self.xs.start - dx, self.xs.stop - dx),
            slice(self.ys.start - dy, self.ys.stop - dy),
        )

    def _patches(self, x: np.ndarray) -> np.ndarray:
        """Neighborhood values ``x[c - o]`` as ``(n_centers, ns, P, nc, n_offsets)``."""
        n_pol, _, _, nc, ns = x.shape
        patches = np.empty((n_pol, len(self.xs), len(self.ys), nc, ns, self.n_offsets), dtype=x.dtype)
        for j, offset in enumerate(self.offsets):
            sx, sy = self._slices(offset)
            patches[..., j] = x[:, sx, sy]
        patches = patches.reshape(n_pol, self.n_centers, nc, ns, self.n_offsets)
        return patches.transpose(1, 3, 0, 2, 4)

    def _scatter(self, patches: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`_patches`: accumulate patch values back onto the grid."""
        n_pol, nx, ny, nc, ns = self.stacked_shape
        grid_patches = patches.transpose(2, 0, 3, 1, 4).reshape(n_pol, len(self.xs), len(self.ys), nc, ns, -1)
        out = np.zeros((n_pol, nx, ny, nc, ns), dtype=np.complex128)
        for j, offset in enumerate(self.offsets):
            sx, sy = self._slices(offset)
            out[:, sx, sy] += grid_patches[..., j]
        return out

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != self.stacked_shape:
            msg = f"Lifting expects stacked shape {self.stacked_shape}, got {x.shape}"
            raise ValidationFailedError(msg)
        return x

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Lift a polarity-stacked k-space array into the structured matrix."""
        x = self._check_input(x).astype(np.complex128, copy=False)
        a = self._patches(x)
        if self.kind == "C":
            return a.reshape(self.n_centers, -1)
        b = np.conj(self._patches(mirror_indices(x)))
        top = np.concatenate([(a - b).real, -(a + b).imag], axis=-1)
        bottom = np.concatenate([(a - b).imag, (a + b).real], axis=-1)
        return np.vstack([top.reshape(self.n_centers, -1), bottom.reshape(self.n_centers, -1)])

    def adjoint(self, m: np.ndarray) -> np.ndarray:
        """Exact adjoint of :meth:`forward` (complex inner product for C, real for S)."""
        m = np.asarray(m)
        if m.shape != self.matrix_shape:
            msg = f"Adjoint lifting expects matrix shape {self.matrix_shape}, got {m.shape}"
            raise ValidationFailedError(msg)
        _, _, _, nc, ns = self.stacked_shape
        block_shape = (self.n_centers, ns, self.n_polarities, nc, self.block_width)
        if self.kind == "C":
            return self._scatter(m.reshape(block_shape))
        top = m[: self.n_centers].reshape(block_shape)
        bottom = m[self.n_centers :].reshape(block_shape)
        t1, t2 = top[..., : self.n_offsets], top[..., self.n_offsets :]
        u1, u2 = bottom[..., : self.n_offsets], bottom[..., self.n_offsets :]
        grad_a = (t1 + u2) + 1j * (u1 - t2)
        grad_mirror = (u2 - t1) + 1j * (t2 + u1)
        return self._scatter(grad_a) + mirror_indices(self._scatter(grad_mirror))

    def normal(self, x: np.ndarray) -> np.ndarray:
        """Apply ``L^H L``."""
        return self.adjoint(self.forward(x))

    def reference_counts(self) -> np.ndarray:
        """How many (center, offset) pairs reference each grid location (C lifting)."""
        counts = np.zeros(self.stacked_shape)
        for offset in self.offsets:
            sx, sy = self._slices(offset)
            counts[:, sx, sy] += 1
        return counts

    def wrap(self, entries: np.ndarray) -> LiftedMatrix:
        """Attach provenance and layout to raw entries."""
        return LiftedMatrix(entries, self.kind, self.block_layout, self.block_width)


def _single_polarity_operator(k: ComplexGrid, n: NeighborhoodSpec, kind: MatrixKind) -> LiftingOperator:
    if k.domain != "kspace":
        msg = "Liftings expect k-space grids"
        raise ValidationFailedError(msg)
    return LiftingOperator(k.shape, n, kind, n_polarities=1)


def _relabel(op: LiftingOperator, polarity: Polarity) -> tuple[BlockKey, ...]:
    return tuple((channel, polarity, shot) for channel, _, shot in op.block_layout)


def lift_c(k: ComplexGrid, n: NeighborhoodSpec, polarity: Polarity = "positive") -> LiftedMatrix:
    """Toeplitz-structured C-matrix of one polarity grid: ``entry(c, o) = k[c - o]``."""
    op = _single_polarity_operator(k, n, "C")
    return LiftedMatrix(op.forward(k.data[np.newaxis]), "C", _relabel(op, polarity), op.block_width)


def lift_s(k: ComplexGrid, n: NeighborhoodSpec, polarity: Polarity = "positive") -> LiftedMatrix:
    """Real-valued S-matrix pairing each neighborhood with its conjugated mirror at ``-k``."""
    op = _single_polarity_operator(k, n, "S")
    return LiftedMatrix(op.forward(k.data[np.newaxis]), "S", _relabel(op, polarity), op.block_width)


def lift(k: ComplexGrid, n: NeighborhoodSpec, kind: MatrixKind, polarity: Polarity = "positive") -> LiftedMatrix:
    """Dispatch to :func:`lift_c` or :func:`lift_s`."""
    return lift_c(k, n, polarity) if kind == "C" else lift_s(k, n, polarity)


def _adjoint_lift(
    m: LiftedMatrix | np.ndarray,
    n: NeighborhoodSpec,
    grid_shape: tuple[int, int, int, int],
    kind: MatrixKind,
) -> ComplexGrid:
    entries = m.entries if isinstance(m, LiftedMatrix) else np.asarray(m)
    op = LiftingOperator(grid_shape, n, kind, n_polarities=1)
    return ComplexGrid(op.adjoint(entries)[0], "kspace")


def adjoint_lift_c(
    m: LiftedMatrix | np.ndarray,
    n: NeighborhoodSpec,
    grid_shape: tuple[int, int, int, int],
) -> ComplexGrid:
    """Adjoint of :func:`lift_c`: each location receives the sum of entries referencing it."""
    return _adjoint_lift(m, n, grid_shape, "C")


def adjoint_lift_s(
    m: LiftedMatrix | np.ndarray,
    n: NeighborhoodSpec,
    grid_shape: tuple[int, int, int, int],
) -> ComplexGrid:
    """Adjoint of :func:`lift_s` under the real inner product ``Re <x, y>``."""
    return _adjoint_lift(m, n, grid_shape, "S")


def concat_polarities(m_plus: LiftedMatrix, m_minus: LiftedMatrix) -> LiftedMatrix:
    """Concatenate two liftings column-wise, interleaving per shot (RO+ channels, then RO- channels).

    Raises:
        ValidationFailedError: On row-count or provenance mismatch.
    """
    if m_plus.rows != m_minus.rows:
        msg = f"Cannot concatenate liftings with {m_plus.rows} and {m_minus.rows} rows"
        raise ValidationFailedError(msg)
    if m_plus.provenance != m_minus.provenance or m_plus.block_width != m_minus.block_width:
        msg = "Cannot concatenate liftings of different provenance"
        raise ValidationFailedError(msg)

    width = m_plus.block_width
    shots = sorted({shot for _, _, shot in m_plus.block_layout + m_minus.block_layout})
    columns: list[np.ndarray] = []
    layout: list[BlockKey] = []
    for shot in shots:
        for source in (m_plus, m_minus):
            for index, key in enumerate(source.block_layout):
                if key[2] == shot:
                    columns.append(source.entries[:, index * width : (index + 1) * width])
                    layout.append(key)
    return LiftedMatrix(np.hstack(columns), m_plus.provenance, tuple(layout), width)


def lift_pair(
    k_plus: ComplexGrid,
    k_minus: ComplexGrid,
    n: NeighborhoodSpec,
    kind: MatrixKind = "C",
) -> LiftedMatrix:
    """Lift both polarities and concatenate them (the joint matrix of the ghost-correction problem)."""
    return concat_polarities(lift(k_plus, n, kind, "positive"), lift(k_minus, n, kind, "negative"))


def singular_values(m: LiftedMatrix | np.ndarray) -> np.ndarray:
    """Singular values in descending order."""
    entries = m.entries if isinstance(m, LiftedMatrix) else np.asarray(m)
    return np.linalg.svd(entries, compute_uv=False)

