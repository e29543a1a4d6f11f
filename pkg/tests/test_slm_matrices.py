"""Tests for the C- and S-matrix liftings."""
# ruff: noqa: S101, PLR2004

import numpy as np
import pytest

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import ComplexGrid, SamplingPattern, sign_flip_unmeasured
from src.service.slm import (
    LiftingOperator,
    adjoint_lift_c,
    concat_polarities,
    lift_c,
    lift_pair,
    lift_s,
    mirror_indices,
    singular_values,
)
from src.utils.schemas import NeighborhoodSpec
from tests.conftest import random_complex


class TestNeighborhoodSpec:
    """Tests for neighborhood offsets."""

    def test_square_offsets(self) -> None:
        """A radius-1 square holds nine offsets, starting at (-1, -1)."""
        offsets = NeighborhoodSpec(radius=1).offsets
        assert offsets.shape == (9, 2)
        assert offsets[0].tolist() == [-1, -1]

    def test_disc_is_smaller_than_square(self) -> None:
        """The disc drops the corners."""
        assert NeighborhoodSpec(radius=2, shape="disc").n_offsets == 13


class TestLiftC:
    """Tests for the Toeplitz C matrix."""

    def test_shape(self, small_grid: ComplexGrid, neighborhood: NeighborhoodSpec) -> None:
        """Rows are valid centers, columns are channels times offsets."""
        m = lift_c(small_grid, neighborhood)
        assert (m.rows, m.cols) == (12 * 12, 2 * 25)
        assert m.provenance == "C"

    def test_entries_are_shifted_samples(self, small_grid: ComplexGrid, neighborhood: NeighborhoodSpec) -> None:
        """Entry (center, offset) is the sample at center minus offset."""
        m = lift_c(small_grid, neighborhood).entries
        k = small_grid.data[:, :, 0, 0]
        # Row 0 is center (2, 2), row 1 center (2, 3); column 0 is offset (-2, -2).
        assert m[0, 0] == k[4, 4]
        assert m[1, 0] == k[4, 5]
        assert m[0, 12] == k[2, 2]

    def test_grid_too_small_raises(self, neighborhood: NeighborhoodSpec) -> None:
        """A 4x4 grid has no full radius-2 neighborhood."""
        with pytest.raises(ValidationFailedError, match="too small"):
            lift_c(ComplexGrid.zeros(4, 4), neighborhood)

    def test_adjoint_matches_inner_product(self, rng: np.random.Generator, neighborhood: NeighborhoodSpec) -> None:
        """``<L x, M> = <x, L^H M>`` for the complex inner product."""
        x = ComplexGrid(random_complex(rng, (12, 10, 2, 1)))
        m = lift_c(x, neighborhood)
        probe = random_complex(rng, m.entries.shape)
        back = adjoint_lift_c(probe, neighborhood, x.shape)
        assert np.vdot(probe, m.entries) == pytest.approx(np.vdot(back.data, x.data), rel=1e-10)

    def test_odd_line_modulation_keeps_spectrum(
        self,
        small_grid: ComplexGrid,
        neighborhood: NeighborhoodSpec,
    ) -> None:
        """Negating every odd line leaves the singular values unchanged."""
        modulated = sign_flip_unmeasured(small_grid, SamplingPattern.epi(16, "positive"))
        sv = singular_values(lift_c(small_grid, neighborhood))
        sv_mod = singular_values(lift_c(modulated, neighborhood))
        np.testing.assert_allclose(sv_mod, sv, rtol=0, atol=1e-10 * sv[0])


class TestLiftS:
    """Tests for the real-valued S matrix."""

    def test_shape_and_realness(self, small_grid: ComplexGrid, neighborhood: NeighborhoodSpec) -> None:
        """Two real rows per center, two real columns per offset and channel."""
        m = lift_s(small_grid, neighborhood)
        assert (m.rows, m.cols) == (2 * 11 * 11, 2 * 2 * 25)
        assert np.isrealobj(m.entries)

    def test_odd_readout_size_raises(self, neighborhood: NeighborhoodSpec) -> None:
        """The mirror pairing needs even dimensions."""
        with pytest.raises(ValidationFailedError, match="even grid dimensions"):
            lift_s(ComplexGrid.zeros(15, 16), neighborhood)

    def test_adjoint_matches_real_inner_product(
        self,
        rng: np.random.Generator,
        neighborhood: NeighborhoodSpec,
    ) -> None:
        """``<S x, M> = Re <x, S^H M>`` for the real-linear lifting."""
        op = LiftingOperator((12, 12, 1, 1), neighborhood, "S")
        x = random_complex(rng, op.stacked_shape)
        probe = rng.standard_normal(op.matrix_shape)
        lhs = float(np.sum(op.forward(x) * probe))
        rhs = float(np.vdot(x, op.adjoint(probe)).real)
        assert lhs == pytest.approx(rhs, rel=1e-10)


class TestMirrorAndConcat:
    """Tests for mirror_indices and polarity concatenation."""

    def test_mirror_indices(self, rng: np.random.Generator) -> None:
        """``out[i, j] = x[-i mod nx, -j mod ny]`` on both spatial axes."""
        x = random_complex(rng, (1, 4, 6))
        out = mirror_indices(x)
        for i in range(4):
            for j in range(6):
                assert out[0, i, j] == x[0, (4 - i) % 4, (6 - j) % 6]

    def test_pair_layout(self, small_grid: ComplexGrid, neighborhood: NeighborhoodSpec) -> None:
        """The joint lifting lists RO+ channels before RO- channels."""
        m = lift_pair(small_grid, small_grid, neighborhood)
        assert m.cols == 2 * lift_c(small_grid, neighborhood).cols
        assert [key[1] for key in m.block_layout] == ["positive", "positive", "negative", "negative"]

    def test_concat_rejects_row_mismatch(self, rng: np.random.Generator, neighborhood: NeighborhoodSpec) -> None:
        """Liftings of different grids cannot be concatenated."""
        a = lift_c(ComplexGrid(random_complex(rng, (16, 16, 1, 1))), neighborhood)
        b = lift_c(ComplexGrid(random_complex(rng, (12, 16, 1, 1))), neighborhood, "negative")
        with pytest.raises(ValidationFailedError, match="rows"):
            concat_polarities(a, b)

    def test_concat_rejects_mixed_provenance(self, small_grid: ComplexGrid, neighborhood: NeighborhoodSpec) -> None:
        """C and S liftings do not mix."""
        a = lift_c(small_grid, neighborhood)
        b = lift_s(small_grid, neighborhood, "negative")
        with pytest.raises(ValidationFailedError):
            concat_polarities(a, b)
