"""Pytest configuration and shared fixtures.

Settings are read from the environment at import time, so the variables that would make
runs slow or noisy are pinned here before any ``src`` module is imported.
"""

import os
from collections.abc import Generator
from contextlib import contextmanager

import numpy as np
import pytest
from dependency_injector import providers


def _set_test_envs() -> None:
    """Pin settings that tests rely on."""
    os.environ.setdefault("SLM_SHOW_PROGRESS", "false")
    os.environ.setdefault("SLM_LOG_LEVEL", "WARNING")


_set_test_envs()

from src.service.kspace import ComplexGrid  # noqa: E402
from src.service.solvers import Reconstructor  # noqa: E402
from src.service.theory import FeasiblePair, random_feasible_pair  # noqa: E402
from src.settings import Settings  # noqa: E402
from src.utils.schemas import NeighborhoodSpec, SimScenario  # noqa: E402

# =============================================================================
# Provider Override Helper
# =============================================================================


@contextmanager
def override_providers(*overrides: tuple[providers.Provider, object]) -> Generator[None, None, None]:
    """Temporarily override dependency-injector providers.

    Args:
        *overrides: Tuples of (provider, value) to inject.
    """
    try:
        for provider, value in overrides:
            provider.override(providers.Object(value))
        yield
    finally:
        for provider, _ in overrides:
            provider.reset_override()


# =============================================================================
# Numerical Fixtures
# =============================================================================


def random_complex(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Circular complex Gaussian samples."""
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def exponential_sum_grid(rng: np.random.Generator, n_terms: int, nc: int, size: int = 16) -> ComplexGrid:
    """k-space made of ``n_terms`` complex exponentials shared by every channel, so its lifting has that rank."""
    x, y = np.meshgrid(np.arange(size), np.arange(size), indexing="ij")
    freqs = rng.uniform(-0.5, 0.5, (n_terms, 2))
    atoms = np.stack([np.exp(2j * np.pi * (fx * x + fy * y)) for fx, fy in freqs], axis=-1)
    return ComplexGrid((atoms @ random_complex(rng, (n_terms, nc)))[..., np.newaxis])


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded random stream."""
    return np.random.default_rng(1234)


@pytest.fixture
def neighborhood() -> NeighborhoodSpec:
    """Radius-2 square neighborhood."""
    return NeighborhoodSpec(radius=2)


@pytest.fixture
def small_grid(rng: np.random.Generator) -> ComplexGrid:
    """Random 16x16 k-space with two channels and one shot."""
    return ComplexGrid(random_complex(rng, (16, 16, 2, 1)))


@pytest.fixture
def random_pair(rng: np.random.Generator) -> FeasiblePair:
    """Random feasible pair on a 16x16 two-channel grid."""
    return random_feasible_pair(rng, 16, 16, 2)


@pytest.fixture
def small_scenario() -> SimScenario:
    """Smallest phantom scenario: 32x32, two coils, phase error on RO-."""
    return SimScenario(
        scenario_id="small",
        nx=32,
        ny=32,
        nc=2,
        phase_negative=[{"kind": "constant", "coefficients": (0.6,)}],
        acs_lines=16,
        seed=7,
    )


# =============================================================================
# Service Fixtures
# =============================================================================


@pytest.fixture
def test_settings() -> Settings:
    """Settings with short solver loops."""
    return Settings(outer_iters=3, cg_iters=5, show_progress=False)


@pytest.fixture
def reconstructor(test_settings: Settings) -> Reconstructor:
    """Reconstructor bound to the test settings."""
    return Reconstructor(test_settings)
