"""Configuration and report schemas."""

import hashlib
import json
from functools import cached_property
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

MatrixKind = Literal["C", "S"]
ReconMode = Literal["unconstrained", "sense", "ac_loraks", "mussels_baseline"]
PhaseKind = Literal["none", "constant", "linear_1d", "polynomial_2d"]
PhantomKind = Literal["shepp_logan", "discs"]

PHASE_COEFFICIENT_COUNT: dict[str, int] = {"none": 0, "constant": 1, "linear_1d": 2, "polynomial_2d": 6}


class NeighborhoodSpec(BaseModel):
    """Support of the annihilating filters: which k-space offsets enter one lifted row."""

    model_config = ConfigDict(frozen=True)

    radius: int = Field(2, ge=1)
    shape: Literal["square", "disc"] = "square"

    @cached_property
    def offsets(self) -> np.ndarray:
        """Offsets ``(dx, dy)`` inside the shape, in row-major order, shape ``(n_offsets, 2)``."""
        span = np.arange(-self.radius, self.radius + 1)
        dx, dy = np.meshgrid(span, span, indexing="ij")
        pairs = np.stack([dx.ravel(), dy.ravel()], axis=1)
        if self.shape == "disc":
            pairs = pairs[(pairs**2).sum(axis=1) <= self.radius**2]
        return pairs

    @property
    def n_offsets(self) -> int:
        """Number of offsets (columns of one lifted block for the C matrix)."""
        return len(self.offsets)

    def center_ranges(self, nx: int, ny: int, kind: MatrixKind = "C") -> tuple[range, range]:
        """Centers whose whole neighborhood (and, for S, its mirror) stays on the grid."""
        low = self.radius + (1 if kind == "S" else 0)
        return range(low, nx - self.radius), range(low, ny - self.radius)

    def valid_centers(self, nx: int, ny: int, kind: MatrixKind = "C") -> np.ndarray:
        """Valid centers as an array of shape ``(n_centers, 2)``; may be empty."""
        xs, ys = self.center_ranges(nx, ny, kind)
        cx, cy = np.meshgrid(np.asarray(xs), np.asarray(ys), indexing="ij")
        return np.stack([cx.ravel(), cy.ravel()], axis=1).astype(int)


class Regularizer(BaseModel):
    """Singular-value penalty J applied to a lifted matrix."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["nuclear", "rank_residual"] = "rank_residual"
    r: int = Field(0, ge=0)


class ReconConfig(BaseModel):
    """Solver mode, penalty and iteration controls for one reconstruction."""

    mode: ReconMode = "unconstrained"
    matrix_kind: MatrixKind = "C"
    regularizer: Regularizer = Field(default_factory=Regularizer)
    lam: float = Field(1e-3, ge=0, description="Regularization weight lambda")
    neighborhood: NeighborhoodSpec = Field(default_factory=NeighborhoodSpec)
    outer_iters: int = Field(50, ge=1)
    cg_iters: int = Field(30, ge=1)
    cg_tol: float = Field(1e-8, gt=0)
    stop_tol: float = Field(1e-6, ge=0)
    svt_penalty: float = Field(1.0, gt=0)
    rank_tau: float = Field(0.05, gt=0, le=1)
    nullspace_tol: float = Field(0.05, gt=0)
    nullspace_rank: int | None = Field(
        None,
        ge=0,
        description="Calibration rank; estimated from the spectrum when unset",
    )
    init: Literal["zero_filled", "provided", "perturbed"] = "zero_filled"
    init_scale: float = Field(
        0.1,
        gt=0,
        description="Noise level of the perturbed start, relative to the RMS of the measured samples",
    )
    init_seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def force_mussels_configuration(self) -> "ReconConfig":
        """MUSSELS always lifts with the C matrix and penalizes the nuclear norm."""
        if self.mode == "mussels_baseline":
            self.matrix_kind = "C"
            self.regularizer = Regularizer(kind="nuclear", r=self.regularizer.r)
        return self


class PhaseErrorModel(BaseModel):
    """Smooth phase error (radians) imposed on the image of one readout polarity.

    ``constant``: ``[c0]``. ``linear_1d``: ``[offset, slope per readout pixel]``.
    ``polynomial_2d``: ``[1, x, y, x^2, x*y, y^2]`` coefficients over ``[-1, 1]^2``.
    """

    model_config = ConfigDict(frozen=True)

    kind: PhaseKind = "none"
    coefficients: tuple[float, ...] = ()

    @model_validator(mode="after")
    def check_coefficient_count(self) -> "PhaseErrorModel":
        """Each kind takes a fixed number of finite coefficients."""
        expected = PHASE_COEFFICIENT_COUNT[self.kind]
        if len(self.coefficients) != expected:
            msg = f"Phase model '{self.kind}' takes {expected} coefficients, got {len(self.coefficients)}"
            raise ValueError(msg)
        if not all(np.isfinite(self.coefficients)):
            msg = "Phase coefficients must be finite"
            raise ValueError(msg)
        return self


class SimScenario(BaseModel):
    """Everything needed to regenerate one simulated EPI acquisition."""

    scenario_id: str = "phantom"
    nx: int = Field(64, ge=2)
    ny: int = Field(64, ge=2)
    nc: int = Field(8, ge=1)
    ns: int = Field(1, ge=1)
    acceleration: int = Field(1, ge=1)
    phantom: PhantomKind = "shepp_logan"
    phase_positive: list[PhaseErrorModel] = Field(default_factory=lambda: [PhaseErrorModel()])
    phase_negative: list[PhaseErrorModel] = Field(default_factory=lambda: [PhaseErrorModel()])
    acs_phase: PhaseErrorModel = Field(default_factory=PhaseErrorModel)
    noise_sigma: float = Field(0.0, ge=0)
    acs_lines: int = Field(24, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def check_consistency(self) -> "SimScenario":
        """ACS must fit in the grid; phase models are given once or once per shot."""
        if self.acs_lines > self.ny:
            msg = f"acs_lines={self.acs_lines} exceeds ny={self.ny}"
            raise ValueError(msg)
        if self.ny % 2 or self.acs_lines % 2:
            msg = f"ny and acs_lines must be even, got ny={self.ny}, acs_lines={self.acs_lines}"
            raise ValueError(msg)
        for name in ("phase_positive", "phase_negative"):
            models = getattr(self, name)
            if len(models) not in (1, self.ns):
                msg = f"{name} must hold 1 or ns={self.ns} models, got {len(models)}"
                raise ValueError(msg)
        return self

    def phase_for(self, polarity: str, shot: int) -> PhaseErrorModel:
        """Phase model of one (polarity, shot)."""
        models = self.phase_positive if polarity == "positive" else self.phase_negative
        return models[shot if len(models) > 1 else 0]


class ExperimentRow(BaseModel):
    """One (scenario, method, R) line of an experiment report."""

    scenario: str
    method: str
    acceleration: int
    nrmse: float = float("nan")
    nrmse_combined: float = float("nan")
    ghost_ratio: float = float("nan")
    iterations: int = 0
    status: str = "ok"
    wall_time: float = 0.0


class RunManifest(BaseModel):
    """Provenance written next to every output set."""

    command: list[str]
    config_hash: str
    effective_config: dict[str, Any]
    seed: int | None = None
    software_version: str
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)
    wall_time: float = 0.0


def config_hash(config: dict[str, Any]) -> str:
    """SHA256 of the canonical JSON dump of an effective configuration."""
    return hashlib.sha256(json.dumps(config, sort_keys=True, default=str).encode("utf-8")).hexdigest()


class EvaluateConfig(BaseModel):
    """Experiment matrix run by ``evaluate``; explicit ``scenarios`` replace the preset suite."""

    suite: Literal["standard", "single_channel", "all"] = "standard"
    scenarios: list[SimScenario] | None = None
    accelerations: list[int] = Field(default_factory=lambda: [1, 2, 3])
    methods: list[str] = Field(default_factory=lambda: ["ac_loraks", "sense", "mussels_baseline", "zero_fill"])
    size: int = Field(64, ge=32)
    phase: str = "polynomial_2d"
    noise_sigma: float = Field(0.0, ge=0)
    seed: int = 0
    dump_images: bool = False
    include_wall_time: bool = False

    @model_validator(mode="after")
    def check_accelerations(self) -> "EvaluateConfig":
        """Accelerations are positive."""
        if any(r < 1 for r in self.accelerations):
            msg = f"Accelerations must be >= 1, got {self.accelerations}"
            raise ValueError(msg)
        return self


class TheoremSuiteConfig(BaseModel):
    """Quantified grid of sign-flip checks run by ``verify-theorem``."""

    radii: list[int] = Field(default_factory=lambda: [1, 2, 3])
    channels: list[int] = Field(default_factory=lambda: [1, 2, 4])
    kinds: list[MatrixKind] = Field(default_factory=lambda: ["C", "S"])
    trials: int = Field(100, ge=1)
    size: int = Field(16, ge=4)
    seed: int = 0

    @model_validator(mode="after")
    def check_grid(self) -> "TheoremSuiteConfig":
        """Radii and channel counts are positive; the grid is even-sized."""
        if any(r < 1 for r in self.radii) or any(c < 1 for c in self.channels):
            msg = "Radii and channel counts must be >= 1"
            raise ValueError(msg)
        if self.size % 2:
            msg = f"Grid size must be even, got {self.size}"
            raise ValueError(msg)
        return self


class LandscapeConfig(BaseModel):
    """One scan between a feasible pair and its flipped counterpart."""

    regularizer: Regularizer = Field(default_factory=lambda: Regularizer(kind="nuclear"))
    neighborhood: NeighborhoodSpec = Field(default_factory=NeighborhoodSpec)
    matrix_kind: MatrixKind = "C"
    points: int = Field(101, ge=2)
    source: Literal["random", "scenario"] = "random"
    objective: Literal["lifted", "ac_loraks", "sense"] = "lifted"
    size: int = Field(16, ge=4)
    channels: int = Field(1, ge=1)
    seed: int = 0
    lam: float = Field(1e-3, ge=0)
    scenario: SimScenario | None = None


class SpectrumConfig(BaseModel):
    """Lifting whose singular values ``spectrum`` dumps."""

    neighborhood: NeighborhoodSpec = Field(default_factory=NeighborhoodSpec)
    matrix_kind: MatrixKind = "C"
    size: int = Field(16, ge=4)
    channels: int = Field(1, ge=1)
    seed: int = 0
