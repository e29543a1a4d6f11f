"""Reconstruction service dispatching a configuration to its formulation."""

from typing import Any

from loguru import logger

from src.handlers.exceptions import ValidationFailedError
from src.service.kspace import ComplexGrid, MeasuredData
from src.service.solvers.formulations import solve_ac_loraks, solve_sense_loraks, solve_unconstrained
from src.service.solvers.models import NullspaceBasis, ReconResult, SenseMaps
from src.service.solvers.nullspace import estimate_nullspace
from src.settings import Settings
from src.utils.schemas import NeighborhoodSpec, ReconConfig


class Reconstructor:
    """Runs ghost-correction reconstructions with defaults taken from the settings."""

    def __init__(self, settings: Settings) -> None:
        """Initialize the reconstructor.

        Args:
            settings (Settings): Source of the built-in defaults.
        """
        self.settings = settings

    def default_config(self, **overrides: Any) -> ReconConfig:  # noqa: ANN401
        """Build a configuration from the settings, with keyword overrides on top."""
        base: dict[str, Any] = {
            "lam": self.settings.regularization_weight,
            "neighborhood": NeighborhoodSpec(
                radius=self.settings.neighborhood_radius,
                shape=self.settings.neighborhood_shape,  # type: ignore[arg-type]
            ),
            "outer_iters": self.settings.outer_iters,
            "cg_iters": self.settings.cg_iters,
            "cg_tol": self.settings.cg_tol,
            "stop_tol": self.settings.stop_tol,
            "svt_penalty": self.settings.svt_penalty,
            "rank_tau": self.settings.rank_tau,
            "nullspace_tol": self.settings.nullspace_tol,
        }
        base.update(overrides)
        return ReconConfig.model_validate(base)

    def calibrate(self, acs: ComplexGrid, cfg: ReconConfig) -> NullspaceBasis:
        """Estimate the calibration nullspace with the configuration's neighborhood and tolerances."""
        return estimate_nullspace(
            acs,
            cfg.neighborhood,
            rank_hint=cfg.nullspace_rank,
            tau=cfg.rank_tau,
            tol=cfg.nullspace_tol,
        )

    def reconstruct(  # noqa: PLR0913
        self,
        cfg: ReconConfig,
        d_plus: MeasuredData,
        d_minus: MeasuredData,
        *,
        maps: SenseMaps | None = None,
        nullspace: NullspaceBasis | None = None,
        acs: ComplexGrid | None = None,
        initial: tuple[ComplexGrid, ComplexGrid] | None = None,
    ) -> ReconResult:
        """Reconstruct one acquisition.

        Args:
            cfg (ReconConfig): Mode and solver settings.
            d_plus (MeasuredData): RO+ lines.
            d_minus (MeasuredData): RO- lines.
            maps (SenseMaps | None): Needed by ``sense`` and ``mussels_baseline``.
            nullspace (NullspaceBasis | None): Calibration basis for ``ac_loraks``.
            acs (ComplexGrid | None): Calibration data, used when ``nullspace`` is not given.
            initial (tuple[ComplexGrid, ComplexGrid] | None): Warm start for ``init="provided"``.

        Returns:
            ReconResult: The reconstruction.
        """
        logger.info(f"Reconstructing with mode={cfg.mode}")
        if cfg.mode == "unconstrained":
            return solve_unconstrained(d_plus, d_minus, cfg, initial)
        if cfg.mode in ("sense", "mussels_baseline"):
            if maps is None:
                msg = f"Mode '{cfg.mode}' needs sensitivity maps"
                raise ValidationFailedError(msg)
            return solve_sense_loraks(d_plus, d_minus, maps, cfg, initial)
        if nullspace is None:
            if acs is None:
                msg = "Mode 'ac_loraks' needs a nullspace basis or ACS data"
                raise ValidationFailedError(msg)
            nullspace = self.calibrate(acs, cfg)
        return solve_ac_loraks(d_plus, d_minus, nullspace, cfg, initial)
