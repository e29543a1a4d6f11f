"""Settings for the application."""

import os

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Built-in defaults for every configurable knob, overridable through SLM_* environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="SLM_",
        env_file=os.getenv("ENV_FILE_PATH", ".env"),
        env_file_encoding="utf-8",
        extra="ignore",
        protected_namespaces=("settings_",),
    )

    app_name: str = Field("slm-ghost", description="Component name shown in log lines and manifests")
    app_version: str = Field("0.1.0", description="Software version recorded in run manifests")
    log_level: str = Field("INFO", description="Minimum loguru level written to stderr")
    show_progress: bool = Field(default=False, description="Show tqdm progress bars for trial loops")

    neighborhood_radius: int = Field(2, description="LORAKS neighborhood radius")
    neighborhood_shape: str = Field("square", description="LORAKS neighborhood shape: square or disc")

    regularization_weight: float = Field(1e-3, description="Default regularization weight lambda")
    outer_iters: int = Field(50, description="Maximum number of majorize-minimize outer iterations")
    cg_iters: int = Field(30, description="Maximum number of conjugate-gradient iterations per outer step")
    cg_tol: float = Field(1e-8, description="Relative residual tolerance of the conjugate-gradient solver")
    stop_tol: float = Field(1e-6, description="Relative cost change that stops the outer loop")
    svt_penalty: float = Field(1.0, description="Splitting penalty used by the nuclear-norm solver")

    rank_tau: float = Field(0.05, description="Rank estimation requires sigma_{r+1} <= tau * sigma_1")
    rank_window: int | None = Field(None, description="Number of leading ratios searched by rank estimation")
    nullspace_tol: float = Field(0.05, description="Documented bound on ||C(acs) N||_F / ||C(acs)||_F")

    theorem_threshold: float = Field(1e-9, description="Pass threshold on relative singular-value discrepancy")
    landscape_points: int = Field(101, description="Number of uniform alpha points in a landscape scan")
    ordering_margin: float = Field(0.05, description="Relative NRMSE margin required between ranked methods")


settings = Settings()
