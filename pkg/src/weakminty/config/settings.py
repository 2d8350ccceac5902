"""
Centralized configuration for weakminty using Pydantic Settings.

Configuration is loaded from environment variables with the WEAKMINTY_ prefix,
or from a .env file in the working directory.
"""

from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class WeakMintySettings(BaseSettings):
    """
    weakminty configuration settings.

    All settings can be overridden via environment variables with the WEAKMINTY_ prefix.
    Example: WEAKMINTY_OUTPUT_DIR, WEAKMINTY_TOLERANCE, etc.
    """

    model_config = SettingsConfigDict(
        env_prefix="WEAKMINTY_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # --- Output ---
    output_dir: Path = Field(
        default=Path("runs"),
        description="Directory where run, sweep and signmap artifacts are written",
    )
    csv_precision: int = Field(
        default=17,
        ge=6,
        le=17,
        description="Significant digits used for reals in CSV output",
    )

    # --- Run control ---
    divergence_threshold: float = Field(
        default=1e12,
        gt=0.0,
        description="A run is declared diverged once the iterate norm exceeds this",
    )
    tolerance: float = Field(
        default=1e-6,
        gt=0.0,
        description="Convergence tolerance on the field norm (best ||F||^2 <= tol^2)",
    )
    default_iters: int = Field(
        default=10_000,
        ge=1,
        le=10_000_000,
        description="Iteration budget when none is given",
    )
    log_every: int = Field(
        default=1000,
        ge=1,
        description="Emit a debug progress line every this many iterations",
    )

    # --- Algorithm defaults ---
    default_gamma: float = Field(
        default=0.5,
        gt=0.0,
        le=1.0,
        description="Ratio between update and extrapolation step",
    )
    default_tau: float = Field(
        default=0.99,
        gt=0.0,
        lt=1.0,
        description="Safety factor of the adaptive EG+ step size rule",
    )

    # --- Diagnostics ---
    near_zero_field_sq: float = Field(
        default=1e-14,
        gt=0.0,
        description="Points with ||F||^2 below this are skipped when estimating rho",
    )
    sign_zero_tol: float = Field(
        default=1e-12,
        ge=0.0,
        description="|<F(u), u-u*>| below this is reported as sign 0",
    )

    # --- Execution ---
    max_workers: int = Field(
        default=4,
        ge=1,
        le=64,
        description="Worker threads used for sweep cells",
    )
    log_level: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="INFO",
        description="Logging level used by the CLI",
    )


# Global settings singleton
settings = WeakMintySettings()
