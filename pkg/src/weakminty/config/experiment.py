"""
Per-run configuration models.

SolverConfig describes one solver run, ExperimentConfig adds the problem,
initial point and optional sweep. Both are frozen pydantic models; use
parse_experiment_config to get a ConfigurationError instead of a raw
pydantic ValidationError.
"""

from __future__ import annotations

import math
from typing import Any, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from weakminty.config.settings import settings
from weakminty.core.exceptions import ConfigurationError, MissingMetadataError
from weakminty.core.problems import BenchmarkSpec, get_benchmark, normalize_benchmark_id

Algorithm = Literal["ogda-plus", "eg-plus", "adaptive-eg-plus", "stoch-ogda-plus"]
ALGORITHMS: tuple[str, ...] = ("ogda-plus", "eg-plus", "adaptive-eg-plus", "stoch-ogda-plus")

SOLVER_KEYS = ("a", "aL", "gamma", "tau", "lam", "sigma", "batch", "iters", "tol", "seed")
PROBLEM_KEYS = ("xi", "zeta", "mu", "dim", "polar_a")
SWEEPABLE_KEYS = SOLVER_KEYS + PROBLEM_KEYS

# CLI names of problem parameters -> builder keyword
_PROBLEM_KWARGS = {"xi": "xi", "zeta": "zeta", "mu": "mu", "dim": "dim", "polar_a": "a"}

_MODEL_CONFIG = ConfigDict(frozen=True, extra="forbid")


def _require_finite(name: str, value: Optional[float]) -> Optional[float]:
    if value is not None and not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


class SolverConfig(BaseModel):
    """
    Hyperparameters of one solver run.

    The step is given either directly (a, which is a0 for adaptive EG+) or
    as aL, a multiple of 1/L resolved against the problem.
    """

    model_config = _MODEL_CONFIG

    algorithm: Algorithm = "ogda-plus"
    a: Optional[float] = Field(default=None, gt=0.0)
    aL: Optional[float] = Field(default=None, gt=0.0)
    gamma: float = Field(default_factory=lambda: settings.default_gamma, gt=0.0, le=1.0)
    tau: float = Field(default_factory=lambda: settings.default_tau, gt=0.0, lt=1.0)
    lam: Optional[float] = Field(default=None, ge=0.0)
    sigma: float = Field(default=0.0, ge=0.0)
    batch: int = Field(default=1, ge=1)
    iters: int = Field(default_factory=lambda: settings.default_iters, ge=1)
    tol: float = Field(default_factory=lambda: settings.tolerance, gt=0.0)
    seed: int = Field(default=0, ge=0)
    divergence_threshold: float = Field(
        default_factory=lambda: settings.divergence_threshold,
        gt=0.0,
    )

    @field_validator("algorithm", mode="before")
    @classmethod
    def normalize_algorithm(cls, v: Any) -> Any:
        return v.strip().lower().replace("_", "-") if isinstance(v, str) else v

    @field_validator("a", "aL", "gamma", "tau", "lam", "sigma", "tol", "divergence_threshold")
    @classmethod
    def check_finite(cls, v: Optional[float], info: Any) -> Optional[float]:
        return _require_finite(info.field_name, v)

    @model_validator(mode="after")
    def check_step(self) -> SolverConfig:
        if self.a is not None and self.aL is not None:
            raise ValueError("give either a or aL, not both")
        if self.lam is not None and self.lam > 2.0 / self.gamma:
            raise ValueError(f"lam must lie in [0, 2/gamma], got {self.lam}")
        return self

    def resolve_step(self, lipschitz: Optional[float]) -> float:
        """
        The step size a for a problem with Lipschitz constant lipschitz.

        Raises:
            ConfigurationError: If neither a nor aL is set
            MissingMetadataError: If aL is set and lipschitz is None
        """
        if self.a is not None:
            return self.a
        if self.aL is None:
            raise ConfigurationError(message="No step size given (set a or aL)", setting_name="a")
        if lipschitz is None or lipschitz <= 0:
            raise MissingMetadataError(
                message="aL needs a positive Lipschitz constant",
                field_name="lipschitz",
            )
        return self.aL / lipschitz


class ExperimentConfig(BaseModel):
    """A problem, a solver configuration, an initial point and an optional sweep."""

    model_config = _MODEL_CONFIG

    problem: str
    xi: Optional[float] = None
    zeta: Optional[float] = None
    mu: Optional[float] = None
    dim: Optional[int] = Field(default=None, ge=1)
    polar_a: Optional[float] = None
    solver: SolverConfig = Field(default_factory=SolverConfig)
    u0: Optional[tuple[float, ...]] = None
    sweep: dict[str, tuple[float, ...]] = Field(default_factory=dict)

    @field_validator("problem")
    @classmethod
    def normalize_problem(cls, v: str) -> str:
        return normalize_benchmark_id(v)

    @field_validator("xi", "zeta", "mu", "polar_a")
    @classmethod
    def check_finite(cls, v: Optional[float], info: Any) -> Optional[float]:
        return _require_finite(info.field_name, v)

    @field_validator("u0")
    @classmethod
    def check_u0(cls, v: Optional[tuple[float, ...]]) -> Optional[tuple[float, ...]]:
        if v is not None:
            if len(v) == 0:
                raise ValueError("u0 must not be empty")
            if not all(math.isfinite(x) for x in v):
                raise ValueError("u0 must be finite")
        return v

    @field_validator("sweep")
    @classmethod
    def check_sweep(cls, v: dict[str, tuple[float, ...]]) -> dict[str, tuple[float, ...]]:
        for key, values in v.items():
            if key not in SWEEPABLE_KEYS:
                raise ValueError(f"cannot sweep over {key!r}; choose from {', '.join(SWEEPABLE_KEYS)}")
            if not values:
                raise ValueError(f"sweep over {key!r} has no values")
            if not all(math.isfinite(x) for x in values):
                raise ValueError(f"sweep over {key!r} has non-finite values")
        return v

    def problem_params(self) -> dict[str, float]:
        params: dict[str, float] = {}
        for key, kwarg in _PROBLEM_KWARGS.items():
            value = getattr(self, key)
            if value is not None:
                params[kwarg] = value
        return params

    def build_problem(self) -> BenchmarkSpec:
        return get_benchmark(self.problem, **self.problem_params())

    def with_overrides(self, overrides: Mapping[str, Any]) -> ExperimentConfig:
        """Copy with solver or problem fields replaced, revalidated, sweep cleared."""
        solver_updates = {k: v for k, v in overrides.items() if k in SOLVER_KEYS}
        problem_updates = {k: v for k, v in overrides.items() if k in PROBLEM_KEYS}
        unknown = set(overrides) - set(solver_updates) - set(problem_updates)
        if unknown:
            raise ConfigurationError(
                message=f"Unknown override keys: {sorted(unknown)}",
                setting_name="sweep",
            )
        solver = self.solver.model_dump()
        if "a" in solver_updates:
            solver["aL"] = None
        if "aL" in solver_updates:
            solver["a"] = None
        solver.update(solver_updates)
        data = self.model_dump()
        data.update(problem_updates)
        data["solver"] = solver
        data["sweep"] = {}
        return parse_experiment_config(data)


def parse_experiment_config(data: Mapping[str, Any]) -> ExperimentConfig:
    """
    Validate a mapping into an ExperimentConfig.

    Raises:
        ConfigurationError: On any validation failure
    """
    try:
        return ExperimentConfig.model_validate(dict(data))
    except ValidationError as e:
        errors = [
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        ]
        raise ConfigurationError(
            message="Invalid experiment configuration",
            details={"errors": errors},
        ) from e
