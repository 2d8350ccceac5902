"""Core weakminty module: operators, benchmarks, solvers and diagnostics."""

from weakminty.core.algorithms import (
    AdaptiveEgState,
    EgPlusState,
    OgdaPlusState,
    StepReport,
    ValidityReport,
    Verdict,
    adaptive_eg_step,
    eg_plus_step,
    ogda_plus_step,
    ogda_step_size_bound,
    validate_weak_minty_config,
)
from weakminty.core.diagnostics import (
    IterateTrace,
    RateCertificate,
    RunStatus,
    SignGrid,
    classify_run,
    evaluate_certificate,
    sign_grid,
    weak_minty_residual,
)
from weakminty.core.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    MissingMetadataError,
    NonFiniteIterateError,
    WeakMintyError,
)
from weakminty.core.operators import Box, MinMaxObjective, OperatorProblem
from weakminty.core.problems import BenchmarkSpec, get_benchmark
from weakminty.core.stochastic import StochasticOracle, StochOgdaState, stoch_ogda_plus_step

__all__ = [
    "OperatorProblem",
    "MinMaxObjective",
    "Box",
    "BenchmarkSpec",
    "get_benchmark",
    "OgdaPlusState",
    "EgPlusState",
    "AdaptiveEgState",
    "StochOgdaState",
    "StochasticOracle",
    "StepReport",
    "ValidityReport",
    "Verdict",
    "ogda_plus_step",
    "eg_plus_step",
    "adaptive_eg_step",
    "stoch_ogda_plus_step",
    "ogda_step_size_bound",
    "validate_weak_minty_config",
    "IterateTrace",
    "RateCertificate",
    "RunStatus",
    "SignGrid",
    "classify_run",
    "evaluate_certificate",
    "sign_grid",
    "weak_minty_residual",
    "WeakMintyError",
    "ConfigurationError",
    "MissingMetadataError",
    "NonFiniteIterateError",
    "DimensionMismatchError",
]
