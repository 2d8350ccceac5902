"""
weakminty - solvers for variational inequalities with weak Minty solutions

OGDA+, stochastic OGDA+, EG+ and adaptive EG+, benchmark problems, rate
certificates and an experiment runner that writes CSV artifacts.
"""

from weakminty.config.settings import settings
from weakminty.core.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    MissingMetadataError,
    NonFiniteIterateError,
    WeakMintyError,
)
from weakminty.core.operators import OperatorProblem
from weakminty.core.problems import get_benchmark
from weakminty.core.runner import run_experiment, run_sweep

__version__ = "0.1.0"
__all__ = [
    # Core
    "OperatorProblem",
    "get_benchmark",
    "run_experiment",
    "run_sweep",
    # Configuration
    "settings",
    # Exceptions
    "WeakMintyError",
    "ConfigurationError",
    "MissingMetadataError",
    "NonFiniteIterateError",
    "DimensionMismatchError",
]
