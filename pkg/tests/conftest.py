"""Test configuration and fixtures."""

import math
from pathlib import Path
from typing import Callable

import numpy as np
import pytest

from weakminty.core.operators import OperatorProblem
from weakminty.core.problems import (
    BenchmarkSpec,
    forsaken_problem,
    lower_bound_problem,
    monotone_quadratic_problem,
    ratio_game_problem,
)


@pytest.fixture
def lower_bound() -> OperatorProblem:
    """lower_bound(sqrt3, -1): L = 2, rho = 1/2, tight everywhere."""
    return lower_bound_problem(math.sqrt(3.0), -1.0).derived


@pytest.fixture
def monotone() -> OperatorProblem:
    """F(u) = u in two dimensions."""
    return monotone_quadratic_problem(1.0, 2).derived


@pytest.fixture
def forsaken() -> OperatorProblem:
    return forsaken_problem().derived


@pytest.fixture
def ratio_game() -> BenchmarkSpec:
    return ratio_game_problem()


@pytest.fixture
def mild_rotation() -> OperatorProblem:
    """
    Scaled rotation with a small negative curvature.

    xi = 1, zeta = -0.05 gives L ~ 1.00125 and rho ~ 0.0998, so a = 0.3,
    gamma = 0.5 satisfies a > rho and aL <= 1/3.
    """
    return lower_bound_problem(1.0, -0.05).derived


@pytest.fixture
def constant_field() -> Callable[[float], OperatorProblem]:
    def _make(c: float = 1.0) -> OperatorProblem:
        return OperatorProblem(dim=2, eval=lambda u: np.full(2, c), name="constant")

    return _make


@pytest.fixture
def zero_field() -> OperatorProblem:
    return OperatorProblem(
        dim=2,
        eval=lambda u: np.zeros(2),
        lipschitz=0.0,
        weak_minty_rho=0.0,
        solution=np.zeros(2),
        name="zero",
        monotone=True,
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def out_dir(tmp_path: Path) -> Path:
    return tmp_path / "runs"
