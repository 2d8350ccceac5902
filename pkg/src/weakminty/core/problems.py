"""
Benchmark problems with weak Minty solutions.

Each constructor returns a BenchmarkSpec whose derived OperatorProblem carries
the closed-form constants that are known for that problem:

- lower_bound: xi*x*y + zeta/2*(x^2 - y^2), tight for EG+ (rho = 1/L at xi=sqrt3, zeta=-1)
- ratio_game: von Neumann ratio game reduced to two dimensions
- forsaken: toy problem whose solution is shielded by a repelling limit cycle
- polar_game: planar field with circular level sets of psi
- monotone_quadratic: F(u) = mu*u, test bed for the monotone rate
"""

from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from weakminty.core.exceptions import ConfigurationError
from weakminty.core.operators import (
    Box,
    MinMaxObjective,
    OperatorProblem,
    Point,
    as_point,
    estimate_lipschitz,
    gradient_field,
)

logger = logging.getLogger(__name__)

BENCHMARK_IDS = ("lower_bound", "ratio_game", "forsaken", "polar_game", "monotone_quadratic")

# Ratio game data (payoff R, positive normalizer S) and its reduced solution
RATIO_GAME_R = np.array([[-0.6, -0.3], [0.6, -0.3]])
RATIO_GAME_S = np.array([[0.9, 0.5], [0.8, 0.4]])
RATIO_GAME_SOLUTION = (0.951941, 0.050485)
RATIO_GAME_LIPSCHITZ = 5.0 / 3.0

# Forsaken: rho is only valid inside the box ||(x, y)||_inf < 3/2.
# The published 2*0.477761 is a lower bound on the smallest valid rho there; the
# ratio -2<F(u), u-u*>/||F(u)||^2 peaks at about 3.0411 near (-0.258, 0.792).
FORSAKEN_APPROX_SOLUTION = (0.08, 0.4)
FORSAKEN_PUBLISHED_RHO_LOWER_BOUND = 2 * 0.477761
FORSAKEN_RHO = 3.05
FORSAKEN_BOX_HALF_WIDTH = 1.5
FORSAKEN_LIPSCHITZ_SAMPLES = 20_000

POLAR_GAME_DEFAULT_A = 1.0 / 3.0
POLAR_GAME_BOX_HALF_WIDTH = 1.5

# Lipschitz estimates are sampled with a fixed seed so metadata is reproducible
CONSTANTS_SEED = 20220901

DEFAULT_INITIAL_POINTS: dict[str, tuple[float, ...]] = {
    "lower_bound": (1.0, 1.0),
    "forsaken": (0.5, 0.5),
    "ratio_game": (0.5, 0.5),
    "polar_game": (1.0, 1.0),
}


@dataclass(frozen=True, eq=False)
class BenchmarkSpec:
    """A benchmark id, its parameters, and the operator built from them."""

    id: str
    derived: OperatorProblem
    params: dict[str, float] = field(default_factory=dict)

    @property
    def cli_id(self) -> str:
        return self.id.replace("_", "-")

    def default_u0(self) -> Point:
        """Documented default initial point for this benchmark."""
        if self.id in DEFAULT_INITIAL_POINTS:
            return as_point(DEFAULT_INITIAL_POINTS[self.id])
        return np.ones(self.derived.dim)


# ==================== Lower bound ====================


def lower_bound_objective(xi: float, zeta: float) -> MinMaxObjective:
    """f(x, y) = xi*x*y + zeta/2*(x^2 - y^2)."""
    return MinMaxObjective(
        dim_x=1,
        dim_y=1,
        value=lambda x, y: float(xi * x[0] * y[0] + 0.5 * zeta * (x[0] ** 2 - y[0] ** 2)),
        grad_x=lambda x, y: np.array([xi * y[0] + zeta * x[0]]),
        grad_y=lambda x, y: np.array([xi * x[0] - zeta * y[0]]),
        name="lower_bound",
    )


def _snap_to_integer(x: float) -> float:
    """Round x to the nearest integer when it is within a few ulps of it (sqrt(3)**2 + 1 -> 4)."""
    r = round(x)
    if abs(x - r) <= 4 * sys.float_info.epsilon * max(1.0, abs(x)):
        return float(r)
    return x


def lower_bound_problem(xi: float = math.sqrt(3.0), zeta: float = -1.0) -> BenchmarkSpec:
    """
    Bilinear-quadratic problem with exactly known L and rho.

    F(x, y) = (zeta*x + xi*y, -xi*x + zeta*y), L = sqrt(xi^2 + zeta^2) and
    rho = max(0, -2*zeta/(xi^2 + zeta^2)). The field is a scaled rotation, so
    the weak Minty inequality is tight at every point when zeta < 0.

    Raises:
        ConfigurationError: If (xi, zeta) = (0, 0)
    """
    if xi == 0 and zeta == 0:
        raise ConfigurationError(
            message="lower_bound_problem needs (xi, zeta) != (0, 0)",
            setting_name="xi",
        )
    A = np.array([[zeta, xi], [-xi, zeta]])
    norm_sq = _snap_to_integer(xi * xi + zeta * zeta)

    op = OperatorProblem(
        dim=2,
        eval=lambda u: A @ u,
        lipschitz=math.sqrt(norm_sq),
        weak_minty_rho=max(0.0, -2.0 * zeta / norm_sq),
        solution=np.zeros(2),
        name="lower_bound",
        monotone=zeta >= 0,
    )
    return BenchmarkSpec(id="lower_bound", params={"xi": xi, "zeta": zeta}, derived=op)


# ==================== Ratio game ====================


def ratio_game_full_value(x: Point, y: Point) -> float:
    """V(x, y) = <x, R y> / <x, S y> for mixed strategies on the simplices."""
    return float(x @ RATIO_GAME_R @ y) / float(x @ RATIO_GAME_S @ y)


def ratio_game_value(x: float, y: float) -> float:
    """Reduced objective V(x, y) = (-1.2xy + 0.9y - 0.3) / (0.4y + 0.1x + 0.4)."""
    return (-1.2 * x * y + 0.9 * y - 0.3) / (0.4 * y + 0.1 * x + 0.4)


def _ratio_game_grad(x: float, y: float) -> tuple[float, float]:
    num = -1.2 * x * y + 0.9 * y - 0.3
    den = 0.4 * y + 0.1 * x + 0.4
    den_sq = den * den
    dvdx = (-1.2 * y * den - 0.1 * num) / den_sq
    dvdy = ((-1.2 * x + 0.9) * den - 0.4 * num) / den_sq
    return dvdx, dvdy


def ratio_game_objective() -> MinMaxObjective:
    """Reduced ratio game, u = (x, 1-x, y, 1-y) collapsed to (x, y)."""
    return MinMaxObjective(
        dim_x=1,
        dim_y=1,
        value=lambda x, y: ratio_game_value(float(x[0]), float(y[0])),
        grad_x=lambda x, y: np.array([_ratio_game_grad(float(x[0]), float(y[0]))[0]]),
        grad_y=lambda x, y: np.array([_ratio_game_grad(float(x[0]), float(y[0]))[1]]),
        name="ratio_game",
    )


def ratio_game_problem() -> BenchmarkSpec:
    """
    Two-dimensional ratio game with a non-Minty solution.

    The Lipschitz constant 5/3 is the estimate used for step sizes in the
    figure, not a bound over [0, 1]^2.
    """

    def _field(u: Point) -> Point:
        dvdx, dvdy = _ratio_game_grad(float(u[0]), float(u[1]))
        return np.array([dvdx, -dvdy])

    op = OperatorProblem(
        dim=2,
        eval=_field,
        lipschitz=RATIO_GAME_LIPSCHITZ,
        solution=np.array(RATIO_GAME_SOLUTION),
        name="ratio_game",
    )
    return BenchmarkSpec(id="ratio_game", derived=op)


# ==================== Forsaken ====================


def forsaken_phi(z: float) -> float:
    return z**2 / 4 - z**4 / 2 + z**6 / 6


def forsaken_dphi(z: float) -> float:
    return z / 2 - 2 * z**3 + z**5


def _forsaken_ddphi(z: float) -> float:
    return 0.5 - 6 * z**2 + 5 * z**4


def forsaken_objective() -> MinMaxObjective:
    """f(x, y) = x(y - 0.45) + phi(x) - phi(y)."""
    return MinMaxObjective(
        dim_x=1,
        dim_y=1,
        value=lambda x, y: float(
            x[0] * (y[0] - 0.45) + forsaken_phi(float(x[0])) - forsaken_phi(float(y[0]))
        ),
        grad_x=lambda x, y: np.array([y[0] - 0.45 + forsaken_dphi(float(x[0]))]),
        grad_y=lambda x, y: np.array([x[0] - forsaken_dphi(float(y[0]))]),
        name="forsaken",
    )


def _forsaken_field(u: Point) -> Point:
    x, y = float(u[0]), float(u[1])
    return np.array([y - 0.45 + forsaken_dphi(x), -x + forsaken_dphi(y)])


@lru_cache(maxsize=1)
def forsaken_solution() -> tuple[float, float]:
    """
    Stationary point of Forsaken, refined by Newton's method.

    Starts from the rounded (0.08, 0.4), whose residual ||F|| is about 1e-2.
    """
    u = np.array(FORSAKEN_APPROX_SOLUTION, dtype=np.float64)
    for _ in range(50):
        g = _forsaken_field(u)
        if float(np.linalg.norm(g)) < 1e-15:
            break
        jac = np.array([
            [_forsaken_ddphi(float(u[0])), 1.0],
            [-1.0, _forsaken_ddphi(float(u[1]))],
        ])
        u = u - np.linalg.solve(jac, g)
    return float(u[0]), float(u[1])


@lru_cache(maxsize=1)
def _forsaken_lipschitz() -> float:
    field_op = OperatorProblem(dim=2, eval=_forsaken_field, name="forsaken")
    return estimate_lipschitz(
        field_op,
        Box.cube(FORSAKEN_BOX_HALF_WIDTH),
        samples=FORSAKEN_LIPSCHITZ_SAMPLES,
        seed=CONSTANTS_SEED,
    )


def forsaken_problem() -> BenchmarkSpec:
    """
    Forsaken problem, weak Minty with rho = FORSAKEN_RHO on ||(x, y)||_inf < 3/2.

    lipschitz is a sampled estimate on the same box; valid_region is the box.
    """
    op = OperatorProblem(
        dim=2,
        eval=_forsaken_field,
        lipschitz=_forsaken_lipschitz(),
        weak_minty_rho=FORSAKEN_RHO,
        solution=np.array(forsaken_solution()),
        name="forsaken",
        valid_region=Box.cube(FORSAKEN_BOX_HALF_WIDTH),
    )
    return BenchmarkSpec(id="forsaken", derived=op)


# ==================== Polar game ====================


def polar_psi(x: float, y: float, a: float) -> float:
    return a / 16.0 * x * (-1 + x * x + y * y) * (-9 + 16 * x * x + 16 * y * y)


@lru_cache(maxsize=16)
def _polar_lipschitz(a: float) -> float:
    field_op = OperatorProblem(dim=2, eval=_polar_field(a), name="polar_game")
    return estimate_lipschitz(
        field_op,
        Box.cube(POLAR_GAME_BOX_HALF_WIDTH),
        samples=FORSAKEN_LIPSCHITZ_SAMPLES,
        seed=CONSTANTS_SEED,
    )


def _polar_field(a: float) -> Callable[[Point], Point]:
    def _field(u: Point) -> Point:
        x, y = float(u[0]), float(u[1])
        return np.array([polar_psi(x, y, a) - y, polar_psi(y, x, a) + x])

    return _field


def polar_game_problem(a: float = POLAR_GAME_DEFAULT_A) -> BenchmarkSpec:
    """
    Polar game F(x, y) = (psi(x, y) - y, psi(y, x) + x), solution at the origin.

    Raises:
        ConfigurationError: If a <= 0
    """
    if not a > 0:
        raise ConfigurationError(
            message=f"Polar game parameter must be positive, got {a}",
            setting_name="polar_a",
        )
    op = OperatorProblem(
        dim=2,
        eval=_polar_field(a),
        lipschitz=_polar_lipschitz(a),
        solution=np.zeros(2),
        name="polar_game",
    )
    return BenchmarkSpec(id="polar_game", params={"a": a}, derived=op)


# ==================== Monotone quadratic ====================


def monotone_quadratic_problem(mu: float = 1.0, dim: int = 2) -> BenchmarkSpec:
    """
    F(u) = mu*u with L = mu, rho = 0 and solution 0.

    Raises:
        ConfigurationError: If mu <= 0 or dim < 1
    """
    if not mu > 0:
        raise ConfigurationError(
            message=f"Monotone quadratic needs mu > 0, got {mu}",
            setting_name="mu",
        )
    if dim < 1:
        raise ConfigurationError(
            message=f"Monotone quadratic needs dim >= 1, got {dim}",
            setting_name="dim",
        )
    op = OperatorProblem(
        dim=dim,
        eval=lambda u: mu * u,
        lipschitz=mu,
        weak_minty_rho=0.0,
        solution=np.zeros(dim),
        name="monotone_quadratic",
        monotone=True,
    )
    return BenchmarkSpec(id="monotone_quadratic", params={"mu": mu, "dim": dim}, derived=op)


# ==================== Registry ====================

_BUILDERS: dict[str, Callable[..., BenchmarkSpec]] = {
    "lower_bound": lower_bound_problem,
    "ratio_game": ratio_game_problem,
    "forsaken": forsaken_problem,
    "polar_game": polar_game_problem,
    "monotone_quadratic": monotone_quadratic_problem,
}


def normalize_benchmark_id(problem_id: str) -> str:
    """Accept both 'lower-bound' (CLI) and 'lower_bound' spellings."""
    key = problem_id.strip().lower().replace("-", "_")
    if key not in _BUILDERS:
        raise ConfigurationError(
            message=f"Unknown problem: {problem_id}",
            setting_name="problem",
            details={"valid_problems": [b.replace("_", "-") for b in BENCHMARK_IDS]},
        )
    return key


def get_benchmark(problem_id: str, **params: Any) -> BenchmarkSpec:
    """
    Build a benchmark by id.

    Raises:
        ConfigurationError: If the id is unknown or a parameter is not accepted
    """
    key = normalize_benchmark_id(problem_id)
    try:
        return _BUILDERS[key](**params)
    except TypeError as e:
        raise ConfigurationError(
            message=f"Invalid parameters for problem {problem_id}: {e}",
            setting_name="problem",
            details={"params": params},
        ) from e
