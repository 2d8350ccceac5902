"""
Operator abstraction for unconstrained variational inequalities.

An operator problem is a map F: R^d -> R^d together with whatever is known
about it: a Lipschitz constant L, a weak Minty parameter rho and a solution
u* with F(u*) = 0. Min-max objectives f(x, y) are turned into operators via
their gradient field F(x, y) = (grad_x f, -grad_y f).

The constants estimated here are sampled lower bounds, never certificates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from weakminty.config.settings import settings
from weakminty.core.exceptions import (
    ConfigurationError,
    DimensionMismatchError,
    MissingMetadataError,
)

logger = logging.getLogger(__name__)

Point = NDArray[np.float64]
FieldMap = Callable[[Point], Point]
ScalarMap = Callable[[Point, Point], float]
PartialMap = Callable[[Point, Point], Point]


def as_point(u: ArrayLike, dim: Optional[int] = None) -> Point:
    """Convert to a 1-D float64 array, checking the dimension if given."""
    arr = np.asarray(u, dtype=np.float64).reshape(-1)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(
            message=f"Expected a point of dimension {dim}, got {arr.shape[0]}",
            expected=dim,
            got=int(arr.shape[0]),
        )
    return arr


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box {u : lower <= u <= upper}."""

    lower: Point
    upper: Point

    def __post_init__(self) -> None:
        lower = as_point(self.lower)
        upper = as_point(self.upper)
        if lower.shape != upper.shape:
            raise ConfigurationError(
                message="Box bounds must have the same dimension",
                setting_name="region",
                details={"lower": lower.tolist(), "upper": upper.tolist()},
            )
        if not np.all(upper > lower):
            raise ConfigurationError(
                message="Box must be nondegenerate (upper > lower in every coordinate)",
                setting_name="region",
                details={"lower": lower.tolist(), "upper": upper.tolist()},
            )
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, half_width: float, dim: int = 2, center: Optional[ArrayLike] = None) -> Box:
        """Box of the given half width around center (origin by default)."""
        c = np.zeros(dim) if center is None else as_point(center, dim)
        return cls(c - half_width, c + half_width)

    @property
    def dim(self) -> int:
        return int(self.lower.shape[0])

    def sample(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        """Draw n uniform points, shape (n, dim).

        Rows are prefix-stable: the first m rows of sample(rng(s), n) equal
        sample(rng(s), m) for m <= n.
        """
        return rng.uniform(self.lower, self.upper, size=(n, self.dim))

    def contains(self, u: ArrayLike, strict: bool = False) -> bool:
        p = as_point(u, self.dim)
        if strict:
            return bool(np.all(p > self.lower) and np.all(p < self.upper))
        return bool(np.all(p >= self.lower) and np.all(p <= self.upper))


@dataclass(frozen=True, eq=False)
class OperatorProblem:
    """
    An operator F: R^d -> R^d plus optional metadata.

    Attributes:
        dim: Dimension d
        eval: Pure map u -> F(u)
        lipschitz: Lipschitz constant L, if known
        weak_minty_rho: Weak Minty parameter rho, if known
        solution: A point u* with F(u*) = 0, if known
        name: Identifier used in logs and artifacts
        monotone: Whether F is declared monotone
        valid_region: Region where rho is known to hold (None means everywhere)
    """

    dim: int
    eval: FieldMap
    lipschitz: Optional[float] = None
    weak_minty_rho: Optional[float] = None
    solution: Optional[Point] = None
    name: str = "operator"
    monotone: bool = False
    valid_region: Optional[Box] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ConfigurationError(
                message=f"Operator dimension must be positive, got {self.dim}",
                setting_name="dim",
            )
        if self.lipschitz is not None and self.lipschitz < 0:
            raise ConfigurationError(
                message="Lipschitz constant must be nonnegative",
                setting_name="lipschitz",
            )
        if self.weak_minty_rho is not None and self.weak_minty_rho < 0:
            raise ConfigurationError(
                message="Weak Minty parameter must be nonnegative",
                setting_name="weak_minty_rho",
            )
        if self.solution is not None:
            object.__setattr__(self, "solution", as_point(self.solution, self.dim))

    def __call__(self, u: ArrayLike) -> Point:
        """Evaluate F(u)."""
        return as_point(self.eval(as_point(u, self.dim)), self.dim)

    def require_solution(self) -> Point:
        if self.solution is None:
            raise MissingMetadataError(
                message=f"Problem '{self.name}' has no known solution",
                field_name="solution",
                problem=self.name,
            )
        return self.solution

    def require_lipschitz(self) -> float:
        if self.lipschitz is None:
            raise MissingMetadataError(
                message=f"Problem '{self.name}' has no Lipschitz constant",
                field_name="lipschitz",
                problem=self.name,
            )
        return self.lipschitz

    def require_rho(self) -> float:
        if self.weak_minty_rho is None:
            raise MissingMetadataError(
                message=f"Problem '{self.name}' has no weak Minty parameter",
                field_name="weak_minty_rho",
                problem=self.name,
            )
        return self.weak_minty_rho


@dataclass(frozen=True)
class MinMaxObjective:
    """
    Smooth objective f(x, y), minimized in x and maximized in y.

    value, grad_x and grad_y receive x and y as separate arrays.
    """

    dim_x: int
    dim_y: int
    value: ScalarMap
    grad_x: PartialMap
    grad_y: PartialMap
    name: str = "objective"

    @property
    def dim(self) -> int:
        return self.dim_x + self.dim_y

    def split(self, u: ArrayLike) -> tuple[Point, Point]:
        p = as_point(u, self.dim)
        return p[: self.dim_x], p[self.dim_x :]


@dataclass
class FiniteDifferenceReport:
    """Result of comparing analytic gradients against central differences."""

    max_relative_error: float
    n_points: int
    h: float

    def passed(self, tolerance: float) -> bool:
        return self.max_relative_error <= tolerance


def gradient_field(obj: MinMaxObjective) -> OperatorProblem:
    """
    Build the VI operator of a min-max objective.

    F(x, y) = (grad_x f(x, y), -grad_y f(x, y)); metadata is left unset.
    """

    def _field(u: Point) -> Point:
        x, y = obj.split(u)
        gx = np.asarray(obj.grad_x(x, y), dtype=np.float64).reshape(-1)
        gy = np.asarray(obj.grad_y(x, y), dtype=np.float64).reshape(-1)
        return np.concatenate([gx, -gy])

    return OperatorProblem(dim=obj.dim, eval=_field, name=obj.name)


def _central_difference(obj: MinMaxObjective, u: Point, h: float) -> Point:
    grad = np.empty(obj.dim)
    for i in range(obj.dim):
        e = np.zeros(obj.dim)
        e[i] = h
        fp = obj.value(*obj.split(u + e))
        fm = obj.value(*obj.split(u - e))
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


def finite_difference_check(
    obj: MinMaxObjective,
    points: Sequence[ArrayLike],
    h: float = 1e-5,
) -> FiniteDifferenceReport:
    """
    Compare the analytic gradients of obj with central differences.

    The relative error at a coordinate is |analytic - fd| / max(1, |fd|),
    so gradients near zero are compared in absolute terms.

    Raises:
        ConfigurationError: If h <= 0 or no points are given
    """
    if not h > 0:
        raise ConfigurationError(
            message=f"Finite difference step must be positive, got {h}",
            setting_name="h",
        )
    if len(points) == 0:
        raise ConfigurationError(
            message="finite_difference_check needs at least one point",
            setting_name="points",
        )

    worst = 0.0
    for raw in points:
        u = as_point(raw, obj.dim)
        x, y = obj.split(u)
        analytic = np.concatenate([
            np.asarray(obj.grad_x(x, y), dtype=np.float64).reshape(-1),
            np.asarray(obj.grad_y(x, y), dtype=np.float64).reshape(-1),
        ])
        numeric = _central_difference(obj, u, h)
        err = float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))))
        worst = max(worst, err)

    return FiniteDifferenceReport(
        max_relative_error=worst,
        n_points=len(points),
        h=h,
    )


def estimate_lipschitz(
    op: OperatorProblem,
    region: Box,
    samples: int = 1000,
    seed: int = 0,
) -> float:
    """
    Sampled lower bound on the Lipschitz constant of F over region.

    The sample list is generated up front from the seed and consecutive
    pairs (u_i, u_{i+1}) are compared, so the estimate is independent of
    evaluation order and never decreases when samples grows.

    Raises:
        ConfigurationError: If samples < 2
    """
    if samples < 2:
        raise ConfigurationError(
            message=f"estimate_lipschitz needs at least 2 samples, got {samples}",
            setting_name="samples",
        )
    if region.dim != op.dim:
        raise DimensionMismatchError(
            message="Region dimension does not match operator",
            expected=op.dim,
            got=region.dim,
        )

    rng = np.random.default_rng(seed)
    pts = region.sample(rng, samples)
    fields = np.array([op(p) for p in pts])

    du = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    dF = np.linalg.norm(np.diff(fields, axis=0), axis=1)
    mask = du > 0
    if not np.any(mask):
        return 0.0
    estimate = float(np.max(dF[mask] / du[mask]))
    logger.debug(f"Lipschitz estimate for {op.name}: {estimate:.6g} ({samples} samples)")
    return estimate


def weak_minty_ratio(op: OperatorProblem, u: ArrayLike) -> Optional[float]:
    """Pointwise -2<F(u), u-u*>/||F(u)||^2, or None near a zero of F."""
    sol = op.require_solution()
    p = as_point(u, op.dim)
    g = op(p)
    norm_sq = float(g @ g)
    if norm_sq < settings.near_zero_field_sq:
        return None
    return -2.0 * float(g @ (p - sol)) / norm_sq


def estimate_weak_minty_rho(
    op: OperatorProblem,
    region: Box,
    samples: int = 1000,
    seed: int = 0,
) -> float:
    """
    Sampled lower bound on the smallest rho for which u* is weak Minty on region.

    Returns max(0, max_u -2<F(u), u-u*>/||F(u)||^2) over the samples, skipping
    points where ||F(u)||^2 is below settings.near_zero_field_sq.

    Raises:
        MissingMetadataError: If op has no solution
        ConfigurationError: If samples < 1
    """
    op.require_solution()
    if samples < 1:
        raise ConfigurationError(
            message=f"estimate_weak_minty_rho needs at least 1 sample, got {samples}",
            setting_name="samples",
        )

    rng = np.random.default_rng(seed)
    pts = region.sample(rng, samples)
    best = 0.0
    skipped = 0
    for p in pts:
        ratio = weak_minty_ratio(op, p)
        if ratio is None:
            skipped += 1
            continue
        best = max(best, ratio)

    if skipped:
        logger.debug(f"rho estimate for {op.name}: skipped {skipped} near-stationary points")
    return best
