"""
Run diagnostics: iterate traces, best-iterate rate certificates, weak Minty
sign grids and run classification.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Callable, Iterator, Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from weakminty.config.settings import settings
from weakminty.core.algorithms import monotone_step_size_bound, ogda_step_size_bound
from weakminty.core.exceptions import ConfigurationError, WeakMintyError
from weakminty.core.operators import OperatorProblem, Point, as_point

if TYPE_CHECKING:
    from weakminty.config.experiment import SolverConfig

logger = logging.getLogger(__name__)

# Relative slack allowed when comparing the best iterate against a bound
CERTIFICATE_SLACK = 1e-9


class RunStatus(str, Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True, eq=False)
class TraceRow:
    """
    One recorded iteration.

    u is the rated point u_k, oracle_calls is cumulative. u_bar is the EG
    base point u_bar_k and stays None for OGDA+ variants.
    """

    k: int
    u: Point
    field_norm_sq: float
    step: float
    oracle_calls: int
    u_bar: Optional[Point] = None


@dataclass
class IterateTrace:
    """
    Append-only record of a run.

    best_history[k] is min_{i <= k} field_norm_sq[i], so the best iterate
    is tracked exactly as the min-over-iterates rates are stated.
    """

    rows: list[TraceRow] = field(default_factory=list)
    best_history: list[float] = field(default_factory=list)
    best_index: int = -1
    diverged: bool = False
    status: Optional[RunStatus] = None

    def append(self, row: TraceRow) -> None:
        if self.rows:
            last = self.rows[-1]
            if row.k <= last.k:
                raise WeakMintyError(
                    message="Trace rows must have increasing k",
                    details={"last_k": last.k, "k": row.k},
                )
            if row.oracle_calls <= last.oracle_calls:
                raise WeakMintyError(
                    message="Cumulative oracle calls must be strictly increasing",
                    details={"last": last.oracle_calls, "got": row.oracle_calls},
                )
        self.rows.append(row)
        if not self.best_history or row.field_norm_sq < self.best_history[-1]:
            self.best_history.append(row.field_norm_sq)
            self.best_index = len(self.rows) - 1
        else:
            self.best_history.append(self.best_history[-1])

    def mark_diverged(self) -> None:
        self.diverged = True

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[TraceRow]:
        return iter(self.rows)

    @property
    def best_norm_sq(self) -> float:
        return self.best_history[-1] if self.best_history else math.inf

    @property
    def dim(self) -> int:
        return int(self.rows[0].u.shape[0]) if self.rows else 0

    @property
    def steps(self) -> list[float]:
        return [r.step for r in self.rows]


def classify_run(trace: IterateTrace, tol: float) -> RunStatus:
    """
    converged iff the best ||F||^2 reached tol^2, diverged iff the guard
    tripped, budget_exhausted otherwise.

    Raises:
        ConfigurationError: If tol <= 0
    """
    if not tol > 0:
        raise ConfigurationError(message=f"tol must be positive, got {tol}", setting_name="tol")
    if trace.best_norm_sq <= tol * tol:
        return RunStatus.CONVERGED
    if trace.diverged:
        return RunStatus.DIVERGED
    return RunStatus.BUDGET_EXHAUSTED


def step_ratio_k0(steps: Sequence[float], tau: float) -> int:
    """1 + the last index j with steps[j] / steps[j+1] > 1/tau, or 0."""
    k0 = 0
    for j in range(len(steps) - 1):
        if tau * steps[j] > steps[j + 1]:
            k0 = j + 1
    return k0


# ==================== Rate certificates ====================


@dataclass
class RateCertificate:
    """
    Best-iterate bound checked along a trace.

    bound_at_k[i] and best_at_k[i] refer to trace row start_index + i; the
    bound there covers rows up to and including that one. violated_at is a
    trace row index.
    """

    theorem_id: Optional[str]
    applicable: bool
    reason: str = ""
    bound_at_k: list[float] = field(default_factory=list)
    best_at_k: list[float] = field(default_factory=list)
    violated_at: Optional[int] = None
    post_hoc: bool = False
    start_index: int = 0

    @property
    def violations(self) -> int:
        return sum(1 for ok in self.ok_flags() if not ok)

    def ok_flags(self) -> list[bool]:
        return [
            best <= bound * (1.0 + CERTIFICATE_SLACK)
            for best, bound in zip(self.best_at_k, self.bound_at_k)
        ]

    def rows(self) -> Iterator[tuple[int, float, float, bool]]:
        for i, ok in enumerate(self.ok_flags()):
            yield self.start_index + i, self.bound_at_k[i], self.best_at_k[i], ok


def _not_applicable(theorem_id: Optional[str], reason: str) -> RateCertificate:
    logger.warning(f"Certificate not applicable: {reason}")
    return RateCertificate(theorem_id=theorem_id, applicable=False, reason=reason)


def _checked(
    theorem_id: str,
    trace: IterateTrace,
    bounds: list[float],
    start: int,
    post_hoc: bool = False,
) -> RateCertificate:
    cert = RateCertificate(
        theorem_id=theorem_id,
        applicable=True,
        bound_at_k=bounds,
        best_at_k=trace.best_history[start:],
        post_hoc=post_hoc,
        start_index=start,
    )
    for i, ok in enumerate(cert.ok_flags()):
        if not ok:
            cert.violated_at = start + i
            logger.warning(f"{theorem_id} bound violated at k={trace.rows[start + i].k}")
            break
    return cert


def _ogda_certificate(trace: IterateTrace, op: OperatorProblem, config: SolverConfig) -> RateCertificate:
    sol = op.require_solution()
    if op.lipschitz is None:
        return _not_applicable(None, "no Lipschitz constant")
    L = op.lipschitz
    a = config.resolve_step(L)
    gamma = config.gamma

    u0 = trace.rows[0].u
    v0_vec = u0 + a * op(u0) - sol
    v0 = float(v0_vec @ v0_vec)
    n = len(trace.rows)

    if op.monotone:
        eps = monotone_step_size_bound(gamma) - a * L
        if eps > 0:
            bounds = [2.0 * v0 / (k * a * a * gamma * gamma * eps) for k in range(1, n + 1)]
            return _checked("ogda_monotone", trace, bounds, 0)

    rho = op.weak_minty_rho
    if rho is None:
        return _not_applicable("ogda_weak_minty", "no weak Minty parameter")
    lam = config.lam
    if lam is None:
        if a <= rho:
            return _not_applicable("ogda_weak_minty", f"a ≤ ρ (a={a:.6g}, rho={rho:.6g})")
        bound = ogda_step_size_bound(gamma, 1.0 / gamma)
        if a * L > bound:
            return _not_applicable(
                "ogda_weak_minty",
                f"aL above (1-gamma)/(1+gamma) (aL={a * L:.6g}, bound={bound:.6g})",
            )
        coef = a * gamma * (a - rho)
    else:
        if a * lam * gamma <= rho:
            return _not_applicable(
                "ogda_weak_minty", f"a*lam*gamma ≤ ρ (a*lam*gamma={a * lam * gamma:.6g}, rho={rho:.6g})"
            )
        bound = ogda_step_size_bound(gamma, lam)
        if a * L > bound:
            return _not_applicable(
                "ogda_weak_minty",
                f"aL above ogda_step_size_bound(gamma, lam) (aL={a * L:.6g}, bound={bound:.6g})",
            )
        coef = a * gamma * (a * lam * gamma - rho)
    bounds = [v0 / (k * coef) for k in range(1, n + 1)]
    return _checked("ogda_weak_minty", trace, bounds, 0)


def _adaptive_certificate(
    trace: IterateTrace,
    op: OperatorProblem,
    config: SolverConfig,
    k0: Optional[int],
    final_step: Optional[float],
) -> RateCertificate:
    sol = op.require_solution()
    rho = op.weak_minty_rho
    if rho is None:
        return _not_applicable("adaptive_eg", "no weak Minty parameter")

    gamma = config.gamma
    a_f = trace.rows[-1].step if final_step is None else final_step
    start = step_ratio_k0(trace.steps, config.tau) if k0 is None else k0
    coef = a_f * ((1.0 - gamma) * a_f - rho)
    if not (1.0 - gamma) * a_f > rho:
        return _not_applicable(
            "adaptive_eg",
            f"final step ≤ ρ/(1-gamma) (a_f={a_f:.6g}, rho={rho:.6g}, gamma={gamma:.6g})",
        )
    if start >= len(trace.rows):
        return _not_applicable("adaptive_eg", f"k0={start} is past the end of the trace")
    u_bar = trace.rows[start].u_bar
    if u_bar is None:
        return _not_applicable("adaptive_eg", "trace has no base points")

    w0 = float((u_bar - sol) @ (u_bar - sol)) / gamma
    bounds = [w0 / ((j - start + 1) * coef) for j in range(start, len(trace.rows))]
    return _checked("adaptive_eg", trace, bounds, start, post_hoc=True)


def evaluate_certificate(
    trace: IterateTrace,
    op: OperatorProblem,
    config: SolverConfig,
    k0: Optional[int] = None,
    final_step: Optional[float] = None,
) -> RateCertificate:
    """
    Check the best-iterate rate that matches the run's algorithm and regime.

    OGDA+ uses the monotone rate when op is declared monotone and
    aL < (2-gamma)/(2+gamma), otherwise the weak Minty rate, which needs
    a > rho and aL <= (1-gamma)/(1+gamma), or a*lam*gamma > rho and
    aL <= ogda_step_size_bound(gamma, lam) when config.lam is set. Adaptive EG+ is checked post hoc
    from k0 with the final step size standing in for its limit.

    Raises:
        MissingMetadataError: If op has no solution
        ConfigurationError: If the trace is empty
    """
    op.require_solution()
    if not trace.rows:
        raise ConfigurationError(message="Cannot certify an empty trace", setting_name="trace")

    if config.algorithm == "ogda-plus":
        return _ogda_certificate(trace, op, config)
    if config.algorithm == "adaptive-eg-plus":
        return _adaptive_certificate(trace, op, config, k0, final_step)
    return _not_applicable(None, f"no deterministic rate implemented for {config.algorithm}")


# ==================== Weak Minty geometry ====================


def weak_minty_residual(op: OperatorProblem, u: ArrayLike, rho: Optional[float] = None) -> float:
    """
    <F(u), u - u*> + rho/2 ||F(u)||^2, using op's rho unless one is given.

    Nonnegative wherever u* is a weak Minty solution with that rho; rho = 0
    gives the plain Minty residual.
    """
    sol = op.require_solution()
    r = op.require_rho() if rho is None else rho
    p = as_point(u, op.dim)
    g = op(p)
    return float(g @ (p - sol)) + 0.5 * r * float(g @ g)


@dataclass(eq=False)
class SignGrid:
    """
    Sign of <F(u), u - u*> on a regular grid.

    values[i, j] belongs to (xs[i], ys[j]); entries are -1, 0 or +1.
    """

    x_range: tuple[float, float]
    y_range: tuple[float, float]
    resolution: tuple[int, int]
    xs: NDArray[np.float64]
    ys: NDArray[np.float64]
    values: NDArray[np.int8]

    def rows(self) -> Iterator[tuple[float, float, int]]:
        for i, x in enumerate(self.xs):
            for j, y in enumerate(self.ys):
                yield float(x), float(y), int(self.values[i, j])

    def count(self, sign: int) -> int:
        return int(np.count_nonzero(self.values == sign))


def sign_grid(
    op: OperatorProblem,
    x_range: tuple[float, float],
    y_range: tuple[float, float],
    resolution: tuple[int, int],
    embed: Optional[Callable[[float, float], ArrayLike]] = None,
) -> SignGrid:
    """
    Evaluate sign(<F(u), u - u*>) over [x_range] x [y_range], endpoints included.

    embed maps a grid point (x, y) to u; by default u = (x, y). Values with
    magnitude below settings.sign_zero_tol are reported as 0.

    Raises:
        MissingMetadataError: If op has no solution
        ConfigurationError: If the resolution or ranges are invalid
    """
    sol = op.require_solution()
    nx, ny = resolution
    if nx < 1 or ny < 1:
        raise ConfigurationError(
            message=f"Grid resolution must be positive, got {resolution}",
            setting_name="resolution",
        )
    for name, (lo, hi) in (("x_range", x_range), ("y_range", y_range)):
        if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
            raise ConfigurationError(
                message=f"Invalid {name}: [{lo}, {hi}]",
                setting_name=name,
            )
    if embed is None and op.dim != 2:
        raise ConfigurationError(
            message=f"sign_grid needs an embedding for a {op.dim}-dimensional operator",
            setting_name="embed",
        )

    xs = np.linspace(x_range[0], x_range[1], nx)
    ys = np.linspace(y_range[0], y_range[1], ny)
    values = np.zeros((nx, ny), dtype=np.int8)
    zero_tol = settings.sign_zero_tol
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            u = as_point(embed(float(x), float(y)) if embed else (x, y), op.dim)
            ip = float(op(u) @ (u - sol))
            if abs(ip) >= zero_tol:
                values[i, j] = 1 if ip > 0 else -1

    return SignGrid(
        x_range=(float(x_range[0]), float(x_range[1])),
        y_range=(float(y_range[0]), float(y_range[1])),
        resolution=(nx, ny),
        xs=xs,
        ys=ys,
        values=values,
    )
