"""
Deterministic iterators for weak Minty variational inequalities.

Three methods share one stepping interface, step(state, op) -> (state, report):

- OGDA+: one oracle call per step, u_{k+1} = u_k - a((1+gamma)F(u_k) - F(u_{k-1}))
- EG+: extrapolate with a, update with gamma*a
- adaptive EG+: EG+ with a nonincreasing local Lipschitz step size

States are frozen; every step returns a new state. Solvers never refuse a
configuration outside the theory; validate_weak_minty_config reports it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from numpy.typing import ArrayLike

from weakminty.core.exceptions import ConfigurationError, NonFiniteIterateError
from weakminty.core.operators import OperatorProblem, Point, as_point

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepReport:
    """
    Outcome of a single step.

    Attributes:
        u_next: Iterate handed to the next step (u_{k+1} or u_bar_{k+1})
        field_norm_sq: ||F(u_k)||^2 at the point the theorems rate
        step_used: Step size a (a_k for adaptive EG+)
        oracle_calls: Fresh field evaluations made by this step
        point: The rated point u_k
        u_bar: Base point u_bar_k for EG variants, None for OGDA+
    """

    u_next: Point
    field_norm_sq: float
    step_used: float
    oracle_calls: int
    point: Point
    u_bar: Optional[Point] = None


def _check_finite(value: Point, iteration: int, point: Point, what: str) -> None:
    if not np.all(np.isfinite(value)):
        raise NonFiniteIterateError(
            message=f"Non-finite {what} at iteration {iteration}",
            iteration=iteration,
            point=point.tolist(),
        )


def _evaluate(op: OperatorProblem, u: Point, iteration: int) -> Point:
    g = op(u)
    _check_finite(g, iteration, u, "field value")
    return g


def _check_step_params(a: float, gamma: float) -> None:
    if not (math.isfinite(a) and a > 0):
        raise ConfigurationError(message=f"Step size must be positive, got {a}", setting_name="a")
    if not (0 < gamma <= 1):
        raise ConfigurationError(
            message=f"gamma must lie in (0, 1], got {gamma}",
            setting_name="gamma",
        )


def _ogda_update(u: Point, g: Point, g_prev: Point, a: float, gamma: float) -> Point:
    return u - a * ((1.0 + gamma) * g - g_prev)


# ==================== OGDA+ ====================


@dataclass(frozen=True, eq=False)
class OgdaPlusState:
    """OGDA+ state; g_prev holds F(u_{k-1}) and equals F(u_0) at k = 0."""

    u: Point
    g_prev: Point
    a: float
    gamma: float
    k: int = 0
    oracle_calls: int = 1

    @classmethod
    def initial(cls, op: OperatorProblem, u0: ArrayLike, a: float, gamma: float) -> OgdaPlusState:
        """Start from u_{-1} = u_0, costing one field evaluation."""
        _check_step_params(a, gamma)
        u = as_point(u0, op.dim)
        return cls(u=u, g_prev=_evaluate(op, u, 0), a=a, gamma=gamma)


def ogda_plus_step(state: OgdaPlusState, op: OperatorProblem) -> tuple[OgdaPlusState, StepReport]:
    g = _evaluate(op, state.u, state.k)
    u_next = _ogda_update(state.u, g, state.g_prev, state.a, state.gamma)
    _check_finite(u_next, state.k, state.u, "iterate")

    new_state = replace(
        state,
        u=u_next,
        g_prev=g,
        k=state.k + 1,
        oracle_calls=state.oracle_calls + 1,
    )
    report = StepReport(
        u_next=u_next,
        field_norm_sq=float(g @ g),
        step_used=state.a,
        oracle_calls=1,
        point=state.u,
    )
    return new_state, report


def textbook_ogda_step(u: ArrayLike, u_prev: ArrayLike, op: OperatorProblem, a: float) -> Point:
    """Classical OGDA, u_{k+1} = u_k - a(2F(u_k) - F(u_{k-1}))."""
    p = as_point(u, op.dim)
    return p - a * (2.0 * op(p) - op(u_prev))


# ==================== EG+ ====================


@dataclass(frozen=True, eq=False)
class EgPlusState:
    u_bar: Point
    a: float
    gamma: float
    k: int = 0
    last_u: Optional[Point] = None
    oracle_calls: int = 0

    @classmethod
    def initial(cls, u0: ArrayLike, a: float, gamma: float) -> EgPlusState:
        _check_step_params(a, gamma)
        return cls(u_bar=as_point(u0), a=a, gamma=gamma)


def _eg_pair(
    op: OperatorProblem, u_bar: Point, a: float, gamma: float, k: int
) -> tuple[Point, Point, Point, Point]:
    g_bar = _evaluate(op, u_bar, k)
    u = u_bar - a * g_bar
    _check_finite(u, k, u_bar, "extrapolated point")
    g = _evaluate(op, u, k)
    u_bar_next = u_bar - gamma * a * g
    _check_finite(u_bar_next, k, u_bar, "iterate")
    return u, g, g_bar, u_bar_next


def eg_plus_step(state: EgPlusState, op: OperatorProblem) -> tuple[EgPlusState, StepReport]:
    """u_k = u_bar_k - aF(u_bar_k); u_bar_{k+1} = u_bar_k - gamma*a*F(u_k)."""
    u_bar = as_point(state.u_bar, op.dim)
    u, g, _, u_bar_next = _eg_pair(op, u_bar, state.a, state.gamma, state.k)

    new_state = replace(
        state,
        u_bar=u_bar_next,
        k=state.k + 1,
        last_u=u,
        oracle_calls=state.oracle_calls + 2,
    )
    report = StepReport(
        u_next=u_bar_next,
        field_norm_sq=float(g @ g),
        step_used=state.a,
        oracle_calls=2,
        point=u,
        u_bar=u_bar,
    )
    return new_state, report


# ==================== Adaptive EG+ ====================


@dataclass(frozen=True, eq=False)
class AdaptiveEgState:
    """
    Adaptive EG+ state.

    a is the step used by the last step (a0 before the first one). The
    previous pair (u_{k-1}, u_bar_{k-1}) and its field values are kept so the
    step size rule costs no extra evaluations. k0 is 1 + the last index j
    with a_j / a_{j+1} > 1/tau, 0 if there is none so far.
    """

    u_bar: Point
    a: float
    a0: float
    tau: float
    gamma: float
    k: int = 0
    k0: int = 0
    u_prev: Optional[Point] = None
    u_bar_prev: Optional[Point] = None
    g_prev: Optional[Point] = field(default=None, repr=False)
    g_bar_prev: Optional[Point] = field(default=None, repr=False)
    oracle_calls: int = 0

    @classmethod
    def initial(cls, u0: ArrayLike, a0: float, tau: float, gamma: float) -> AdaptiveEgState:
        _check_step_params(a0, gamma)
        if not (0 < tau < 1):
            raise ConfigurationError(
                message=f"tau must lie in (0, 1), got {tau}",
                setting_name="tau",
            )
        return cls(u_bar=as_point(u0), a=a0, a0=a0, tau=tau, gamma=gamma)

    @property
    def final_step(self) -> float:
        return self.a


def _next_adaptive_step(state: AdaptiveEgState) -> float:
    if state.k == 0 or state.u_prev is None or state.u_bar_prev is None:
        return state.a0
    if state.g_prev is None or state.g_bar_prev is None:
        return state.a0
    dF = float(np.linalg.norm(state.g_prev - state.g_bar_prev))
    if dF == 0.0:
        return state.a
    du = float(np.linalg.norm(state.u_prev - state.u_bar_prev))
    return min(state.a, state.tau * du / dF)


def adaptive_eg_step(
    state: AdaptiveEgState, op: OperatorProblem
) -> tuple[AdaptiveEgState, StepReport]:
    """
    One adaptive EG+ step.

    a_k = min(a_{k-1}, tau*||u_{k-1} - u_bar_{k-1}|| / ||F(u_{k-1}) - F(u_bar_{k-1})||),
    keeping a_{k-1} when the denominator vanishes; a_0 is used as is.
    """
    a_k = _next_adaptive_step(state)
    k0 = state.k0
    if state.k > 0 and state.tau * state.a > a_k:
        k0 = state.k
        logger.debug(f"Adaptive step dropped {state.a:.6g} -> {a_k:.6g} at k={state.k}")

    u_bar = as_point(state.u_bar, op.dim)
    u, g, g_bar, u_bar_next = _eg_pair(op, u_bar, a_k, state.gamma, state.k)

    new_state = replace(
        state,
        u_bar=u_bar_next,
        a=a_k,
        k=state.k + 1,
        k0=k0,
        u_prev=u,
        u_bar_prev=u_bar,
        g_prev=g,
        g_bar_prev=g_bar,
        oracle_calls=state.oracle_calls + 2,
    )
    report = StepReport(
        u_next=u_bar_next,
        field_norm_sq=float(g @ g),
        step_used=a_k,
        oracle_calls=2,
        point=u,
        u_bar=u_bar,
    )
    return new_state, report


# ==================== Step size theory ====================


def ogda_step_size_bound(gamma: float, lam: float) -> float:
    """
    Largest admissible aL for OGDA+ with Lyapunov weight lam.

    (2 - lam*gamma - gamma) / (2 - lam*gamma + gamma); lam = 1/gamma gives
    (1 - gamma)/(1 + gamma). A negative value means no admissible step.

    Raises:
        ConfigurationError: If gamma is outside (0, 1] or lam outside [0, 2/gamma]
    """
    if not (0 < gamma <= 1):
        raise ConfigurationError(
            message=f"gamma must lie in (0, 1], got {gamma}",
            setting_name="gamma",
        )
    if not (0 <= lam <= 2.0 / gamma):
        raise ConfigurationError(
            message=f"lambda must lie in [0, 2/gamma] = [0, {2.0 / gamma:.6g}], got {lam}",
            setting_name="lam",
        )
    return (2.0 - lam * gamma - gamma) / (2.0 - lam * gamma + gamma)


def monotone_step_size_bound(gamma: float) -> float:
    """(2 - gamma)/(2 + gamma), the monotone limit lam -> 0."""
    return ogda_step_size_bound(gamma, 0.0)


class Verdict(str, Enum):
    PASS = "PASS"
    THEORY_GAP = "THEORY_GAP"


@dataclass
class ValidityReport:
    """
    Whether (a, gamma) lies inside the weak Minty convergence theory.

    rho_margin = a - rho and step_margin = (1-gamma)/(1+gamma) - aL, or
    a*lam*gamma - rho and ogda_step_size_bound(gamma, lam) - aL when lam is set.
    The verdict is PASS iff rho_margin > 0 and step_margin >= 0.
    """

    verdict: Verdict
    rho_margin: float
    step_margin: float
    a: float
    gamma: float
    lipschitz: float
    rho: float
    reasons: list[str] = field(default_factory=list)
    lam: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.verdict is Verdict.PASS

    def to_dict(self) -> dict[str, object]:
        return {
            "verdict": self.verdict.value,
            "rho_margin": self.rho_margin,
            "step_margin": self.step_margin,
            "a": self.a,
            "gamma": self.gamma,
            "lipschitz": self.lipschitz,
            "rho": self.rho,
            "reasons": list(self.reasons),
            "lam": self.lam,
        }


def validate_weak_minty_config(
    op: OperatorProblem,
    a: float,
    gamma: float,
    lam: Optional[float] = None,
) -> ValidityReport:
    """
    Check a > rho and aL <= (1-gamma)/(1+gamma).

    With a Lyapunov weight lam in [0, 2/gamma] the conditions become
    a*lam*gamma > rho and aL <= ogda_step_size_bound(gamma, lam); lam = 1/gamma
    is the default.

    Raises:
        MissingMetadataError: If op has no Lipschitz constant or rho
        ConfigurationError: If gamma is outside (0, 1] or lam outside [0, 2/gamma]
    """
    L = op.require_lipschitz()
    rho = op.require_rho()
    bound = ogda_step_size_bound(gamma, 1.0 / gamma if lam is None else lam)

    step_margin = bound - a * L
    reasons: list[str] = []
    if lam is None:
        rho_margin = a - rho
        if rho_margin <= 0:
            reasons.append(f"a = {a:.6g} <= rho = {rho:.6g}")
        if step_margin < 0:
            reasons.append(f"aL = {a * L:.6g} above (1-gamma)/(1+gamma) = {bound:.6g}")
    else:
        rho_margin = a * lam * gamma - rho
        if rho_margin <= 0:
            reasons.append(f"a*lam*gamma = {a * lam * gamma:.6g} <= rho = {rho:.6g}")
        if step_margin < 0:
            reasons.append(f"aL = {a * L:.6g} above ogda_step_size_bound(gamma, lam) = {bound:.6g}")

    verdict = Verdict.PASS if not reasons else Verdict.THEORY_GAP
    if verdict is Verdict.THEORY_GAP:
        logger.warning(f"{op.name}: a={a:.6g}, gamma={gamma:.6g} outside theory: {'; '.join(reasons)}")

    return ValidityReport(
        verdict=verdict,
        rho_margin=rho_margin,
        step_margin=step_margin,
        a=a,
        gamma=gamma,
        lipschitz=L,
        rho=rho,
        reasons=reasons,
        lam=lam,
    )


# ==================== Lyapunov checks ====================


def ogda_lyapunov_gaps(
    iterates: Sequence[ArrayLike],
    fields: Sequence[ArrayLike],
    op: OperatorProblem,
    a: float,
    gamma: float,
    lam: Optional[float] = None,
) -> list[float]:
    """
    Slack of the OGDA+ one-step Lyapunov inequality along a trajectory.

    With V_k = ||u_k + a g_{k-1} - u*||^2, D_k = u_k - u_{k-1} and
    g_{-1} = g_0, u_{-1} = u_0, entry k is

        V_k + c2||D_k||^2 - (V_{k+1} + c1||D_{k+1}||^2 + a*gamma*(a*lam*gamma - rho)||g_k||^2)

    where c1 = 2/gamma - 1 - lam - aL(2/gamma - lam) and
    c2 = max(0, aL(2/gamma - lam) - a^2 L^2 (1 + 2/gamma - lam)).
    A nonnegative entry means the inequality held at step k.

    Args:
        iterates: u_0, ..., u_n
        fields: g_0 = F(u_0), ..., at least g_{n-1}
        lam: Lyapunov weight, 1/gamma by default

    Raises:
        MissingMetadataError: If op lacks solution, L or rho
        ConfigurationError: If fewer fields than steps are given
    """
    sol = op.require_solution()
    L = op.require_lipschitz()
    rho = op.require_rho()
    lam = 1.0 / gamma if lam is None else lam
    ogda_step_size_bound(gamma, lam)

    us = [as_point(u, op.dim) for u in iterates]
    gs = [as_point(g, op.dim) for g in fields]
    n = len(us) - 1
    if len(gs) < n:
        raise ConfigurationError(
            message=f"Need {n} field values for {n} steps, got {len(gs)}",
            setting_name="fields",
        )

    w = 2.0 / gamma - lam
    aL = a * L
    c1 = w - 1.0 - aL * w
    c2 = max(0.0, aL * w - aL * aL * (1.0 + w))
    coef = a * gamma * (a * lam * gamma - rho)

    def _sq(v: Point) -> float:
        return float(v @ v)

    gaps: list[float] = []
    for k in range(n):
        g_before = gs[k - 1] if k > 0 else gs[0]
        u_before = us[k - 1] if k > 0 else us[0]
        v_k = _sq(us[k] + a * g_before - sol)
        v_next = _sq(us[k + 1] + a * gs[k] - sol)
        lhs = v_next + c1 * _sq(us[k + 1] - us[k]) + coef * _sq(gs[k])
        rhs = v_k + c2 * _sq(us[k] - u_before)
        gaps.append(rhs - lhs)
    return gaps


def ogda_lyapunov_decrease_gaps(
    iterates: Sequence[ArrayLike],
    fields: Sequence[ArrayLike],
    op: OperatorProblem,
    a: float,
    gamma: float,
) -> list[float]:
    """
    Slack of V_{k+1} + a*gamma*(a - rho)||g_k||^2 <= V_k with V_k = ||u_k + a g_{k-1} - u*||^2.

    Same conventions as ogda_lyapunov_gaps, without the difference terms.

    Raises:
        MissingMetadataError: If op lacks solution or rho
        ConfigurationError: If fewer fields than steps are given
    """
    sol = op.require_solution()
    rho = op.require_rho()
    us = [as_point(u, op.dim) for u in iterates]
    gs = [as_point(g, op.dim) for g in fields]
    n = len(us) - 1
    if len(gs) < n:
        raise ConfigurationError(
            message=f"Need {n} field values for {n} steps, got {len(gs)}",
            setting_name="fields",
        )

    coef = a * gamma * (a - rho)
    gaps: list[float] = []
    for k in range(n):
        g_before = gs[k - 1] if k > 0 else gs[0]
        v_k = us[k] + a * g_before - sol
        v_next = us[k + 1] + a * gs[k] - sol
        gaps.append(float(v_k @ v_k) - float(v_next @ v_next) - coef * float(gs[k] @ gs[k]))
    return gaps


def adaptive_eg_lyapunov_gaps(
    points: Sequence[ArrayLike],
    bases: Sequence[ArrayLike],
    steps: Sequence[float],
    field_norms_sq: Sequence[float],
    op: OperatorProblem,
    gamma: float,
    tau: float,
) -> list[float]:
    """
    Slack of the adaptive EG+ one-step inequality.

    W_k = ||u_bar_k - u*||^2 / gamma and entry k is

        W_k - (1 - tau^2 a_k^2 / a_{k+1}^2)||u_k - u_bar_k||^2
            - W_{k+1} - a_k((1-gamma)a_k - rho)||F(u_k)||^2

    for every k that has a successor. The bracket is nonnegative from k0 on,
    where the inequality reduces to W_{k+1} + a_k((1-gamma)a_k - rho)||F(u_k)||^2 <= W_k.

    Args:
        points: u_0, ..., u_n (extrapolated points)
        bases: u_bar_0, ..., u_bar_n
        steps: a_0, ..., a_n
        field_norms_sq: ||F(u_0)||^2, ..., ||F(u_n)||^2
    """
    sol = op.require_solution()
    rho = op.require_rho()
    n = min(len(points), len(bases), len(steps), len(field_norms_sq))

    gaps: list[float] = []
    for k in range(n - 1):
        u = as_point(points[k], op.dim)
        u_bar = as_point(bases[k], op.dim)
        u_bar_next = as_point(bases[k + 1], op.dim)
        a_k, a_next = float(steps[k]), float(steps[k + 1])

        w_k = float((u_bar - sol) @ (u_bar - sol)) / gamma
        w_next = float((u_bar_next - sol) @ (u_bar_next - sol)) / gamma
        ratio_sq = (tau * a_k / a_next) ** 2
        d = u - u_bar
        rhs = w_k - (1.0 - ratio_sq) * float(d @ d)
        lhs = w_next + a_k * ((1.0 - gamma) * a_k - rho) * float(field_norms_sq[k])
        gaps.append(rhs - lhs)
    return gaps
