"""
Stochastic oracle and stochastic OGDA+.

The oracle adds isotropic Gaussian noise to an exact operator,
F~(u, xi) = F(u) + sigma*xi with xi ~ N(0, I). It is unbiased with per-sample
variance d*sigma^2, and a batch of B draws has variance d*sigma^2/B.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import ArrayLike

from weakminty.core.algorithms import StepReport, _check_finite, _check_step_params, _ogda_update
from weakminty.core.exceptions import ConfigurationError
from weakminty.core.operators import OperatorProblem, Point, as_point

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class StochasticOracle:
    """
    Noisy access to base.

    Owns its generator; the draws are fully determined by rng_seed and the
    number of samples taken so far (sample_counter).
    """

    base: OperatorProblem
    sigma: float
    rng_seed: int = 0
    sample_counter: int = 0
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ConfigurationError(
                message=f"Noise scale sigma must be finite and nonnegative, got {self.sigma}",
                setting_name="sigma",
            )
        self._rng = np.random.default_rng(self.rng_seed)

    @property
    def dim(self) -> int:
        return self.base.dim

    def draw(self, u: ArrayLike) -> Point:
        """One sample F(u) + sigma*xi."""
        return batch_estimate(self, u, 1)


def batch_estimate(oracle: StochasticOracle, u: ArrayLike, B: int) -> Point:
    """
    Mean of B independent oracle samples at u.

    With sigma = 0 this is F(u) itself, bit for bit.

    Raises:
        ConfigurationError: If B < 1
    """
    if B < 1:
        raise ConfigurationError(message=f"Batch size must be at least 1, got {B}", setting_name="batch")
    p = as_point(u, oracle.dim)
    g = oracle.base(p)
    oracle.sample_counter += B
    if oracle.sigma == 0:
        return g
    noise = oracle._rng.standard_normal((B, oracle.dim))
    return g + oracle.sigma * noise.mean(axis=0)


@dataclass
class NoiseStats:
    """Empirical bias and mean squared error of batch_estimate at one point."""

    mean_deviation: Point
    mean_sq_error: float
    expected_sq_error: float
    trials: int
    batch: int

    @property
    def relative_variance_error(self) -> float:
        if self.expected_sq_error == 0:
            return 0.0 if self.mean_sq_error == 0 else math.inf
        return abs(self.mean_sq_error / self.expected_sq_error - 1.0)


def empirical_noise_stats(oracle: StochasticOracle, u: ArrayLike, B: int, trials: int) -> NoiseStats:
    """
    Monte-Carlo estimate of E[g~ - F(u)] and E||g~ - F(u)||^2 over trials batches.

    Raises:
        ConfigurationError: If trials < 1 or B < 1
    """
    if trials < 1:
        raise ConfigurationError(message=f"trials must be at least 1, got {trials}", setting_name="trials")
    p = as_point(u, oracle.dim)
    exact = oracle.base(p)
    deviations = np.array([batch_estimate(oracle, p, B) - exact for _ in range(trials)])
    return NoiseStats(
        mean_deviation=deviations.mean(axis=0),
        mean_sq_error=float(np.mean(np.sum(deviations**2, axis=1))),
        expected_sq_error=oracle.dim * oracle.sigma**2 / B,
        trials=trials,
        batch=B,
    )


def required_batch_size(sigma: float, a: float, L: float, epsilon: float) -> int:
    """
    Batch size max(1, ceil(4 sigma^2 / (a L epsilon))).

    This brings the batch variance down to a*L*epsilon/4.

    Raises:
        ConfigurationError: If a, L or epsilon is not positive, or sigma < 0
    """
    for name, value in (("a", a), ("L", L), ("epsilon", epsilon)):
        if not (math.isfinite(value) and value > 0):
            raise ConfigurationError(
                message=f"required_batch_size needs {name} > 0, got {value}",
                setting_name=name,
            )
    if not (math.isfinite(sigma) and sigma >= 0):
        raise ConfigurationError(
            message=f"required_batch_size needs sigma >= 0, got {sigma}",
            setting_name="sigma",
        )
    if sigma == 0:
        return 1
    ratio = 4.0 * sigma * sigma / (a * L * epsilon)
    # round-off in a*L*epsilon must not push an exact integer up by one
    return max(1, math.ceil(ratio * (1.0 - 1e-12)))


@dataclass(frozen=True, eq=False)
class StochOgdaState:
    u: Point
    g_tilde_prev: Point
    a: float
    gamma: float
    batch: int
    k: int = 0
    oracle_calls: int = 0

    @classmethod
    def initial(
        cls, oracle: StochasticOracle, u0: ArrayLike, a: float, gamma: float, batch: int
    ) -> StochOgdaState:
        """g~_{-1} is a batch estimate at u0, costing batch oracle calls."""
        _check_step_params(a, gamma)
        u = as_point(u0, oracle.dim)
        g0 = batch_estimate(oracle, u, batch)
        _check_finite(g0, 0, u, "field estimate")
        return cls(u=u, g_tilde_prev=g0, a=a, gamma=gamma, batch=batch, oracle_calls=batch)


def stoch_ogda_plus_step(
    state: StochOgdaState, oracle: StochasticOracle
) -> tuple[StochOgdaState, StepReport]:
    """
    u_{k+1} = u_k - a((1+gamma) g~_k - g~_{k-1}) with a fresh batch g~_k.

    The report holds the exact ||F(u_k)||^2, which the update never sees.
    """
    g_tilde = batch_estimate(oracle, state.u, state.batch)
    _check_finite(g_tilde, state.k, state.u, "field estimate")
    u_next = _ogda_update(state.u, g_tilde, state.g_tilde_prev, state.a, state.gamma)
    _check_finite(u_next, state.k, state.u, "iterate")

    exact = oracle.base(state.u)
    new_state = replace(
        state,
        u=u_next,
        g_tilde_prev=g_tilde,
        k=state.k + 1,
        oracle_calls=state.oracle_calls + state.batch,
    )
    report = StepReport(
        u_next=u_next,
        field_norm_sq=float(exact @ exact),
        step_used=state.a,
        oracle_calls=state.batch,
        point=state.u,
    )
    return new_state, report
