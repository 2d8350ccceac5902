"""Tests for OGDA+, EG+ and adaptive EG+."""

import math

import numpy as np
import pytest

from weakminty.core.algorithms import (
    AdaptiveEgState,
    EgPlusState,
    OgdaPlusState,
    Verdict,
    adaptive_eg_lyapunov_gaps,
    adaptive_eg_step,
    eg_plus_step,
    monotone_step_size_bound,
    ogda_lyapunov_decrease_gaps,
    ogda_lyapunov_gaps,
    ogda_plus_step,
    ogda_step_size_bound,
    textbook_ogda_step,
    validate_weak_minty_config,
)
from weakminty.core.exceptions import (
    ConfigurationError,
    MissingMetadataError,
    NonFiniteIterateError,
)
from weakminty.core.operators import OperatorProblem
from weakminty.core.problems import lower_bound_problem, monotone_quadratic_problem, polar_game_problem


class CountingOperator:
    """Wraps an operator and counts evaluations."""

    def __init__(self, op: OperatorProblem):
        self.calls = 0
        self._op = op
        self.problem = OperatorProblem(
            dim=op.dim,
            eval=self._eval,
            lipschitz=op.lipschitz,
            weak_minty_rho=op.weak_minty_rho,
            solution=op.solution,
            name=op.name,
        )

    def _eval(self, u):
        self.calls += 1
        return self._op(u)


def _run_ogda(op, u0, a, gamma, steps):
    state = OgdaPlusState.initial(op, u0, a, gamma)
    iterates, fields = [state.u], []
    for _ in range(steps):
        state, report = ogda_plus_step(state, op)
        iterates.append(state.u)
        fields.append(state.g_prev)
    return iterates, fields


def _run_adaptive(op, u0, a0, tau, gamma, steps):
    state = AdaptiveEgState.initial(u0, a0, tau, gamma)
    reports = []
    for _ in range(steps):
        state, report = adaptive_eg_step(state, op)
        reports.append(report)
    return state, reports


class TestOgdaPlus:
    """Tests for the OGDA+ step."""

    def test_first_step_uses_gamma(self, forsaken):
        """With u_{-1} = u_0 the first update is u_0 - a*gamma*F(u_0)."""
        u0 = np.array([0.5, 0.5])
        state = OgdaPlusState.initial(forsaken, u0, 0.1, 0.5)
        state, report = ogda_plus_step(state, forsaken)
        np.testing.assert_allclose(state.u, u0 - 0.1 * 0.5 * forsaken(u0), rtol=0, atol=1e-15)
        assert report.oracle_calls == 1
        assert report.field_norm_sq == pytest.approx(float(forsaken(u0) @ forsaken(u0)))

    def test_hand_computed_update(self, lower_bound):
        """u_0 = (1, 0), a = 0.25, gamma = 0.5 gives u_1 = (1.125, 0.125*sqrt3)."""
        state = OgdaPlusState.initial(lower_bound, [1.0, 0.0], 0.25, 0.5)
        state, _ = ogda_plus_step(state, lower_bound)
        np.testing.assert_allclose(state.u, [1.125, 0.125 * math.sqrt(3.0)], rtol=1e-15)

    def test_oracle_call_accounting(self, forsaken):
        """k steps cost exactly k + 1 evaluations."""
        counter = CountingOperator(forsaken)
        state = OgdaPlusState.initial(counter.problem, [0.5, 0.5], 0.05, 0.5)
        for _ in range(25):
            state, _ = ogda_plus_step(state, counter.problem)
        assert counter.calls == 26
        assert state.oracle_calls == 26
        assert state.k == 25

    def test_gamma_one_matches_textbook_ogda(self, forsaken):
        """gamma = 1 reproduces classical OGDA bit for bit."""
        a = 0.04
        state = OgdaPlusState.initial(forsaken, [0.5, 0.5], a, 1.0)
        u, u_prev = np.array([0.5, 0.5]), np.array([0.5, 0.5])
        for _ in range(100):
            state, _ = ogda_plus_step(state, forsaken)
            u, u_prev = textbook_ogda_step(u, u_prev, forsaken, a), u
            assert np.array_equal(state.u, u)

    def test_state_is_not_mutated(self, monotone):
        state = OgdaPlusState.initial(monotone, [1.0, 1.0], 0.1, 0.5)
        before = state.u.copy()
        new_state, _ = ogda_plus_step(state, monotone)
        np.testing.assert_array_equal(state.u, before)
        assert new_state is not state

    def test_non_finite_field_aborts(self):
        calls = {"n": 0}

        def field(u):
            calls["n"] += 1
            return u if calls["n"] < 3 else np.array([np.nan, 0.0])

        op = OperatorProblem(dim=2, eval=field)
        state = OgdaPlusState.initial(op, [1.0, 2.0], 0.1, 0.5)
        state, _ = ogda_plus_step(state, op)
        with pytest.raises(NonFiniteIterateError) as exc_info:
            ogda_plus_step(state, op)
        assert exc_info.value.iteration == 1
        assert exc_info.value.details["point"] == state.u.tolist()

    def test_rejects_bad_parameters(self, monotone):
        with pytest.raises(ConfigurationError):
            OgdaPlusState.initial(monotone, [1.0, 1.0], 0.0, 0.5)
        with pytest.raises(ConfigurationError):
            OgdaPlusState.initial(monotone, [1.0, 1.0], 0.1, 1.5)


class TestEgPlus:
    """Tests for the fixed-step EG+ step."""

    def test_hand_computed_update(self):
        """mu = 1, u_bar_0 = 1, a = 0.5, gamma = 0.5: u_0 = 0.5, u_bar_1 = 0.875."""
        op = monotone_quadratic_problem(1.0, 1).derived
        state = EgPlusState.initial([1.0], 0.5, 0.5)
        state, report = eg_plus_step(state, op)
        np.testing.assert_allclose(report.point, [0.5])
        np.testing.assert_allclose(state.u_bar, [0.875])
        assert report.field_norm_sq == pytest.approx(0.25)
        assert report.oracle_calls == 2
        np.testing.assert_array_equal(report.u_bar, [1.0])

    def test_gamma_one_is_extragradient(self, forsaken):
        a = 0.05
        u_bar = np.array([0.5, 0.5])
        state = EgPlusState.initial(u_bar, a, 1.0)
        for _ in range(20):
            state, _ = eg_plus_step(state, forsaken)
            u_bar = u_bar - a * forsaken(u_bar - a * forsaken(u_bar))
            np.testing.assert_allclose(state.u_bar, u_bar, rtol=0, atol=1e-15)

    def test_zero_field_is_fixed_point(self, zero_field):
        state = EgPlusState.initial([0.3, -0.7], 0.5, 0.5)
        for _ in range(5):
            state, _ = eg_plus_step(state, zero_field)
        np.testing.assert_array_equal(state.u_bar, [0.3, -0.7])

    def test_oracle_call_accounting(self, forsaken):
        counter = CountingOperator(forsaken)
        state = EgPlusState.initial([0.5, 0.5], 0.05, 0.5)
        for _ in range(10):
            state, _ = eg_plus_step(state, counter.problem)
        assert counter.calls == 20
        assert state.oracle_calls == 20


class TestAdaptiveEg:
    """Tests for adaptive EG+."""

    def test_lower_bound_step_is_tau_over_L(self, lower_bound):
        """The conformal field gives a_k = tau/L = 0.495 for every k >= 1."""
        state, reports = _run_adaptive(lower_bound, [1.0, 1.0], 1.0, 0.99, 0.5, 30)
        assert reports[0].step_used == 1.0
        for report in reports[1:]:
            assert report.step_used == pytest.approx(0.495, rel=1e-12)
        assert state.k0 == 1

    def test_constant_field_keeps_initial_step(self, constant_field):
        op = constant_field(2.0)
        state, reports = _run_adaptive(op, [0.0, 0.0], 0.7, 0.99, 0.5, 10)
        assert all(r.step_used == 0.7 for r in reports)
        assert state.k0 == 0

    @pytest.mark.parametrize("a0", [0.1, 1.0, 5.0])
    def test_steps_nonincreasing_and_bounded_below(self, lower_bound, monotone, mild_rotation, a0):
        """a_{k+1} <= a_k and a_k >= min(a0, tau/L) whenever L is exact."""
        tau = 0.99
        for op in (lower_bound, monotone, mild_rotation):
            _, reports = _run_adaptive(op, [1.0, -0.5], a0, tau, 0.5, 50)
            steps = [r.step_used for r in reports]
            assert all(b <= a for a, b in zip(steps, steps[1:]))
            floor = min(a0, tau / op.lipschitz) * (1 - 1e-12)
            assert min(steps) >= floor

    def test_oracle_calls(self, forsaken):
        counter = CountingOperator(forsaken)
        state, reports = _run_adaptive(counter.problem, [0.5, 0.5], 0.5, 0.99, 0.5, 15)
        assert counter.calls == 30
        assert all(r.oracle_calls == 2 for r in reports)

    def test_rejects_bad_tau(self):
        with pytest.raises(ConfigurationError):
            AdaptiveEgState.initial([0.0, 0.0], 0.5, 1.0, 0.5)


class TestStepSizeBounds:
    """Tests for the step size theory."""

    def test_general_bound_recovers_weak_minty_bound(self):
        assert ogda_step_size_bound(0.5, 2.0) == pytest.approx(1.0 / 3.0)

    def test_monotone_limit(self):
        assert ogda_step_size_bound(1.0, 0.0) == pytest.approx(1.0 / 3.0)
        assert monotone_step_size_bound(1.0) == pytest.approx(1.0 / 3.0)
        assert monotone_step_size_bound(0.5) == pytest.approx(0.6)

    def test_infeasible_pair(self):
        assert ogda_step_size_bound(1.0, 2.0) == pytest.approx(-1.0)

    @pytest.mark.parametrize("gamma,lam", [(0.0, 1.0), (1.5, 0.5), (0.5, -0.1), (0.5, 4.5)])
    def test_rejects_out_of_range(self, gamma, lam):
        with pytest.raises(ConfigurationError):
            ogda_step_size_bound(gamma, lam)


class TestValidateWeakMintyConfig:
    """Tests for validate_weak_minty_config."""

    @pytest.mark.parametrize("gamma", [0.1, 0.5, 1.0])
    @pytest.mark.parametrize("aL", [0.05, 0.2, 0.35, 0.5, 0.9])
    def test_lower_bound_is_always_a_theory_gap(self, lower_bound, gamma, aL):
        report = validate_weak_minty_config(lower_bound, aL / 2.0, gamma)
        assert report.verdict is Verdict.THEORY_GAP
        assert report.rho_margin <= 0 or report.step_margin < 0

    def test_monotone_pass(self, monotone):
        report = validate_weak_minty_config(monotone, 0.3, 0.5)
        assert report.passed
        assert report.rho_margin == pytest.approx(0.3)
        assert report.step_margin == pytest.approx(1.0 / 3.0 - 0.3)
        assert report.reasons == []

    def test_forsaken_with_one_over_L(self, forsaken):
        report = validate_weak_minty_config(forsaken, 1.0 / forsaken.lipschitz, 0.5)
        assert report.verdict is Verdict.THEORY_GAP
        assert report.step_margin < 0
        assert any("aL" in r for r in report.reasons)

    def test_small_lam_needs_a_larger_step(self, mild_rotation):
        """a*lam*gamma = 0.075 falls below rho ~ 0.0998."""
        assert validate_weak_minty_config(mild_rotation, 0.3, 0.5).passed
        report = validate_weak_minty_config(mild_rotation, 0.3, 0.5, lam=0.5)
        assert report.verdict is Verdict.THEORY_GAP
        assert report.lam == 0.5
        assert report.rho_margin == pytest.approx(0.075 - mild_rotation.weak_minty_rho)
        assert report.reasons[0].startswith("a*lam*gamma")

    def test_lam_widens_the_step_bound(self, mild_rotation):
        """lam = 1 at gamma = 1/2 allows aL up to 1/2 instead of 1/3."""
        a = 0.45 / mild_rotation.lipschitz
        assert not validate_weak_minty_config(mild_rotation, a, 0.5).passed
        report = validate_weak_minty_config(mild_rotation, a, 0.5, lam=1.0)
        assert report.passed
        assert report.step_margin == pytest.approx(0.05)
        assert report.to_dict()["lam"] == 1.0

    def test_lam_out_of_range(self, monotone):
        with pytest.raises(ConfigurationError):
            validate_weak_minty_config(monotone, 0.1, 0.5, lam=4.5)

    def test_missing_metadata_is_an_error(self):
        with pytest.raises(MissingMetadataError):
            validate_weak_minty_config(polar_game_problem().derived, 0.1, 0.5)


class TestLyapunovGaps:
    """The one-step Lyapunov inequalities hold along actual trajectories."""

    @pytest.mark.parametrize("gamma,a", [(0.5, 0.3), (0.5, 0.1), (0.25, 0.5)])
    def test_ogda_on_monotone(self, monotone, gamma, a):
        iterates, fields = _run_ogda(monotone, [1.0, -2.0], a, gamma, 200)
        gaps = ogda_lyapunov_gaps(iterates, fields, monotone, a, gamma)
        v0 = float((iterates[0] + a * fields[0]) @ (iterates[0] + a * fields[0]))
        assert len(gaps) == 200
        assert min(gaps) >= -1e-9 * max(1.0, v0)

    def test_ogda_on_weak_minty_rotation(self, mild_rotation):
        """a = 0.3 > rho ~ 0.0998 and aL ~ 0.3004 <= 1/3."""
        assert validate_weak_minty_config(mild_rotation, 0.3, 0.5).passed
        iterates, fields = _run_ogda(mild_rotation, [1.0, 1.0], 0.3, 0.5, 300)
        gaps = ogda_lyapunov_gaps(iterates, fields, mild_rotation, 0.3, 0.5)
        assert min(gaps) >= -1e-9 * 4.0

    @pytest.mark.parametrize("gamma,a", [(0.5, 0.3), (0.5, 0.1), (0.25, 0.5), (1.0, 0.3)])
    def test_ogda_decrease_on_monotone(self, monotone, gamma, a):
        iterates, fields = _run_ogda(monotone, [1.0, -2.0], a, gamma, 200)
        gaps = ogda_lyapunov_decrease_gaps(iterates, fields, monotone, a, gamma)
        v0 = float((iterates[0] + a * fields[0]) @ (iterates[0] + a * fields[0]))
        assert len(gaps) == 200
        assert min(gaps) >= -1e-9 * max(1.0, v0)

    def test_ogda_decrease_on_weak_minty_rotation(self, mild_rotation):
        iterates, fields = _run_ogda(mild_rotation, [1.0, 1.0], 0.3, 0.5, 300)
        gaps = ogda_lyapunov_decrease_gaps(iterates, fields, mild_rotation, 0.3, 0.5)
        v0 = float((iterates[0] + 0.3 * fields[0]) @ (iterates[0] + 0.3 * fields[0]))
        assert min(gaps) >= -1e-9 * max(1.0, v0)

    def test_ogda_decrease_on_random_admissible_rotations(self, rng):
        """Every (xi, zeta, a, gamma) that validates gives a decreasing V."""
        checked = 0
        for _ in range(60):
            xi, zeta = rng.uniform(-2.0, 2.0), rng.uniform(-0.3, 0.3)
            gamma = rng.uniform(0.05, 0.95)
            op = lower_bound_problem(xi, zeta).derived
            a = rng.uniform(0.0, 1.0) * (1.0 - gamma) / (1.0 + gamma) / op.lipschitz
            if not validate_weak_minty_config(op, a, gamma).passed:
                continue
            u0 = rng.uniform(-2.0, 2.0, size=2)
            iterates, fields = _run_ogda(op, u0, a, gamma, 150)
            v0 = float((iterates[0] + a * fields[0]) @ (iterates[0] + a * fields[0]))
            gaps = ogda_lyapunov_decrease_gaps(iterates, fields, op, a, gamma)
            assert min(gaps) >= -1e-9 * max(1.0, v0), (xi, zeta, a, gamma)
            checked += 1
        assert checked >= 20

    def test_ogda_needs_enough_fields(self, monotone):
        iterates, fields = _run_ogda(monotone, [1.0, 1.0], 0.1, 0.5, 5)
        with pytest.raises(ConfigurationError):
            ogda_lyapunov_gaps(iterates, fields[:3], monotone, 0.1, 0.5)

    @pytest.mark.parametrize("fixture_name,steps", [("lower_bound", 30), ("mild_rotation", 200), ("monotone", 200)])
    def test_adaptive_eg(self, request, fixture_name, steps):
        op = request.getfixturevalue(fixture_name)
        gamma, tau = 0.5, 0.99
        _, reports = _run_adaptive(op, [1.0, 1.0], 1.0, tau, gamma, steps)
        gaps = adaptive_eg_lyapunov_gaps(
            [r.point for r in reports],
            [r.u_bar for r in reports],
            [r.step_used for r in reports],
            [r.field_norm_sq for r in reports],
            op,
            gamma,
            tau,
        )
        assert len(gaps) == steps - 1
        for gap, report in zip(gaps, reports):
            w_k = float(report.u_bar @ report.u_bar) / gamma
            assert gap >= -1e-9 * max(1.0, w_k)
