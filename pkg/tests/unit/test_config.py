"""Tests for configuration module."""

import pytest
from pydantic import ValidationError

from weakminty.config.experiment import (
    ExperimentConfig,
    SolverConfig,
    parse_experiment_config,
)
from weakminty.config.settings import WeakMintySettings
from weakminty.core.exceptions import ConfigurationError, MissingMetadataError


class TestWeakMintySettings:
    """Tests for WeakMintySettings configuration."""

    def test_default_values(self):
        """Should have the documented defaults."""
        settings = WeakMintySettings(_env_file=None)
        assert settings.divergence_threshold == 1e12
        assert settings.tolerance == 1e-6
        assert settings.default_gamma == 0.5
        assert settings.default_tau == 0.99
        assert settings.csv_precision == 17
        assert settings.log_level == "INFO"

    def test_output_dir_from_env(self, monkeypatch, tmp_path):
        """Should read the output directory from WEAKMINTY_OUTPUT_DIR."""
        monkeypatch.setenv("WEAKMINTY_OUTPUT_DIR", str(tmp_path / "out"))
        settings = WeakMintySettings(_env_file=None)
        assert settings.output_dir == tmp_path / "out"

    def test_numeric_overrides(self, monkeypatch):
        """Should parse numeric settings from the environment."""
        monkeypatch.setenv("WEAKMINTY_TOLERANCE", "1e-8")
        monkeypatch.setenv("WEAKMINTY_MAX_WORKERS", "8")
        settings = WeakMintySettings(_env_file=None)
        assert settings.tolerance == 1e-8
        assert settings.max_workers == 8

    def test_numeric_limits(self, monkeypatch):
        """Should reject values outside their bounds."""
        monkeypatch.setenv("WEAKMINTY_DEFAULT_TAU", "1.5")
        with pytest.raises(ValidationError):
            WeakMintySettings(_env_file=None)

    def test_log_level_options(self, monkeypatch):
        """Should only accept known log levels."""
        monkeypatch.setenv("WEAKMINTY_LOG_LEVEL", "DEBUG")
        assert WeakMintySettings(_env_file=None).log_level == "DEBUG"
        monkeypatch.setenv("WEAKMINTY_LOG_LEVEL", "LOUD")
        with pytest.raises(ValidationError):
            WeakMintySettings(_env_file=None)


class TestSolverConfig:
    """Tests for per-run solver configuration."""

    def test_defaults(self):
        """gamma and tau default to 1/2 and 0.99."""
        config = SolverConfig(a=0.1)
        assert config.gamma == 0.5
        assert config.tau == 0.99
        assert config.algorithm == "ogda-plus"

    def test_algorithm_spellings(self):
        """Underscores are accepted for algorithm ids."""
        assert SolverConfig(algorithm="adaptive_eg_plus", a=1.0).algorithm == "adaptive-eg-plus"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"a": float("nan")},
            {"a": float("inf")},
            {"a": -1.0},
            {"a": 0.1, "gamma": 0.0},
            {"a": 0.1, "gamma": 1.5},
            {"a": 0.1, "tau": 1.0},
            {"a": 0.1, "batch": 0},
            {"a": 0.1, "aL": 0.2},
            {"a": 0.1, "gamma": 0.5, "lam": 5.0},
        ],
    )
    def test_invalid_values(self, kwargs):
        """Non-finite or out-of-range numerics are rejected."""
        with pytest.raises(ValidationError):
            SolverConfig(**kwargs)

    def test_resolve_step_from_aL(self):
        """aL is divided by the Lipschitz constant."""
        assert SolverConfig(aL=0.5).resolve_step(2.0) == pytest.approx(0.25)
        assert SolverConfig(a=0.3).resolve_step(None) == 0.3

    def test_resolve_step_needs_lipschitz(self):
        with pytest.raises(MissingMetadataError):
            SolverConfig(aL=0.5).resolve_step(None)

    def test_resolve_step_needs_a_step(self):
        with pytest.raises(ConfigurationError):
            SolverConfig().resolve_step(1.0)


class TestExperimentConfig:
    """Tests for experiment configuration."""

    def test_problem_id_normalized(self):
        config = ExperimentConfig(problem="lower-bound")
        assert config.problem == "lower_bound"

    def test_unknown_problem(self):
        with pytest.raises(ConfigurationError):
            parse_experiment_config({"problem": "saddle"})

    def test_invalid_numerics_become_configuration_error(self):
        """parse_experiment_config wraps pydantic errors."""
        with pytest.raises(ConfigurationError) as exc_info:
            parse_experiment_config({"problem": "forsaken", "solver": {"a": "nan"}})
        assert "errors" in exc_info.value.details

    def test_sweep_validation(self):
        """Sweeps need known keys and at least one value."""
        with pytest.raises(ConfigurationError):
            parse_experiment_config({"problem": "forsaken", "sweep": {"colour": (1.0,)}})
        with pytest.raises(ConfigurationError):
            parse_experiment_config({"problem": "forsaken", "sweep": {"gamma": ()}})

    def test_build_problem_with_params(self):
        config = parse_experiment_config({"problem": "polar-game", "polar_a": 0.5})
        spec = config.build_problem()
        assert spec.params == {"a": 0.5}

    def test_with_overrides(self):
        """Overrides revalidate and switch between a and aL."""
        base = parse_experiment_config(
            {"problem": "lower-bound", "solver": {"a": 0.1}, "sweep": {"gamma": (0.5, 1.0)}}
        )
        cell = base.with_overrides({"aL": 0.35, "gamma": 1.0, "zeta": -0.5})
        assert cell.solver.a is None
        assert cell.solver.aL == 0.35
        assert cell.solver.gamma == 1.0
        assert cell.zeta == -0.5
        assert cell.sweep == {}

    def test_with_overrides_rejects_unknown_keys(self):
        base = parse_experiment_config({"problem": "forsaken"})
        with pytest.raises(ConfigurationError):
            base.with_overrides({"colour": 1.0})
