"""
Experiment runner.

Drives one solver over one benchmark until convergence, divergence or the
iteration budget, then derives the certificate and writes artifacts. Sweeps
run their cells on a thread pool; every cell is independent.
"""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Union

import numpy as np

from weakminty.config.experiment import ExperimentConfig, SolverConfig
from weakminty.config.settings import settings
from weakminty.core.algorithms import (
    AdaptiveEgState,
    EgPlusState,
    OgdaPlusState,
    StepReport,
    ValidityReport,
    adaptive_eg_step,
    eg_plus_step,
    ogda_plus_step,
    validate_weak_minty_config,
)
from weakminty.core.diagnostics import (
    IterateTrace,
    RateCertificate,
    RunStatus,
    SignGrid,
    TraceRow,
    classify_run,
    evaluate_certificate,
    sign_grid,
)
from weakminty.core.exceptions import ConfigurationError, NonFiniteIterateError
from weakminty.core.operators import OperatorProblem, Point, as_point
from weakminty.core.problems import BenchmarkSpec, get_benchmark
from weakminty.core.stochastic import StochasticOracle, StochOgdaState, stoch_ogda_plus_step
from weakminty.utils import csvio

logger = logging.getLogger(__name__)

SolverState = Union[OgdaPlusState, EgPlusState, AdaptiveEgState, StochOgdaState]
Stepper = Callable[[Any], tuple[Any, StepReport]]

SWEEP_RESULT_FIELDS = ("status", "best_norm_sq", "iterations", "oracle_calls", "final_step")


@dataclass
class RunResult:
    """Everything a run produced, before it is written to disk."""

    config: ExperimentConfig
    problem: BenchmarkSpec
    trace: IterateTrace
    status: RunStatus
    a: float
    final_u: Point
    final_step: float
    oracle_calls: int
    k0: Optional[int] = None
    certificate: Optional[RateCertificate] = None
    validity: Optional[ValidityReport] = None
    left_valid_region: bool = False

    @property
    def iterations(self) -> int:
        return len(self.trace)

    @property
    def best_norm_sq(self) -> float:
        return self.trace.best_norm_sq

    def summary(self) -> dict[str, Any]:
        fields: dict[str, Any] = {
            "problem": self.problem.cli_id,
            "algorithm": self.config.solver.algorithm,
            "status": self.status.value,
            "best_norm_sq": float(self.best_norm_sq),
            "iterations": self.iterations,
            "oracle_calls": self.oracle_calls,
            "final_step": float(self.final_step),
        }
        if self.k0 is not None:
            fields["k0"] = self.k0
        fields["u"] = [float(x) for x in self.final_u]
        return fields


@dataclass
class RunArtifacts:
    out_dir: Path
    trace_path: Path
    summary_path: Path
    certificate_path: Optional[Path] = None


def _initial_state(
    config: SolverConfig, op: OperatorProblem, u0: Point, a: float
) -> tuple[SolverState, Stepper]:
    algorithm = config.algorithm
    if algorithm == "ogda-plus":
        return OgdaPlusState.initial(op, u0, a, config.gamma), lambda s: ogda_plus_step(s, op)
    if algorithm == "eg-plus":
        return EgPlusState.initial(u0, a, config.gamma), lambda s: eg_plus_step(s, op)
    if algorithm == "adaptive-eg-plus":
        state = AdaptiveEgState.initial(u0, a, config.tau, config.gamma)
        return state, lambda s: adaptive_eg_step(s, op)
    if algorithm == "stoch-ogda-plus":
        oracle = StochasticOracle(base=op, sigma=config.sigma, rng_seed=config.seed)
        state_s = StochOgdaState.initial(oracle, u0, a, config.gamma, config.batch)
        return state_s, lambda s: stoch_ogda_plus_step(s, oracle)
    raise ConfigurationError(message=f"Unknown algorithm: {algorithm}", setting_name="algorithm")


def _final_point(state: SolverState) -> Point:
    if isinstance(state, (EgPlusState, AdaptiveEgState)):
        return state.u_bar
    return state.u


def _diverging(u: Point, threshold: float) -> bool:
    if not np.all(np.isfinite(u)):
        return True
    return float(np.linalg.norm(u)) > threshold


def run_experiment(config: ExperimentConfig) -> RunResult:
    """
    Run config to convergence (best ||F||^2 <= tol^2), divergence or budget.

    A non-finite value stops the run as diverged; the offending point is
    logged.

    Raises:
        ConfigurationError: On invalid configuration
        MissingMetadataError: If aL is given for a problem without L
    """
    spec = config.build_problem()
    op = spec.derived
    solver = config.solver
    u0 = as_point(config.u0 if config.u0 is not None else spec.default_u0(), op.dim)
    a = solver.resolve_step(op.lipschitz)

    validity: Optional[ValidityReport] = None
    if solver.algorithm in ("ogda-plus", "stoch-ogda-plus") and (
        op.lipschitz is not None and op.weak_minty_rho is not None
    ):
        validity = validate_weak_minty_config(op, a, solver.gamma, solver.lam)

    logger.info(
        f"Run {spec.cli_id} / {solver.algorithm}: a={a:.6g}, gamma={solver.gamma:.6g}, "
        f"iters={solver.iters}, seed={solver.seed}"
    )

    trace = IterateTrace()
    try:
        state, step = _initial_state(solver, op, u0, a)
    except NonFiniteIterateError as e:
        logger.warning(f"Stopping {spec.cli_id} run before the first step: {e}")
        trace.mark_diverged()
        trace.status = classify_run(trace, solver.tol)
        return RunResult(
            config=config,
            problem=spec,
            trace=trace,
            status=trace.status,
            a=a,
            final_u=u0,
            final_step=a,
            oracle_calls=solver.batch if solver.algorithm == "stoch-ogda-plus" else 1,
            validity=validity,
        )
    tol_sq = solver.tol * solver.tol
    left_region = False

    for k in range(solver.iters):
        try:
            state, report = step(state)
        except NonFiniteIterateError as e:
            logger.warning(f"Stopping {spec.cli_id} run: {e}")
            trace.mark_diverged()
            break

        trace.append(
            TraceRow(
                k=k,
                u=report.point,
                field_norm_sq=report.field_norm_sq,
                step=report.step_used,
                oracle_calls=state.oracle_calls,
                u_bar=report.u_bar,
            )
        )

        region = op.valid_region
        if region is not None and not left_region and not region.contains(report.point, strict=True):
            left_region = True
            logger.warning(
                f"{spec.cli_id}: iterate {report.point.tolist()} left the region where rho "
                f"is valid at k={k}; certificates no longer apply"
            )

        if report.field_norm_sq <= tol_sq:
            break
        if _diverging(report.u_next, solver.divergence_threshold):
            trace.mark_diverged()
            break
        if (k + 1) % settings.log_every == 0:
            logger.debug(f"k={k + 1} best={trace.best_norm_sq:.3e} step={report.step_used:.6g}")

    status = classify_run(trace, solver.tol)
    trace.status = status

    k0 = state.k0 if isinstance(state, AdaptiveEgState) else None
    final_step = state.a

    certificate: Optional[RateCertificate] = None
    if op.solution is not None and trace.rows:
        certificate = evaluate_certificate(trace, op, solver, k0=k0, final_step=final_step)

    logger.info(
        f"Finished {spec.cli_id} / {solver.algorithm}: {status.value} after {len(trace)} "
        f"iterations, best={trace.best_norm_sq:.3e}, oracle calls={state.oracle_calls}"
    )
    return RunResult(
        config=config,
        problem=spec,
        trace=trace,
        status=status,
        a=a,
        final_u=_final_point(state),
        final_step=final_step,
        oracle_calls=state.oracle_calls,
        k0=k0,
        certificate=certificate,
        validity=validity,
        left_valid_region=left_region,
    )


def write_run_artifacts(result: RunResult, out_dir: Path) -> RunArtifacts:
    """trace.csv, certificate.csv (if the certificate applies) and summary.txt."""
    out_dir = Path(out_dir)
    trace_path = csvio.write_trace_csv(out_dir / "trace.csv", result.trace)
    cert_path: Optional[Path] = None
    if result.certificate is not None and result.certificate.applicable:
        cert_path = csvio.write_certificate_csv(
            out_dir / "certificate.csv", result.certificate, result.trace
        )
    summary_path = csvio.write_summary(out_dir / "summary.txt", result.summary())
    return RunArtifacts(
        out_dir=out_dir,
        trace_path=trace_path,
        summary_path=summary_path,
        certificate_path=cert_path,
    )


def run(config: ExperimentConfig, out_dir: Path) -> tuple[RunResult, RunArtifacts]:
    result = run_experiment(config)
    return result, write_run_artifacts(result, out_dir)


# ==================== Sweeps ====================


@dataclass
class SweepCell:
    index: int
    overrides: dict[str, float]
    config: ExperimentConfig


@dataclass
class SweepRecord:
    cell: SweepCell
    summary: dict[str, Any]


@dataclass
class SweepResult:
    keys: list[str]
    records: list[SweepRecord] = field(default_factory=list)
    table_path: Optional[Path] = None

    def by_overrides(self, **overrides: float) -> SweepRecord:
        for record in self.records:
            if all(math.isclose(record.cell.overrides[k], v) for k, v in overrides.items()):
                return record
        raise KeyError(overrides)


def sweep_cells(config: ExperimentConfig) -> list[SweepCell]:
    """
    Cartesian product of the sweep values, in key order.

    Cell i gets seed = base seed + i.

    Raises:
        ConfigurationError: If no sweep is configured
    """
    if not config.sweep:
        raise ConfigurationError(message="Sweep has no keys", setting_name="sweep")
    keys = list(config.sweep)
    cells: list[SweepCell] = []
    for index, values in enumerate(itertools.product(*(config.sweep[k] for k in keys))):
        overrides = dict(zip(keys, values))
        base_seed = int(overrides.get("seed", config.solver.seed))
        cell_config = config.with_overrides({**overrides, "seed": base_seed + index})
        cells.append(SweepCell(index=index, overrides=overrides, config=cell_config))
    return cells


def _run_cell(cell: SweepCell, out_dir: Optional[Path]) -> SweepRecord:
    result = run_experiment(cell.config)
    if out_dir is not None:
        write_run_artifacts(result, out_dir / f"cell_{cell.index:04d}")
    summary = result.summary()
    summary["seed"] = cell.config.solver.seed
    return SweepRecord(cell=cell, summary=summary)


def run_sweep(
    config: ExperimentConfig,
    out_dir: Optional[Path] = None,
    max_workers: Optional[int] = None,
) -> SweepResult:
    """
    Run every sweep cell and merge the summaries into sweep.csv.

    Cells are written to cell_XXXX/ as they finish; the merged table is
    sorted by the sweep key values and written once at the end.
    """
    cells = sweep_cells(config)
    keys = list(config.sweep)
    workers = max_workers or settings.max_workers
    logger.info(f"Sweep over {', '.join(keys)}: {len(cells)} cells on {workers} workers")

    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(lambda c: _run_cell(c, out_dir), cells))

    records.sort(key=lambda r: (tuple(r.cell.overrides[k] for k in keys), r.cell.index))
    result = SweepResult(keys=keys, records=records)

    if out_dir is not None:
        # a swept seed is reported once, as the seed the cell actually ran with
        columns = [k for k in keys if k != "seed"]
        header = ["cell", *columns, "seed", *SWEEP_RESULT_FIELDS]
        rows = (
            [
                r.cell.index,
                *[float(r.cell.overrides[k]) for k in columns],
                r.summary["seed"],
                *[r.summary[f] for f in SWEEP_RESULT_FIELDS],
            ]
            for r in records
        )
        result.table_path = csvio.write_rows(Path(out_dir) / "sweep.csv", header, rows)
    return result


# ==================== Sign maps ====================


def run_signmap(
    problem: str,
    x_range: tuple[float, float],
    y_range: tuple[float, float],
    resolution: tuple[int, int],
    out_path: Optional[Path] = None,
    **params: Any,
) -> SignGrid:
    """Sign grid of <F(u), u - u*> for a benchmark, optionally written as x,y,sign."""
    spec = get_benchmark(problem, **params)
    grid = sign_grid(spec.derived, x_range, y_range, resolution)
    logger.info(
        f"Sign map {spec.cli_id}: {grid.count(-1)} negative, {grid.count(0)} zero, "
        f"{grid.count(1)} positive cells"
    )
    if out_path is not None:
        csvio.write_sign_grid_csv(Path(out_path), grid)
    return grid
