"""
weakminty command line.

Subcommands:
    run       one solver run; writes trace.csv, certificate.csv, summary.txt
    sweep     Cartesian product of parameter values; writes cell_XXXX/ and sweep.csv
    signmap   sign of <F(u), u - u*> on a grid; writes x,y,sign
    validate  step size validity report and the general OGDA+ bound

Settings may come from a key=value file (--config) and from flags; flags
win. Exit codes: 0 on completion (whatever the run status), 2 on usage
errors, 3 on configuration errors.

Usage:
    weakminty run --problem forsaken --algorithm adaptive-eg-plus --a0 0.5 --iters 5000
    weakminty sweep --problem lower-bound --algorithm ogda-plus --sweep aL=0.2,0.35 --sweep gamma=0.5,1
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from weakminty.config.experiment import (
    ALGORITHMS,
    PROBLEM_KEYS,
    SOLVER_KEYS,
    ExperimentConfig,
    parse_experiment_config,
)
from weakminty.config.settings import settings
from weakminty.core.algorithms import ogda_step_size_bound, validate_weak_minty_config
from weakminty.core.exceptions import WeakMintyError
from weakminty.core.problems import BENCHMARK_IDS, get_benchmark
from weakminty.core.runner import run, run_signmap, run_sweep

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3

PROBLEM_CHOICES = tuple(b.replace("_", "-") for b in BENCHMARK_IDS)


class UsageError(Exception):
    """Bad command line or config file syntax."""


# ==================== Parsing helpers ====================


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from e


def _interval(text: str) -> tuple[float, float]:
    values = _float_list(text)
    if len(values) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
    return values[0], values[1]


def _resolution(text: str) -> tuple[int, int]:
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected N or NX,NY, got {text!r}") from e
    if len(parts) == 1:
        return parts[0], parts[0]
    if len(parts) == 2:
        return parts[0], parts[1]
    raise argparse.ArgumentTypeError(f"expected N or NX,NY, got {text!r}")


def _sweep_item(text: str) -> tuple[str, tuple[float, ...]]:
    key, sep, values = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected key=v1,v2,..., got {text!r}")
    return key.strip(), _float_list(values)


def read_config_file(path: Path) -> dict[str, str]:
    """
    Parse a key=value file; '#' starts a comment, blank lines are skipped.

    Raises:
        UsageError: On a line without '=' or a missing file
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e}") from e

    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        values[key.strip()] = value.strip()
    return values


def _file_value(key: str, text: str) -> Any:
    if key in ("problem", "algorithm"):
        return text
    if key == "u0":
        return _float_list(text)
    return float(text) if key not in ("batch", "iters", "seed", "dim") else int(float(text))


def build_experiment(args: argparse.Namespace) -> ExperimentConfig:
    """
    Merge the config file (if any) with the flags into an ExperimentConfig.

    Raises:
        UsageError: On unknown keys, unknown problem or algorithm ids
        ConfigurationError: On invalid values
    """
    merged: dict[str, Any] = {}
    sweep: dict[str, tuple[float, ...]] = {}

    if getattr(args, "config", None):
        for key, text in read_config_file(args.config).items():
            if key.startswith("sweep."):
                try:
                    sweep[key[len("sweep."):]] = _float_list(text)
                except argparse.ArgumentTypeError as e:
                    raise UsageError(f"{key}: {e}") from e
                continue
            name = "a" if key == "a0" else key
            if name not in ("problem", "algorithm", "u0", *SOLVER_KEYS, *PROBLEM_KEYS):
                raise UsageError(f"unknown config key {key!r}")
            try:
                merged[name] = _file_value(name, text)
            except ValueError as e:
                raise UsageError(f"{key}: cannot parse {text!r}") from e

    a_flag, a0_flag = getattr(args, "a", None), getattr(args, "a0", None)
    if a_flag is not None and a0_flag is not None:
        raise UsageError("give --a or --a0, not both")
    flags = {
        "problem": args.problem,
        "algorithm": getattr(args, "algorithm", None),
        "u0": getattr(args, "u0", None),
        "a": a_flag if a_flag is not None else a0_flag,
    }
    for key in (*SOLVER_KEYS, *PROBLEM_KEYS):
        if key != "a":
            flags[key] = getattr(args, key, None)
    if flags["a"] is not None or flags["aL"] is not None:
        merged.pop("a", None)
        merged.pop("aL", None)
    merged.update({k: v for k, v in flags.items() if v is not None})
    for key, values in getattr(args, "sweep", None) or []:
        sweep[key] = values

    problem = merged.pop("problem", None)
    if problem is None:
        raise UsageError("no problem given (use --problem or a config file)")
    if str(problem).replace("_", "-") not in PROBLEM_CHOICES:
        raise UsageError(f"unknown problem {problem!r}; choose from {', '.join(PROBLEM_CHOICES)}")
    algorithm = str(merged.pop("algorithm", "ogda-plus")).replace("_", "-")
    if algorithm not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")

    data: dict[str, Any] = {"problem": problem, "sweep": sweep}
    solver: dict[str, Any] = {"algorithm": algorithm}
    for key, value in merged.items():
        if key in SOLVER_KEYS:
            solver[key] = value
        else:
            data[key] = value
    data["solver"] = solver
    return parse_experiment_config(data)


# ==================== Subcommands ====================


def cmd_run(args: argparse.Namespace) -> int:
    config = build_experiment(args)
    out_dir = Path(args.out) if args.out else settings.output_dir
    result, artifacts = run(config, out_dir)
    summary = result.summary()
    print(" ".join(f"{k}={v}" for k, v in summary.items() if k != "u"))
    print(f"wrote {artifacts.out_dir}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = build_experiment(args)
    out_dir = Path(args.out) if args.out else settings.output_dir
    result = run_sweep(config, out_dir, max_workers=args.workers)
    for record in result.records:
        cell = " ".join(f"{k}={record.cell.overrides[k]:g}" for k in result.keys)
        print(f"{cell} status={record.summary['status']} best={record.summary['best_norm_sq']:.3e}")
    print(f"wrote {result.table_path}")
    return EXIT_OK


def cmd_signmap(args: argparse.Namespace) -> int:
    params = {k: v for k, v in _problem_params(args).items() if v is not None}
    out = Path(args.out) if args.out else settings.output_dir / "signmap.csv"
    grid = run_signmap(args.problem, args.x_range, args.y_range, args.resolution, out, **params)
    print(f"negative={grid.count(-1)} zero={grid.count(0)} positive={grid.count(1)}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    spec = get_benchmark(args.problem, **_problem_params(args))
    op = spec.derived
    gamma = args.gamma if args.gamma is not None else settings.default_gamma
    if args.a is None and args.aL is None:
        raise UsageError("validate needs --a or --aL")
    if args.a is not None and args.aL is not None:
        raise UsageError("give --a or --aL, not both")
    a = args.a if args.a is not None else args.aL / op.require_lipschitz()

    report = validate_weak_minty_config(op, a, gamma, args.lam)
    lam = args.lam if args.lam is not None else 1.0 / gamma
    print(f"verdict={report.verdict.value}")
    print(f"a={report.a:.17g} L={report.lipschitz:.17g} rho={report.rho:.17g} gamma={gamma:.17g}")
    print(f"rho_margin={report.rho_margin:.17g}")
    print(f"step_margin={report.step_margin:.17g}")
    for reason in report.reasons:
        print(f"reason: {reason}")
    print(f"ogda_step_size_bound(gamma={gamma:g}, lam={lam:g})={ogda_step_size_bound(gamma, lam):.17g}")
    return EXIT_OK


def _problem_params(args: argparse.Namespace) -> dict[str, Any]:
    params = {
        "xi": args.xi,
        "zeta": args.zeta,
        "mu": args.mu,
        "dim": args.dim,
        "a": args.polar_a,
    }
    return {k: v for k, v in params.items() if v is not None}


# ==================== Parser ====================


def _add_problem_args(p: argparse.ArgumentParser, required: bool = False) -> None:
    p.add_argument("--problem", choices=PROBLEM_CHOICES, required=required, help="Benchmark id")
    p.add_argument("--xi", type=float, help="lower-bound: coupling xi")
    p.add_argument("--zeta", type=float, help="lower-bound: curvature zeta")
    p.add_argument("--mu", type=float, help="monotone-quadratic: scale mu")
    p.add_argument("--dim", type=int, help="monotone-quadratic: dimension")
    p.add_argument("--polar-a", dest="polar_a", type=float, help="polar-game: parameter a")


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key=value config file; flags override it")
    p.add_argument("--algorithm", choices=ALGORITHMS, help="Solver (default: ogda-plus)")
    p.add_argument("--a", type=float, help="Step size")
    p.add_argument("--a0", type=float, help="Initial step size of adaptive-eg-plus")
    p.add_argument("--aL", dest="aL", type=float, help="Step size as a multiple of 1/L")
    p.add_argument("--gamma", type=float, help=f"Step ratio (default: {settings.default_gamma})")
    p.add_argument("--tau", type=float, help=f"Adaptive safety factor (default: {settings.default_tau})")
    p.add_argument("--lam", type=float, help="Lyapunov weight lambda")
    p.add_argument("--sigma", type=float, help="Noise scale of stoch-ogda-plus")
    p.add_argument("--batch", type=int, help="Batch size of stoch-ogda-plus")
    p.add_argument("--iters", type=int, help=f"Iteration budget (default: {settings.default_iters})")
    p.add_argument("--tol", type=float, help=f"Convergence tolerance (default: {settings.tolerance})")
    p.add_argument("--seed", type=int, help="Random seed")
    p.add_argument("--u0", type=_float_list, help="Initial point, comma separated")
    p.add_argument("--out", type=str, help=f"Output directory (default: {settings.output_dir})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="weakminty",
        description="Solvers and experiments for variational inequalities with weak Minty solutions",
    )
    parser.add_argument(
        "--log-level",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help=f"Logging level (default: {settings.log_level})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="Run one solver")
    _add_problem_args(p_run)
    _add_solver_args(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="Run a parameter sweep")
    _add_problem_args(p_sweep)
    _add_solver_args(p_sweep)
    p_sweep.add_argument(
        "--sweep",
        type=_sweep_item,
        action="append",
        metavar="KEY=V1,V2,...",
        help="Values of one swept key (repeatable)",
    )
    p_sweep.add_argument("--workers", type=int, help=f"Worker threads (default: {settings.max_workers})")
    p_sweep.set_defaults(func=cmd_sweep)

    p_sign = sub.add_parser("signmap", help="Write the sign grid of <F(u), u - u*>")
    _add_problem_args(p_sign, required=True)
    p_sign.add_argument("--x-range", dest="x_range", type=_interval, default=(0.0, 1.0))
    p_sign.add_argument("--y-range", dest="y_range", type=_interval, default=(0.0, 1.0))
    p_sign.add_argument("--resolution", type=_resolution, default=(200, 200), help="N or NX,NY")
    p_sign.add_argument("--out", type=str, help="Output CSV path")
    p_sign.set_defaults(func=cmd_signmap)

    p_val = sub.add_parser("validate", help="Check a step size against the theory")
    _add_problem_args(p_val, required=True)
    p_val.add_argument("--a", type=float, help="Step size")
    p_val.add_argument("--aL", dest="aL", type=float, help="Step size as a multiple of 1/L")
    p_val.add_argument("--gamma", type=float)
    p_val.add_argument("--lam", type=float, help="lambda of the general bound (default: 1/gamma)")
    p_val.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, args.log_level or settings.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        return int(args.func(args))
    except UsageError as e:
        print(f"weakminty {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except WeakMintyError as e:
        print(f"weakminty {args.command}: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
