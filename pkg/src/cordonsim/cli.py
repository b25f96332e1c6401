"""Batch command-line interface.

Subcommands: `run` one scenario, `suite` the bundled a1-a6/b1-b3 set plus
baseline, `sweep` a numeric parameter, `serve` the HTTP service. Report
paths write the delimited output plus rendered figures side by side.

Exit codes: 0 ok, 1 validation, 2 I/O, 3 numerical (non-convergence),
4 suite completed with per-scenario failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .ensemble import EnsembleError, EvaluationError, run_ensemble, run_single
from .indicators import compare_scenarios, export_comparison_csv, export_result
from .scenario import ScenarioError, TimeGrid, load_demand, load_scenario_file
from .scenarios import SUITE_NAMES, builtin_scenario_path

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3
EXIT_SUITE_FAILURES = 4

SWEEP_PATHS = (
    "policy.t_start",
    "policy.t_end",
    "policy.exempt_fraction",
    "policy.fee_by_class",
    "policy.fee_by_class[i]",
    "behavior.cost_median",
    "behavior.anticipate_median",
    "behavior.postpone_median",
    "behavior.anticipate_redist_median",
    "behavior.postpone_redist_median",
    "fleet.km_per_interval",
    "solver.mean_dwell",
    "solver.tolerance",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cordonsim",
        description="What-if simulation of area-based urban traffic pricing",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="evaluate one scenario config")
    run_p.add_argument("--config", required=True, help="scenario config JSON")
    run_p.add_argument("--demand", required=True, help="baseline demand CSV (t,inflow,starting)")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument("--draws", type=int, default=1, help="ensemble size (1 = deterministic)")
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--solver", choices=("iterative", "direct"), default="iterative")
    run_p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")

    suite_p = sub.add_parser("suite", help="run the bundled scenario suite plus baseline")
    suite_p.add_argument("--demand", required=True)
    suite_p.add_argument("--out", required=True)
    suite_p.add_argument("--solver", choices=("iterative", "direct"), default="iterative")
    suite_p.add_argument("--no-figures", action="store_true")

    sweep_p = sub.add_parser("sweep", help="sweep one numeric parameter")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--demand", required=True)
    sweep_p.add_argument("--param", required=True, help="dotted path, e.g. policy.exempt_fraction")
    sweep_p.add_argument("--from", dest="start", type=float, required=True)
    sweep_p.add_argument("--to", dest="stop", type=float, required=True)
    sweep_p.add_argument("--steps", type=int, required=True)
    sweep_p.add_argument("--out", required=True)
    sweep_p.add_argument("--no-figures", action="store_true")

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--demand", required=True)
    serve_p.add_argument("--config", required=True, help="default scenario for the baseline")
    serve_p.add_argument("--port", type=int, default=8000)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--max-draws", type=int, default=1000)
    serve_p.add_argument("--cors-origin", action="append", default=[],
                         help="allowed dashboard origin (repeatable)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return {
            "run": _cmd_run,
            "suite": _cmd_suite,
            "sweep": _cmd_sweep,
            "serve": _cmd_serve,
        }[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


def _load_inputs(config_path: str, demand_path: str):
    if not Path(config_path).exists():
        raise FileNotFoundError(f"config file not found: {config_path}")
    if not Path(demand_path).exists():
        raise FileNotFoundError(f"demand file not found: {demand_path}")
    config = load_scenario_file(config_path)
    demand = load_demand(demand_path, config.time_grid)
    return config, demand


def _write_result(result, out_dir: Path, figures: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    export_result(result, "csv", out_dir / "timeseries.csv")
    export_result(result, "json", out_dir / "kpis.json")
    if figures:
        from .figures import render_result_figures

        render_result_figures(result, out_dir)


def _cmd_run(args) -> int:
    config, demand = _load_inputs(args.config, args.demand)
    out_dir = Path(args.out)
    if args.draws > 1:
        try:
            result = run_ensemble(
                config, demand, n_draws=args.draws, seed=args.seed, solver_method=args.solver
            )
        except EnsembleError as exc:
            print(f"ensemble failed: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL
        _write_result(result, out_dir, not args.no_figures)
        return EXIT_OK
    result = run_single(config, demand, solver_method=args.solver)
    _write_result(result, out_dir, not args.no_figures)
    for side in ("baseline", "modified"):
        traffic = getattr(result, side).traffic
        if not traffic.converged:
            print(
                f"traffic solve ({side}) did not converge: residual "
                f"{traffic.residual:.3g} > tolerance after {traffic.iterations_used} iterations",
                file=sys.stderr,
            )
            return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_suite(args) -> int:
    if not Path(args.demand).exists():
        raise FileNotFoundError(f"demand file not found: {args.demand}")
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    results = {}
    failures = {}
    for name in SUITE_NAMES:
        try:
            config = load_scenario_file(builtin_scenario_path(name))
            demand = load_demand(args.demand, config.time_grid)
            result = run_single(config, demand, solver_method=args.solver)
            _write_result(result, out_root / name, not args.no_figures)
            results[name] = result
        except (ScenarioError, EvaluationError, OSError) as exc:
            failures[name] = str(exc)
            print(f"scenario {name} failed: {exc}", file=sys.stderr)
    if results:
        comparison = compare_scenarios([(n, r.kpis) for n, r in results.items()])
        export_comparison_csv(comparison, out_root / "comparison.csv")
        if not args.no_figures:
            from .figures import render_comparison_figures

            render_comparison_figures(results, out_root)
    print(f"suite: {len(results)} scenarios completed, {len(failures)} failed")
    return EXIT_SUITE_FAILURES if failures else EXIT_OK


def set_param_path(document: dict, path: str, value: float) -> None:
    """Assign a numeric value at a dotted path inside a config document."""
    index = None
    key_path = path
    if path.endswith("]") and "[" in path:
        key_path, bracket = path[:-1].rsplit("[", 1)
        try:
            index = int(bracket)
        except ValueError:
            raise KeyError(path) from None
    parts = key_path.split(".")
    node = document
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise KeyError(path)
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise KeyError(path)
    current = node[leaf]
    if index is not None:
        if not isinstance(current, list) or not 0 <= index < len(current):
            raise KeyError(path)
        current[index] = value
    elif isinstance(current, list):
        node[leaf] = [value] * len(current)
    elif isinstance(current, dict):
        # distribution-valued parameter: pin it to the swept point
        node[leaf] = {"kind": "point", "value": value}
    else:
        node[leaf] = value


def _cmd_sweep(args) -> int:
    if not Path(args.config).exists():
        raise FileNotFoundError(f"config file not found: {args.config}")
    if not Path(args.demand).exists():
        raise FileNotFoundError(f"demand file not found: {args.demand}")
    document = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.steps < 1:
        print("error: --steps must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    values = [args.start] if args.steps == 1 else np.linspace(args.start, args.stop, args.steps)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for value in values:
        doc = json.loads(json.dumps(document))
        try:
            set_param_path(doc, args.param, float(value))
        except KeyError:
            print(
                f"error: unknown parameter path {args.param!r}; valid paths include: "
                + ", ".join(SWEEP_PATHS),
                file=sys.stderr,
            )
            return EXIT_VALIDATION
        config = _load_scenario_dict(doc)
        demand = load_demand(args.demand, config.time_grid)
        result = run_single(config, demand)
        for kpi, kpi_value in result.kpis.values.items():
            rows.append((float(value), kpi, kpi_value.absolute))

    with open(out_dir / "sweep.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["param_value", "kpi", "value"])
        writer.writerows(rows)
    if not args.no_figures:
        from .figures import render_sweep_figure

        render_sweep_figure(args.param, rows, out_dir)
    return EXIT_OK


def _load_scenario_dict(document: dict):
    from .scenario import load_scenario

    return load_scenario(document)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    config, demand = _load_inputs(args.config, args.demand)
    app = build_app(
        demand=demand,
        config=config,
        max_draws=args.max_draws,
        cors_origins=tuple(args.cors_origin),
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


if __name__ == "__main__":
    entrypoint()
