"""Command-line interface.

Subcommands:
    run      simulate one configuration and persist the run directory
    grid     run an experiment grid (resumable) and write the aggregate
    metrics  recompute the metrics file for an existing run directory
    table    render summary tables from an aggregate
    plots    emit plot-data CSVs and render figures next to them

Configuration and usage errors print one `error: ...` line to stderr and
exit with status 2.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import ConfigError, SimulationConfig
from .engine import read_run
from .harness import (
    INTERVENTIONS,
    PROFILES,
    ExperimentGrid,
    canonical_intervention,
    emit_plot_data,
    format_metrics_csv,
    format_run_config,
    load_grid_config,
    load_run_config,
    read_aggregate_csv,
    read_metrics_csv,
    render_table,
    run_grid,
    run_single,
    write_metrics_csv,
    write_tables,
)
from .metrics import compute_report
from .plotting import render_plots


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="recourse-sim",
        description="Simulate algorithmic recourse under competitive selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    # "cns+cda" is the documented spelling; directories use the "_" form.
    iv_names = sorted(INTERVENTIONS) + ["cns+cda"]

    p_run = sub.add_parser("run", help="simulate one configuration")
    p_run.add_argument("--config", help="INI file with [population]/[simulation]")
    p_run.add_argument("--out", default="runs", help="output directory (default: runs)")
    p_run.add_argument("--seed", type=int, help="override the RNG seed")
    p_run.add_argument("--gap", type=float, help="override the qualification gap")
    p_run.add_argument("--intervention", choices=iv_names,
                       help="selection/retraining policy (default: baseline)")
    p_run.add_argument("--effort-advantaged", type=float,
                       help="override the advantaged effort level")
    p_run.add_argument("--effort-disadvantaged", type=float,
                       help="override the disadvantaged effort level")
    p_run.add_argument("--horizon", type=int, help="override the number of steps")
    p_run.add_argument("--print-config", action="store_true",
                       help="print the fully resolved config and exit")

    p_grid = sub.add_parser("grid", help="run an experiment grid")
    p_grid.add_argument("--config", help="INI file with [population]/[simulation]/[grid]")
    p_grid.add_argument("--out", default="results",
                        help="output directory (default: results)")
    p_grid.add_argument("--profile", choices=sorted(PROFILES), default=None,
                        help="seed-count preset: desk=20, paper=100")
    p_grid.add_argument("--seeds", type=int, help="explicit seed count "
                        "(overrides --profile)")
    p_grid.add_argument("--base-seed", type=int, help="first seed of the block")
    p_grid.add_argument("--workers", type=int, default=1,
                        help="parallel worker processes (default: 1)")
    p_grid.add_argument("--gaps", help="space/comma separated gap values")
    p_grid.add_argument("--interventions", help="space/comma separated subset "
                        f"of {sorted(INTERVENTIONS)}")
    p_grid.add_argument("--quiet", action="store_true", help="suppress progress lines")

    p_metrics = sub.add_parser("metrics", help="recompute metrics for a run directory")
    p_metrics.add_argument("run_dir", help="directory containing events.csv")
    p_metrics.add_argument("--stdout", action="store_true",
                           help="print the metrics CSV instead of writing it")

    p_table = sub.add_parser("table", help="render summary tables")
    p_table.add_argument("--out", default="results",
                         help="grid output directory (default: results)")

    p_plots = sub.add_parser("plots", help="emit plot data and render figures")
    p_plots.add_argument("--out", default="results",
                         help="grid output directory (default: results)")

    return parser


def _cmd_run(args) -> int:
    if args.config:
        config = load_run_config(args.config)
    else:
        config = SimulationConfig()
    import dataclasses

    pop_over = {}
    if args.gap is not None:
        pop_over["qualification_gap"] = args.gap
    if args.effort_advantaged is not None:
        pop_over["effort_mean_advantaged"] = args.effort_advantaged
    if args.effort_disadvantaged is not None:
        pop_over["effort_mean_disadvantaged"] = args.effort_disadvantaged
    if pop_over:
        config = dataclasses.replace(
            config, population=dataclasses.replace(config.population, **pop_over))
    sim_over = {}
    if args.seed is not None:
        sim_over["seed"] = args.seed
    if args.horizon is not None:
        sim_over["horizon"] = args.horizon
    label = "baseline"
    if args.intervention is not None:
        label = canonical_intervention(args.intervention)
        selection, retraining = INTERVENTIONS[label]
        sim_over["selection_rule"] = selection
        sim_over["retraining_rule"] = retraining
    if sim_over:
        config = dataclasses.replace(config, **sim_over)
    config.validate()

    if args.print_config:
        sys.stdout.write(format_run_config(config))
        return 0
    run_path = run_single(config, args.out, label=label)
    report = read_metrics_csv(run_path / "metrics.csv", label=label,
                              seed=config.seed)
    print(f"run written to {run_path}")
    for metric in ("retr", "dttr"):
        v = report.value(metric)
        print(f"final {metric}: " + ("n/a" if v is None else f"{v:.4f}"))
    return 0


def _cmd_grid(args) -> int:
    seeds = args.seeds
    if seeds is None and args.profile is not None:
        seeds = PROFILES[args.profile]
    if args.config:
        grid = load_grid_config(args.config, seeds=seeds)
    else:
        grid = ExperimentGrid()
        if seeds is not None:
            import dataclasses
            grid = dataclasses.replace(grid, seeds=seeds)
    import dataclasses

    if args.base_seed is not None:
        grid = dataclasses.replace(grid, base_seed=args.base_seed)
    if args.gaps:
        gaps = tuple(float(v) for v in args.gaps.replace(",", " ").split())
        grid = dataclasses.replace(grid, gaps=gaps)
    if args.interventions:
        ivs = tuple(canonical_intervention(v)
                    for v in args.interventions.replace(",", " ").split())
        grid = dataclasses.replace(grid, interventions=ivs)
    grid.validate()

    progress = None if args.quiet else lambda msg: print(msg, flush=True)
    result = run_grid(grid, args.out, workers=max(1, args.workers),
                      progress=progress)
    print(f"grid complete: {result.executed} runs executed, "
          f"{result.skipped} reused, {len(result.aggregates)} cells")
    print(f"aggregate written to {result.out_dir / 'aggregate' / 'metrics.csv'}")
    return 0


def _cmd_metrics(args) -> int:
    run_dir = Path(args.run_dir)
    if not (run_dir / "events.csv").exists():
        raise ConfigError(f"no events.csv under {run_dir}")
    log = read_run(run_dir)
    report = compute_report(log, label=run_dir.name)
    if args.stdout:
        sys.stdout.write(format_metrics_csv(report))
    else:
        write_metrics_csv(report, run_dir / "metrics.csv")
        print(f"metrics written to {run_dir / 'metrics.csv'}")
    return 0


def _cmd_table(args) -> int:
    agg_path = Path(args.out) / "aggregate" / "metrics.csv"
    if not agg_path.exists():
        raise ConfigError(f"no aggregate at {agg_path}; run the grid first")
    aggregates = read_aggregate_csv(agg_path)
    tables = write_tables(aggregates, args.out)
    sys.stdout.write(render_table(aggregates))
    print(f"tables written to {tables}")
    return 0


def _cmd_plots(args) -> int:
    out = Path(args.out)
    agg_path = out / "aggregate" / "metrics.csv"
    if not agg_path.exists():
        raise ConfigError(f"no aggregate at {agg_path}; run the grid first")
    plots_dir = emit_plot_data(out)
    rendered = render_plots(out)
    print(f"plot data written to {plots_dir}")
    for p in rendered:
        print(f"rendered {p}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "grid": _cmd_grid,
    "metrics": _cmd_metrics,
    "table": _cmd_table,
    "plots": _cmd_plots,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
