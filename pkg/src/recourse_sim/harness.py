"""Experiment harness: run grids of simulations, aggregate, tabulate.

A grid is the cross of qualification gaps, effort conditions, and policy
interventions, each run over a fixed block of seeds. Effort conditions only
vary under the plain policy, and interventions only run under equal effort;
that keeps the grid at the comparisons the summary table actually reports.

Disk layout under the output directory:

    logs/<cell>/<confighash12>_s<seed>/   events.csv, initial_population.csv,
                                          manifest.json, metrics.csv
    aggregate/metrics.csv                 per-cell mean and stderr series
    tables/summary.csv, summary.txt
    plots/*.csv (+ rendered .png next to each, see plotting)

Completed runs are detected by their manifest and skipped, so an
interrupted grid resumes where it stopped. Aggregation always reads runs in
(cell, seed) order, so results are identical no matter how many workers ran.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .core import (
    ConfigError,
    GeneratorCase,
    PopulationSpec,
    RetrainingRule,
    SelectionRule,
    SimulationConfig,
)
from .engine import read_run, run, run_dir_name, write_run
from .metrics import (
    GROUP_KEYS,
    REPORT_METRICS,
    MetricsReport,
    compute_report,
    success_records,
)

# Policy intervention -> (selection rule, retraining rule).
INTERVENTIONS = {
    "baseline": (SelectionRule.TOP_K, RetrainingRule.NONE),
    "cns": (SelectionRule.CNS, RetrainingRule.NONE),
    "cda": (SelectionRule.TOP_K, RetrainingRule.CDA),
    "cns_cda": (SelectionRule.CNS, RetrainingRule.CDA),
    "grr": (SelectionRule.TOP_K, RetrainingRule.GRR),
}


def canonical_intervention(name: str) -> str:
    """Normalize an intervention name ("CNS+CDA" -> "cns_cda")."""
    key = name.strip().lower().replace("+", "_")
    if key not in INTERVENTIONS:
        raise ConfigError(f"unknown intervention: {name!r}")
    return key

# Effort condition -> (advantaged level, disadvantaged level). Both groups
# sit at effort_low under "equal"; the doubled group moves up to
# effort_high, so "double the expected effort" is a raise, not a handicap.
CONDITIONS = ("equal", "adv_double", "dis_double")

PROFILES = {"desk": 20, "paper": 100}

# Stamped into every run manifest. effort_scale was retuned once, from 0.02
# to 0.022, so the equal-effort ratio and time-gap curves land inside their
# target bands at gap 3; sigma kept its default.
CALIBRATION_NOTE = "effort_scale=0.022 (retuned once from 0.02); sigma=0.1 (default)"

METRICS_CSV_HEADER = "metric,group,timestep,value"
AGGREGATE_CSV_HEADER = "cell,metric,group,timestep,mean,stderr,count"


@dataclass(frozen=True)
class CellSpec:
    """One grid cell: a (gap, effort condition, intervention) combination."""

    gap: float
    condition: str
    intervention: str

    @property
    def cell_id(self) -> str:
        g = self.gap
        gtxt = str(int(g)) if float(g).is_integer() else str(g).replace(".", "p")
        return f"q{gtxt}_{self.condition}_{self.intervention}"


@dataclass(frozen=True)
class ExperimentGrid:
    gaps: tuple[float, ...] = (0.0, 1.0, 2.0, 3.0)
    conditions: tuple[str, ...] = CONDITIONS
    interventions: tuple[str, ...] = ("baseline", "cns", "cda", "cns_cda")
    seeds: int = PROFILES["desk"]
    base_seed: int = 1000
    effort_high: float = 8.0
    effort_low: float = 4.0
    # Lower-performer mean of the advantaged group, held fixed across gap
    # values; the disadvantaged mean sits gap * sigma below it. Anchoring
    # the advantaged side keeps its distance to the selection cutoff, and
    # with it the denominator of the effort ratio, comparable across gaps.
    low_anchor: float = 0.45
    base: SimulationConfig = field(default_factory=SimulationConfig)

    def validate(self) -> None:
        for c in self.conditions:
            if c not in CONDITIONS:
                raise ConfigError(f"unknown effort condition: {c!r}")
        for iv in self.interventions:
            if iv not in INTERVENTIONS:
                raise ConfigError(f"unknown intervention: {iv!r}")
        if self.seeds < 1:
            raise ConfigError("grid.seeds must be >= 1")
        if self.effort_low > self.effort_high:
            raise ConfigError("grid.effort_low must not exceed effort_high")
        sigma = self.base.population.sigma
        if self.low_anchor >= self.base.population.mu_high:
            raise ConfigError("grid.low_anchor must stay below mu_high")
        for q in self.gaps:
            if self.low_anchor - q * sigma < 0:
                raise ConfigError(
                    f"gap {q} pushes the disadvantaged mean below 0 "
                    f"(low_anchor {self.low_anchor}, sigma {sigma})")
        self.base.validate()

    def cells(self) -> list[CellSpec]:
        out = []
        for q in self.gaps:
            for iv in self.interventions:
                if iv == "baseline":
                    for cond in self.conditions:
                        out.append(CellSpec(q, cond, "baseline"))
                else:
                    out.append(CellSpec(q, "equal", iv))
        return out

    def seed_list(self) -> list[int]:
        return [self.base_seed + i for i in range(self.seeds)]


def condition_efforts(grid: ExperimentGrid, condition: str) -> tuple[float, float]:
    hi, lo = grid.effort_high, grid.effort_low
    if condition == "equal":
        return lo, lo
    if condition == "adv_double":
        return hi, lo
    if condition == "dis_double":
        return lo, hi
    raise ConfigError(f"unknown effort condition: {condition!r}")


def build_config(grid: ExperimentGrid, cell: CellSpec, seed: int) -> SimulationConfig:
    ea, ed = condition_efforts(grid, cell.condition)
    selection, retraining = INTERVENTIONS[cell.intervention]
    sigma = grid.base.population.sigma
    population = dataclasses.replace(
        grid.base.population,
        qualification_gap=float(cell.gap),
        mu_low_disadvantaged=grid.low_anchor - float(cell.gap) * sigma,
        effort_mean_advantaged=ea,
        effort_mean_disadvantaged=ed,
    )
    return dataclasses.replace(
        grid.base,
        population=population,
        selection_rule=selection,
        retraining_rule=retraining,
        seed=seed,
    )


# -- per-run metric files ----------------------------------------------------------

def format_metrics_csv(report: MetricsReport) -> str:
    lines = [METRICS_CSV_HEADER]
    for metric, grouped in REPORT_METRICS:
        for gk in (GROUP_KEYS if grouped else ("",)):
            series = report.series[(metric, gk)]
            for t, v in enumerate(series):
                sval = "" if v is None else repr(float(v))
                lines.append(f"{metric},{gk},{t},{sval}")
    return "\n".join(lines) + "\n"


def write_metrics_csv(report: MetricsReport, path: str | Path) -> None:
    with open(path, "w") as f:
        f.write(format_metrics_csv(report))


def read_metrics_csv(path: str | Path, label: str = "",
                     seed: int | None = None) -> MetricsReport:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != METRICS_CSV_HEADER:
        raise ValueError(f"bad metrics CSV header in {path}")
    series: dict[tuple[str, str], list[float | None]] = {}
    for line in lines[1:]:
        metric, gk, t_s, val = line.split(",")
        series.setdefault((metric, gk), [])
        lst = series[(metric, gk)]
        t = int(t_s)
        while len(lst) <= t:
            lst.append(None)
        lst[t] = float(val) if val else None
    horizon = max((len(v) for v in series.values()), default=0)
    return MetricsReport(label=label, seed=seed, horizon=horizon, series=series)


# -- cross-seed aggregation ---------------------------------------------------------

@dataclass
class CellAggregate:
    """Mean and standard error of each metric series across seeds."""

    cell: str
    horizon: int
    seed_count: int
    # (metric, group, timestep) -> (mean | None, stderr | None, n)
    stats: dict[tuple[str, str, int], tuple[float | None, float | None, int]]

    def mean(self, metric: str, group: str = "", t: int | None = None) -> float | None:
        if t is None:
            t = self.horizon - 1
        return self.stats[(metric, group, t)][0]

    def stderr(self, metric: str, group: str = "", t: int | None = None) -> float | None:
        if t is None:
            t = self.horizon - 1
        return self.stats[(metric, group, t)][1]

    def step_mean(self, metric: str, group: str = "") -> float | None:
        """Average of the per-step means over all steps with data."""
        vals = [self.stats[(metric, group, t)][0] for t in range(self.horizon)]
        vals = [v for v in vals if v is not None]
        if not vals:
            return None
        return math.fsum(vals) / len(vals)


def aggregate_reports(cell_id: str, reports: list[MetricsReport]) -> CellAggregate:
    horizon = max((r.horizon for r in reports), default=0)
    stats: dict[tuple[str, str, int], tuple[float | None, float | None, int]] = {}
    for metric, grouped in REPORT_METRICS:
        for gk in (GROUP_KEYS if grouped else ("",)):
            for t in range(horizon):
                vals = []
                for r in reports:
                    series = r.series.get((metric, gk))
                    if series is not None and t < len(series) and series[t] is not None:
                        vals.append(series[t])
                n = len(vals)
                if n == 0:
                    stats[(metric, gk, t)] = (None, None, 0)
                    continue
                m = math.fsum(vals) / n
                if n > 1:
                    var = math.fsum((v - m) ** 2 for v in vals) / (n - 1)
                    se = math.sqrt(var / n)
                else:
                    se = None
                stats[(metric, gk, t)] = (m, se, n)
    return CellAggregate(cell=cell_id, horizon=horizon,
                         seed_count=len(reports), stats=stats)


def write_aggregate_csv(aggregates: dict[str, CellAggregate], path: str | Path) -> None:
    with open(path, "w") as f:
        f.write(AGGREGATE_CSV_HEADER + "\n")
        for cell_id, agg in aggregates.items():
            for metric, grouped in REPORT_METRICS:
                for gk in (GROUP_KEYS if grouped else ("",)):
                    for t in range(agg.horizon):
                        m, se, n = agg.stats[(metric, gk, t)]
                        ms = "" if m is None else repr(float(m))
                        ss = "" if se is None else repr(float(se))
                        f.write(f"{cell_id},{metric},{gk},{t},{ms},{ss},{n}\n")


def read_aggregate_csv(path: str | Path) -> dict[str, CellAggregate]:
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != AGGREGATE_CSV_HEADER:
        raise ValueError(f"bad aggregate CSV header in {path}")
    cells: dict[str, dict] = {}
    for line in lines[1:]:
        cell_id, metric, gk, t_s, ms, ss, ns = line.split(",")
        entry = cells.setdefault(cell_id, {"stats": {}, "horizon": 0, "n": 0})
        t = int(t_s)
        n = int(ns)
        entry["stats"][(metric, gk, t)] = (
            float(ms) if ms else None, float(ss) if ss else None, n)
        entry["horizon"] = max(entry["horizon"], t + 1)
        entry["n"] = max(entry["n"], n)
    return {
        cid: CellAggregate(cell=cid, horizon=e["horizon"], seed_count=e["n"],
                           stats=e["stats"])
        for cid, e in cells.items()
    }


# -- execution -----------------------------------------------------------------------

def run_cell(grid: ExperimentGrid, cell: CellSpec) -> list[MetricsReport]:
    """Run one cell fully in memory and return per-seed reports."""
    reports = []
    for seed in grid.seed_list():
        config = build_config(grid, cell, seed)
        result = run(config)
        reports.append(compute_report(result.log, label=cell.cell_id))
    return reports


def _execute_run(payload: tuple[str, dict, str]) -> str:
    run_path, config_dict, label = payload
    config = SimulationConfig.from_dict(config_dict)
    result = run(config)
    write_run(result, run_path, calibration_note=CALIBRATION_NOTE)
    report = compute_report(result.log, label=label)
    write_metrics_csv(report, Path(run_path) / "metrics.csv")
    return run_path


def _is_complete(run_path: Path) -> bool:
    manifest = run_path / "manifest.json"
    if not manifest.exists() or not (run_path / "metrics.csv").exists():
        return False
    try:
        with open(manifest) as f:
            return bool(json.load(f).get("completed"))
    except (json.JSONDecodeError, OSError):
        return False


@dataclass
class GridResult:
    out_dir: Path
    aggregates: dict[str, CellAggregate]
    executed: int
    skipped: int


def run_grid(grid: ExperimentGrid, out_dir: str | Path, workers: int = 1,
             progress=None) -> GridResult:
    """Run every missing (cell, seed) pair, then aggregate all of them.

    Already-completed run directories are left untouched. The aggregate is
    rebuilt from disk in a fixed order, so reruns and different worker
    counts produce byte-identical aggregate files.
    """
    grid.validate()
    out = Path(out_dir)
    logs = out / "logs"
    pending: list[tuple[str, dict, str]] = []
    layout: list[tuple[CellSpec, list[Path]]] = []
    skipped = 0
    for cell in grid.cells():
        run_paths = []
        for seed in grid.seed_list():
            config = build_config(grid, cell, seed)
            run_path = logs / cell.cell_id / run_dir_name(config)
            run_paths.append(run_path)
            if _is_complete(run_path):
                skipped += 1
            else:
                pending.append((str(run_path), config.to_dict(), cell.cell_id))
        layout.append((cell, run_paths))

    if pending:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for i, done in enumerate(pool.map(_execute_run, pending)):
                    if progress:
                        progress(f"[{i + 1}/{len(pending)}] {done}")
        else:
            for i, payload in enumerate(pending):
                done = _execute_run(payload)
                if progress:
                    progress(f"[{i + 1}/{len(pending)}] {done}")

    aggregates: dict[str, CellAggregate] = {}
    for cell, run_paths in layout:
        reports = [read_metrics_csv(p / "metrics.csv", label=cell.cell_id)
                   for p in run_paths]
        aggregates[cell.cell_id] = aggregate_reports(cell.cell_id, reports)

    agg_dir = out / "aggregate"
    agg_dir.mkdir(parents=True, exist_ok=True)
    write_aggregate_csv(aggregates, agg_dir / "metrics.csv")
    return GridResult(out_dir=out, aggregates=aggregates,
                      executed=len(pending), skipped=skipped)


def run_single(config: SimulationConfig, out_dir: str | Path,
               label: str = "single") -> Path:
    """Run one configuration and persist it like a grid run."""
    result = run(config)
    run_path = Path(out_dir) / run_dir_name(config)
    write_run(result, run_path, calibration_note=CALIBRATION_NOTE)
    report = compute_report(result.log, label=label)
    write_metrics_csv(report, run_path / "metrics.csv")
    return run_path


# -- summary table --------------------------------------------------------------------

def _fmt_pair(agg: CellAggregate | None, metric: str) -> str:
    if agg is None:
        return "-"
    m = agg.mean(metric)
    if m is None:
        return "-"
    se = agg.stderr(metric)
    if se is None:
        return f"{m:.3f}"
    return f"{m:.3f} ({se:.3f})"


def _gap_labels(aggregates: dict[str, CellAggregate]) -> list[str]:
    seen = []
    for cid in aggregates:
        q = cid.split("_", 1)[0]
        if q not in seen:
            seen.append(q)
    return seen


# Parity points for the starred best-in-row marking: 1 is the fair effort
# ratio, 0 the fair time gap. Distance from these, not raw magnitude,
# decides the star, since a ratio below 1 is also a disparity.
_FAIR_POINT = {"retr": 1.0, "dttr": 0.0}


def render_table(aggregates: dict[str, CellAggregate]) -> str:
    """Plain-text summary of final-step ratio and gap metrics.

    One block per effort condition under the plain policy, one per
    intervention under equal effort. Within each gap row of the
    interventions block, the value closest to parity is starred.
    """
    gaps = _gap_labels(aggregates)
    cond_cols = [c for c in CONDITIONS
                 if any(f"_{c}_baseline" in cid for cid in aggregates)]
    iv_cols = [iv for iv in INTERVENTIONS
               if any(cid.endswith(f"_equal_{iv}") for cid in aggregates)]

    lines = []
    width = 22

    def block(title: str, columns: list[str], cid_of, star: bool) -> None:
        if not columns:
            return
        lines.append(title)
        header = "gap / metric".ljust(20) + "".join(c.ljust(width) for c in columns)
        lines.append(header)
        lines.append("-" * len(header))
        for metric, name in (("retr", "effort ratio"), ("dttr", "time gap")):
            for q in gaps:
                cells = [aggregates.get(cid_of(q, c)) for c in columns]
                texts = [_fmt_pair(a, metric) for a in cells]
                if star:
                    best, best_d = None, None
                    for j, a in enumerate(cells):
                        if a is None or a.mean(metric) is None:
                            continue
                        d = abs(a.mean(metric) - _FAIR_POINT[metric])
                        if best_d is None or d < best_d:
                            best, best_d = j, d
                    if best is not None:
                        texts[best] += "*"
                row = (q + " " + name).ljust(20)
                lines.append(row + "".join(t.ljust(width) for t in texts))
            lines.append("")

    block("Effort conditions (plain policy)", cond_cols,
          lambda q, c: f"{q}_{c}_baseline", star=False)
    block("Interventions (equal effort)", iv_cols,
          lambda q, iv: f"{q}_equal_{iv}", star=True)
    lines.append("* closest to parity within the row "
                 "(1 for the effort ratio, 0 for the time gap)")
    return "\n".join(lines) + "\n"


def write_tables(aggregates: dict[str, CellAggregate], out_dir: str | Path) -> Path:
    tables = Path(out_dir) / "tables"
    tables.mkdir(parents=True, exist_ok=True)
    with open(tables / "summary.txt", "w") as f:
        f.write(render_table(aggregates))
    with open(tables / "summary.csv", "w") as f:
        f.write("cell,seed_count,retr_mean,retr_stderr,dttr_mean,dttr_stderr,"
                "dp_cum_mean,dp_step_mean,wasted_a_mean,wasted_d_mean\n")
        for cid, agg in aggregates.items():
            def s(v):
                return "" if v is None else repr(float(v))
            f.write(",".join([
                cid, str(agg.seed_count),
                s(agg.mean("retr")), s(agg.stderr("retr")),
                s(agg.mean("dttr")), s(agg.stderr("dttr")),
                s(agg.mean("dp_cum")),
                s(agg.step_mean("dp")),
                s(agg.mean("wasted", "a")), s(agg.mean("wasted", "d")),
            ]) + "\n")
    return tables


# -- plot data -------------------------------------------------------------------------

def emit_plot_data(out_dir: str | Path,
                   aggregates: dict[str, CellAggregate] | None = None) -> Path:
    """Write the delimited files the figures are drawn from.

    effort_timeseries.csv      per-step group means of cumulative effort and
                               wasted effort for every cell
    summary_by_gap.csv         final ratio/gap metrics per cell
    success_distributions.csv  per-success durations and costs from the first
                               seed of each plain-policy cell
    grr_weights.csv            scorer weight trajectories where retraining
                               logged them
    """
    out = Path(out_dir)
    plots = out / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    if aggregates is None:
        aggregates = read_aggregate_csv(out / "aggregate" / "metrics.csv")

    with open(plots / "effort_timeseries.csv", "w") as f:
        f.write("cell,metric,group,timestep,mean,stderr\n")
        for cid, agg in aggregates.items():
            for metric in ("etr", "ttr", "wasted", "retr", "dttr", "dp", "dp_cum"):
                grouped = metric in ("etr", "ttr", "wasted")
                for gk in (GROUP_KEYS if grouped else ("",)):
                    for t in range(agg.horizon):
                        m, se, _ = agg.stats[(metric, gk, t)]
                        ms = "" if m is None else repr(float(m))
                        ss = "" if se is None else repr(float(se))
                        f.write(f"{cid},{metric},{gk},{t},{ms},{ss}\n")

    with open(plots / "summary_by_gap.csv", "w") as f:
        f.write("cell,gap,condition,intervention,retr,retr_stderr,"
                "dttr,dttr_stderr,dp_cum,dp_step_mean\n")
        for cid, agg in aggregates.items():
            q, cond, iv = cid.split("_", 2)
            def s(v):
                return "" if v is None else repr(float(v))
            f.write(",".join([
                cid, q[1:].replace("p", "."), cond, iv,
                s(agg.mean("retr")), s(agg.stderr("retr")),
                s(agg.mean("dttr")), s(agg.stderr("dttr")),
                s(agg.mean("dp_cum")),
                s(agg.step_mean("dp")),
            ]) + "\n")

    logs = out / "logs"
    with open(plots / "success_distributions.csv", "w") as f:
        f.write("cell,agent_id,group,first_negative_time,positive_time,"
                "delta,total_cost\n")
        for cid in aggregates:
            if not cid.endswith("_baseline"):
                continue
            cell_dir = logs / cid
            if not cell_dir.is_dir():
                continue
            run_dirs = sorted(cell_dir.iterdir(), key=lambda p: p.name)
            run_dirs = [d for d in run_dirs if (d / "events.csv").exists()]
            if not run_dirs:
                continue
            # Lowest seed suffix, one representative run per cell.
            rep = min(run_dirs, key=lambda p: int(p.name.rsplit("_s", 1)[1]))
            log = read_run(rep)
            for s_rec in success_records(log):
                f.write(f"{cid},{s_rec.agent_id},{s_rec.group.value},"
                        f"{s_rec.first_negative_time},{s_rec.positive_time},"
                        f"{s_rec.delta},{repr(s_rec.total_cost)}\n")

    with open(plots / "grr_weights.csv", "w") as f:
        f.write("cell,seed,timestep,w0,w1,bias\n")
        for cid in aggregates:
            cell_dir = logs / cid
            if not cell_dir.is_dir():
                continue
            for rd in sorted(cell_dir.iterdir(), key=lambda p: p.name):
                mpath = rd / "manifest.json"
                if not mpath.exists():
                    continue
                with open(mpath) as mf:
                    manifest = json.load(mf)
                history = manifest.get("weight_history") or []
                seed = manifest.get("seed")
                for w in history:
                    f.write(f"{cid},{seed},{w['timestep']},{w['w0']!r},"
                            f"{w['w1']!r},{w['bias']!r}\n")
    return plots


# -- INI configuration -------------------------------------------------------------------

_POPULATION_KEYS = {
    "qualification_gap": float, "mu_high": float,
    "mu_low_disadvantaged": float, "sigma": float, "high_fraction": float,
    "effort_mean_advantaged": float, "effort_mean_disadvantaged": float,
    "variance_ratio": float, "generator_case": GeneratorCase,
}
_SIMULATION_KEYS = {
    "horizon": int, "capacity": int, "initial_population": int,
    "arrivals_per_step": int, "effort_scale": float, "seed": int,
    "grr_fairness_weight": float, "grr_learning_rate": float,
    "grr_epochs": int,
}
_GRID_KEYS = {
    "gaps": "float_list", "conditions": "str_list",
    "interventions": "str_list", "seeds": int, "base_seed": int,
    "effort_high": float, "effort_low": float, "low_anchor": float,
}


def _parse_section(section, keys, where: str) -> dict:
    out = {}
    for key in section:
        if key not in keys:
            raise ConfigError(f"unknown key {key!r} in [{where}]")
        kind = keys[key]
        raw = section[key]
        try:
            if kind == "float_list":
                out[key] = tuple(float(v) for v in raw.replace(",", " ").split())
            elif kind == "str_list":
                out[key] = tuple(v for v in raw.replace(",", " ").split())
            elif kind is GeneratorCase:
                out[key] = GeneratorCase(raw.strip())
            else:
                out[key] = kind(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key!r} in [{where}]: {raw!r}") from exc
    return out


def load_grid_config(path: str | Path, seeds: int | None = None,
                     base_grid: ExperimentGrid | None = None) -> ExperimentGrid:
    """Build a grid from an INI file with [population], [simulation], and
    [grid] sections; all keys optional. CLI-level overrides win over the
    file, which wins over defaults."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file: {path}")
    for name in parser.sections():
        if name not in ("population", "simulation", "grid"):
            raise ConfigError(f"unknown config section [{name}]")

    grid = base_grid if base_grid is not None else ExperimentGrid()
    pop_kwargs = _parse_section(parser["population"], _POPULATION_KEYS,
                                "population") if parser.has_section("population") else {}
    sim_kwargs = _parse_section(parser["simulation"], _SIMULATION_KEYS,
                                "simulation") if parser.has_section("simulation") else {}
    grid_kwargs = _parse_section(parser["grid"], _GRID_KEYS,
                                 "grid") if parser.has_section("grid") else {}

    if "interventions" in grid_kwargs:
        grid_kwargs["interventions"] = tuple(
            canonical_intervention(v) for v in grid_kwargs["interventions"])
    population = dataclasses.replace(grid.base.population, **pop_kwargs)
    base = dataclasses.replace(grid.base, population=population, **sim_kwargs)
    grid = dataclasses.replace(grid, base=base, **grid_kwargs)
    if seeds is not None:
        grid = dataclasses.replace(grid, seeds=seeds)
    grid.validate()
    return grid


def load_run_config(path: str | Path) -> SimulationConfig:
    """Single-run variant: [population] and [simulation] only."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file: {path}")
    for name in parser.sections():
        if name not in ("population", "simulation"):
            raise ConfigError(f"unknown config section [{name}] for a single run")
    pop_kwargs = _parse_section(parser["population"], _POPULATION_KEYS,
                                "population") if parser.has_section("population") else {}
    sim_kwargs = _parse_section(parser["simulation"], _SIMULATION_KEYS,
                                "simulation") if parser.has_section("simulation") else {}
    config = SimulationConfig(population=PopulationSpec(**pop_kwargs), **sim_kwargs)
    config.validate()
    return config


def format_run_config(config: SimulationConfig) -> str:
    """Render a config as INI text that load_run_config reads back verbatim.

    Only keys the loader understands are emitted; mode fields without an INI
    key (selection, retraining, adaptation) appear as comments."""
    lines = ["[population]"]
    for key in _POPULATION_KEYS:
        value = getattr(config.population, key)
        if isinstance(value, GeneratorCase):
            value = value.value
        lines.append(f"{key} = {value}")
    lines.append("")
    lines.append("[simulation]")
    for key in _SIMULATION_KEYS:
        lines.append(f"{key} = {getattr(config, key)}")
    lines.append(f"; selection_rule = {config.selection_rule.value}")
    lines.append(f"; retraining_rule = {config.retraining_rule.value}")
    lines.append(f"; adaptation_mode = {config.adaptation_mode.value}")
    return "\n".join(lines) + "\n"
