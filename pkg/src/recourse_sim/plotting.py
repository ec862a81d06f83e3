"""Figure rendering for the plot-data files the harness emits.

Each figure is rendered next to the delimited file it is drawn from, so the
plots directory is self-contained: CSVs for downstream tooling, PNGs for
eyes. Rendering is headless (Agg) and deterministic.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend must be set first

GROUP_COLORS = {"a": "tab:blue", "d": "tab:orange"}
GROUP_NAMES = {"a": "advantaged", "d": "disadvantaged"}


def _read_rows(path: Path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def _maybe_float(s: str) -> float | None:
    return float(s) if s else None


def _gap_sort_key(cell: str) -> tuple:
    q = cell.split("_", 1)[0][1:]
    try:
        return (float(q.replace("p", ".")), cell)
    except ValueError:
        return (float("inf"), cell)


def render_summary_by_gap(plots_dir: Path) -> Path | None:
    src = plots_dir / "summary_by_gap.csv"
    if not src.exists():
        return None
    rows = _read_rows(src)
    if not rows:
        return None

    # One line per (condition, intervention) variant across gaps.
    variants: dict[str, list[dict]] = defaultdict(list)
    for r in rows:
        key = (r["intervention"] if r["intervention"] != "baseline"
               else f"baseline/{r['condition']}")
        variants[key].append(r)

    fig, axes = plt.subplots(1, 2, figsize=(11, 4.5))
    for key in sorted(variants):
        pts = sorted(variants[key], key=lambda r: float(r["gap"]))
        gaps = [float(r["gap"]) for r in pts]
        for ax, metric in zip(axes, ("retr", "dttr")):
            vals = [_maybe_float(r[metric]) for r in pts]
            errs = [_maybe_float(r[metric + "_stderr"]) for r in pts]
            xs = [g for g, v in zip(gaps, vals) if v is not None]
            ys = [v for v in vals if v is not None]
            es = [e if e is not None else 0.0
                  for v, e in zip(vals, errs) if v is not None]
            if xs:
                ax.errorbar(xs, ys, yerr=es, marker="o", capsize=3, label=key)
    axes[0].axhline(1.0, color="gray", lw=0.8, ls="--")
    axes[0].set_ylabel("effort ratio (disadvantaged / advantaged)")
    axes[1].axhline(0.0, color="gray", lw=0.8, ls="--")
    axes[1].set_ylabel("time-to-recourse gap (steps)")
    for ax in axes:
        ax.set_xlabel("qualification gap")
        ax.legend(fontsize=7)
    fig.tight_layout()
    dest = plots_dir / "summary_by_gap.png"
    fig.savefig(dest, dpi=150)
    plt.close(fig)
    return dest


def render_effort_timeseries(plots_dir: Path) -> Path | None:
    src = plots_dir / "effort_timeseries.csv"
    if not src.exists():
        return None
    rows = _read_rows(src)
    cells = sorted({r["cell"] for r in rows if r["cell"].endswith("_equal_baseline")},
                   key=_gap_sort_key)
    if not cells:
        cells = sorted({r["cell"] for r in rows}, key=_gap_sort_key)[:4]
    if not cells:
        return None

    fig, axes = plt.subplots(2, len(cells), figsize=(3.2 * len(cells), 6.4),
                             squeeze=False)
    for col, cell in enumerate(cells):
        for row_i, metric in enumerate(("etr", "wasted")):
            ax = axes[row_i][col]
            for gk in ("a", "d"):
                pts = [(int(r["timestep"]), _maybe_float(r["mean"]))
                       for r in rows
                       if r["cell"] == cell and r["metric"] == metric
                       and r["group"] == gk]
                pts.sort()
                xs = [t for t, v in pts if v is not None]
                ys = [v for _, v in pts if v is not None]
                if xs:
                    ax.plot(xs, ys, color=GROUP_COLORS[gk],
                            label=GROUP_NAMES[gk])
            if row_i == 0:
                ax.set_title(cell, fontsize=8)
            ax.set_xlabel("timestep")
            ax.set_ylabel("mean cost to accept" if metric == "etr"
                          else "mean sunk cost, not accepted")
            ax.legend(fontsize=7)
    fig.tight_layout()
    dest = plots_dir / "effort_timeseries.png"
    fig.savefig(dest, dpi=150)
    plt.close(fig)
    return dest


def render_success_distributions(plots_dir: Path) -> Path | None:
    src = plots_dir / "success_distributions.csv"
    if not src.exists():
        return None
    rows = _read_rows(src)
    cells = sorted({r["cell"] for r in rows if r["cell"].endswith("_equal_baseline")},
                   key=_gap_sort_key)
    if not cells:
        cells = sorted({r["cell"] for r in rows}, key=_gap_sort_key)
    if not cells:
        return None

    fig, axes = plt.subplots(1, len(cells), figsize=(3.2 * len(cells), 3.6),
                             squeeze=False)
    for col, cell in enumerate(cells):
        ax = axes[0][col]
        for gk in ("a", "d"):
            deltas = [int(r["delta"]) for r in rows
                      if r["cell"] == cell and r["group"] == gk]
            if deltas:
                bins = range(0, max(deltas) + 2)
                ax.hist(deltas, bins=bins, alpha=0.55,
                        color=GROUP_COLORS[gk], label=GROUP_NAMES[gk])
        ax.set_title(cell, fontsize=8)
        ax.set_xlabel("steps from first rejection to acceptance")
        ax.set_ylabel("agents")
        ax.legend(fontsize=7)
    fig.tight_layout()
    dest = plots_dir / "success_distributions.png"
    fig.savefig(dest, dpi=150)
    plt.close(fig)
    return dest


def render_grr_weights(plots_dir: Path) -> Path | None:
    src = plots_dir / "grr_weights.csv"
    if not src.exists():
        return None
    rows = _read_rows(src)
    if not rows:
        return None

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    by_seed: dict[tuple[str, str], list[dict]] = defaultdict(list)
    for r in rows:
        by_seed[(r["cell"], r["seed"])].append(r)
    for (cell, seed), pts in sorted(by_seed.items()):
        pts.sort(key=lambda r: int(r["timestep"]))
        ts = [int(r["timestep"]) for r in pts]
        ax.plot(ts, [float(r["w0"]) for r in pts], color="tab:blue", alpha=0.45, lw=1)
        ax.plot(ts, [float(r["w1"]) for r in pts], color="tab:orange", alpha=0.45, lw=1)
    ax.axhline(0.0, color="gray", lw=0.8, ls="--")
    ax.plot([], [], color="tab:blue", label="weight 0")
    ax.plot([], [], color="tab:orange", label="weight 1")
    ax.set_xlabel("timestep")
    ax.set_ylabel("scorer weight")
    ax.legend(fontsize=8)
    fig.tight_layout()
    dest = plots_dir / "grr_weights.png"
    fig.savefig(dest, dpi=150)
    plt.close(fig)
    return dest


def render_plots(out_dir: str | Path) -> list[Path]:
    """Render every figure whose data file is present. Returns the paths of
    the PNGs written."""
    plots_dir = Path(out_dir) / "plots"
    rendered = []
    for fn in (render_summary_by_gap, render_effort_timeseries,
               render_success_distributions, render_grr_weights):
        dest = fn(plots_dir)
        if dest is not None:
            rendered.append(dest)
    return rendered
