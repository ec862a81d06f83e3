"""Fairness and effort metrics computed from event logs.

Every metric reads the log only, never engine internals. Each vectorized
function has a `naive_` twin that walks records one by one; the two must
agree exactly, which pins down float accumulation order: per-agent costs
accumulate in log order in both paths, and all cross-agent reductions use
exact summation (math.fsum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import EventLog, Group, Outcome

GROUP_KEYS = ("a", "d")

# Metrics carried in reports: cumulative effort-to-recourse and
# time-to-recourse per group, their ratio/difference, per-step variants,
# demographic parity (per step and over distinct agents so far), and
# cumulative wasted effort per group.
REPORT_METRICS = (
    ("etr", True), ("etr_step", True), ("ttr", True), ("ttr_step", True),
    ("retr", False), ("dttr", False), ("dp", False), ("dp_cum", False),
    ("wasted", True),
)


@dataclass(frozen=True)
class SuccessRecord:
    """One completed recourse event: a positive outcome preceded by at
    least one negative one."""

    agent_id: int
    group: Group
    first_negative_time: int
    positive_time: int
    delta: int
    total_cost: float


def _group_code(group: Group | str) -> int:
    if isinstance(group, Group):
        return 0 if group is Group.ADVANTAGED else 1
    return 0 if group in ("a", Group.ADVANTAGED.value) else 1


def success_records(log: EventLog, t: int | None = None) -> list[SuccessRecord]:
    """All recourse successes with positive outcome at step <= t."""
    ts = log.column("timestep")
    if len(ts) == 0:
        return []
    if t is None:
        t = int(ts.max())
    cut = ts <= t
    ids = log.column("agent_id")[cut]
    grp = log.column("group")[cut]
    pos = log.column("positive")[cut]
    moved = log.column("moved_cost")[cut]
    ts = ts[cut]

    uid, inv = np.unique(ids, return_inverse=True)
    n = len(uid)
    first_neg = np.full(n, np.inf)
    np.minimum.at(first_neg, inv[~pos], ts[~pos])
    # Per-agent totals accumulate in log order (one row per agent per step).
    totals = np.zeros(n)
    np.add.at(totals, inv, moved)
    group_of = np.zeros(n, dtype=np.int8)
    group_of[inv] = grp

    out: list[SuccessRecord] = []
    pos_rows = np.nonzero(pos)[0]
    for r in pos_rows:
        a = inv[r]
        if not np.isfinite(first_neg[a]):
            continue
        out.append(SuccessRecord(
            agent_id=int(uid[a]),
            group=Group.ADVANTAGED if group_of[a] == 0 else Group.DISADVANTAGED,
            first_negative_time=int(first_neg[a]),
            positive_time=int(ts[r]),
            delta=int(ts[r]) - int(first_neg[a]),
            total_cost=float(totals[a]),
        ))
    out.sort(key=lambda s: (s.positive_time, s.agent_id))
    return out


def successful_set(log: EventLog, group: Group | str, t: int | None = None) -> set[int]:
    code = _group_code(group)
    return {s.agent_id for s in success_records(log, t)
            if _group_code(s.group) == code}


def effort_of(log: EventLog, agent_id: int, t: int | None = None) -> float:
    """Cumulative movement cost of one agent through step t (inclusive)."""
    ids = log.column("agent_id")
    ts = log.column("timestep")
    moved = log.column("moved_cost")
    mask = ids == agent_id
    if t is not None:
        mask &= ts <= t
    total = 0.0
    for v in moved[mask]:
        total += float(v)
    return total


def _mean(values: list[float]) -> float | None:
    if not values:
        return None
    return math.fsum(values) / len(values)


def etr(log: EventLog, group: Group | str, t: int | None = None) -> float | None:
    """Mean total cost over the group's recourse successes through t.
    None when the group has no successes yet (missing, never zero)."""
    code = _group_code(group)
    vals = [s.total_cost for s in success_records(log, t)
            if _group_code(s.group) == code]
    return _mean(vals)


def retr(log: EventLog, t: int | None = None) -> float | None:
    """Disadvantaged-to-advantaged ratio of mean recourse effort."""
    a = etr(log, Group.ADVANTAGED, t)
    d = etr(log, Group.DISADVANTAGED, t)
    if a is None or d is None or a == 0.0:
        return None
    return d / a


def ttr(log: EventLog, group: Group | str, t: int | None = None) -> float | None:
    """Mean steps from first rejection to acceptance over successes."""
    code = _group_code(group)
    vals = [float(s.delta) for s in success_records(log, t)
            if _group_code(s.group) == code]
    return _mean(vals)


def dttr(log: EventLog, t: int | None = None) -> float | None:
    """Disadvantaged minus advantaged mean time-to-recourse."""
    a = ttr(log, Group.ADVANTAGED, t)
    d = ttr(log, Group.DISADVANTAGED, t)
    if a is None or d is None:
        return None
    return d - a


def demographic_parity(log: EventLog, t: int) -> float | None:
    """Ratio of per-step acceptance rates, disadvantaged over advantaged."""
    ts = log.column("timestep")
    at = ts == t
    grp = log.column("group")[at]
    pos = log.column("positive")[at]
    act_a = int((grp == 0).sum())
    act_d = int((grp == 1).sum())
    if act_a == 0 or act_d == 0:
        return None
    pos_a = int(pos[grp == 0].sum())
    pos_d = int(pos[grp == 1].sum())
    rate_a = pos_a / act_a
    if rate_a == 0.0:
        return None
    return (pos_d / act_d) / rate_a


def demographic_parity_cumulative(log: EventLog, t: int | None = None) -> float | None:
    """Ratio of acceptance rates over distinct agents through step t:
    the share of disadvantaged agents ever accepted over the share of
    advantaged agents ever accepted, counting each agent once. Unlike the
    per-step ratio this is insensitive to which step an agent got in."""
    ts = log.column("timestep")
    if len(ts) == 0:
        return None
    if t is None:
        t = int(ts.max())
    cut = ts <= t
    ids = log.column("agent_id")[cut]
    grp = log.column("group")[cut]
    pos = log.column("positive")[cut]

    uid, inv = np.unique(ids, return_inverse=True)
    n = len(uid)
    ever_pos = np.zeros(n, dtype=bool)
    ever_pos[inv[pos]] = True
    group_of = np.zeros(n, dtype=np.int8)
    group_of[inv] = grp

    app_a = int((group_of == 0).sum())
    app_d = int((group_of == 1).sum())
    if app_a == 0 or app_d == 0:
        return None
    rate_a = int(ever_pos[group_of == 0].sum()) / app_a
    if rate_a == 0.0:
        return None
    rate_d = int(ever_pos[group_of == 1].sum()) / app_d
    return rate_d / rate_a


def wasted_effort(log: EventLog, group: Group | str, t: int | None = None) -> float | None:
    """Mean cost sunk through t by the group's agents rejected at least
    once and never yet accepted."""
    ts = log.column("timestep")
    if len(ts) == 0:
        return None
    if t is None:
        t = int(ts.max())
    code = _group_code(group)
    cut = ts <= t
    ids = log.column("agent_id")[cut]
    grp = log.column("group")[cut]
    pos = log.column("positive")[cut]
    moved = log.column("moved_cost")[cut]

    uid, inv = np.unique(ids, return_inverse=True)
    n = len(uid)
    ever_neg = np.zeros(n, dtype=bool)
    ever_neg[inv[~pos]] = True
    ever_pos = np.zeros(n, dtype=bool)
    ever_pos[inv[pos]] = True
    totals = np.zeros(n)
    np.add.at(totals, inv, moved)
    group_of = np.zeros(n, dtype=np.int8)
    group_of[inv] = grp

    mask = ever_neg & ~ever_pos & (group_of == code)
    vals = [float(v) for v in totals[mask]]
    return _mean(vals)


# -- naive oracle paths --------------------------------------------------------

def _naive_agent_stats(log: EventLog, t: int | None) -> dict[int, dict]:
    stats: dict[int, dict] = {}
    for rec in log.records():
        if t is not None and rec.timestep > t:
            continue
        s = stats.setdefault(rec.agent_id, {
            "group": rec.group, "first_negative": None,
            "positive_time": None, "total": 0.0,
        })
        if rec.outcome is Outcome.NEGATIVE and s["first_negative"] is None:
            s["first_negative"] = rec.timestep
        if rec.outcome is Outcome.POSITIVE:
            s["positive_time"] = rec.timestep
        s["total"] += rec.moved_cost
    return stats


def naive_success_records(log: EventLog, t: int | None = None) -> list[SuccessRecord]:
    out = []
    for aid, s in _naive_agent_stats(log, t).items():
        if s["positive_time"] is None or s["first_negative"] is None:
            continue
        out.append(SuccessRecord(
            agent_id=aid, group=s["group"],
            first_negative_time=s["first_negative"],
            positive_time=s["positive_time"],
            delta=s["positive_time"] - s["first_negative"],
            total_cost=s["total"],
        ))
    out.sort(key=lambda r: (r.positive_time, r.agent_id))
    return out


def naive_etr(log: EventLog, group: Group | str, t: int | None = None) -> float | None:
    code = _group_code(group)
    vals = [r.total_cost for r in naive_success_records(log, t)
            if _group_code(r.group) == code]
    return _mean(vals)


def naive_retr(log: EventLog, t: int | None = None) -> float | None:
    a = naive_etr(log, Group.ADVANTAGED, t)
    d = naive_etr(log, Group.DISADVANTAGED, t)
    if a is None or d is None or a == 0.0:
        return None
    return d / a


def naive_ttr(log: EventLog, group: Group | str, t: int | None = None) -> float | None:
    code = _group_code(group)
    vals = [float(r.delta) for r in naive_success_records(log, t)
            if _group_code(r.group) == code]
    return _mean(vals)


def naive_dttr(log: EventLog, t: int | None = None) -> float | None:
    a = naive_ttr(log, Group.ADVANTAGED, t)
    d = naive_ttr(log, Group.DISADVANTAGED, t)
    if a is None or d is None:
        return None
    return d - a


def naive_demographic_parity(log: EventLog, t: int) -> float | None:
    act = {0: 0, 1: 0}
    pos = {0: 0, 1: 0}
    for rec in log.records():
        if rec.timestep != t:
            continue
        g = _group_code(rec.group)
        act[g] += 1
        if rec.outcome is Outcome.POSITIVE:
            pos[g] += 1
    if act[0] == 0 or act[1] == 0:
        return None
    rate_a = pos[0] / act[0]
    if rate_a == 0.0:
        return None
    return (pos[1] / act[1]) / rate_a


def naive_demographic_parity_cumulative(log: EventLog, t: int | None = None) -> float | None:
    appeared: dict[int, set[int]] = {0: set(), 1: set()}
    accepted: dict[int, set[int]] = {0: set(), 1: set()}
    for rec in log.records():
        if t is not None and rec.timestep > t:
            continue
        g = _group_code(rec.group)
        appeared[g].add(rec.agent_id)
        if rec.outcome is Outcome.POSITIVE:
            accepted[g].add(rec.agent_id)
    if not appeared[0] or not appeared[1]:
        return None
    rate_a = len(accepted[0]) / len(appeared[0])
    if rate_a == 0.0:
        return None
    rate_d = len(accepted[1]) / len(appeared[1])
    return rate_d / rate_a


def naive_wasted_effort(log: EventLog, group: Group | str, t: int | None = None) -> float | None:
    code = _group_code(group)
    vals = []
    for s in _naive_agent_stats(log, t).values():
        if _group_code(s["group"]) != code:
            continue
        if s["first_negative"] is None or s["positive_time"] is not None:
            continue
        vals.append(s["total"])
    return _mean(vals)


# -- ordering diagnostic ---------------------------------------------------------

@dataclass(frozen=True)
class OrderingCheck:
    """Whether observed effort ratios rank the way relative group effort
    predicts: higher disadvantaged-to-advantaged effort, higher ratio."""

    labels: tuple[str, ...]
    effort_ratios: tuple[float, ...]
    retr_values: tuple[float, ...]
    consistent: bool


def recourse_cost_ordering(entries: list[tuple[str, float, float]]) -> OrderingCheck:
    """entries: (label, e_disadvantaged/e_advantaged, observed retr)."""
    ordered = sorted(entries, key=lambda e: e[1])
    values = [e[2] for e in ordered]
    consistent = all(values[i] < values[i + 1] for i in range(len(values) - 1))
    return OrderingCheck(
        labels=tuple(e[0] for e in ordered),
        effort_ratios=tuple(e[1] for e in ordered),
        retr_values=tuple(values),
        consistent=consistent,
    )


# -- per-run report ---------------------------------------------------------------

@dataclass
class MetricsReport:
    """All report metrics of one run, as per-timestep series.

    series maps (metric, group_key) to a list indexed by timestep; group_key
    is "" for group-free metrics. Missing values are None.
    """

    label: str
    seed: int | None
    horizon: int
    series: dict[tuple[str, str], list[float | None]] = field(default_factory=dict)

    def value(self, metric: str, group: str = "", t: int | None = None) -> float | None:
        vals = self.series[(metric, group)]
        if not vals:
            return None
        return vals[-1 if t is None else t]


def compute_report(log: EventLog, label: str = "") -> MetricsReport:
    """Single-pass computation of every report metric."""
    ts = log.column("timestep")
    horizon = int(ts.max()) + 1 if len(ts) else 0
    report = MetricsReport(label=label, seed=log.seed, horizon=horizon)
    for metric, grouped in REPORT_METRICS:
        for gk in (GROUP_KEYS if grouped else ("",)):
            report.series[(metric, gk)] = [None] * horizon
    if horizon == 0:
        return report

    ids = log.column("agent_id")
    grp = log.column("group")
    pos = log.column("positive")
    moved = log.column("moved_cost")

    uid, inv = np.unique(ids, return_inverse=True)
    n = len(uid)
    agent_group = np.zeros(n, dtype=np.int8)
    agent_group[inv] = grp
    first_neg = np.full(n, np.inf)
    accepted = np.zeros(n, dtype=bool)
    appeared = np.zeros(n, dtype=bool)
    cum = np.zeros(n)

    success_totals: dict[int, list[float]] = {0: [], 1: []}
    success_deltas: dict[int, list[float]] = {0: [], 1: []}

    bounds = np.searchsorted(ts, np.arange(horizon + 1))
    for t in range(horizon):
        s, e = bounds[t], bounds[t + 1]
        idx = inv[s:e]
        g = grp[s:e]
        p = pos[s:e]
        # One row per agent per step, so plain fancy-index accumulation is
        # exact and in log order.
        cum[idx] += moved[s:e]
        appeared[idx] = True

        step_totals: dict[int, list[float]] = {0: [], 1: []}
        step_deltas: dict[int, list[float]] = {0: [], 1: []}
        win_agents = idx[p]
        for a in win_agents:
            if np.isfinite(first_neg[a]):
                gc = int(agent_group[a])
                total = float(cum[a])
                delta = float(t - first_neg[a])
                success_totals[gc].append(total)
                success_deltas[gc].append(delta)
                step_totals[gc].append(total)
                step_deltas[gc].append(delta)
        accepted[win_agents] = True
        newneg = idx[~p]
        fresh = newneg[~np.isfinite(first_neg[newneg])]
        first_neg[fresh] = t

        etr_t: dict[str, float | None] = {}
        ttr_t: dict[str, float | None] = {}
        for gc, gk in enumerate(GROUP_KEYS):
            etr_t[gk] = _mean(success_totals[gc])
            ttr_t[gk] = _mean(success_deltas[gc])
            report.series[("etr", gk)][t] = etr_t[gk]
            report.series[("ttr", gk)][t] = ttr_t[gk]
            report.series[("etr_step", gk)][t] = _mean(step_totals[gc])
            report.series[("ttr_step", gk)][t] = _mean(step_deltas[gc])

        if etr_t["a"] not in (None, 0.0) and etr_t["d"] is not None:
            report.series[("retr", "")][t] = etr_t["d"] / etr_t["a"]
        if ttr_t["a"] is not None and ttr_t["d"] is not None:
            report.series[("dttr", "")][t] = ttr_t["d"] - ttr_t["a"]

        act_a = int((g == 0).sum())
        act_d = int((g == 1).sum())
        if act_a and act_d:
            pos_a = int(p[g == 0].sum())
            pos_d = int(p[g == 1].sum())
            rate_a = pos_a / act_a
            if rate_a != 0.0:
                report.series[("dp", "")][t] = (pos_d / act_d) / rate_a

        app_a = int((appeared & (agent_group == 0)).sum())
        app_d = int((appeared & (agent_group == 1)).sum())
        if app_a and app_d:
            crate_a = int((accepted & (agent_group == 0)).sum()) / app_a
            if crate_a != 0.0:
                crate_d = int((accepted & (agent_group == 1)).sum()) / app_d
                report.series[("dp_cum", "")][t] = crate_d / crate_a

        seen = np.isfinite(first_neg)
        for gc, gk in enumerate(GROUP_KEYS):
            mask = seen & ~accepted & (agent_group == gc)
            vals = [float(v) for v in cum[mask]]
            report.series[("wasted", gk)][t] = _mean(vals)

    return report
