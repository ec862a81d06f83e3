"""Discrete-time simulation loop.

Each step: merge arrivals (t > 0), retrain the scorer if configured (using
the previous step's outcomes), score everyone, select winners up to
capacity, log one record per active agent, hand losers a recommendation
targeting the realized threshold, let losers adapt, and retire winners.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .core import (
    Agent,
    AdaptationMode,
    EventLog,
    Group,
    RetrainingRule,
    RngStreams,
    SelectionRule,
    SimulationConfig,
    build_manifest,
    config_hash,
)
from .decision import LinearScorer, retrain_cda, retrain_grr, select_cns, select_top_k
from .population import CODE_GROUPS, group_split, sample_feature_arrays
from .recourse import adapt_batch, recommend_batch, sample_efforts

INITIAL_POPULATION_CSV_HEADER = ["agent_id", "group", "f0", "f1"]


class WorldState:
    """Active agents as parallel arrays, kept sorted by agent id."""

    def __init__(self):
        self.ids = np.empty(0, dtype=np.int64)
        self.groups = np.empty(0, dtype=np.int8)
        self.features = np.empty((0, 2))
        self.effort_means = np.empty(0)
        self.entry_times = np.empty(0, dtype=np.int64)
        self.first_negative = np.empty(0)
        self.cumulative_cost = np.empty(0)
        self.next_id = 0
        self.exited: list[Agent] = []
        self.timestep = 0

    @property
    def n_active(self) -> int:
        return len(self.ids)

    def admit(self, features: np.ndarray, groups: np.ndarray,
              effort_means: np.ndarray, entry_time: int) -> None:
        n = len(groups)
        ids = np.arange(self.next_id, self.next_id + n, dtype=np.int64)
        self.next_id += n
        self.ids = np.concatenate([self.ids, ids])
        self.groups = np.concatenate([self.groups, groups])
        self.features = np.vstack([self.features, features])
        self.effort_means = np.concatenate([self.effort_means, effort_means])
        self.entry_times = np.concatenate(
            [self.entry_times, np.full(n, entry_time, dtype=np.int64)])
        self.first_negative = np.concatenate(
            [self.first_negative, np.full(n, np.nan)])
        self.cumulative_cost = np.concatenate(
            [self.cumulative_cost, np.zeros(n)])

    def retire(self, winner_mask: np.ndarray, exit_time: int) -> None:
        """Move winners out of the active arrays."""
        for i in np.nonzero(winner_mask)[0]:
            fneg = self.first_negative[i]
            self.exited.append(Agent(
                agent_id=int(self.ids[i]),
                group=CODE_GROUPS[self.groups[i]],
                features=self.features[i].copy(),
                effort_mean=float(self.effort_means[i]),
                entry_time=int(self.entry_times[i]),
                first_negative_time=None if math.isnan(fneg) else int(fneg),
                exit_time=exit_time,
                cumulative_cost=float(self.cumulative_cost[i]),
            ))
        keep = ~winner_mask
        self.ids = self.ids[keep]
        self.groups = self.groups[keep]
        self.features = self.features[keep]
        self.effort_means = self.effort_means[keep]
        self.entry_times = self.entry_times[keep]
        self.first_negative = self.first_negative[keep]
        self.cumulative_cost = self.cumulative_cost[keep]

    def active_agents(self) -> list[Agent]:
        out = []
        for i in range(self.n_active):
            fneg = self.first_negative[i]
            out.append(Agent(
                agent_id=int(self.ids[i]),
                group=CODE_GROUPS[self.groups[i]],
                features=self.features[i].copy(),
                effort_mean=float(self.effort_means[i]),
                entry_time=int(self.entry_times[i]),
                first_negative_time=None if math.isnan(fneg) else int(fneg),
                exit_time=None,
                cumulative_cost=float(self.cumulative_cost[i]),
            ))
        return out


@dataclass
class _PrevStep:
    """Snapshot of the last completed step, consumed by retraining."""

    features: np.ndarray
    positive: np.ndarray
    groups: np.ndarray
    loser_ids: np.ndarray
    loser_targets: np.ndarray
    threshold: float


@dataclass
class RunResult:
    log: EventLog
    agents: list[Agent]
    scorer: LinearScorer
    world: WorldState


def _retrain(scorer: LinearScorer, config: SimulationConfig, world: WorldState,
             prev: _PrevStep, t: int, log: EventLog,
             inversion_seen: list[bool]) -> LinearScorer:
    if config.retraining_rule is RetrainingRule.CDA:
        if len(prev.loser_ids) == 0:
            log.flag(f"timestep {t}: retraining skipped (no negative agents)")
            return scorer
        rows = np.searchsorted(world.ids, prev.loser_ids)
        result = retrain_cda(world.features[rows], prev.loser_targets, scorer)
    else:
        result = retrain_grr(
            prev.features, prev.positive.astype(float), prev.groups,
            scorer, prev.threshold,
            fairness_weight=config.grr_fairness_weight,
            learning_rate=config.grr_learning_rate,
            epochs=config.grr_epochs,
        )
    if result.degenerate:
        log.flag(f"timestep {t}: retraining degenerate ({result.message}); scorer kept")
        return scorer
    if result.message:
        log.flag(f"timestep {t}: {result.message}")
    new = result.scorer
    if not inversion_seen[0] and bool(np.any(new.weights < 0)):
        inversion_seen[0] = True
        log.flag(f"timestep {t}: scorer weight turned negative "
                 f"(w={new.weights.tolist()})")
    return new


def _step(world: WorldState, scorer: LinearScorer, config: SimulationConfig,
          t: int, streams: RngStreams, log: EventLog, prev: _PrevStep | None,
          inversion_seen: list[bool]) -> tuple[LinearScorer, _PrevStep | None]:
    if t > 0 and config.arrivals_per_step > 0:
        n_a, n_d = group_split(config.arrivals_per_step)
        feats, grps, effs = sample_feature_arrays(
            config.population, n_a, n_d, streams.stream("arrivals"))
        world.admit(feats, grps, effs, entry_time=t)

    if t > 0 and config.retraining_rule is not RetrainingRule.NONE and prev is not None:
        scorer = _retrain(scorer, config, world, prev, t, log, inversion_seen)
    if config.retraining_rule is not RetrainingRule.NONE:
        log.weight_history.append(
            (t, float(scorer.weights[0]), float(scorer.weights[1]), float(scorer.bias)))

    n = world.n_active
    if n == 0:
        return scorer, None

    scores = scorer.score_matrix(world.features)
    if config.selection_rule is SelectionRule.CNS:
        sel = select_cns(scores, config.capacity, world.groups,
                         world.first_negative, world.ids)
    else:
        sel = select_top_k(scores, config.capacity, world.first_negative,
                           world.ids, groups=world.groups)
    win = sel.selected
    threshold = sel.threshold
    lose_idx = np.nonzero(~win)[0]

    rec = np.full((n, 2), np.nan)
    moved = np.zeros(n)
    features_before = world.features.copy()

    if len(lose_idx):
        targets, feasible = recommend_batch(scorer, world.features[lose_idx], threshold)
        if not feasible.all():
            log.flag(f"timestep {t}: recourse infeasible for "
                     f"{int((~feasible).sum())} agents")
        rec[lose_idx] = targets
        efforts = sample_efforts(world.effort_means[lose_idx],
                                 streams.stream("effort"), config.effort_scale)
        new_feats, moved_losers = adapt_batch(world.features[lose_idx], targets,
                                              efforts, config.adaptation_mode)
        moved[lose_idx] = moved_losers
    else:
        targets = np.empty((0, 2))
        feasible = np.empty(0, dtype=bool)
        new_feats = np.empty((0, 2))

    log.append_step(t, world.ids, world.groups, features_before, scores,
                    win, threshold, rec, moved)

    # First rejection timestamps update after selection: this step's ties were
    # broken by seniority established at earlier steps.
    newly_negative = ~win & np.isnan(world.first_negative)
    world.first_negative[newly_negative] = t

    if len(lose_idx):
        world.cumulative_cost[lose_idx] += moved[lose_idx]
        world.features[lose_idx] = new_feats

    nxt = _PrevStep(
        features=features_before,
        positive=win.copy(),
        groups=world.groups.copy(),
        loser_ids=world.ids[lose_idx][feasible],
        loser_targets=targets[feasible] if len(lose_idx) else np.empty((0, 2)),
        threshold=threshold,
    )
    world.retire(win, exit_time=t)
    world.timestep = t + 1
    return scorer, nxt


def run(config: SimulationConfig) -> RunResult:
    """Simulate one full run. Deterministic given (config, seed)."""
    config.validate()
    streams = RngStreams(config.seed)
    log = EventLog(config=config)

    world = WorldState()
    n_a, n_d = group_split(config.initial_population)
    feats, grps, effs = sample_feature_arrays(
        config.population, n_a, n_d, streams.stream("population_init"))
    world.admit(feats, grps, effs, entry_time=0)
    log.set_initial_population(world.ids, world.groups, world.features)

    scorer = LinearScorer(np.asarray(config.initial_weights, dtype=float),
                          config.initial_bias)
    prev: _PrevStep | None = None
    inversion_seen = [False]
    for t in range(config.horizon):
        scorer, prev = _step(world, scorer, config, t, streams, log, prev,
                             inversion_seen)

    agents = sorted(world.exited + world.active_agents(),
                    key=lambda a: a.agent_id)
    return RunResult(log=log, agents=agents, scorer=scorer, world=world)


# -- persistence --------------------------------------------------------------

def run_dir_name(config: SimulationConfig) -> str:
    return f"{config_hash(config)[:12]}_s{config.seed}"


def write_run(result: RunResult, run_dir: str | Path,
              calibration_note: str | None = None) -> Path:
    """Write events.csv, initial_population.csv, and manifest.json."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    log = result.log
    with open(run_dir / "events.csv", "w") as f:
        log.to_csv(f)
    with open(run_dir / "initial_population.csv", "w") as f:
        f.write(",".join(INITIAL_POPULATION_CSV_HEADER) + "\n")
        chars = ("a", "d")
        for i in range(len(log.initial_ids)):
            f.write("%d,%s,%r,%r\n" % (
                log.initial_ids[i], chars[log.initial_groups[i]],
                float(log.initial_features[i, 0]),
                float(log.initial_features[i, 1])))
    manifest = build_manifest(log, __version__, calibration_note)
    with open(run_dir / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return run_dir


def read_run(run_dir: str | Path) -> EventLog:
    """Load a persisted run back into an EventLog."""
    run_dir = Path(run_dir)
    with open(run_dir / "manifest.json") as f:
        manifest = json.load(f)
    config = (SimulationConfig.from_dict(manifest["config"])
              if manifest.get("config") else None)
    with open(run_dir / "events.csv") as f:
        log = EventLog.from_csv(f, config=config)
    log.seed = manifest.get("seed")
    log.config_digest = manifest.get("config_hash")
    log.flags = list(manifest.get("flags", []))
    log.weight_history = [
        (w["timestep"], w["w0"], w["w1"], w["bias"])
        for w in manifest.get("weight_history", [])
    ]
    init_path = run_dir / "initial_population.csv"
    if init_path.exists():
        with open(init_path) as f:
            lines = f.read().splitlines()[1:]
        n = len(lines)
        ids = np.empty(n, dtype=np.int64)
        groups = np.empty(n, dtype=np.int8)
        features = np.empty((n, 2))
        for i, line in enumerate(lines):
            parts = line.split(",")
            ids[i] = int(parts[0])
            groups[i] = 0 if parts[1] == "a" else 1
            features[i, 0] = float(parts[2])
            features[i, 1] = float(parts[3])
        log.set_initial_population(ids, groups, features)
    return log


# -- replay --------------------------------------------------------------------

@dataclass
class ReplayedAgent:
    """Per-agent state reconstructed purely from logged records."""

    agent_id: int
    group: Group
    entry_time: int
    first_negative_time: int | None = None
    exit_time: int | None = None
    cumulative_cost: float = 0.0
    last_features: tuple[float, float] = (math.nan, math.nan)
    last_moved: float = 0.0
    last_recommendation: tuple[float, float] | None = None


def replay(log: EventLog) -> dict[int, ReplayedAgent]:
    """Rebuild every agent's trajectory from the log alone.

    Feature snapshots chain through consecutive records; the final in-flight
    movement of a still-active agent is captured by (last_features,
    last_recommendation, last_moved), which pins its end position up to the
    logged displacement.
    """
    agents: dict[int, ReplayedAgent] = {}
    for rec in log.records():
        a = agents.get(rec.agent_id)
        if a is None:
            a = ReplayedAgent(agent_id=rec.agent_id, group=rec.group,
                              entry_time=rec.timestep)
            agents[rec.agent_id] = a
        if rec.outcome.value == "negative" and a.first_negative_time is None:
            a.first_negative_time = rec.timestep
        if rec.outcome.value == "positive":
            a.exit_time = rec.timestep
        a.cumulative_cost += rec.moved_cost
        a.last_features = rec.features
        a.last_moved = rec.moved_cost
        a.last_recommendation = rec.recommendation
    return agents
