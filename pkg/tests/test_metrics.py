"""Outcome metrics: goldens on hand logs, oracle equivalence, report pass."""

import numpy as np
import pytest

from recourse_sim.core import EventLog, Group
from recourse_sim.metrics import (
    compute_report,
    demographic_parity,
    demographic_parity_cumulative,
    dttr,
    effort_of,
    etr,
    naive_demographic_parity,
    naive_demographic_parity_cumulative,
    naive_dttr,
    naive_etr,
    naive_retr,
    naive_success_records,
    naive_ttr,
    naive_wasted_effort,
    recourse_cost_ordering,
    retr,
    success_records,
    successful_set,
    ttr,
    wasted_effort,
)

A, D = 0, 1


def row(aid, group, score=0.5, pos=False, rec=None, moved=0.0):
    return (aid, group, (score, score), score, pos, rec, moved)


class TestSuccessRecords:
    def test_one_step_delay_is_included(self, make_log):
        log = make_log([
            (0.6, [row(1, D, 0.4, moved=0.3)]),
            (0.5, [row(1, D, 0.5, pos=True)]),
        ])
        recs = success_records(log)
        assert len(recs) == 1
        s = recs[0]
        assert s.agent_id == 1
        assert s.group is Group.DISADVANTAGED
        assert (s.first_negative_time, s.positive_time, s.delta) == (0, 1, 1)
        assert s.total_cost == pytest.approx(0.3)

    def test_immediate_winner_is_not_a_recourse_event(self, make_log):
        log = make_log([
            (0.5, [row(1, A, 0.9, pos=True), row(2, D, 0.4)]),
        ])
        assert success_records(log) == []
        assert successful_set(log, "a") == set()

    def test_cutoff_excludes_later_successes(self, make_log):
        log = make_log([
            (0.6, [row(1, A, 0.4)]),
            (0.5, [row(1, A, 0.5, pos=True)]),
        ])
        assert success_records(log, t=0) == []
        assert len(success_records(log, t=1)) == 1

    def test_costs_accumulate_across_waiting_steps(self, make_log):
        log = make_log([
            (0.9, [row(1, D, 0.2, moved=0.1)]),
            (0.9, [row(1, D, 0.3, moved=0.2)]),
            (0.4, [row(1, D, 0.5, pos=True, moved=0.0)]),
        ])
        s = success_records(log)[0]
        assert s.total_cost == pytest.approx(0.1 + 0.2)
        assert s.delta == 2

    def test_empty_log(self):
        assert success_records(EventLog(seed=0)) == []


class TestEffortOf:
    def test_inclusive_cutoff(self, make_log):
        log = make_log([
            (0.9, [row(5, A, moved=0.2)]),
            (0.9, [row(5, A, moved=0.3)]),
            (0.9, [row(5, A, moved=0.4)]),
        ])
        assert effort_of(log, 5, t=0) == pytest.approx(0.2)
        assert effort_of(log, 5, t=1) == pytest.approx(0.5)
        assert effort_of(log, 5) == pytest.approx(0.9)

    def test_unknown_agent_is_zero(self, make_log):
        log = make_log([(0.9, [row(5, A, moved=0.2)])])
        assert effort_of(log, 99) == 0.0

    def test_matches_feature_displacement(self, small_run):
        # logged per-step cost equals the agent's actual move between its
        # consecutive feature snapshots
        log = small_run.log
        ids = log.column("agent_id")
        ts = log.column("timestep")
        f = np.column_stack([log.column("f0"), log.column("f1")])
        moved = log.column("moved_cost")
        order = np.lexsort((ts, ids))
        checked = 0
        for i, j in zip(order, order[1:]):
            if ids[i] != ids[j]:
                continue
            assert np.linalg.norm(f[j] - f[i]) == pytest.approx(
                moved[i], abs=1e-12)
            checked += 1
        assert checked > 100


class TestGroupMeans:
    def test_etr_and_retr_goldens(self, make_log):
        log = make_log([
            (0.9, [row(1, A, moved=0.2), row(2, D, moved=0.5)]),
            (0.1, [row(1, A, pos=True), row(2, D, pos=True)]),
        ])
        assert etr(log, "a") == pytest.approx(0.2)
        assert etr(log, "d") == pytest.approx(0.5)
        assert retr(log) == pytest.approx(2.5)

    def test_missing_group_gives_none(self, make_log):
        log = make_log([
            (0.9, [row(1, A, moved=0.2)]),
            (0.1, [row(1, A, pos=True)]),
        ])
        assert etr(log, "d") is None
        assert retr(log) is None
        assert dttr(log) is None

    def test_ttr_and_dttr_goldens(self, make_log):
        log = make_log([
            (0.9, [row(1, A), row(2, D)]),
            (0.5, [row(1, A, pos=True), row(2, D)]),
            (0.1, [row(2, D, pos=True)]),
        ])
        assert ttr(log, "a") == 1.0
        assert ttr(log, "d") == 2.0
        assert dttr(log) == 1.0

    def test_identical_histories_mean_parity(self, make_log):
        log = make_log([
            (0.9, [row(1, A, moved=0.3), row(2, D, moved=0.3)]),
            (0.1, [row(1, A, pos=True), row(2, D, pos=True)]),
        ])
        assert retr(log) == 1.0
        assert dttr(log) == 0.0


class TestDemographicParity:
    def test_balanced_step(self, make_log):
        log = make_log([
            (0.5, [row(1, A, pos=True), row(2, A), row(3, D, pos=True),
                   row(4, D)]),
        ])
        assert demographic_parity(log, 0) == 1.0

    def test_shut_out_group_scores_zero(self, make_log):
        log = make_log([
            (0.5, [row(1, A, pos=True), row(2, A), row(3, D), row(4, D)]),
        ])
        assert demographic_parity(log, 0) == 0.0

    def test_zero_reference_rate_is_undefined(self, make_log):
        log = make_log([
            (0.5, [row(1, A), row(2, D, pos=True)]),
        ])
        assert demographic_parity(log, 0) is None

    def test_cumulative_counts_distinct_agents(self, make_log):
        # agent 2 wins at t=1; both d agents win; repeat appearances of the
        # same agent must not dilute the cumulative rate
        log = make_log([
            (0.5, [row(1, A), row(2, A), row(3, D, pos=True), row(4, D)]),
            (0.5, [row(1, A), row(2, A, pos=True), row(4, D, pos=True)]),
        ])
        assert demographic_parity_cumulative(log) == pytest.approx(
            (2 / 2) / (1 / 2))
        # at t=0 no advantaged agent has ever been accepted: undefined
        assert demographic_parity_cumulative(log, t=0) is None


class TestWastedEffort:
    def test_sunk_cost_of_never_accepted(self, make_log):
        log = make_log([
            (0.9, [row(1, D, moved=0.4)]),
            (0.9, [row(1, D, moved=0.5)]),
        ])
        assert wasted_effort(log, "d") == pytest.approx(0.9)
        assert wasted_effort(log, "a") is None

    def test_successful_agents_drop_out(self, make_log):
        log = make_log([
            (0.9, [row(1, D, moved=0.4), row(2, D, moved=0.1)]),
            (0.1, [row(1, D, pos=True), row(2, D, moved=0.2)]),
        ])
        assert wasted_effort(log, "d") == pytest.approx(0.3)

    def test_immediate_winners_never_counted(self, make_log):
        log = make_log([(0.5, [row(1, A, pos=True)])])
        assert wasted_effort(log, "a") is None


class TestOrdering:
    def test_consistent(self):
        check = recourse_cost_ordering([
            ("half", 0.5, 0.8), ("equal", 1.0, 1.5), ("double", 2.0, 2.1),
        ])
        assert check.consistent
        assert check.labels == ("half", "equal", "double")

    def test_inconsistent(self):
        check = recourse_cost_ordering([
            ("half", 0.5, 1.9), ("equal", 1.0, 1.5), ("double", 2.0, 2.1),
        ])
        assert not check.consistent

    def test_ties_fail_strictness(self):
        check = recourse_cost_ordering([("x", 0.5, 1.0), ("y", 2.0, 1.0)])
        assert not check.consistent


def random_engine_shaped_log(rng) -> EventLog:
    """Synthetic log with engine invariants: contiguous appearance, at most
    one positive per agent and nothing after it."""
    n_agents = int(rng.integers(6, 21))
    horizon = int(rng.integers(5, 11))
    plans = []
    for aid in range(n_agents):
        entry = int(rng.integers(0, horizon - 1))
        group = int(rng.integers(0, 2))
        if rng.random() < 0.7:
            win = int(rng.integers(entry, horizon))
        else:
            win = None
        plans.append((aid, group, entry, win))
    log = EventLog(seed=0)
    for t in range(horizon):
        rows = []
        for aid, group, entry, win in plans:
            if t < entry or (win is not None and t > win):
                continue
            pos = win == t
            moved = 0.0 if pos else round(float(rng.random()) * 0.2, 6)
            rec = None if pos else (0.9, 0.9)
            score = round(float(rng.random()), 6)
            rows.append((aid, group, (score, score), score, pos, rec, moved))
        if not rows:
            continue
        ids = np.array([r[0] for r in rows], dtype=np.int64)
        groups = np.array([r[1] for r in rows], dtype=np.int8)
        feats = np.array([r[2] for r in rows], dtype=float)
        scores = np.array([r[3] for r in rows], dtype=float)
        positive = np.array([r[4] for r in rows], dtype=bool)
        rec = np.array([r[5] if r[5] else (np.nan, np.nan) for r in rows])
        moved = np.array([r[6] for r in rows], dtype=float)
        log.append_step(t, ids, groups, feats, scores, positive, 0.5, rec,
                        moved)
    return log


class TestOracleEquivalence:
    def test_fast_paths_match_naive_walk_exactly(self):
        rng = np.random.default_rng(20)
        for _ in range(100):
            log = random_engine_shaped_log(rng)
            assert success_records(log) == naive_success_records(log)
            horizon = int(log.column("timestep").max()) + 1 \
                if log.n_records else 0
            for t in list(range(horizon)) + [None]:
                for g in ("a", "d"):
                    assert etr(log, g, t) == naive_etr(log, g, t)
                    assert ttr(log, g, t) == naive_ttr(log, g, t)
                    assert wasted_effort(log, g, t) == \
                        naive_wasted_effort(log, g, t)
                assert retr(log, t) == naive_retr(log, t)
                assert dttr(log, t) == naive_dttr(log, t)
                assert demographic_parity_cumulative(log, t) == \
                    naive_demographic_parity_cumulative(log, t)
            for t in range(horizon):
                assert demographic_parity(log, t) == \
                    naive_demographic_parity(log, t)


class TestComputeReport:
    def test_matches_per_metric_functions_at_every_step(self, small_run):
        log = small_run.log
        report = compute_report(log, label="x")
        assert report.horizon == 8
        for t in range(report.horizon):
            for g in ("a", "d"):
                assert report.value("etr", g, t) == etr(log, g, t)
                assert report.value("ttr", g, t) == ttr(log, g, t)
                assert report.value("wasted", g, t) == wasted_effort(log, g, t)
            assert report.value("retr", t=t) == retr(log, t)
            assert report.value("dttr", t=t) == dttr(log, t)
            assert report.value("dp", t=t) == demographic_parity(log, t)
            assert report.value("dp_cum", t=t) == \
                demographic_parity_cumulative(log, t)

    def test_step_variants_cover_only_new_successes(self, make_log):
        log = make_log([
            (0.9, [row(1, A, moved=0.2), row(2, A, moved=0.6)]),
            (0.5, [row(1, A, pos=True), row(2, A, moved=0.0)]),
            (0.5, [row(2, A, pos=True)]),
        ])
        report = compute_report(log)
        assert report.value("etr_step", "a", 1) == pytest.approx(0.2)
        assert report.value("etr_step", "a", 2) == pytest.approx(0.6)
        # cumulative mean covers both
        assert report.value("etr", "a", 2) == pytest.approx(0.4)
        assert report.value("ttr_step", "a", 2) == 2.0

    def test_empty_log_report(self):
        report = compute_report(EventLog(seed=0))
        assert report.horizon == 0
        assert report.value("retr") is None

    def test_label_and_seed_carried(self, small_run):
        report = compute_report(small_run.log, label="cell")
        assert report.label == "cell"
        assert report.seed == small_run.log.seed
