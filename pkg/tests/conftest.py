"""Shared fixtures: a fast small-world run and a synthetic log builder."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from recourse_sim.core import EventLog, SimulationConfig
from recourse_sim.engine import run


# One line per acceptance criterion, echoed after the test summary so the
# verdicts survive output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


SMALL_CONFIG = SimulationConfig(
    horizon=8,
    capacity=6,
    initial_population=60,
    arrivals_per_step=6,
    seed=11,
)


@pytest.fixture(scope="session")
def small_config() -> SimulationConfig:
    return SMALL_CONFIG


@pytest.fixture(scope="session")
def small_run(small_config):
    """One completed small run, shared read-only across tests."""
    return run(small_config)


@pytest.fixture(scope="session")
def default_run():
    """One run at default scale. Slower, so computed once per session."""
    return run(SimulationConfig(seed=1000))


@pytest.fixture
def make_log():
    """Factory for hand-built logs.

    steps: list of steps; each step is a list of
    (agent_id, group_code, (f0, f1), score, positive, rec_or_None, moved);
    the step threshold is passed alongside.
    """

    def build(steps: list[tuple[float, list[tuple]]],
              config: SimulationConfig | None = None) -> EventLog:
        log = EventLog(config=config, seed=0 if config is None else None)
        for t, (threshold, rows) in enumerate(steps):
            n = len(rows)
            ids = np.array([r[0] for r in rows], dtype=np.int64)
            groups = np.array([r[1] for r in rows], dtype=np.int8)
            feats = np.array([r[2] for r in rows], dtype=float).reshape(n, 2)
            scores = np.array([r[3] for r in rows], dtype=float)
            positive = np.array([r[4] for r in rows], dtype=bool)
            rec = np.array(
                [r[5] if r[5] is not None else (np.nan, np.nan) for r in rows],
                dtype=float,
            ).reshape(n, 2)
            moved = np.array([r[6] for r in rows], dtype=float)
            log.append_step(t, ids, groups, feats, scores, positive,
                            threshold, rec, moved)
        return log

    return build


def tiny_grid_base() -> SimulationConfig:
    """Base config for harness end-to-end tests: milliseconds per run."""
    return dataclasses.replace(
        SMALL_CONFIG, initial_population=40, capacity=5, arrivals_per_step=5,
        horizon=5,
    )
