"""Sampling of initial populations and per-step arrival batches."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Agent, GeneratorCase, Group, PopulationSpec

GROUP_CODES = {Group.ADVANTAGED: 0, Group.DISADVANTAGED: 1}
CODE_GROUPS = (Group.ADVANTAGED, Group.DISADVANTAGED)


@dataclass
class ArrivalBatch:
    agents: list[Agent]
    advantaged_count: int
    disadvantaged_count: int


def group_split(count: int) -> tuple[int, int]:
    """Split a headcount evenly; an odd remainder goes to the disadvantaged
    group. (advantaged, disadvantaged)."""
    half = count // 2
    return half, count - half


def interleaved_groups(n_advantaged: int, n_disadvantaged: int) -> np.ndarray:
    """Group codes alternating a,d,a,d,... with any surplus at the end.

    Agent ids are assigned in batch order and break exact score ties, so a
    blocked layout would systematically favor whichever group came first.
    Alternating keeps deterministic tie-breaking group-neutral.
    """
    n = n_advantaged + n_disadvantaged
    codes = np.empty(n, dtype=np.int8)
    m = 2 * min(n_advantaged, n_disadvantaged)
    codes[0:m:2] = 0
    codes[1:m:2] = 1
    codes[m:] = 0 if n_advantaged > n_disadvantaged else 1
    return codes


def component_params(spec: PopulationSpec, group_code: int, high: bool) -> tuple[float, float]:
    """(mean, std) of the feature component for one agent kind."""
    case = spec.generator_case
    std = spec.sigma
    if group_code == 1 and case in (GeneratorCase.DIFF_VAR_EQUAL_MEANS,
                                    GeneratorCase.DIFF_VAR_DIFF_MEANS):
        std = spec.sigma * spec.variance_ratio
    if high:
        return spec.mu_high, std
    if group_code == 0:
        mean = spec.mu_low_advantaged
    else:
        mean = spec.mu_low_disadvantaged
    if case is GeneratorCase.DIFF_VAR_EQUAL_MEANS:
        mean = spec.mu_low_disadvantaged
    return mean, std


def sample_feature_arrays(spec: PopulationSpec, n_advantaged: int, n_disadvantaged: int,
                          rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw features for a batch of agents with interleaved group order.

    Returns (features (n,2) clipped to [0,1], group codes (n,), effort means (n,)).
    Draw order is fixed: one uniform per agent for the mixture component,
    then one normal batch for all coordinates.
    """
    groups = interleaved_groups(n_advantaged, n_disadvantaged)
    n = len(groups)
    high = rng.random(n) < spec.high_fraction
    means = np.empty(n)
    stds = np.empty(n)
    for code in (0, 1):
        for is_high in (False, True):
            mask = (groups == code) & (high == is_high)
            if mask.any():
                m, s = component_params(spec, code, is_high)
                means[mask] = m
                stds[mask] = s
    features = rng.normal(means[:, None], stds[:, None], size=(n, 2))
    np.clip(features, 0.0, 1.0, out=features)
    efforts = np.where(groups == 0, spec.effort_mean_advantaged,
                       spec.effort_mean_disadvantaged).astype(float)
    return features, groups, efforts


def _to_agents(features: np.ndarray, groups: np.ndarray, efforts: np.ndarray,
               start_id: int, entry_time: int) -> list[Agent]:
    return [
        Agent(
            agent_id=start_id + i,
            group=CODE_GROUPS[groups[i]],
            features=features[i].copy(),
            effort_mean=float(efforts[i]),
            entry_time=entry_time,
        )
        for i in range(len(groups))
    ]


def sample_population(spec: PopulationSpec, count: int, rng: np.random.Generator,
                      start_id: int = 0, entry_time: int = 0) -> list[Agent]:
    """Sample `count` agents split evenly between groups."""
    n_a, n_d = group_split(count)
    features, groups, efforts = sample_feature_arrays(spec, n_a, n_d, rng)
    return _to_agents(features, groups, efforts, start_id, entry_time)


def sample_arrivals(spec: PopulationSpec, count: int, rng: np.random.Generator,
                    start_id: int, entry_time: int) -> ArrivalBatch:
    """Sample one step's arrival cohort. Same group split rule as the
    initial population: an odd headcount favors the disadvantaged group."""
    n_a, n_d = group_split(count)
    features, groups, efforts = sample_feature_arrays(spec, n_a, n_d, rng)
    return ArrivalBatch(
        agents=_to_agents(features, groups, efforts, start_id, entry_time),
        advantaged_count=n_a,
        disadvantaged_count=n_d,
    )
