"""Recourse generation and agent adaptation.

A recommendation is the cheapest feature vector (Euclidean cost) inside
[0,1]^2 whose score reaches the current selection threshold. For a linear
scorer that is the orthogonal projection onto the threshold line, falling
back to an exact active-set solve when the projection leaves the box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import AdaptationMode

VALIDITY_TOL = 1e-9


class ThresholdUnreachable(ValueError):
    """No point of the feature box reaches the requested threshold."""


@dataclass(frozen=True)
class Recommendation:
    target: np.ndarray
    cost: float


def cost(a: np.ndarray, b: np.ndarray) -> float:
    """Euclidean movement cost between two feature vectors."""
    d0 = float(b[0]) - float(a[0])
    d1 = float(b[1]) - float(a[1])
    return math.sqrt(d0 * d0 + d1 * d1)


def _boxed_project(weights: np.ndarray, bias: float, x: np.ndarray,
                   threshold: float) -> np.ndarray | None:
    """Exact minimizer of ||x' - x|| s.t. w.x' + b >= threshold, x' in [0,1]^2.

    Enumerates the free projection plus the four box faces (each face reduces
    to clamping one coordinate into the feasible segment); face endpoints
    cover the corners. Returns None when the constraint set is empty.
    """
    w = weights
    hi = bias + float(np.maximum(w, 0.0).sum())
    if hi < threshold - VALIDITY_TOL:
        return None

    candidates: list[np.ndarray] = []
    gap = threshold - (float(w @ x) + bias)
    if gap <= 0:
        return x.copy()
    nw2 = float(w @ w)
    raw = x + (gap / nw2) * w
    if np.all(raw >= -1e-12) and np.all(raw <= 1.0 + 1e-12):
        candidates.append(np.clip(raw, 0.0, 1.0))

    for j in (0, 1):
        i = 1 - j
        for v in (0.0, 1.0):
            need = threshold - bias - w[j] * v
            if abs(w[i]) < 1e-15:
                if need > VALIDITY_TOL:
                    continue
                lo_i, hi_i = 0.0, 1.0
            elif w[i] > 0:
                lo_i, hi_i = need / w[i], 1.0
            else:
                lo_i, hi_i = 0.0, need / w[i]
            lo_i, hi_i = max(lo_i, 0.0), min(hi_i, 1.0)
            if lo_i > hi_i:
                continue
            point = np.empty(2)
            point[j] = v
            point[i] = min(max(x[i], lo_i), hi_i)
            candidates.append(point)

    best = None
    best_d2 = math.inf
    for c in candidates:
        if float(w @ c) + bias < threshold - VALIDITY_TOL:
            continue
        d2 = float((c[0] - x[0]) ** 2 + (c[1] - x[1]) ** 2)
        if d2 < best_d2:
            best, best_d2 = c, d2
    return best


def recommend(scorer, features: np.ndarray, threshold: float) -> Recommendation:
    """Minimal-cost recommendation reaching `threshold` under `scorer`.

    Raises ThresholdUnreachable when no point of the box scores that high.
    Agents already at or above the threshold get their own position back.
    """
    x = np.asarray(features, dtype=float)
    w = np.asarray(scorer.weights, dtype=float)
    target = _boxed_project(w, scorer.bias, x, threshold)
    if target is None:
        raise ThresholdUnreachable(
            f"threshold {threshold} exceeds the best reachable score"
        )
    return Recommendation(target=target, cost=cost(x, target))


def recommend_batch(scorer, X: np.ndarray, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized recommendations for many agents.

    Returns (targets (n,2), feasible (n,) bool). Infeasible rows (threshold
    unreachable anywhere in the box) come back NaN with feasible False.
    Rows whose plain projection stays inside the box take the fast path;
    the rest go through the exact boxed solve.
    """
    w = np.asarray(scorer.weights, dtype=float)
    b = scorer.bias
    n = len(X)
    scores = X @ w + b
    gap = threshold - scores
    step = np.maximum(gap, 0.0) / float(w @ w)
    raw = X + step[:, None] * w[None, :]
    inside = np.all((raw >= 0.0) & (raw <= 1.0), axis=1)
    targets = np.where(inside[:, None], raw, np.nan)
    feasible = np.ones(n, dtype=bool)
    for i in np.nonzero(~inside)[0]:
        t = _boxed_project(w, b, X[i], threshold)
        if t is None:
            feasible[i] = False
        else:
            targets[i] = t
    return targets, feasible


def sample_effort(effort_mean: float, rng: np.random.Generator,
                  scale: float) -> float:
    """One nonnegative effort draw: |Normal(effort_mean*scale, scale^2)|."""
    return abs(float(rng.normal(effort_mean * scale, scale)))


def sample_efforts(effort_means: np.ndarray, rng: np.random.Generator,
                   scale: float) -> np.ndarray:
    """Batch effort draws, one per agent, filled in array order."""
    return np.abs(rng.normal(effort_means * scale, scale))


def adapt(features: np.ndarray, target: np.ndarray, effort: float,
          mode: AdaptationMode) -> tuple[np.ndarray, float]:
    """Move one agent toward its recommendation.

    CAP stops at the target even if effort would overshoot; OVERSHOOT always
    spends the full effort along the target direction, then clips to the box.
    Returns (new features, realized movement cost).
    """
    new, moved = adapt_batch(features[None, :], target[None, :],
                             np.array([effort]), mode)
    return new[0], float(moved[0])


def adapt_batch(X: np.ndarray, targets: np.ndarray, efforts: np.ndarray,
                mode: AdaptationMode) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized adaptation step. NaN target rows do not move."""
    delta = targets - X
    with np.errstate(invalid="ignore"):
        dist = np.sqrt(delta[:, 0] * delta[:, 0] + delta[:, 1] * delta[:, 1])
    movable = np.isfinite(dist) & (dist > 0.0)
    if mode is AdaptationMode.CAP_AT_RECOMMENDATION:
        step = np.minimum(efforts, dist)
    else:
        step = efforts.astype(float, copy=True)
    new = X.copy()
    if movable.any():
        idx = np.nonzero(movable)[0]
        unit = delta[idx] / dist[idx, None]
        moved_to = X[idx] + step[idx, None] * unit
        np.clip(moved_to, 0.0, 1.0, out=moved_to)
        new[idx] = moved_to
    dx = new - X
    moved = np.sqrt(dx[:, 0] * dx[:, 0] + dx[:, 1] * dx[:, 1])
    return new, moved
