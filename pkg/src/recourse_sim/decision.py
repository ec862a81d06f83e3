"""Scoring, selection, and scorer retraining rules.

Selection is capacity-constrained: exactly k agents win each step (fewer if
fewer are active). Ties at the cut prefer the agent waiting longest since
its first negative outcome, then the lower agent id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Group


@dataclass(frozen=True)
class LinearScorer:
    """Linear score w.x + b over [0,1]^2 features."""

    weights: np.ndarray
    bias: float = 0.0

    def score(self, features: np.ndarray) -> float:
        return float(self.weights @ np.asarray(features, dtype=float)) + self.bias

    def score_matrix(self, X: np.ndarray) -> np.ndarray:
        return X @ self.weights + self.bias

    def normalized(self) -> "LinearScorer":
        """Rescale to unit L1 weights with the bias chosen so scores span
        exactly [0,1] over the feature box. Ranking order is preserved; the
        raw offset is dropped (it never affects top-k selection or the
        threshold-relative recourse geometry)."""
        w = np.asarray(self.weights, dtype=float)
        span = float(np.abs(w).sum())
        if span == 0.0:
            raise ValueError("cannot normalize a zero-weight scorer")
        return LinearScorer(
            weights=w / span,
            bias=float(-np.minimum(w, 0.0).sum() / span),
        )


@dataclass
class SelectionResult:
    """Mask of winners (aligned with the input arrays), the realized
    threshold (minimum selected score), and winners per group."""

    selected: np.ndarray
    threshold: float
    per_group_counts: dict[Group, int]


def _waiting_key(first_negative: np.ndarray) -> np.ndarray:
    # Earlier first-negative means waiting longer, which wins ties; agents
    # never rejected sort last among equals.
    return np.where(np.isnan(first_negative), np.inf, first_negative)


def _ranking(scores: np.ndarray, first_negative: np.ndarray,
             agent_ids: np.ndarray) -> np.ndarray:
    """Indices ordered best-first: score desc, waiting-longest first, id asc."""
    return np.lexsort((agent_ids, _waiting_key(first_negative), -scores))


def _result(scores: np.ndarray, groups: np.ndarray | None,
            chosen: np.ndarray) -> SelectionResult:
    n = len(scores)
    mask = np.zeros(n, dtype=bool)
    mask[chosen] = True
    threshold = float(scores[chosen].min()) if len(chosen) else float("nan")
    counts = {Group.ADVANTAGED: 0, Group.DISADVANTAGED: 0}
    if groups is not None and len(chosen):
        counts[Group.ADVANTAGED] = int((groups[chosen] == 0).sum())
        counts[Group.DISADVANTAGED] = int((groups[chosen] == 1).sum())
    return SelectionResult(selected=mask, threshold=threshold,
                           per_group_counts=counts)


def select_top_k(scores: np.ndarray, k: int, first_negative: np.ndarray,
                 agent_ids: np.ndarray,
                 groups: np.ndarray | None = None) -> SelectionResult:
    """Pick the k best scores (all agents when k >= n)."""
    order = _ranking(scores, first_negative, agent_ids)
    chosen = order[:min(k, len(order))]
    return _result(scores, groups, chosen)


def cns_quotas(k: int, group_counts: tuple[int, int]) -> tuple[int, int]:
    """Per-group seat quotas by largest remainder on active shares.

    A leftover seat goes to the larger remainder, then to the larger group,
    then to group "a".
    """
    n = sum(group_counts)
    if n == 0:
        return 0, 0
    shares = [k * c / n for c in group_counts]
    base = [int(np.floor(s)) for s in shares]
    leftover = k - sum(base)
    remainders = [s - b for s, b in zip(shares, base)]
    order = sorted(range(2), key=lambda g: (-remainders[g], -group_counts[g], g))
    for g in order[:leftover]:
        base[g] += 1
    return base[0], base[1]


def select_cns(scores: np.ndarray, k: int, groups: np.ndarray,
               first_negative: np.ndarray,
               agent_ids: np.ndarray) -> SelectionResult:
    """Quota selection: each group gets seats proportional to its active
    share, filled by within-group score order; seats a short group cannot
    fill go back to the global order. The threshold is the global minimum
    selected score, so recourse under quotas still targets the realized bar."""
    n = len(scores)
    k_eff = min(k, n)
    counts = (int((groups == 0).sum()), int((groups == 1).sum()))
    quotas = cns_quotas(k_eff, counts)
    order = _ranking(scores, first_negative, agent_ids)
    chosen: list[int] = []
    taken = np.zeros(n, dtype=bool)
    for code in (0, 1):
        members = order[groups[order] == code]
        take = members[:min(quotas[code], len(members))]
        chosen.extend(take.tolist())
        taken[take] = True
    spare = k_eff - len(chosen)
    if spare > 0:
        refill = order[~taken[order]][:spare]
        chosen.extend(refill.tolist())
    return _result(scores, groups, np.asarray(chosen, dtype=np.int64))


@dataclass
class RetrainResult:
    scorer: LinearScorer
    raw_weights: np.ndarray
    raw_bias: float
    degenerate: bool = False
    message: str = ""


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def fit_logistic(X: np.ndarray, y: np.ndarray, max_iter: int = 50,
                 damping: float = 1e-8, tol: float = 1e-10) -> tuple[np.ndarray, float] | None:
    """Newton-fit logistic separator. Returns (weights, bias) of the logit,
    or None when the solve degenerates. Deterministic: zero init, fixed
    iteration cap, Levenberg damping keeps separable fits finite."""
    n = len(y)
    A = np.hstack([X, np.ones((n, 1))])
    theta = np.zeros(3)
    eye = np.eye(3)
    for _ in range(max_iter):
        p = _sigmoid(A @ theta)
        grad = A.T @ (p - y) / n
        w_diag = p * (1.0 - p)
        H = (A.T * w_diag) @ A / n + damping * eye
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            return None
        theta -= step
        if not np.all(np.isfinite(theta)):
            return None
        if float(np.max(np.abs(step))) < tol:
            break
    return theta[:2], float(theta[2])


def retrain_cda(negative_features: np.ndarray, recommendation_points: np.ndarray,
                previous: LinearScorer) -> RetrainResult:
    """Counterfactual data augmentation retrain.

    Fits a logistic separator on the currently rejected agents (label 0)
    against their own recommendation points (label 1), then returns the
    normalized linear scorer. The augmented positives sit on the previous
    threshold line, which pulls the learned boundary toward the rejected
    class. Degenerate inputs keep the previous scorer.
    """
    m = len(negative_features)
    if m == 0 or len(recommendation_points) == 0:
        return RetrainResult(previous, np.asarray(previous.weights), previous.bias,
                             degenerate=True, message="single-class training set")
    X = np.vstack([negative_features, recommendation_points])
    y = np.concatenate([np.zeros(m), np.ones(len(recommendation_points))])
    fit = fit_logistic(X, y)
    if fit is None:
        return RetrainResult(previous, np.asarray(previous.weights), previous.bias,
                             degenerate=True, message="logistic fit failed")
    raw_w, raw_b = fit
    if float(np.abs(raw_w).sum()) < 1e-12:
        return RetrainResult(previous, raw_w, raw_b, degenerate=True,
                             message="degenerate separator")
    scorer = LinearScorer(raw_w, raw_b).normalized()
    return RetrainResult(scorer, raw_w, raw_b)


def retrain_grr(features: np.ndarray, labels: np.ndarray, groups: np.ndarray,
                previous: LinearScorer, previous_threshold: float,
                fairness_weight: float = 1.0, learning_rate: float = 0.05,
                epochs: int = 200) -> RetrainResult:
    """Recourse-regularized retrain by gradient descent.

    Minimizes mean logistic loss plus fairness_weight * (gap)^2, where gap is
    the difference between the groups' mean signed distances to the evolving
    boundary, measured over each group's rejected agents. Initialized from
    the previous scorer with its boundary placed at the previous threshold.
    Weight signs are unconstrained: the regularizer is allowed to rotate the
    boundary into inversion, which callers should flag.
    """
    y = np.asarray(labels, dtype=float)
    if len(np.unique(y)) < 2:
        return RetrainResult(previous, np.asarray(previous.weights), previous.bias,
                             degenerate=True, message="single-class training set")
    neg = y == 0.0
    neg_a = neg & (groups == 0)
    neg_d = neg & (groups == 1)
    regularize = bool(neg_a.any() and neg_d.any())
    # Group means are fixed during the fit, so the regularizer only needs the
    # difference of the two mean feature vectors.
    diff = (features[neg_a].mean(axis=0) - features[neg_d].mean(axis=0)) if regularize else None

    w = np.asarray(previous.weights, dtype=float).copy()
    c = previous.bias - previous_threshold
    n = len(y)
    for _ in range(epochs):
        p = _sigmoid(features @ w + c)
        grad_w = features.T @ (p - y) / n
        grad_c = float(np.sum(p - y)) / n
        if regularize:
            norm = float(np.sqrt(w @ w))
            if norm < 1e-12:
                break
            gap = float(w @ diff) / norm
            dgap_dw = diff / norm - gap * w / (norm * norm)
            grad_w = grad_w + fairness_weight * 2.0 * gap * dgap_dw
        w -= learning_rate * grad_w
        c -= learning_rate * grad_c
    if not (np.all(np.isfinite(w)) and np.isfinite(c)) or float(np.abs(w).sum()) < 1e-12:
        return RetrainResult(previous, w, c, degenerate=True,
                             message="retrain diverged")
    scorer = LinearScorer(w, c + previous_threshold).normalized()
    message = "" if regularize else "regularizer skipped: missing group negatives"
    return RetrainResult(scorer, w, float(c), degenerate=False, message=message)
