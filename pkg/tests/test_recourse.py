"""Recommendation geometry, effort draws, and the adaptation step."""

import math

import numpy as np
import pytest

from recourse_sim.core import AdaptationMode
from recourse_sim.decision import LinearScorer
from recourse_sim.recourse import (
    Recommendation,
    ThresholdUnreachable,
    adapt,
    adapt_batch,
    cost,
    recommend,
    recommend_batch,
    sample_effort,
    sample_efforts,
)

DEFAULT = LinearScorer(weights=(0.5, 0.5), bias=0.0)


class TestCost:
    def test_zero_for_identical_points(self):
        assert cost(np.array([0.0, 0.0]), np.array([0.0, 0.0])) == 0.0
        assert cost(np.array([0.3, 0.7]), np.array([0.3, 0.7])) == 0.0

    def test_diagonal_golden(self):
        assert cost(np.array([0.4, 0.4]), np.array([0.7, 0.7])) == \
            pytest.approx(0.3 * math.sqrt(2))

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a, b = rng.random(2), rng.random(2)
            assert cost(a, b) == cost(b, a)


class TestRecommend:
    def test_projection_golden(self):
        rec = recommend(DEFAULT, np.array([0.4, 0.4]), 0.7)
        assert rec.target == pytest.approx([0.7, 0.7])
        assert rec.cost == pytest.approx(0.3 * math.sqrt(2))

    def test_already_above_threshold_stays_put(self):
        x = np.array([0.8, 0.9])
        rec = recommend(DEFAULT, x, 0.7)
        assert rec.target == pytest.approx([0.8, 0.9])
        assert rec.cost == 0.0

    def test_threshold_at_box_maximum(self):
        rec = recommend(DEFAULT, np.array([0.2, 0.1]), 1.0)
        assert rec.target == pytest.approx([1.0, 1.0])

    def test_unreachable_threshold_raises(self):
        with pytest.raises(ThresholdUnreachable):
            recommend(DEFAULT, np.array([0.5, 0.5]), 1.0 + 1e-6)

    def test_boxed_fallback_is_valid(self):
        # asymmetric weights push the free projection of a near-edge point
        # outside the box; the answer must still reach the threshold
        scorer = LinearScorer(weights=(0.9, 0.1), bias=0.0)
        x = np.array([0.05, 0.95])
        rec = recommend(scorer, x, 0.9)
        assert scorer.score(rec.target) >= 0.9 - 1e-9
        assert np.all(rec.target >= 0.0) and np.all(rec.target <= 1.0)

    def test_batch_marks_infeasible_rows(self):
        X = np.array([[0.1, 0.1], [0.9, 0.9]])
        targets, feasible = recommend_batch(DEFAULT, X, 1.0 + 1e-6)
        assert not feasible.any()
        assert np.isnan(targets).all()

    def test_batch_agrees_with_singleton(self):
        rng = np.random.default_rng(1)
        scorer = LinearScorer(weights=(0.7, 0.2), bias=0.05)
        X = rng.random((50, 2))
        threshold = 0.6
        targets, feasible = recommend_batch(scorer, X, threshold)
        assert feasible.all()
        for i in range(len(X)):
            single = recommend(scorer, X[i], threshold)
            assert np.allclose(targets[i], single.target, atol=1e-12)


def brute_force_cost(scorer, x, threshold, grid):
    """Cheapest feasible point on a 1e-3 lattice of the box."""
    scores = grid @ np.asarray(scorer.weights) + scorer.bias
    ok = grid[scores >= threshold - 1e-12]
    d = ok - x
    return float(np.sqrt((d * d).sum(axis=1)).min())


class TestMinimality:
    GRID = None

    @classmethod
    def setup_class(cls):
        axis = np.linspace(0.0, 1.0, 1001)
        g0, g1 = np.meshgrid(axis, axis, indexing="ij")
        cls.GRID = np.column_stack([g0.ravel(), g1.ravel()])

    def test_within_tolerance_of_grid_oracle(self):
        rng = np.random.default_rng(2)
        checked = 0
        while checked < 1000:
            w = rng.uniform(-1.0, 1.0, size=2)
            if abs(w).sum() < 0.05:
                continue
            scorer = LinearScorer(weights=tuple(w), bias=0.0).normalized()
            x = rng.random(2)
            lo = scorer.score(x)
            span = 1.0 - lo
            if span < 1e-6:
                continue
            threshold = lo + rng.random() * span
            rec = recommend(scorer, x, threshold)
            assert scorer.score(rec.target) >= threshold - 1e-9
            oracle = brute_force_cost(scorer, x, threshold, self.GRID)
            assert rec.cost <= oracle + 2e-3
            checked += 1
        assert checked == 1000

    def test_validity_and_box_membership(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            x = rng.random(2)
            threshold = rng.random()
            rec = recommend(DEFAULT, x, threshold)
            assert DEFAULT.score(rec.target) >= threshold - 1e-9
            assert np.all(rec.target >= 0.0) and np.all(rec.target <= 1.0)


class TestEffortDraws:
    def test_nonnegative(self):
        rng = np.random.default_rng(4)
        draws = sample_efforts(np.full(10_000, 2.0), rng, 0.05)
        assert np.all(draws >= 0.0)
        assert sample_effort(0.0, np.random.default_rng(5), 1.0) >= 0.0

    def test_zero_mean_matches_folded_normal(self):
        rng = np.random.default_rng(6)
        draws = sample_efforts(np.zeros(1_000_000), rng, 1.0)
        expected = math.sqrt(2.0 / math.pi)
        assert abs(draws.mean() - expected) <= 0.003

    def test_large_mean_keeps_its_scale(self):
        # at mean*scale = 10*scale the fold rarely triggers, so the sample
        # mean should sit within half a percent of mean*scale
        rng = np.random.default_rng(7)
        draws = sample_efforts(np.full(1_000_000, 10.0), rng, 0.05)
        assert abs(draws.mean() - 0.5) / 0.5 <= 0.005

    def test_scalar_and_batch_share_distribution(self):
        a = sample_effort(3.0, np.random.default_rng(8), 0.02)
        b = float(sample_efforts(np.array([3.0]), np.random.default_rng(8), 0.02)[0])
        assert a == b


class TestAdapt:
    def test_capped_partial_step(self):
        x = np.array([0.0, 0.0])
        target = np.array([0.7, 0.7])
        new, moved = adapt(x, target, 0.2, AdaptationMode.CAP_AT_RECOMMENDATION)
        want = 0.2 / math.sqrt(2)
        assert new == pytest.approx([want, want])
        assert moved == pytest.approx(0.2)

    def test_cap_never_passes_target(self):
        x = np.array([0.4, 0.4])
        target = np.array([0.7, 0.7])
        new, moved = adapt(x, target, 5.0, AdaptationMode.CAP_AT_RECOMMENDATION)
        assert new == pytest.approx(target)
        assert moved == pytest.approx(0.3 * math.sqrt(2))

    def test_zero_effort_stays(self):
        x = np.array([0.4, 0.4])
        new, moved = adapt(x, np.array([0.7, 0.7]), 0.0,
                           AdaptationMode.CAP_AT_RECOMMENDATION)
        assert np.array_equal(new, x)
        assert moved == 0.0

    def test_at_target_stays(self):
        x = np.array([0.7, 0.7])
        for mode in AdaptationMode:
            new, moved = adapt(x, x.copy(), 0.3, mode)
            assert np.array_equal(new, x)
            assert moved == 0.0

    def test_overshoot_spends_full_effort_then_clips(self):
        x = np.array([0.9, 0.9])
        target = np.array([1.0, 1.0])
        new, moved = adapt(x, target, 0.5, AdaptationMode.OVERSHOOT)
        assert new == pytest.approx([1.0, 1.0])
        assert moved == pytest.approx(0.1 * math.sqrt(2))

    def test_overshoot_passes_interior_target(self):
        x = np.array([0.1, 0.1])
        target = np.array([0.2, 0.2])
        new, moved = adapt(x, target, 0.5, AdaptationMode.OVERSHOOT)
        along = (new - x) / np.linalg.norm(new - x)
        assert along == pytest.approx([1 / math.sqrt(2), 1 / math.sqrt(2)])
        assert moved == pytest.approx(0.5)
        assert np.linalg.norm(new - x) > np.linalg.norm(target - x)

    def test_nan_target_rows_do_not_move(self):
        X = np.array([[0.3, 0.3], [0.5, 0.5]])
        targets = np.array([[np.nan, np.nan], [0.7, 0.7]])
        new, moved = adapt_batch(X, targets, np.array([0.4, 0.05]),
                                 AdaptationMode.CAP_AT_RECOMMENDATION)
        assert np.array_equal(new[0], X[0])
        assert moved[0] == 0.0
        assert moved[1] == pytest.approx(0.05)

    def test_monotone_progress_under_cap(self):
        rng = np.random.default_rng(9)
        X = rng.random((500, 2))
        targets = rng.random((500, 2))
        efforts = rng.random(500) * 0.5
        new, moved = adapt_batch(X, targets, efforts,
                                 AdaptationMode.CAP_AT_RECOMMENDATION)
        before = np.linalg.norm(targets - X, axis=1)
        after = np.linalg.norm(targets - new, axis=1)
        assert np.all(after <= before + 1e-12)
        # realized cost is exactly the displacement
        assert np.allclose(moved, np.linalg.norm(new - X, axis=1), atol=0.0)

    def test_moved_equals_displacement_for_both_modes(self):
        rng = np.random.default_rng(10)
        X = rng.random((200, 2))
        targets = rng.random((200, 2))
        efforts = rng.random(200)
        for mode in AdaptationMode:
            new, moved = adapt_batch(X, targets, efforts, mode)
            assert np.array_equal(moved, np.linalg.norm(new - X, axis=1))
            assert np.all(new >= 0.0) and np.all(new <= 1.0)


def test_recommendation_is_frozen():
    rec = Recommendation(target=np.array([0.5, 0.5]), cost=0.1)
    with pytest.raises(AttributeError):
        rec.cost = 0.2
