"""
Tests for regret, diversity, calibration and candidate plausibility metrics.
"""

import logging
import math

import numpy as np
import pytest

from src.exceptions import InsufficientDataError, ValidationError
from src.metrics import (
    TaskBounds,
    avg_and_best_regret,
    calibration,
    candidate_loglik,
    correlation_matrix,
    generalized_variance,
    generalized_variance_array,
    normalized_regret,
)
from src.objectives import rosenbrock, synthetic, to_canonical
from src.search_space import HyperparamDef, SearchSpace
from src.surrogate_disc import SurrogatePrediction
from src.trajectory import Trajectory


def _plane(lower=0.0, upper=1.0):
    return SearchSpace(
        [
            HyperparamDef("a", "continuous", "linear", lower, upper),
            HyperparamDef("b", "continuous", "linear", lower, upper),
        ]
    )


class _Identity:
    """Objective stub whose score is the value of x."""

    def evaluate(self, cfg):
        return cfg["x"]


class TestNormalizedRegret:
    """Test cases for normalized_regret."""

    def test_bounds_must_be_ordered(self):
        """Test that s_star_min may not exceed s_star_max."""
        with pytest.raises(ValidationError):
            TaskBounds(1.0, 0.0)

    def test_worked_example(self):
        """Test scores [0.9, 0.5] against bounds (0.1, 0.9)."""
        assert normalized_regret([0.9, 0.5], TaskBounds(0.1, 0.9)) == pytest.approx([1.0, 0.5])

    def test_optimum_hit_first(self):
        """Test that hitting the optimum at trial 0 pins regret at zero."""
        assert normalized_regret([0.0, 3.0, 1.0], TaskBounds(0.0, 5.0)) == [0.0, 0.0, 0.0]

    def test_non_increasing(self):
        """Test the running-minimum property on random scores."""
        scores = np.random.default_rng(0).uniform(0.0, 10.0, size=50)
        regret = normalized_regret(scores, TaskBounds(0.0, 10.0))

        assert len(regret) == 50
        assert all(b <= a for a, b in zip(regret, regret[1:]))

    def test_affine_invariance(self):
        """Test that rescaling scores and bounds together leaves regret unchanged."""
        scores = np.random.default_rng(1).uniform(2.0, 8.0, size=20)
        base = normalized_regret(scores, TaskBounds(1.0, 9.0))
        scaled = normalized_regret(3.0 * scores - 4.0, TaskBounds(-1.0, 23.0))

        assert scaled == pytest.approx(base)

    def test_accepts_trajectory(self):
        """Test regret of a Trajectory's scores."""
        traj = Trajectory(_plane())
        for score in (0.8, 0.6, 0.7):
            traj.append({"a": 0.5, "b": 0.5}, score)

        assert normalized_regret(traj, TaskBounds(0.0, 1.0)) == pytest.approx([0.8, 0.6, 0.6])

    def test_empty(self):
        """Test that no scores give no regret."""
        assert normalized_regret([], TaskBounds(0.0, 1.0)) == []

    def test_zero_range(self):
        """Test that equal bounds are rejected at compute time."""
        with pytest.raises(ValidationError):
            normalized_regret([1.0], TaskBounds(1.0, 1.0))

    def test_out_of_range_clamped_with_warning(self, caplog):
        """Test clamping when estimated bounds are exceeded."""
        with caplog.at_level(logging.WARNING, logger="iclbo.metrics"):
            regret = normalized_regret([1.5, 0.5], TaskBounds(0.0, 1.0, estimated=True))

        assert regret == pytest.approx([1.0, 0.5])
        assert "clamped" in caplog.text
        assert "estimated" in caplog.text

    def test_given_bounds_are_not_clamped(self, caplog):
        """Test that scores beyond given bounds keep their regret value."""
        with caplog.at_level(logging.WARNING, logger="iclbo.metrics"):
            regret = normalized_regret([1.5, 1.2, -0.5], TaskBounds(0.0, 1.0))

        assert regret == pytest.approx([1.5, 1.2, -0.5])
        assert "unclamped" in caplog.text


class TestGeneralizedVariance:
    """Test cases for generalized_variance and correlation_matrix."""

    def test_points_on_a_line(self):
        """Test that collinear points have zero generalized variance."""
        space = _plane()
        points = [space.make({"a": t, "b": t}) for t in np.linspace(0.0, 1.0, 10)]

        assert generalized_variance(points, space) == pytest.approx(0.0, abs=1e-12)

    def test_independent_unit_variance(self):
        """Test det close to 1 for an independent standard-normal sample."""
        X = np.random.default_rng(0).standard_normal((10_000, 2))

        assert generalized_variance_array(X) == pytest.approx(1.0, abs=0.05)

    def test_correlation_lowers_determinant(self):
        """Test det near 1 - 0.81 for unit marginals with correlation 0.9."""
        rng = np.random.default_rng(1)
        cov = np.array([[1.0, 0.9], [0.9, 1.0]])
        correlated = rng.multivariate_normal(np.zeros(2), cov, size=10_000)
        independent = rng.standard_normal((10_000, 2))

        det = generalized_variance_array(correlated)
        assert 0.14 <= det <= 0.24
        assert det < generalized_variance_array(independent)

    def test_permutation_invariance(self):
        """Test invariance under reordering points and dimensions."""
        rng = np.random.default_rng(2)
        X = rng.uniform(size=(30, 3))

        base = generalized_variance_array(X)
        assert generalized_variance_array(X[rng.permutation(30)]) == pytest.approx(base)
        assert generalized_variance_array(X[:, [2, 0, 1]]) == pytest.approx(base)

    def test_too_few_points(self):
        """Test that d points in d dimensions are rejected."""
        space = _plane()
        points = [space.make({"a": 0.1, "b": 0.2}), space.make({"a": 0.3, "b": 0.9})]

        with pytest.raises(InsufficientDataError):
            generalized_variance(points, space)

    def test_correlation_matrix(self):
        """Test a labelled Pearson matrix with perfect correlation."""
        space = _plane(0.0, 10.0)
        points = [space.make({"a": t, "b": 2 * t}) for t in (0.5, 1.0, 2.0, 4.0)]
        corr = correlation_matrix(points, space)

        assert list(corr.columns) == ["a", "b"]
        assert corr.loc["a", "b"] == pytest.approx(1.0)
        assert corr.loc["a", "a"] == pytest.approx(1.0)


class TestCalibration:
    """Test cases for calibration."""

    def test_perfect_predictions(self):
        """Test an exact predictor with std 0.1."""
        truths = [0.1, 0.5, 0.9, 0.3]
        report = calibration([SurrogatePrediction(t, 0.1, (), 1) for t in truths], truths)

        assert report.nrmse == 0.0
        assert report.r2 == pytest.approx(1.0)
        assert report.coverage_1sd == 1.0
        assert report.sharpness == pytest.approx(0.1)

    def test_simulated_gaussian_coverage(self):
        """Test one-sigma coverage on truths drawn from the predictive distributions."""
        rng = np.random.default_rng(0)
        means = rng.uniform(-1.0, 1.0, size=10_000)
        stds = rng.uniform(0.1, 0.5, size=10_000)
        truths = rng.normal(means, stds)
        preds = [SurrogatePrediction(float(m), float(s), (), 1) for m, s in zip(means, stds)]

        assert 0.67 <= calibration(preds, truths).coverage_1sd <= 0.70

    def test_lpd_at_the_mean(self):
        """Test the analytic log density of a standard normal at its mean."""
        truths = [0.0, 1.0, 2.0]
        report = calibration([SurrogatePrediction(t, 1.0, (), 1) for t in truths], truths)

        assert report.lpd == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-4)

    def test_wider_bands_never_lose_coverage(self):
        """Test interval nesting when every std grows tenfold."""
        rng = np.random.default_rng(3)
        truths = rng.normal(size=200)
        preds = [SurrogatePrediction(float(m), 0.3, (), 1) for m in rng.normal(size=200)]
        wide = [SurrogatePrediction(p.mean, p.std * 10, (), 1) for p in preds]

        assert calibration(wide, truths).coverage_1sd >= calibration(preds, truths).coverage_1sd

    def test_zero_std_is_floored(self):
        """Test that a point prediction gives a finite LPD."""
        truths = [0.0, 1.0]
        report = calibration([SurrogatePrediction(0.0, 0.0, (), 1)] * 2, truths)

        assert math.isfinite(report.lpd)
        assert report.to_dict()["coverage_1sd"] == 0.5

    def test_invalid_inputs(self):
        """Test mismatched lengths, a single pair and constant truths."""
        pred = SurrogatePrediction(0.0, 1.0, (), 1)
        with pytest.raises(ValidationError):
            calibration([pred], [0.0, 1.0])
        with pytest.raises(ValidationError):
            calibration([pred], [0.0])
        with pytest.raises(ValidationError):
            calibration([pred, pred], [2.0, 2.0])


class TestCandidateLoglik:
    """Test cases for candidate_loglik."""

    @staticmethod
    def _cluster_history(seed):
        rng = np.random.default_rng(seed)
        traj = Trajectory(_plane())
        for a, b in np.clip(rng.normal(0.5, 0.05, size=(20, 2)), 0.0, 1.0):
            traj.append({"a": a, "b": b}, float(a + b))
        return traj

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_observed_points_beat_random(self, seed):
        """Test that re-proposing observed points scores higher than random points."""
        traj = self._cluster_history(seed)
        rng = np.random.default_rng(100 + seed)
        random_points = [traj.space.make({"a": a, "b": b}) for a, b in rng.uniform(size=(20, 2))]

        assert candidate_loglik(traj.configs, traj) >= candidate_loglik(random_points, traj)

    def test_faraway_candidate(self):
        """Test a very low density far outside the cluster."""
        traj = self._cluster_history(0)
        corner = traj.space.make({"a": 0.0, "b": 0.0})

        assert candidate_loglik([corner], traj) < -20

    def test_centroid_beats_corner(self):
        """Test that the cluster's centroid is more plausible than a corner."""
        traj = self._cluster_history(1)
        a, b = np.mean([traj.space.to_unit(c) for c in traj.configs], axis=0)
        centroid = traj.space.make({"a": float(a), "b": float(b)})
        corner = traj.space.make({"a": 1.0, "b": 0.0})

        assert candidate_loglik([centroid], traj) > candidate_loglik([corner], traj)

    def test_needs_data(self):
        """Test errors for a one-point history and an empty candidate list."""
        traj = self._cluster_history(0)
        short = Trajectory(traj.space, traj.observations[:1])

        with pytest.raises(InsufficientDataError):
            candidate_loglik(traj.configs, short)
        with pytest.raises(InsufficientDataError):
            candidate_loglik([], traj)


class TestAvgAndBestRegret:
    """Test cases for avg_and_best_regret."""

    def test_candidates_at_optimum(self):
        """Test zero regret for the Rosenbrock minimizer."""
        objective = synthetic("rosenbrock", 2)
        best = objective.space.make({"x0": 0.4, "x1": 0.4})
        summary = avg_and_best_regret([best, best], objective, objective.bounds)

        assert summary.avg == pytest.approx(0.0, abs=1e-12)
        assert summary.best == pytest.approx(0.0, abs=1e-12)

    def test_arithmetic(self):
        """Test avg and best of regrets 0.2 and 0.4."""
        summary = avg_and_best_regret([{"x": 0.2}, {"x": 0.4}], _Identity(), TaskBounds(0.0, 1.0))

        assert summary.avg == pytest.approx(0.3)
        assert summary.best == pytest.approx(0.2)

    def test_matches_recomputation(self):
        """Test 20 random Rosenbrock candidates against a direct recomputation."""
        objective = synthetic("rosenbrock", 2)
        u = np.random.default_rng(0).uniform(size=(20, 2))
        candidates = [objective.space.make({"x0": a, "x1": b}) for a, b in u]
        bounds = objective.bounds
        expected = (rosenbrock(to_canonical("rosenbrock", u)) - bounds.s_star_min) / bounds.range
        summary = avg_and_best_regret(candidates, objective, bounds)

        assert summary.avg == pytest.approx(float(expected.mean()))
        assert summary.best == pytest.approx(float(expected.min()))

    def test_empty(self):
        """Test that an empty candidate list is rejected."""
        with pytest.raises(ValidationError):
            avg_and_best_regret([], _Identity(), TaskBounds(0.0, 1.0))
