"""
Tests for the optimization history and its statistics.
"""

import json

import numpy as np
import pytest

from src.exceptions import InsufficientDataError, MissingFileError, ValidationError
from src.search_space import HyperparamDef, SearchSpace
from src.trajectory import Trajectory, quantile_threshold


@pytest.fixture
def space():
    return SearchSpace([HyperparamDef("x", "continuous", "linear", 0.0, 1.0)])


def _trajectory(space, scores):
    traj = Trajectory(space)
    for i, score in enumerate(scores):
        traj.append({"x": (i % 10) / 10.0}, score)
    return traj


class TestStats:
    """Test cases for stats and incumbent."""

    def test_singleton(self, space):
        """Test a one-observation trajectory."""
        stats = _trajectory(space, [0.3]).stats()
        assert stats.s_min == 0.3
        assert stats.s_max == 0.3
        assert stats.n == 1

    def test_min_max(self, space):
        """Test best and worst scores."""
        stats = _trajectory(space, [0.9, 0.1, 0.5]).stats()
        assert (stats.s_min, stats.s_max, stats.n) == (0.1, 0.9, 3)

    def test_matches_linear_scan(self, space):
        """Test against a brute-force scan."""
        scores = np.random.default_rng(1).normal(size=100).tolist()
        stats = _trajectory(space, scores).stats()
        lo, hi = scores[0], scores[0]
        for s in scores:
            lo, hi = min(lo, s), max(hi, s)
        assert (stats.s_min, stats.s_max) == (lo, hi)

    def test_empty(self, space):
        """Test stats on an empty trajectory."""
        with pytest.raises(InsufficientDataError):
            Trajectory(space).stats()

    def test_incumbent_earliest_on_ties(self, space):
        """Test the incumbent is the first best observation."""
        traj = _trajectory(space, [0.5, 0.2, 0.2])
        assert traj.incumbent().trial_index == 1


class TestAppend:
    """Test cases for appending observations."""

    def test_default_indices(self, space):
        """Test trial indices count up from zero."""
        traj = _trajectory(space, [1.0, 2.0])
        assert [obs.trial_index for obs in traj] == [0, 1]

    def test_indices_strictly_increasing(self, space):
        """Test a repeated trial index is rejected."""
        traj = Trajectory(space)
        traj.append({"x": 0.1}, 1.0, trial_index=3)
        with pytest.raises(ValidationError):
            traj.append({"x": 0.2}, 1.0, trial_index=3)

    def test_non_finite_score(self, space):
        """Test non-finite scores are rejected."""
        with pytest.raises(ValidationError):
            Trajectory(space).append({"x": 0.1}, float("nan"))

    def test_invalid_config(self, space):
        """Test out-of-range configurations are rejected."""
        with pytest.raises(ValidationError):
            Trajectory(space).append({"x": 1.5}, 1.0)

    def test_snapshot_is_frozen(self, space):
        """Test a snapshot does not see later appends."""
        traj = _trajectory(space, [1.0])
        snap = traj.snapshot()
        traj.append({"x": 0.5}, 0.5)
        assert len(snap) == 1
        assert len(traj) == 2


class TestLabelGoodBad:
    """Test cases for quantile labeling."""

    def test_quarter_quantile(self, space):
        """Test only the best of four is good at gamma 0.25."""
        labels = _trajectory(space, [1, 2, 3, 4]).label_good_bad(0.25)
        assert [lab.z for lab in labels] == [1, 0, 0, 0]

    def test_all_equal(self, space):
        """Test ties with the threshold are all good."""
        labels = _trajectory(space, [0.5] * 6).label_good_bad(0.25)
        assert all(lab.z == 1 for lab in labels)

    def test_fraction_labeled_good(self, space):
        """Test the good fraction tracks gamma on continuous scores."""
        for seed in range(10):
            scores = np.random.default_rng(seed).uniform(size=100).tolist()
            labels = _trajectory(space, scores).label_good_bad(0.25)
            fraction = sum(lab.z for lab in labels) / len(labels)
            assert 0.2 <= fraction <= 0.3

    def test_best_always_good(self, space):
        """Test the best observation is good for every gamma."""
        traj = _trajectory(space, np.random.default_rng(2).normal(size=30).tolist())
        best = int(np.argmin(traj.scores))
        for gamma in (0.01, 0.1, 0.5, 0.99):
            assert traj.label_good_bad(gamma)[best].z == 1

    def test_recompute_equals_incremental(self, space):
        """Test labels after an append match labels computed from scratch."""
        scores = np.random.default_rng(4).normal(size=20).tolist()
        traj = _trajectory(space, scores[:19])
        traj.append({"x": 0.9}, scores[19])
        fresh = _trajectory(space, scores)
        assert [lab.z for lab in traj.label_good_bad(0.25)] == [
            lab.z for lab in fresh.label_good_bad(0.25)
        ]

    def test_needs_two_observations(self, space):
        """Test labeling a singleton."""
        with pytest.raises(InsufficientDataError):
            _trajectory(space, [1.0]).label_good_bad(0.25)

    def test_invalid_gamma(self, space):
        """Test gamma outside (0, 1)."""
        with pytest.raises(ValidationError):
            _trajectory(space, [1.0, 2.0]).label_good_bad(1.0)

    def test_quantile_threshold_convention(self):
        """Test the lower empirical quantile index."""
        assert quantile_threshold([4, 3, 2, 1], 0.25) == 1.0
        assert quantile_threshold([4, 3, 2, 1], 0.5) == 2.0
        assert quantile_threshold([4, 3, 2, 1], 0.26) == 2.0

    def test_quantile_index_ignores_float_error(self):
        """Test that 0.15 * 100 selects the 15th score, not the 16th."""
        assert 0.15 * 100 > 15
        assert quantile_threshold(list(range(100)), 0.15) == 14.0
        assert quantile_threshold(list(range(10)), 0.7) == 6.0


class TestTargetValue:
    """Test cases for the sampling target."""

    def test_examples(self, space):
        """Test the target at alpha 0 and -0.2."""
        traj = _trajectory(space, [0.1, 0.9])
        assert traj.target_value(0.0) == 0.1
        assert traj.target_value(-0.2) == pytest.approx(0.26)

    def test_zero_range(self, space):
        """Test equal scores give the common score for any alpha."""
        traj = _trajectory(space, [0.5, 0.5])
        for alpha in (-1.0, -0.1, 0.0, 0.5):
            assert traj.target_value(alpha) == 0.5

    def test_monotone_decreasing_in_alpha(self, space):
        """Test the target falls as alpha grows."""
        rng = np.random.default_rng(5)
        for _ in range(200):
            traj = _trajectory(space, rng.normal(size=int(rng.integers(2, 8))).tolist())
            a, b = np.sort(rng.uniform(-1.0, 1.0, size=2))
            if a == b:
                continue
            assert traj.target_value(a) > traj.target_value(b)

    def test_alpha_below_minus_one(self, space):
        """Test alpha below -1 is rejected."""
        with pytest.raises(ValidationError):
            _trajectory(space, [0.1, 0.9]).target_value(-1.5)


class TestJsonl:
    """Test cases for JSONL persistence."""

    def test_round_trip(self, space, tmp_path):
        """Test writing then reading a trajectory."""
        traj = _trajectory(space, [0.9, 0.1, 0.5])
        path = tmp_path / "traj.jsonl"
        traj.to_jsonl(path)

        lines = path.read_text(encoding="utf-8").splitlines()
        assert json.loads(lines[0]) == {"config": {"x": 0.0}, "score": 0.9, "trial": 0}
        loaded = Trajectory.from_jsonl(path, space)
        assert loaded.scores.tolist() == [0.9, 0.1, 0.5]
        assert loaded.configs == traj.configs

    def test_extra_fields_ignored(self, space, tmp_path):
        """Test run-log lines with extra fields load."""
        path = tmp_path / "run.jsonl"
        record = {"trial": 0, "config": {"x": 0.2}, "score": 1.5, "method": "random"}
        path.write_text(json.dumps(record) + "\n\n", encoding="utf-8")
        assert len(Trajectory.from_jsonl(path, space)) == 1

    def test_malformed_line(self, space, tmp_path):
        """Test a malformed line names its position."""
        path = tmp_path / "bad.jsonl"
        path.write_text('{"trial": 0}\n', encoding="utf-8")
        with pytest.raises(ValidationError, match="bad.jsonl:1"):
            Trajectory.from_jsonl(path, space)

    def test_missing_file(self, space, tmp_path):
        """Test a missing trajectory file."""
        with pytest.raises(MissingFileError):
            Trajectory.from_jsonl(tmp_path / "absent.jsonl", space)
