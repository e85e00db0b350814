"""
Tests for the discriminative in-context surrogate and expected improvement.
"""

import logging

import numpy as np
import pytest
from scipy.stats import norm

from src.exceptions import InsufficientDataError, SurrogateFailureError, ValidationError
from src.llm_client import LLMClient, MockBackend
from src.mock_responders import GARBAGE_ANSWER
from src.prompts import golden_fixture
from src.surrogate_disc import (
    DiscriminativeSurrogate,
    DiscSurrogateConfig,
    SurrogatePrediction,
    expected_improvement,
    predict,
)
from src.trajectory import Trajectory


@pytest.fixture
def fx():
    return golden_fixture()


def _client(responder, parallelism=1):
    return LLMClient(MockBackend(seed=0, responder=responder), parallelism=parallelism)


def _predict(fx, responder, **conf):
    return predict(
        fx.query,
        fx.traj,
        DiscSurrogateConfig(**conf),
        _client(responder),
        np.random.default_rng(0),
        fx.model_card,
        fx.data_card,
    )


def _identity_first(req, rng):
    """1 when the history is in its original order at the first two blocks, else 0."""
    text = req.prompt.text
    return "## 1 ##" if text.index("max_depth is 15") < text.index("max_depth is 3") else "## 0 ##"


class TestExpectedImprovement:
    """Test cases for expected_improvement."""

    def test_at_incumbent(self):
        """Test EI equals phi(0) when the mean sits on the incumbent."""
        pred = SurrogatePrediction(0.3, 1.0, (), 0)
        assert expected_improvement(pred, 0.3) == pytest.approx(0.3989423, abs=1e-7)

    def test_hopeless_point(self):
        """Test a confident bad prediction has no improvement."""
        pred = SurrogatePrediction(10.3, 1e-12, (), 0)
        assert expected_improvement(pred, 0.3) == pytest.approx(0.0, abs=1e-12)

    def test_zero_std(self):
        """Test the deterministic limit."""
        assert expected_improvement(SurrogatePrediction(0.1, 0.0, (), 0), 0.3) == pytest.approx(0.2)
        assert expected_improvement(SurrogatePrediction(0.5, 0.0, (), 0), 0.3) == 0.0

    def test_matches_monte_carlo(self):
        """Test the closed form against numerical integration over normal quantiles."""
        n = 1_000_000
        z = norm.ppf((np.arange(n) + 0.5) / n)
        rng = np.random.default_rng(0)
        for _ in range(100):
            mean, s_best = rng.uniform(-1.0, 1.0, size=2)
            std = rng.uniform(0.01, 1.0)
            oracle = np.mean(np.maximum(s_best - (mean + std * z), 0.0))
            ei = expected_improvement(SurrogatePrediction(mean, std, (), 0), s_best)
            assert abs(ei - oracle) < 1e-3

    def test_example_against_sampling(self):
        """Test mean 0.2, std 0.1, incumbent 0.3 against random draws."""
        draws = np.random.default_rng(1).normal(0.2, 0.1, size=1_000_000)
        oracle = np.mean(np.maximum(0.3 - draws, 0.0))
        ei = expected_improvement(SurrogatePrediction(0.2, 0.1, (), 0), 0.3)
        assert abs(ei - oracle) < 1e-3

    def test_monotone(self):
        """Test EI falls with the mean and, above the incumbent, grows with the std."""
        rng = np.random.default_rng(2)
        for _ in range(500):
            s_best = rng.uniform(-1.0, 1.0)
            std = rng.uniform(0.01, 1.0)
            m1, m2 = np.sort(rng.uniform(-2.0, 2.0, size=2))
            ei1 = expected_improvement(SurrogatePrediction(m1, std, (), 0), s_best)
            ei2 = expected_improvement(SurrogatePrediction(m2, std, (), 0), s_best)
            assert ei1 >= ei2 >= 0.0

            mean = s_best + rng.uniform(0.0, 1.0)
            sd1, sd2 = np.sort(rng.uniform(0.01, 2.0, size=2))
            low = expected_improvement(SurrogatePrediction(mean, sd1, (), 0), s_best)
            high = expected_improvement(SurrogatePrediction(mean, sd2, (), 0), s_best)
            assert low <= high

    def test_empirical_mode(self):
        """Test the plug-in average over raw samples."""
        pred = SurrogatePrediction.from_samples([0.1, 0.2, 0.5])
        assert expected_improvement(pred, 0.3, "empirical") == pytest.approx((0.2 + 0.1) / 3)

    def test_unknown_mode(self):
        """Test an unknown EI mode."""
        with pytest.raises(ValidationError):
            expected_improvement(SurrogatePrediction(0.0, 1.0, (), 0), 0.0, "ucb")


class TestSurrogatePrediction:
    """Test cases for SurrogatePrediction.from_samples."""

    def test_moments(self):
        """Test empirical mean and sample standard deviation."""
        pred = SurrogatePrediction.from_samples([0.4, 0.6] * 5)
        assert pred.mean == pytest.approx(0.5)
        assert pred.std == pytest.approx(0.1 * np.sqrt(25 / 9))
        assert pred.n_accepted == 10

    def test_order_independent(self):
        """Test arrival order does not change the moments."""
        samples = np.random.default_rng(0).normal(size=10)
        a = SurrogatePrediction.from_samples(samples)
        b = SurrogatePrediction.from_samples(samples[::-1])
        assert a.mean == pytest.approx(b.mean, abs=1e-15)
        assert a.std == pytest.approx(b.std, abs=1e-15)

    def test_empty(self):
        """Test a prediction needs samples."""
        with pytest.raises(ValidationError):
            SurrogatePrediction.from_samples([])


class TestPredict:
    """Test cases for the Monte-Carlo prediction."""

    def test_constant_responder(self, fx):
        """Test a constant answer gives zero spread."""
        pred = _predict(fx, lambda req, rng: "## 0.5 ##", k_samples=10)
        assert pred.mean == 0.5
        assert pred.std == 0.0
        assert pred.n_accepted == 10

    def test_alternating_responder(self, fx):
        """Test answers alternating by request index."""
        pred = _predict(
            fx,
            lambda req, rng: "## 0.4 ##" if req.request_index % 2 == 0 else "## 0.6 ##",
            k_samples=10,
        )
        assert pred.mean == pytest.approx(0.5)
        assert pred.std == pytest.approx(0.10540925533894598)

    def test_shuffle_reaches_prompt(self, fx):
        """Test permutations change an order-sensitive answer, identity order does not."""
        shuffled = _predict(fx, _identity_first, k_samples=20, shuffle=True)
        fixed = _predict(fx, _identity_first, k_samples=20, shuffle=False)
        assert fixed.samples == (1.0,) * 20
        assert fixed.std == 0.0
        assert 0.0 < shuffled.mean < 1.0

    def test_parallel_matches_serial(self, fx):
        """Test concurrency does not change the prediction."""
        responder = _identity_first
        conf = DiscSurrogateConfig(k_samples=10)
        serial = DiscriminativeSurrogate(_client(responder, 1), fx.model_card, fx.data_card, conf)
        parallel = DiscriminativeSurrogate(
            _client(responder, 4), fx.model_card, fx.data_card, conf
        )
        a = serial.predict(fx.query, fx.traj, np.random.default_rng(5))
        b = parallel.predict(fx.query, fx.traj, np.random.default_rng(5))
        assert a == b

    def test_invalid_answers_are_retried(self, fx):
        """Test unparseable first answers are asked again."""

        def responder(req, rng):
            return GARBAGE_ANSWER if req.request_index < 5 else "## 0.5 ##"

        pred = _predict(fx, responder, k_samples=10)
        assert pred.n_accepted == 10

    def test_too_few_answers(self, fx):
        """Test a failure when fewer than half the answers parse."""

        def responder(req, rng):
            return "## 0.5 ##" if req.request_index % 4 == 0 else GARBAGE_ANSWER

        with pytest.raises(SurrogateFailureError):
            _predict(fx, responder, k_samples=4, max_invalid_retries=0)

    def test_half_is_enough(self, fx):
        """Test exactly ceil(K/2) answers still predict."""

        def responder(req, rng):
            return "## 0.5 ##" if req.request_index % 2 == 0 else GARBAGE_ANSWER

        pred = _predict(fx, responder, k_samples=4, max_invalid_retries=0)
        assert pred.n_accepted == 2

    def test_empty_history(self, fx):
        """Test a prediction needs history."""
        with pytest.raises(InsufficientDataError):
            predict(
                fx.query,
                Trajectory(fx.space),
                DiscSurrogateConfig(),
                _client(lambda req, rng: "## 0.5 ##"),
                np.random.default_rng(0),
                fx.model_card,
                fx.data_card,
            )

    def test_config_validation(self):
        """Test invalid surrogate settings."""
        with pytest.raises(ValidationError):
            DiscSurrogateConfig(k_samples=1)
        with pytest.raises(ValidationError):
            DiscSurrogateConfig(ablation="none")


class TestAcquisition:
    """Test cases for acquisition and batch scoring."""

    def test_acquisition_is_ei_against_incumbent(self, fx):
        """Test the acquisition uses the best observed score."""
        surrogate = DiscriminativeSurrogate(
            _client(lambda req, rng: "## 0.5 ##"), fx.model_card, fx.data_card
        )
        value = surrogate.acquisition(fx.query, fx.traj, np.random.default_rng(0))
        assert value == pytest.approx(0.75 - 0.5)

    def test_score_batch_marks_failures(self, fx, caplog):
        """Test a candidate that cannot be scored gets None."""

        def responder(req, rng):
            if req.prompt.metadata["query"]["max_depth"] == 1.0:
                return GARBAGE_ANSWER
            return "## 0.5 ##"

        surrogate = DiscriminativeSurrogate(
            _client(responder),
            fx.model_card,
            fx.data_card,
            DiscSurrogateConfig(k_samples=2, max_invalid_retries=0),
        )
        bad = fx.space.make({"max_depth": 1, "max_features": 0.5})
        with caplog.at_level(logging.WARNING, logger="iclbo.base_surrogate"):
            scores = surrogate.score_batch([fx.query, bad], fx.traj, np.random.default_rng(0))
        assert scores[0] == pytest.approx(0.25)
        assert scores[1] is None
        assert "could not be scored" in caplog.text
