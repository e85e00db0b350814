"""
Discriminative in-context surrogate: the LLM predicts a score for a query
configuration from the serialized history, K times, and the empirical
moments of those predictions feed expected improvement.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from .base_surrogate import InContextSurrogate
from .config import ABLATIONS, EI_MODES
from .constants import DEFAULT_K_SAMPLES, DEFAULT_MAX_INVALID_RETRIES
from .exceptions import ValidationError
from .llm_client import LLMClient, parse_performance
from .prompts import DataCard, ModelCard, build_prompt
from .search_space import Configuration
from .trajectory import Trajectory

logger = logging.getLogger("iclbo.surrogate_disc")


@dataclass(frozen=True)
class DiscSurrogateConfig:
    k_samples: int = DEFAULT_K_SAMPLES
    shuffle: bool = True  # False: plain Monte-Carlo sampling over a fixed prompt
    ablation: str = "full"
    max_invalid_retries: int = DEFAULT_MAX_INVALID_RETRIES
    ei_mode: str = "gaussian"

    def __post_init__(self) -> None:
        if self.k_samples < 2:
            raise ValidationError(f"k_samples must be >= 2, got {self.k_samples}")
        if self.ablation not in ABLATIONS:
            raise ValidationError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")
        if self.ei_mode not in EI_MODES:
            raise ValidationError(f"ei_mode must be one of {EI_MODES}, got {self.ei_mode!r}")


@dataclass(frozen=True)
class SurrogatePrediction:
    mean: float
    std: float
    samples: Tuple[float, ...]
    n_accepted: int

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> "SurrogatePrediction":
        """Empirical mean and sample standard deviation (0 for a single sample)."""
        values = np.asarray(samples, dtype=float)
        if values.size == 0:
            raise ValidationError("Prediction needs at least one sample")
        std = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
        return cls(float(np.mean(values)), std, tuple(values.tolist()), int(values.size))


def expected_improvement(
    pred: SurrogatePrediction, s_best: float, mode: str = "gaussian"
) -> float:
    """
    Expected improvement below s_best (minimization).

    gaussian: closed form over the prediction's mean and std,
        (s_best - mean) * Phi(z) + std * phi(z) with z = (s_best - mean) / std,
        and max(s_best - mean, 0) when std is 0.
    empirical: average of max(s_best - sample, 0) over the raw samples.

    Returns:
        EI, never negative
    """
    if mode == "empirical":
        samples = np.asarray(pred.samples, dtype=float)
        return float(np.mean(np.maximum(s_best - samples, 0.0)))
    if mode != "gaussian":
        raise ValidationError(f"EI mode must be one of {EI_MODES}, got {mode!r}")
    improvement = s_best - pred.mean
    if pred.std <= 0.0:
        return max(improvement, 0.0)
    z = improvement / pred.std
    ei = improvement * norm.cdf(z) + pred.std * norm.pdf(z)
    return float(max(ei, 0.0))


class DiscriminativeSurrogate(InContextSurrogate):
    """p(s | h) from K in-context predictions; acquisition is EI against the incumbent."""

    name = "llambo_disc"

    def __init__(
        self,
        client: LLMClient,
        model_card: Optional[ModelCard],
        data_card: Optional[DataCard],
        conf: DiscSurrogateConfig = DiscSurrogateConfig(),
    ) -> None:
        super().__init__(
            client,
            model_card,
            data_card,
            k_samples=conf.k_samples,
            shuffle=conf.shuffle,
            ablation=conf.ablation,
            max_invalid_retries=conf.max_invalid_retries,
        )
        self.conf = conf

    def predict(
        self, cfg: Mapping[str, float], traj: Trajectory, rng: np.random.Generator
    ) -> SurrogatePrediction:
        """
        Predict the score of ``cfg``.

        Raises:
            SurrogateFailureError: If fewer than ceil(K/2) predictions parsed
        """

        def build(order: List[int]):
            return build_prompt(
                "disc_sm",
                self.model_card,
                self.data_card,
                traj,
                {"query": cfg},
                ablation=self.ablation,
                order=order,
            )

        def parse(text: str):
            parsed = parse_performance(text)
            return parsed.accepted, parsed.scalar

        samples = self.collect(traj, build, parse, rng)
        return SurrogatePrediction.from_samples(samples)

    def acquisition(self, cfg: Configuration, traj: Trajectory, rng: np.random.Generator) -> float:
        pred = self.predict(cfg, traj, rng)
        return expected_improvement(pred, traj.stats().s_min, self.conf.ei_mode)


def predict(
    cfg: Mapping[str, float],
    traj: Trajectory,
    conf: DiscSurrogateConfig,
    client: LLMClient,
    rng: np.random.Generator,
    model_card: Optional[ModelCard] = None,
    data_card: Optional[DataCard] = None,
) -> SurrogatePrediction:
    return DiscriminativeSurrogate(client, model_card, data_card, conf).predict(cfg, traj, rng)
