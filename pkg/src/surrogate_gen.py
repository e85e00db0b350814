"""
Generative in-context surrogate: the LLM classifies whether a query lands
in the best gamma share of configurations, and the mean label estimates
p(s <= tau | h).

Scoring by that probability is equivalent to expected improvement under the
TPE density-ratio model, (gamma + (1 - gamma) * g(h) / l(h))^-1, which
ei_from_density_ratio computes directly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Mapping, Optional, Tuple

import numpy as np

from .base_surrogate import InContextSurrogate
from .config import ABLATIONS
from .constants import DEFAULT_GAMMA, DEFAULT_K_SAMPLES, DEFAULT_MAX_INVALID_RETRIES
from .exceptions import InsufficientDataError, ValidationError
from .llm_client import LLMClient, parse_classification
from .prompts import DataCard, ModelCard, build_prompt
from .search_space import Configuration
from .trajectory import Trajectory

logger = logging.getLogger("iclbo.surrogate_gen")


@dataclass(frozen=True)
class GenSurrogateConfig:
    gamma: float = DEFAULT_GAMMA
    k_samples: int = DEFAULT_K_SAMPLES
    ablation: str = "full"
    shuffle: bool = True
    max_invalid_retries: int = DEFAULT_MAX_INVALID_RETRIES

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ValidationError(f"gamma must be in (0, 1), got {self.gamma}")
        if self.k_samples < 2:
            raise ValidationError(f"k_samples must be >= 2, got {self.k_samples}")
        if self.ablation not in ABLATIONS:
            raise ValidationError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")


@dataclass(frozen=True)
class GenScore:
    p_good: float
    n_accepted: int
    labels: Tuple[int, ...] = ()


def ei_from_density_ratio(l_over_g: float, gamma: float) -> float:
    """
    (gamma + (1 - gamma) / r)^-1 for r = l(h) / g(h).

    Tends to 1 / gamma as r grows; equals 1 at r = 1.
    """
    if not 0.0 < gamma < 1.0:
        raise ValidationError(f"gamma must be in (0, 1), got {gamma}")
    if not l_over_g > 0:
        raise ValidationError(f"density ratio must be > 0, got {l_over_g}")
    if math.isinf(l_over_g):
        return 1.0 / gamma
    return 1.0 / (gamma + (1.0 - gamma) / l_over_g)


class GenerativeSurrogate(InContextSurrogate):
    """p(s <= tau | h) from K in-context classifications; acquisition is p_good."""

    name = "llambo_gen"

    def __init__(
        self,
        client: LLMClient,
        model_card: Optional[ModelCard],
        data_card: Optional[DataCard],
        conf: GenSurrogateConfig = GenSurrogateConfig(),
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

    def score(
        self, cfg: Mapping[str, float], traj: Trajectory, rng: np.random.Generator
    ) -> GenScore:
        """
        Estimate the probability that ``cfg`` is among the best gamma share.

        Raises:
            InsufficientDataError: With fewer than two observations
            SurrogateFailureError: If fewer than ceil(K/2) labels parsed
        """
        if len(traj) < 2:
            raise InsufficientDataError("Generative surrogate needs at least 2 observations")

        def build(order: List[int]):
            return build_prompt(
                "gen_sm",
                self.model_card,
                self.data_card,
                traj,
                {"query": cfg, "gamma": self.conf.gamma},
                ablation=self.ablation,
                order=order,
            )

        def parse(text: str):
            parsed = parse_classification(text)
            return parsed.accepted, parsed.label

        labels = self.collect(traj, build, parse, rng)
        return GenScore(float(np.mean(labels)), len(labels), tuple(int(z) for z in labels))

    def acquisition(self, cfg: Configuration, traj: Trajectory, rng: np.random.Generator) -> float:
        return self.score(cfg, traj, rng).p_good


def score(
    cfg: Mapping[str, float],
    traj: Trajectory,
    conf: GenSurrogateConfig,
    client: LLMClient,
    rng: np.random.Generator,
    model_card: Optional[ModelCard] = None,
    data_card: Optional[DataCard] = None,
) -> GenScore:
    return GenerativeSurrogate(client, model_card, data_card, conf).score(cfg, traj, rng)
