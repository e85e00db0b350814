"""
Base classes for acquisition scorers.

Every method the optimizer can drive (in-context LLM surrogates, GP, TPE)
implements Surrogate so candidate selection treats them uniformly.
"""

from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from .exceptions import InsufficientDataError, SurrogateFailureError, ValidationError
from .llm_client import LLMClient
from .prompts import DataCard, ModelCard, PromptBundle
from .search_space import Configuration
from .trajectory import Trajectory

logger = logging.getLogger("iclbo.base_surrogate")

T = TypeVar("T")


class Surrogate(ABC):
    """
    Abstract acquisition scorer.

    Subclasses return a larger-is-better acquisition value for a candidate
    and raise SurrogateFailureError when no value can be produced.
    """

    name: str = "surrogate"

    def prepare(self, traj: Trajectory, rng: np.random.Generator) -> None:
        """Called once per trial before any candidate is scored (fit models here)."""

    @abstractmethod
    def acquisition(
        self, cfg: Configuration, traj: Trajectory, rng: np.random.Generator
    ) -> float:
        """
        Acquisition value of one candidate.

        Raises:
            SurrogateFailureError: If the candidate cannot be scored
        """

    def score_batch(
        self, candidates: Sequence[Configuration], traj: Trajectory, rng: np.random.Generator
    ) -> List[Optional[float]]:
        """
        Score candidates in order; a failed candidate scores None.

        Args:
            candidates: Configurations to score
            traj: Current history
            rng: Generator for any randomness in scoring

        Returns:
            One score (or None) per candidate, in input order
        """
        self.prepare(traj, rng)
        scores: List[Optional[float]] = []
        for i, cfg in enumerate(candidates):
            try:
                scores.append(float(self.acquisition(cfg, traj, rng)))
            except SurrogateFailureError as e:
                logger.warning(f"{self.name}: candidate {i} could not be scored ({e})")
                scores.append(None)
        return scores


class InContextSurrogate(Surrogate):
    """
    Shared Monte-Carlo machinery of the LLM surrogates.

    Issues K single-completion requests (each with its own permutation of the
    history when shuffling), re-asks for unparseable answers a bounded number
    of times and keeps the parsed values in request order.
    """

    def __init__(
        self,
        client: LLMClient,
        model_card: Optional[ModelCard],
        data_card: Optional[DataCard],
        k_samples: int,
        shuffle: bool = True,
        ablation: str = "full",
        max_invalid_retries: int = 3,
    ) -> None:
        if k_samples < 2:
            raise ValidationError(f"k_samples must be >= 2, got {k_samples}")
        self.client = client
        self.model_card = model_card
        self.data_card = data_card
        self.k_samples = k_samples
        self.shuffle = shuffle
        self.ablation = ablation
        self.max_invalid_retries = max_invalid_retries

    @property
    def min_accepted(self) -> int:
        return int(math.ceil(self.k_samples / 2))

    def orders(self, n: int, rng: np.random.Generator) -> List[List[int]]:
        """One history order per sample: independent permutations, or identity."""
        if self.shuffle:
            return [rng.permutation(n).tolist() for _ in range(self.k_samples)]
        return [list(range(n)) for _ in range(self.k_samples)]

    def collect(
        self,
        traj: Trajectory,
        build: Callable[[List[int]], PromptBundle],
        parse: Callable[[str], Tuple[bool, Optional[T]]],
        rng: np.random.Generator,
    ) -> List[T]:
        """
        Gather up to K parsed answers.

        Args:
            traj: History (non-empty)
            build: Prompt builder taking a history order
            parse: Text -> (accepted, value)
            rng: Generator for the permutations

        Returns:
            Accepted values, ordered by sample index

        Raises:
            SurrogateFailureError: If fewer than ceil(K/2) answers were accepted
        """
        if len(traj) == 0:
            raise InsufficientDataError("Surrogate needs a non-empty history")
        prompts = [build(order) for order in self.orders(len(traj), rng)]
        values: List[Optional[T]] = [None] * self.k_samples
        pending = list(range(self.k_samples))

        for attempt in range(self.max_invalid_retries + 1):
            if not pending:
                break
            # fresh request indices per attempt so a seeded mock answers anew
            requests = [
                self.client.request(prompts[k], request_index=attempt * self.k_samples + k)
                for k in pending
            ]
            responses = self.client.complete_many(requests)
            still_pending = []
            for k, response in zip(pending, responses):
                ok, value = parse(response.texts[0])
                if ok:
                    values[k] = value
                else:
                    still_pending.append(k)
            if still_pending and attempt < self.max_invalid_retries:
                logger.debug(
                    f"{self.name}: {len(still_pending)} unparseable answers, re-asking"
                )
            pending = still_pending

        accepted = [v for v in values if v is not None]
        if len(accepted) < self.min_accepted:
            raise SurrogateFailureError(
                f"{self.name}: only {len(accepted)}/{self.k_samples} answers parsed "
                f"(need {self.min_accepted})"
            )
        return accepted
