"""
Candidate sampler: asks the LLM for configurations expected to reach a
target score s' derived from the history, then filters them.

Each of the M candidates is a separate single-completion request. Answers
are validated against the search space, clamped and de-duplicated against
the history and each other; unfilled slots are re-requested for a bounded
number of rounds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .base_surrogate import Surrogate
from .config import ABLATIONS
from .constants import DEFAULT_ALPHA, DEFAULT_M_CANDIDATES, DEFAULT_MAX_RETRY_ROUNDS
from .exceptions import InsufficientDataError, SamplerFailureError, ValidationError
from .llm_client import LLMClient, parse_configurations
from .prompts import DataCard, ModelCard, build_prompt
from .search_space import Configuration, SearchSpace
from .trajectory import Trajectory

logger = logging.getLogger("iclbo.sampler")


@dataclass(frozen=True)
class SamplerConfig:
    m_candidates: int = DEFAULT_M_CANDIDATES
    alpha: float = DEFAULT_ALPHA
    ablation: str = "full"
    max_retry_rounds: int = DEFAULT_MAX_RETRY_ROUNDS
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.m_candidates < 1:
            raise ValidationError(f"m_candidates must be >= 1, got {self.m_candidates}")
        if self.max_retry_rounds < 0:
            raise ValidationError(f"max_retry_rounds must be >= 0, got {self.max_retry_rounds}")
        if self.alpha < -1.0:
            raise ValidationError(f"alpha must be >= -1, got {self.alpha}")
        if self.ablation not in ABLATIONS:
            raise ValidationError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")


@dataclass(frozen=True)
class CandidateSet:
    """
    Proposals for one trial.

    ``attempted`` counts every configuration the sampler tried to read;
    ``len(candidates) + len(rejected) == attempted`` always holds.
    """

    candidates: Tuple[Configuration, ...]
    acceptance_rate: float
    rejected: Tuple[Tuple[str, str], ...] = ()
    attempted: int = 0
    target: Optional[float] = None
    clamped: Tuple[str, ...] = ()
    scores: Tuple[float, ...] = field(default=())

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)


def propose(
    traj: Trajectory,
    conf: SamplerConfig,
    client: LLMClient,
    rng: np.random.Generator,
    model_card: Optional[ModelCard] = None,
    data_card: Optional[DataCard] = None,
) -> CandidateSet:
    """
    Sample candidates conditioned on the target value s' = target_value(alpha).

    Args:
        traj: Non-empty history
        conf: Sampler settings
        client: LLM client
        rng: Generator for the history permutations
        model_card: Model description (ranges are always shown)
        data_card: Dataset description, unless the ablation drops it

    Returns:
        CandidateSet with up to M accepted candidates

    Raises:
        InsufficientDataError: On an empty history
        SamplerFailureError: If no candidate was accepted after all rounds
    """
    if len(traj) == 0:
        raise InsufficientDataError("Sampler needs a non-empty history")

    m = conf.m_candidates
    target = traj.target_value(conf.alpha)
    known = traj.configs
    accepted: List[Configuration] = []
    rejected: List[Tuple[str, str]] = []
    clamped: List[str] = []
    attempted = 0

    for round_index in range(conf.max_retry_rounds + 1):
        need = m - len(accepted)
        if need <= 0:
            break
        if round_index > 0:
            logger.debug(f"Sampler round {round_index}: requesting {need} more candidates")
        prompts = []
        for _ in range(need):
            order = rng.permutation(len(traj)).tolist() if conf.shuffle else None
            prompts.append(
                build_prompt(
                    "sampler",
                    model_card,
                    data_card,
                    traj,
                    {"target": target},
                    ablation=conf.ablation,
                    order=order,
                )
            )
        requests = [
            client.request(prompt, request_index=round_index * m + i)
            for i, prompt in enumerate(prompts)
        ]
        responses = client.complete_many(requests)

        for prompt, response in zip(prompts, responses):
            parsed = parse_configurations(
                response.texts[0],
                traj.space,
                existing=list(known) + accepted,
                aliases=prompt.aliases,
            )
            attempted += parsed.attempted
            rejected.extend(parsed.rejected)
            clamped.extend(parsed.clamped)
            for cfg in parsed.configs:
                if len(accepted) < m:
                    accepted.append(cfg)
                else:
                    rejected.append((str(cfg.to_dict()), "surplus"))

    if not accepted:
        raise SamplerFailureError(
            f"No valid candidate after {conf.max_retry_rounds + 1} rounds "
            f"({attempted} attempted, target {target:g})"
        )

    rate = len(accepted) / attempted if attempted else 0.0
    logger.debug(
        f"Sampler accepted {len(accepted)}/{attempted} (target {target:g}): "
        f"{[cfg.to_dict() for cfg in accepted]}"
    )
    return CandidateSet(
        candidates=tuple(accepted),
        acceptance_rate=rate,
        rejected=tuple(rejected),
        attempted=attempted,
        target=target,
        clamped=tuple(clamped),
    )


def random_candidates(
    space: SearchSpace,
    m: int,
    rng: np.random.Generator,
    existing: Sequence[Configuration] = (),
) -> CandidateSet:
    """Uniform proposals in the unit cube; used when the sampler fails."""
    seen = set(existing)
    candidates: List[Configuration] = []
    attempted = 0
    # integer dims can collide; bound the number of draws
    while len(candidates) < m and attempted < 20 * m:
        attempted += 1
        cfg = space.from_unit(rng.random(space.d))
        if cfg in seen:
            continue
        seen.add(cfg)
        candidates.append(cfg)
    rejected = tuple(("", "duplicate") for _ in range(attempted - len(candidates)))
    return CandidateSet(
        candidates=tuple(candidates),
        acceptance_rate=len(candidates) / attempted if attempted else 0.0,
        rejected=rejected,
        attempted=attempted,
    )


def score_and_select(
    cands: CandidateSet,
    surrogate: Surrogate,
    traj: Trajectory,
    rng: np.random.Generator,
) -> Tuple[int, List[Optional[float]]]:
    """
    Score every candidate and pick the best.

    Returns:
        (index of the chosen candidate, per-candidate scores with None for failures)

    Raises:
        ValidationError: On an empty candidate set
    """
    if len(cands) == 0:
        raise ValidationError("select_next needs at least one candidate")
    scores = surrogate.score_batch(list(cands.candidates), traj, rng)
    values = np.array(
        [s if s is not None and np.isfinite(s) else -np.inf for s in scores], dtype=float
    )
    valid = np.isfinite(values)
    if not valid.any():
        index = int(rng.integers(len(cands)))
        logger.warning(
            f"{surrogate.name}: all {len(cands)} candidates failed to score, "
            f"choosing candidate {index} at random"
        )
        return index, scores
    # np.argmax returns the first maximum, so ties go to the lowest index
    return int(np.argmax(values)), scores


def select_next(
    cands: CandidateSet,
    surrogate: Surrogate,
    traj: Trajectory,
    rng: np.random.Generator,
) -> Configuration:
    """Candidate with the highest acquisition value."""
    index, _ = score_and_select(cands, surrogate, traj, rng)
    return cands.candidates[index]
