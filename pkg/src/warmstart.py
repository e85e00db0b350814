"""
Zero-shot warmstarting: one request asks the LLM for a list of initial
configurations, with no, partial or full dataset context.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .config import ABLATIONS, WARMSTART_CONTEXTS
from .constants import DEFAULT_N_INIT
from .exceptions import ValidationError
from .llm_client import LLMClient, parse_configurations
from .prompts import DataCard, ModelCard, build_prompt
from .search_space import Configuration, SearchSpace, unit_design

logger = logging.getLogger("iclbo.warmstart")

_FILL_ROUNDS = 10


@dataclass(frozen=True)
class WarmstartConfig:
    context: str = "none"
    n_points: int = DEFAULT_N_INIT
    ablation: str = "full"

    def __post_init__(self) -> None:
        if self.context not in WARMSTART_CONTEXTS:
            raise ValidationError(
                f"context must be one of {WARMSTART_CONTEXTS}, got {self.context!r}"
            )
        if self.n_points < 1:
            raise ValidationError(f"n_points must be >= 1, got {self.n_points}")
        if self.ablation not in ABLATIONS:
            raise ValidationError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")


def sobol_fill(
    space: SearchSpace,
    n: int,
    rng: np.random.Generator,
    existing: List[Configuration],
) -> List[Configuration]:
    """
    Draw n scrambled-Sobol configurations distinct from ``existing`` and each other.

    Spaces too small to hold n distinct new points get duplicates after a
    bounded number of draws.
    """
    seen = set(existing)
    fill: List[Configuration] = []
    for _ in range(_FILL_ROUNDS):
        if len(fill) >= n:
            break
        for row in unit_design(space.d, 2 * (n - len(fill)), "sobol", rng):
            cfg = space.from_unit(row)
            if cfg not in seen:
                seen.add(cfg)
                fill.append(cfg)
                if len(fill) == n:
                    break
    if len(fill) < n:
        logger.warning(f"Only {len(fill)} distinct fill points found, repeating to reach {n}")
        rows = unit_design(space.d, n - len(fill), "random", rng)
        fill.extend(space.from_unit(row) for row in rows)
    return fill


def warmstart(
    space: SearchSpace,
    model_card: ModelCard,
    data_card: Optional[DataCard],
    conf: WarmstartConfig,
    client: LLMClient,
    rng: np.random.Generator,
) -> List[Configuration]:
    """
    Initial configurations suggested zero-shot by the LLM.

    Args:
        space: Search space
        model_card: Model description
        data_card: Dataset description (ignored for context "none"; "full"
            also needs its statistical block)
        conf: Context level and number of points
        client: LLM client
        rng: Generator for the Sobol fill

    Returns:
        Exactly conf.n_points configurations; an unparseable answer falls back
        to an all-Sobol design

    Raises:
        TemplateError: If the context level needs data-card fields that are missing
    """
    prompt = build_prompt(
        "warmstart",
        model_card,
        None if conf.context == "none" else data_card,
        None,
        {"context": conf.context, "n_recommendations": conf.n_points, "space": space},
        ablation=conf.ablation,
    )
    response = client.complete(client.request(prompt, request_index=0))
    parsed = parse_configurations(response.texts[0], space, aliases=prompt.aliases)

    if not parsed.accepted:
        logger.warning(
            f"Warmstart answer unparseable ({parsed.reject_reason}), "
            f"using {conf.n_points} Sobol points instead"
        )
        return sobol_fill(space, conf.n_points, rng, [])

    configs = list(parsed.configs[: conf.n_points])
    if parsed.clamped:
        logger.debug(f"Warmstart clamped values for {sorted(set(parsed.clamped))}")
    shortfall = conf.n_points - len(configs)
    if shortfall > 0:
        logger.info(
            f"Warmstart returned {len(configs)}/{conf.n_points} usable configurations, "
            f"filling {shortfall} with Sobol points"
        )
        configs.extend(sobol_fill(space, shortfall, rng, configs))
    return configs
