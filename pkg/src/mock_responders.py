"""
Responders for the mock LLM backend.

A responder maps (request, seeded generator) to a completion text. The
default one answers every prompt purpose with well-formed random content;
the oracle responders answer from a hidden known signal so the optimizer
loop can be checked end to end without a real model.
"""

from __future__ import annotations

import threading
from typing import Any, Callable, Dict, List, Mapping, Optional

import numpy as np

from .exceptions import ValidationError
from .search_space import Configuration, SearchSpace
from .utils import format_number

GARBAGE_ANSWER = "I am not able to answer that reliably."


def _space(metadata: Mapping[str, Any]) -> SearchSpace:
    return SearchSpace.from_dict(metadata["space"])


def _displayed(metadata: Mapping[str, Any]) -> Dict[str, str]:
    """Real name -> name shown in the prompt."""
    return {real: shown for shown, real in metadata.get("aliases", {}).items()}


def render_span(cfg: Mapping[str, float], displayed: Optional[Mapping[str, str]] = None) -> str:
    displayed = displayed or {}
    body = ", ".join(f"{displayed.get(k, k)}: {format_number(v)}" for k, v in cfg.items())
    return f"## {body} ##"


def render_dicts(
    configs: List[Mapping[str, float]], displayed: Optional[Mapping[str, str]] = None
) -> str:
    displayed = displayed or {}
    items = []
    for cfg in configs:
        body = ", ".join(f"'{displayed.get(k, k)}': {format_number(v)}" for k, v in cfg.items())
        items.append("{" + body + "}")
    return "[" + ", ".join(items) + "]"


def _random_config(space: SearchSpace, rng: np.random.Generator) -> Configuration:
    return space.from_unit(rng.random(space.d))


def default_responder(req: Any, rng: np.random.Generator) -> str:
    """Well-formed random answer for any prompt purpose."""
    prompt = req.prompt
    meta = prompt.metadata
    if prompt.purpose == "disc_sm":
        low, high = meta.get("s_min", 0.0), meta.get("s_max", 1.0)
        return f"## {format_number(rng.uniform(low, high) if high > low else low)} ##"
    if prompt.purpose == "gen_sm":
        return f"## {int(rng.integers(0, 2))} ##"
    space = _space(meta)
    if prompt.purpose == "sampler":
        return render_span(_random_config(space, rng), _displayed(meta))
    n = int(meta.get("n_recommendations", 1))
    return render_dicts([_random_config(space, rng) for _ in range(n)], _displayed(meta))


class OracleResponder:
    """
    Answers from a hidden quadratic bowl centred at ``center``.

    - disc_sm: a score that decreases towards the centre and never exceeds
      the observed best, so the expected improvement ranks queries by their
      distance to the centre.
    - gen_sm: label 1 inside ``radius`` (unit-cube distance), else 0.
    - sampler: the incumbent perturbed by Gaussian noise of ``scale`` in the
      unit cube.
    - warmstart: random configurations.
    """

    def __init__(
        self,
        center: Mapping[str, float],
        radius: float = 0.25,
        scale: float = 0.1,
        noise: float = 0.0,
    ) -> None:
        self.center = dict(center)
        self.radius = radius
        self.scale = scale
        self.noise = noise

    def distance_sq(self, space: SearchSpace, cfg: Mapping[str, float]) -> float:
        """Mean squared unit-cube distance to the centre, in [0, 1]."""
        diff = space.to_unit(cfg) - space.to_unit(self.center)
        return float(np.mean(diff**2))

    def __call__(self, req: Any, rng: np.random.Generator) -> str:
        prompt = req.prompt
        meta = prompt.metadata
        space = _space(meta)
        if prompt.purpose == "disc_sm":
            s_min, s_max = meta["s_min"], meta["s_max"]
            spread = (s_max - s_min) + 1.0
            value = s_min - spread * (1.0 - self.distance_sq(space, meta["query"]))
            if self.noise > 0:
                value += self.noise * rng.standard_normal()
            return f"## {format_number(value)} ##"
        if prompt.purpose == "gen_sm":
            inside = self.distance_sq(space, meta["query"]) <= self.radius**2
            return f"## {int(inside)} ##"
        if prompt.purpose == "sampler":
            u = space.to_unit(meta["incumbent"]) + self.scale * rng.standard_normal(space.d)
            cfg = space.from_unit(np.clip(u, 0.0, 1.0))
            return render_span(cfg, _displayed(meta))
        return default_responder(req, rng)


class ThresholdClassifier:
    """Generative-surrogate answers: 1 when ``query[name] <= threshold``."""

    def __init__(self, name: str, threshold: float) -> None:
        self.name = name
        self.threshold = threshold

    def __call__(self, req: Any, rng: np.random.Generator) -> str:
        query = req.prompt.metadata["query"]
        return f"## {int(query[self.name] <= self.threshold)} ##"


class FlakyResponder:
    """
    Wraps a responder and replaces a fixed share of answers with garbage.

    Call i is garbage when floor((i + 1) * rate) > floor(i * rate), so after
    N calls exactly floor(N * rate) answers were garbage regardless of which
    thread made them.
    """

    def __init__(self, inner: Callable[[Any, np.random.Generator], str], rate: float) -> None:
        if not 0.0 <= rate <= 1.0:
            raise ValidationError(f"rate must be in [0, 1], got {rate}")
        self.inner = inner
        self.rate = rate
        self.calls = 0
        self._lock = threading.Lock()

    def __call__(self, req: Any, rng: np.random.Generator) -> str:
        with self._lock:
            i = self.calls
            self.calls += 1
        if np.floor((i + 1) * self.rate) > np.floor(i * self.rate):
            return GARBAGE_ANSWER
        return self.inner(req, rng)
