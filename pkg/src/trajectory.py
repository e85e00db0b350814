"""
Optimization history: observed (configuration, score) pairs and the
statistics derived from them.

Scores are minimized throughout. The history is append-only; readers take
immutable snapshots.
"""

from __future__ import annotations

import json
import logging
import math
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np

from .exceptions import InsufficientDataError, MissingFileError, ValidationError
from .search_space import Configuration, SearchSpace

logger = logging.getLogger("iclbo.trajectory")


@dataclass(frozen=True)
class Observation:
    config: Configuration
    score: float
    trial_index: int

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValidationError(f"Observation score must be finite, got {self.score}")
        if self.trial_index < 0:
            raise ValidationError(f"trial_index must be >= 0, got {self.trial_index}")

    def to_record(self) -> Dict[str, Any]:
        return {"trial": self.trial_index, "config": self.config.to_dict(), "score": self.score}


class TrajectoryStats(NamedTuple):
    s_min: float
    s_max: float
    n: int


class LabeledObservation(NamedTuple):
    config: Configuration
    z: int


def quantile_threshold(scores: Sequence[float], gamma: float) -> float:
    """
    Lower empirical gamma-quantile: the score at index ceil(gamma * n) - 1 of
    the ascending sort. Always selects at least one score.
    """
    if not 0.0 < gamma < 1.0:
        raise ValidationError(f"gamma must be in (0, 1), got {gamma}")
    ordered = np.sort(np.asarray(scores, dtype=float))
    if ordered.size == 0:
        raise InsufficientDataError("Quantile of an empty score list")
    # tolerance keeps e.g. 0.15 * 100 = 15.000000000000002 at index 14
    k = max(int(math.ceil(gamma * ordered.size - 1e-9)) - 1, 0)
    return float(ordered[k])


class Trajectory:
    """
    Append-only sequence of observations over one search space.

    Trial indices are strictly increasing. A single writer appends; any number
    of readers work on snapshots, which never change.
    """

    def __init__(self, space: SearchSpace, observations: Sequence[Observation] = ()) -> None:
        self.space = space
        self._observations: List[Observation] = []
        self._lock = threading.Lock()
        for obs in observations:
            self._add(obs)

    def _add(self, obs: Observation) -> None:
        if self._observations and obs.trial_index <= self._observations[-1].trial_index:
            raise ValidationError(
                f"Trial indices must be strictly increasing: {obs.trial_index} after "
                f"{self._observations[-1].trial_index}"
            )
        # re-validate against the space; raises on bad keys or bounds
        config = self.space.make(obs.config)
        self._observations.append(Observation(config, float(obs.score), obs.trial_index))

    def append(
        self, config: Mapping[str, float], score: float, trial_index: Optional[int] = None
    ) -> Observation:
        """
        Record one evaluation.

        Args:
            config: Evaluated configuration
            score: Objective value (finite)
            trial_index: Explicit index; defaults to one past the last index

        Returns:
            The stored Observation

        Raises:
            ValidationError: On invalid config, non-finite score or non-increasing index
        """
        with self._lock:
            if trial_index is None:
                trial_index = self._observations[-1].trial_index + 1 if self._observations else 0
            obs = Observation(Configuration(config), float(score), trial_index)
            self._add(obs)
            return self._observations[-1]

    def snapshot(self) -> "Trajectory":
        with self._lock:
            return Trajectory(self.space, tuple(self._observations))

    @property
    def observations(self) -> tuple:
        return tuple(self._observations)

    @property
    def configs(self) -> List[Configuration]:
        return [obs.config for obs in self._observations]

    @property
    def scores(self) -> np.ndarray:
        return np.array([obs.score for obs in self._observations], dtype=float)

    def __len__(self) -> int:
        return len(self._observations)

    def __iter__(self) -> Iterator[Observation]:
        return iter(tuple(self._observations))

    def __getitem__(self, i: int) -> Observation:
        return self._observations[i]

    # --------------------------------------------------------------- statistics

    def stats(self) -> TrajectoryStats:
        """
        Best and worst observed scores.

        Raises:
            InsufficientDataError: On an empty trajectory
        """
        if not self._observations:
            raise InsufficientDataError("stats() needs at least one observation")
        scores = self.scores
        return TrajectoryStats(float(scores.min()), float(scores.max()), int(scores.size))

    def incumbent(self) -> Observation:
        """Observation with the lowest score (earliest on ties)."""
        if not self._observations:
            raise InsufficientDataError("incumbent() needs at least one observation")
        return self._observations[int(np.argmin(self.scores))]

    def threshold(self, gamma: float) -> float:
        return quantile_threshold(self.scores, gamma)

    def label_good_bad(self, gamma: float) -> List[LabeledObservation]:
        """
        Label each observation 1 when its score is within the best gamma
        quantile (ties with the threshold count as good), else 0.

        Raises:
            InsufficientDataError: With fewer than two observations
            ValidationError: If gamma is outside (0, 1)
        """
        if len(self._observations) < 2:
            raise InsufficientDataError(
                f"label_good_bad() needs at least 2 observations, got {len(self._observations)}"
            )
        tau = self.threshold(gamma)
        return [
            LabeledObservation(obs.config, int(obs.score <= tau)) for obs in self._observations
        ]

    def target_value(self, alpha: float) -> float:
        """
        Conditioning target for candidate sampling:
        s' = s_min - alpha * (s_max - s_min).

        Negative alpha moves the target into the observed range, positive alpha
        asks for improvement beyond the incumbent.
        """
        if alpha < -1.0:
            raise ValidationError(f"alpha must be >= -1, got {alpha}")
        s_min, s_max, _ = self.stats()
        return s_min - alpha * (s_max - s_min)

    # -------------------------------------------------------------------- JSONL

    def to_jsonl(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            for obs in self._observations:
                f.write(json.dumps(obs.to_record(), sort_keys=True) + "\n")

    @classmethod
    def from_jsonl(cls, path: Union[str, Path], space: SearchSpace) -> "Trajectory":
        """
        Read a trajectory from JSONL records carrying "trial", "config" and "score".

        Extra fields (run-log lines carry more) are ignored.

        Raises:
            MissingFileError: If the file does not exist
            ValidationError: On a malformed line
        """
        path = Path(path)
        if not path.is_file():
            raise MissingFileError(f"Trajectory file does not exist: {path}")
        traj = cls(space)
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    traj.append(record["config"], record["score"], int(record["trial"]))
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise ValidationError(f"{path}:{line_no}: malformed trajectory line") from e
        logger.debug(f"Loaded {len(traj)} observations from {path}")
        return traj
