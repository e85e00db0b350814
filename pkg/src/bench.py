"""
Experiment runner: one seeded optimization run per RunSpec, logged as JSONL,
plus aggregation of run logs into normalized-regret tables.

All randomness of a run comes from the spec's seed through named substreams
(init, shuffle, sampler, kde, fallback), so each component's randomness can
be pinned on its own.
"""

from __future__ import annotations

import glob
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd
import regex

from .baselines import GpSurrogate, TpeSurrogate
from .base_surrogate import Surrogate
from .config import EngineSettings, _check_keys
from .constants import DEFAULT_N_INIT, DEFAULT_N_TRIALS, TPE_MIN_OBSERVATIONS
from .exceptions import (
    ConfigurationError,
    FitError,
    InsufficientDataError,
    MissingFileError,
    SamplerFailureError,
    ValidationError,
)
from .llm_client import LLMClient
from .metrics import TaskBounds, normalized_regret
from .objectives import Objective, ObjectiveRegistry, registry as default_registry
from .progress import TrialProgress
from .sampler import CandidateSet, SamplerConfig, propose, random_candidates, score_and_select
from .search_space import INIT_METHODS, Configuration
from .surrogate_disc import DiscriminativeSurrogate, DiscSurrogateConfig
from .surrogate_gen import GenerativeSurrogate, GenSurrogateConfig
from .trajectory import Trajectory
from .utils import substream
from .warmstart import WarmstartConfig, warmstart

logger = logging.getLogger("iclbo.bench")

METHODS = ("llambo_disc", "llambo_gen", "tpe_ind", "tpe_multi", "gp", "random")
LLM_METHODS = ("llambo_disc", "llambo_gen")
INIT_MODES = ("random_shared", "warmstart")
LOG_FIELDS = (
    "task",
    "method",
    "seed",
    "trial",
    "config",
    "score",
    "best_so_far",
    "candidate_count",
    "acceptance_rate",
    "wallclock_ms",
)


@dataclass
class RunSpec:
    """One seeded search: objective, method and protocol."""

    objective: str
    method: str
    n_init: int = DEFAULT_N_INIT
    n_trials: int = DEFAULT_N_TRIALS
    seed: int = 0
    init_mode: str = "random_shared"
    init_sampler: str = "random"
    engine: EngineSettings = field(default_factory=EngineSettings)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunSpec":
        """
        Raises:
            ValidationError: On unknown or invalid fields (the message names the field)
        """
        if not isinstance(data, Mapping):
            raise ValidationError("Run spec must be a JSON object")
        _check_keys(cls, data, "spec")
        for key in ("objective", "method"):
            if key not in data:
                raise ValidationError(f"spec: missing field '{key}'")
        values = dict(data)
        values["engine"] = EngineSettings.from_dict(values.get("engine") or {})
        spec = cls(**values)
        spec.validate()
        return spec

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "RunSpec":
        path = Path(path)
        if not path.is_file():
            raise MissingFileError(f"Run spec file does not exist: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ValidationError(f"Run spec {path} is not valid JSON: {e}") from e
        return cls.from_dict(data)

    def validate(self) -> None:
        if not isinstance(self.objective, str) or not self.objective:
            raise ValidationError("objective: must be a non-empty string")
        if self.method not in METHODS:
            raise ValidationError(f"method: must be one of {METHODS}, got {self.method!r}")
        if self.init_mode not in INIT_MODES:
            raise ValidationError(
                f"init_mode: must be one of {INIT_MODES}, got {self.init_mode!r}"
            )
        if self.init_sampler not in INIT_METHODS:
            raise ValidationError(
                f"init_sampler: must be one of {INIT_METHODS}, got {self.init_sampler!r}"
            )
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise ValidationError(f"seed: must be an integer, got {self.seed!r}")
        for key in ("n_init", "n_trials"):
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"{key}: must be an integer, got {value!r}")
        if self.n_init < 1:
            raise ValidationError(f"n_init: must be >= 1, got {self.n_init}")
        if self.n_trials < self.n_init:
            raise ValidationError(
                f"n_trials: must be >= n_init ({self.n_init}), got {self.n_trials}"
            )
        if self.method == "llambo_gen" and self.n_init < 2:
            raise ValidationError("n_init: llambo_gen needs at least 2 initial points")
        self.engine.validate()

    @property
    def needs_client(self) -> bool:
        return self.method in LLM_METHODS or self.init_mode == "warmstart"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RunResult:
    spec: RunSpec
    objective: Objective
    trajectory: Trajectory
    records: List[Dict[str, Any]]
    log_path: Optional[Path] = None

    @property
    def best_score(self) -> float:
        return self.trajectory.stats().s_min

    @property
    def final_regret(self) -> float:
        return normalized_regret(self.trajectory, self.objective.bounds)[-1]


def log_filename(spec: RunSpec) -> str:
    task = regex.sub(r"[^\w.-]+", "_", spec.objective).strip("_")
    return f"{task}__{spec.method}__seed{spec.seed}.jsonl"


def _effective_ablation(ablation: str, objective: Objective) -> str:
    if objective.data_card is not None or ablation in ("no_context", "uninformative"):
        return ablation
    if ablation == "full":
        logger.info(f"{objective.name} has no data card, prompting without dataset context")
        return "no_context"
    raise ValidationError(
        f"engine.ablation: {ablation} needs an objective with a data card ({objective.name})"
    )


class _Loop:
    """Per-run state: the objective, the method's components and their substreams."""

    def __init__(self, spec: RunSpec, objective: Objective, client: Optional[LLMClient]) -> None:
        self.spec = spec
        self.objective = objective
        self.client = client
        self.engine = spec.engine
        seed = spec.seed
        self.rng_init = substream(seed, "init")
        self.rng_shuffle = substream(seed, "shuffle")
        self.rng_sampler = substream(seed, "sampler")
        self.rng_kde = substream(seed, "kde")
        self.rng_fallback = substream(seed, "fallback")

        self.surrogate: Optional[Surrogate] = None
        self.ablation = self.engine.ablation
        if spec.method in LLM_METHODS:
            if objective.model_card is None:
                raise ValidationError(f"objective: {objective.name} has no model card for prompts")
            self.ablation = _effective_ablation(self.engine.ablation, objective)
            if spec.method == "llambo_disc":
                conf = DiscSurrogateConfig(
                    k_samples=self.engine.k_samples,
                    shuffle=self.engine.shuffle,
                    ablation=self.ablation,
                    max_invalid_retries=self.engine.max_invalid_retries,
                    ei_mode=self.engine.ei_mode,
                )
                self.surrogate = DiscriminativeSurrogate(
                    client, objective.model_card, objective.data_card, conf
                )
            else:
                conf = GenSurrogateConfig(
                    gamma=self.engine.gamma,
                    k_samples=self.engine.k_samples,
                    ablation=self.ablation,
                    shuffle=self.engine.shuffle,
                    max_invalid_retries=self.engine.max_invalid_retries,
                )
                self.surrogate = GenerativeSurrogate(
                    client, objective.model_card, objective.data_card, conf
                )
            self.sampler_conf = SamplerConfig(
                m_candidates=self.engine.m_candidates,
                alpha=self.engine.alpha,
                ablation=self.ablation,
                max_retry_rounds=self.engine.max_retry_rounds,
                shuffle=self.engine.shuffle,
            )
        elif spec.method in ("tpe_ind", "tpe_multi"):
            kind = "independent" if spec.method == "tpe_ind" else "multivariate"
            self.surrogate = TpeSurrogate(self.engine.gamma, kind)
        elif spec.method == "gp":
            self.surrogate = GpSurrogate()

    # ----------------------------------------------------------------- init

    def initial_design(self) -> List[Configuration]:
        spec = self.spec
        space = self.objective.space
        if spec.init_mode == "random_shared":
            return space.sample_init(spec.n_init, spec.init_sampler, seed=spec.seed)
        if self.objective.model_card is None:
            raise ValidationError(
                f"objective: {self.objective.name} has no model card for warmstart"
            )
        context = self.engine.warmstart_context
        if context != "none" and self.objective.data_card is None:
            raise ValidationError(
                f"engine.warmstart_context: '{context}' needs an objective with a data card"
            )
        ablation = self.ablation if self.ablation != "no_instructions" else "full"
        conf = WarmstartConfig(context=context, n_points=spec.n_init, ablation=ablation)
        return warmstart(
            space,
            self.objective.model_card,
            self.objective.data_card,
            conf,
            self.client,
            self.rng_init,
        )

    # ---------------------------------------------------------------- trial

    def _random_pick(self, traj: Trajectory, m: int, rng: np.random.Generator) -> CandidateSet:
        return random_candidates(self.objective.space, m, rng, traj.configs)

    def next_config(self, traj: Trajectory) -> Tuple[Configuration, CandidateSet]:
        """Choose the next configuration; returns it with the candidate set it came from."""
        method = self.spec.method
        space = self.objective.space

        if method == "random":
            cands = self._random_pick(traj, 1, self.rng_sampler)
            return cands.candidates[0], cands

        if method in ("tpe_ind", "tpe_multi"):
            if len(traj) < TPE_MIN_OBSERVATIONS:
                logger.info(
                    f"{method}: {len(traj)} observations, below {TPE_MIN_OBSERVATIONS}; "
                    "sampling at random"
                )
                cands = self._random_pick(traj, 1, self.rng_fallback)
                return cands.candidates[0], cands
            cands = self.surrogate.propose(traj, self.engine.tpe_candidates, self.rng_kde)
            return cands.candidates[0], cands

        if method == "gp":
            cands = random_candidates(
                space, self.engine.gp_candidates, self.rng_sampler, traj.configs
            )
            try:
                index, _ = score_and_select(cands, self.surrogate, traj, self.rng_sampler)
            except (FitError, InsufficientDataError) as e:
                logger.warning(f"gp: fit failed ({e}), choosing a random candidate")
                index = int(self.rng_fallback.integers(len(cands)))
            return cands.candidates[index], cands

        try:
            cands = propose(
                traj,
                self.sampler_conf,
                self.client,
                self.rng_sampler,
                self.objective.model_card,
                self.objective.data_card,
            )
        except SamplerFailureError as e:
            logger.warning(f"{method}: {e}; falling back to random candidates")
            cands = self._random_pick(traj, self.engine.m_candidates, self.rng_fallback)
        index, _ = score_and_select(cands, self.surrogate, traj, self.rng_shuffle)
        return cands.candidates[index], cands


def run(
    spec: RunSpec,
    registry: Optional[ObjectiveRegistry] = None,
    client: Optional[LLMClient] = None,
    log_path: Optional[Union[str, Path]] = None,
    deterministic_timing: Optional[bool] = None,
    show_progress: bool = False,
) -> RunResult:
    """
    Execute one optimization run.

    The first n_init trials evaluate the initial design; every later trial
    proposes candidates, scores them with the method's surrogate, evaluates
    the best and appends it to the history. Each trial is written to the
    log as soon as it is evaluated, so a failed run keeps its partial log.

    Args:
        spec: Run specification
        registry: Objective registry (default: the module registry)
        client: LLM client; required for llambo methods and warmstart init
        log_path: JSONL output file (not written when None)
        deterministic_timing: Log wallclock_ms as 0.0; None means "when the
            client is deterministic"
        show_progress: Draw a progress bar on stderr (TTY only)

    Returns:
        RunResult

    Raises:
        ValidationError: If the objective cannot be resolved or the method is misconfigured
        ConfigurationError: If the method needs a client and none was given
        ObjectiveError: If the objective fails (the partial log is kept)
    """
    spec.validate()
    if spec.needs_client and client is None:
        raise ConfigurationError(
            f"Method {spec.method} with init {spec.init_mode} needs an LLM client"
        )
    objective = (registry or default_registry).resolve(spec.objective)
    loop = _Loop(spec, objective, client)
    if deterministic_timing is None:
        deterministic_timing = client is not None and client.is_deterministic

    traj = Trajectory(objective.space)
    records: List[Dict[str, Any]] = []
    out = None
    if log_path is not None:
        log_path = Path(log_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        out = open(log_path, "w", encoding="utf-8")

    logger.info(
        f"Run {objective.name} / {spec.method} / seed {spec.seed}: "
        f"{spec.n_init} initial points, {spec.n_trials} trials"
    )
    try:
        with TrialProgress(spec.n_trials, desc=spec.method, disable=not show_progress) as bar:
            start = time.perf_counter()
            init = loop.initial_design()
            init_ms = (time.perf_counter() - start) * 1000.0 / len(init)
            for trial in range(spec.n_trials):
                if trial < len(init):
                    cfg, cands, elapsed = init[trial], None, init_ms
                else:
                    start = time.perf_counter()
                    cfg, cands = loop.next_config(traj)
                    elapsed = (time.perf_counter() - start) * 1000.0
                score = objective.evaluate(cfg)
                traj.append(cfg, score, trial)
                best = traj.stats().s_min
                record = {
                    "task": spec.objective,
                    "method": spec.method,
                    "seed": spec.seed,
                    "trial": trial,
                    "config": cfg.to_dict(),
                    "score": score,
                    "best_so_far": best,
                    "candidate_count": 0 if cands is None else len(cands),
                    "acceptance_rate": None if cands is None else cands.acceptance_rate,
                    "wallclock_ms": 0.0 if deterministic_timing else round(elapsed, 3),
                }
                records.append(record)
                if out is not None:
                    out.write(json.dumps(record, sort_keys=True) + "\n")
                    out.flush()
                bar.update(trial + 1, best)
    finally:
        if out is not None:
            out.close()

    result = RunResult(spec, objective, traj, records, log_path)
    logger.info(
        f"Run finished: best {result.best_score:g}, normalized regret {result.final_regret:.6g}"
    )
    return result


# --------------------------------------------------------------------- report


@dataclass
class Report:
    rows: pd.DataFrame
    means: pd.DataFrame
    skipped: int = 0

    def to_frame(self) -> pd.DataFrame:
        """Per-run rows followed by the cross-seed means (seed column "mean")."""
        means = self.means.assign(seed="mean")
        return pd.concat([self.rows, means[self.rows.columns]], ignore_index=True)

    def to_csv(self, path: Optional[Union[str, Path]] = None) -> str:
        text = self.to_frame().to_csv(index=False)
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def expand_logs(patterns: Iterable[str]) -> List[Path]:
    paths: List[Path] = []
    for pattern in patterns:
        matches = sorted(glob.glob(pattern, recursive=True))
        paths.extend(Path(p) for p in matches if Path(p).is_file())
    return sorted(set(paths))


def read_logs(paths: Iterable[Union[str, Path]]) -> Tuple[pd.DataFrame, int]:
    """
    Read run-log lines into a frame; malformed lines are skipped and counted.
    """
    required = ("task", "method", "seed", "trial", "score")
    records = []
    skipped = 0
    for path in paths:
        with open(path, "rb") as f:
            for line_no, raw in enumerate(f, 1):
                if not raw.strip():
                    continue
                try:
                    record = json.loads(raw.decode("utf-8"))
                    if not isinstance(record, dict) or any(k not in record for k in required):
                        raise ValueError("missing fields")
                    score = float(record["score"])
                    if not math.isfinite(score):
                        raise ValueError(f"non-finite score {score}")
                    records.append(
                        {
                            "task": str(record["task"]),
                            "method": str(record["method"]),
                            "seed": int(record["seed"]),
                            "trial": int(record["trial"]),
                            "score": score,
                        }
                    )
                except (UnicodeDecodeError, ValueError, TypeError) as e:
                    skipped += 1
                    logger.debug(f"{path}:{line_no}: skipped ({e})")
    return pd.DataFrame(records, columns=["task", "method", "seed", "trial", "score"]), skipped


def report(
    log_paths: Iterable[Union[str, Path]],
    registry: Optional[ObjectiveRegistry] = None,
    bounds: Optional[Mapping[str, TaskBounds]] = None,
) -> Report:
    """
    Normalized regret per (task, method, seed, trial) and its mean over seeds.

    Args:
        log_paths: Run-log files
        registry: Resolves task names to their bounds
        bounds: Explicit bounds per task, taking precedence over the registry

    Raises:
        ValidationError: If no usable log line was found
    """
    frame, skipped = read_logs(log_paths)
    if skipped:
        logger.warning(f"Skipped {skipped} corrupt log lines")
    if frame.empty:
        raise ValidationError("No usable run-log lines found")

    registry = registry or default_registry
    cache: Dict[str, TaskBounds] = dict(bounds or {})
    parts = []
    for (task, method, seed), group in frame.groupby(["task", "method", "seed"], sort=True):
        if task not in cache:
            cache[task] = registry.resolve(task).bounds
        group = group.drop_duplicates("trial", keep="last").sort_values("trial")
        regret = normalized_regret(group["score"].tolist(), cache[task])
        parts.append(
            pd.DataFrame(
                {
                    "task": task,
                    "method": method,
                    "seed": seed,
                    "trial": group["trial"].to_numpy(),
                    "normalized_regret": regret,
                }
            )
        )
    rows = pd.concat(parts, ignore_index=True)
    means = (
        rows.groupby(["task", "method", "trial"], sort=True)["normalized_regret"]
        .mean()
        .reset_index()
    )
    return Report(rows=rows, means=means, skipped=skipped)


def load_log(path: Union[str, Path]) -> List[Dict[str, Any]]:
    """All records of one run log, in file order."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"Run log does not exist: {path}")
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
