"""
Evaluation quantities: normalized regret, diversity of a point set,
surrogate calibration and plausibility of sampled candidates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.stats import norm

from .baselines import KdeModel, unit_points
from .constants import LPD_STD_FLOOR
from .exceptions import InsufficientDataError, ValidationError
from .search_space import Configuration, SearchSpace
from .surrogate_disc import SurrogatePrediction
from .trajectory import Trajectory

logger = logging.getLogger("iclbo.metrics")


@dataclass(frozen=True)
class TaskBounds:
    """Best (s_star_min) and worst (s_star_max) achievable scores of a task."""

    s_star_min: float
    s_star_max: float
    estimated: bool = False

    def __post_init__(self) -> None:
        if not self.s_star_min <= self.s_star_max:
            raise ValidationError(
                f"s_star_min ({self.s_star_min}) must not exceed s_star_max ({self.s_star_max})"
            )

    @property
    def range(self) -> float:
        return self.s_star_max - self.s_star_min

    def to_dict(self) -> dict:
        return {"s_star_min": self.s_star_min, "s_star_max": self.s_star_max}


def _regret(values: np.ndarray, bounds: TaskBounds) -> np.ndarray:
    if bounds.range <= 0:
        raise ValidationError(
            f"Task bounds have zero range ({bounds.s_star_min} .. {bounds.s_star_max})"
        )
    regret = (values - bounds.s_star_min) / bounds.range
    outside = (regret < 0.0) | (regret > 1.0)
    if outside.any():
        if bounds.estimated:
            logger.warning(
                f"{int(outside.sum())} regret values outside [0, 1] of estimated bounds, clamped"
            )
            regret = np.clip(regret, 0.0, 1.0)
        else:
            logger.warning(
                f"{int(outside.sum())} scores outside the given task bounds "
                f"({bounds.s_star_min:g} .. {bounds.s_star_max:g}), regret left unclamped"
            )
    return regret


def normalized_regret(
    traj: Union[Trajectory, Sequence[float]], bounds: TaskBounds
) -> List[float]:
    """
    Running normalized regret: entry t is
    (min of the first t+1 scores - s*_min) / (s*_max - s*_min).

    Values outside [0, 1] are clamped with a warning when the bounds are
    estimates; with given bounds they are reported as computed.

    Raises:
        ValidationError: If the bounds have zero range
    """
    scores = traj.scores if isinstance(traj, Trajectory) else np.asarray(traj, dtype=float)
    if scores.size == 0:
        return []
    return _regret(np.minimum.accumulate(scores), bounds).tolist()


def generalized_variance_array(X: np.ndarray) -> float:
    """Determinant of the sample covariance of the rows of X, never negative."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, d = X.shape
    if n < d + 1:
        raise InsufficientDataError(
            f"Generalized variance needs at least {d + 1} points in {d} dimensions, got {n}"
        )
    cov = np.atleast_2d(np.cov(X, rowvar=False))
    return max(float(np.linalg.det(cov)), 0.0)


def generalized_variance(points: Sequence[Configuration], space: SearchSpace) -> float:
    """
    det(Sigma) of the points' internal coordinates; lower means the points
    are less diverse (more correlated or more concentrated).

    Raises:
        InsufficientDataError: With fewer than d + 1 points
    """
    X = np.array([space.to_internal(cfg) for cfg in points], dtype=float).reshape(-1, space.d)
    return generalized_variance_array(X)


def correlation_matrix(points: Sequence[Configuration], space: SearchSpace) -> pd.DataFrame:
    """Pearson correlations between hyperparameters, in internal coordinates."""
    X = np.array([space.to_internal(cfg) for cfg in points], dtype=float).reshape(-1, space.d)
    return pd.DataFrame(X, columns=space.names).corr()


@dataclass(frozen=True)
class CalibrationReport:
    lpd: float
    coverage_1sd: float
    sharpness: float
    nrmse: float
    r2: float

    def to_dict(self) -> dict:
        return {
            "lpd": self.lpd,
            "coverage_1sd": self.coverage_1sd,
            "sharpness": self.sharpness,
            "nrmse": self.nrmse,
            "r2": self.r2,
        }


def calibration(
    preds: Sequence[SurrogatePrediction], truths: Sequence[float]
) -> CalibrationReport:
    """
    Prediction quality of a surrogate against true scores.

    lpd: mean Gaussian log density of each truth under (mean, std), std
        floored at 1e-6
    coverage_1sd: share of truths with |truth - mean| <= std
    sharpness: mean predicted std
    nrmse: RMSE / (max(truth) - min(truth))
    r2: coefficient of determination

    Raises:
        ValidationError: On mismatched lengths, fewer than 2 pairs or constant truths
    """
    if len(preds) != len(truths):
        raise ValidationError(f"{len(preds)} predictions but {len(truths)} truths")
    if len(truths) < 2:
        raise ValidationError("calibration needs at least 2 predictions")
    y = np.asarray(truths, dtype=float)
    mean = np.array([p.mean for p in preds], dtype=float)
    std = np.array([p.std for p in preds], dtype=float)
    spread = float(y.max() - y.min())
    if spread <= 0:
        raise ValidationError("calibration needs non-constant truths (NRMSE range is zero)")

    resid = y - mean
    rmse = float(np.sqrt(np.mean(resid**2)))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    lpd = float(np.mean(norm.logpdf(y, loc=mean, scale=np.maximum(std, LPD_STD_FLOOR))))
    return CalibrationReport(
        lpd=lpd,
        coverage_1sd=float(np.mean(np.abs(resid) <= std)),
        sharpness=float(np.mean(std)),
        nrmse=rmse / spread,
        r2=1.0 - float(np.sum(resid**2)) / ss_tot,
    )


def candidate_loglik(
    candidates: Sequence[Configuration], traj: Trajectory, space: Optional[SearchSpace] = None
) -> float:
    """
    Mean log density of the candidates under a multivariate Scott-bandwidth
    KDE fitted to the observed points (unit-cube coordinates).

    Raises:
        InsufficientDataError: With fewer than 2 observations or no candidates
    """
    space = space or traj.space
    if len(traj) < 2:
        raise InsufficientDataError("candidate_loglik needs at least 2 observations")
    if len(candidates) == 0:
        raise InsufficientDataError("candidate_loglik needs at least one candidate")
    kde = KdeModel.fit(unit_points(space, traj.configs), "multivariate")
    return float(np.mean(kde.logpdf(unit_points(space, candidates))))


class RegretSummary(NamedTuple):
    avg: float
    best: float


def avg_and_best_regret(
    candidates: Sequence[Configuration], objective: Any, bounds: TaskBounds
) -> RegretSummary:
    """
    Mean and minimum normalized regret of the candidates' true scores.

    Args:
        candidates: Non-empty list of configurations
        objective: Anything with ``evaluate(cfg) -> float``
        bounds: Task bounds
    """
    if len(candidates) == 0:
        raise ValidationError("avg_and_best_regret needs at least one candidate")
    scores = np.array([objective.evaluate(cfg) for cfg in candidates], dtype=float)
    regret = _regret(scores, bounds)
    return RegretSummary(float(regret.mean()), float(regret.min()))
