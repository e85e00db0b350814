"""
Classical comparators for the in-context surrogates.

- TPE: good/bad split of the history at the gamma quantile, Gaussian KDEs
  l (good) and g (bad) with Scott bandwidths, proposals drawn from l and
  ranked by l/g. "independent" models each dimension by its own 1-D KDE,
  "multivariate" uses one full-covariance KDE.
- GP: RBF kernel, hyperparameters picked on a fixed 5x5x5 log grid by
  marginal likelihood, closed-form EI.

All models work on unit-cube coordinates (internal space rescaled per
dimension to [0, 1]), so bandwidth floors and lengthscales mean the same
thing in every search space.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.spatial.distance import cdist
from scipy.special import logsumexp

from .base_surrogate import Surrogate
from .constants import (
    DEFAULT_GAMMA,
    DEFAULT_TPE_CANDIDATES,
    GP_JITTER_LADDER,
    GP_LENGTHSCALE_GRID,
    GP_NOISE_VARIANCE_GRID,
    GP_SIGNAL_VARIANCE_GRID,
    KDE_BANDWIDTH_FLOOR,
    KDE_REGULARIZATION,
    TPE_MIN_OBSERVATIONS,
)
from .exceptions import FitError, InsufficientDataError, ValidationError
from .sampler import CandidateSet
from .search_space import Configuration, SearchSpace
from .surrogate_disc import SurrogatePrediction, expected_improvement
from .trajectory import Trajectory

logger = logging.getLogger("iclbo.baselines")

KDE_KINDS = ("independent", "multivariate")
_LOG_2PI = math.log(2.0 * math.pi)


# ------------------------------------------------------------------------ KDE


@dataclass(frozen=True, eq=False)
class KdeModel:
    """
    Gaussian kernel density estimate.

    independent: ``bandwidths`` is a d-vector and the joint density is the
        product of the per-dimension 1-D estimates.
    multivariate: ``bandwidths`` is the (d, d) kernel covariance and
        ``chol`` its lower Cholesky factor.
    """

    kind: str
    points: np.ndarray
    bandwidths: np.ndarray
    chol: Optional[np.ndarray] = None
    regularized: bool = False

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @classmethod
    def fit(cls, points: np.ndarray, kind: str = "multivariate") -> "KdeModel":
        """
        Fit a KDE with Scott's rule.

        independent: h_d = max(sigma_d * n^(-1/5), floor)
        multivariate: H = n^(-2/(d+4)) * Sigma, diagonal floored at floor^2;
            1e-6 * I is added when H is not positive definite

        Args:
            points: (n, d) array, n >= 1
            kind: "independent" or "multivariate"
        """
        if kind not in KDE_KINDS:
            raise ValidationError(f"KDE kind must be one of {KDE_KINDS}, got {kind!r}")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.ndim != 2 or points.shape[0] < 1:
            raise InsufficientDataError("KDE needs at least one point")
        n, d = points.shape

        if kind == "independent":
            sigma = points.std(axis=0, ddof=1) if n > 1 else np.zeros(d)
            bandwidths = np.maximum(sigma * n ** (-1.0 / 5.0), KDE_BANDWIDTH_FLOOR)
            return cls(kind, points, bandwidths)

        factor = n ** (-1.0 / (d + 4))
        cov = np.atleast_2d(np.cov(points, rowvar=False, ddof=1)) if n > 1 else np.zeros((d, d))
        cov = factor**2 * cov
        diag = np.arange(d)
        cov[diag, diag] = np.maximum(cov[diag, diag], KDE_BANDWIDTH_FLOOR**2)

        regularized = False
        eigmin = float(np.linalg.eigvalsh(cov).min())
        if eigmin <= KDE_REGULARIZATION * 1e-3:
            cov = cov + KDE_REGULARIZATION * np.eye(d)
            regularized = True
        try:
            chol = cholesky(cov, lower=True)
        except LinAlgError:
            cov = cov + KDE_REGULARIZATION * np.eye(d)
            chol = cholesky(cov, lower=True)
            regularized = True
        if regularized:
            logger.debug(
                f"Degenerate KDE covariance (n={n}, d={d}, min eigenvalue {eigmin:.3g}), "
                f"added {KDE_REGULARIZATION:g} to the diagonal"
            )
        return cls(kind, points, cov, chol, regularized)

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        """Log density at each row of x (shape (m, d) or (d,))."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.d:
            raise ValidationError(f"Expected {self.d} columns, got {x.shape[1]}")
        diff = x[:, None, :] - self.points[None, :, :]

        if self.kind == "independent":
            z = diff / self.bandwidths
            log_kernel = -0.5 * z**2 - np.log(self.bandwidths) - 0.5 * _LOG_2PI
            per_dim = logsumexp(log_kernel, axis=1) - math.log(self.n)
            return per_dim.sum(axis=1)

        m = x.shape[0]
        flat = diff.reshape(-1, self.d).T
        solved = solve_triangular(self.chol, flat, lower=True)
        maha = (solved**2).sum(axis=0).reshape(m, self.n)
        log_det = 2.0 * np.log(np.diag(self.chol)).sum()
        log_kernel = -0.5 * maha - 0.5 * log_det - 0.5 * self.d * _LOG_2PI
        return logsumexp(log_kernel, axis=1) - math.log(self.n)

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(x))

    def sample(self, m: int, rng: np.random.Generator) -> np.ndarray:
        """Draw m points, shape (m, d)."""
        if self.kind == "independent":
            idx = rng.integers(self.n, size=(m, self.d))
            centers = self.points[idx, np.arange(self.d)]
            return centers + rng.standard_normal((m, self.d)) * self.bandwidths
        idx = rng.integers(self.n, size=m)
        return self.points[idx] + rng.standard_normal((m, self.d)) @ self.chol.T


# ------------------------------------------------------------------------ TPE


@dataclass(frozen=True, eq=False)
class TpeModels:
    """Good-point density l and bad-point density g (None: uniform on the unit cube)."""

    l: KdeModel
    g: Optional[KdeModel]
    gamma: float
    space: SearchSpace

    def log_ratio(self, u: np.ndarray) -> np.ndarray:
        """log l(u) - log g(u) at unit-cube points."""
        log_l = self.l.logpdf(u)
        if self.g is None:
            return log_l
        return log_l - self.g.logpdf(u)


def unit_points(space: SearchSpace, configs: Sequence[Configuration]) -> np.ndarray:
    return np.array([space.to_unit(cfg) for cfg in configs], dtype=float).reshape(-1, space.d)


def tpe_fit(
    traj: Trajectory, gamma: float = DEFAULT_GAMMA, kind: str = "multivariate"
) -> TpeModels:
    """
    Split the history at the gamma quantile and fit l and g.

    Raises:
        InsufficientDataError: With fewer than 4 observations
    """
    if len(traj) < TPE_MIN_OBSERVATIONS:
        raise InsufficientDataError(
            f"TPE needs at least {TPE_MIN_OBSERVATIONS} observations, got {len(traj)}"
        )
    labels = traj.label_good_bad(gamma)
    good = [lab.config for lab in labels if lab.z == 1]
    bad = [lab.config for lab in labels if lab.z == 0]
    l_model = KdeModel.fit(unit_points(traj.space, good), kind)
    g_model = KdeModel.fit(unit_points(traj.space, bad), kind) if bad else None
    if g_model is None:
        logger.debug("All observations tie at the threshold, g is uniform")
    return TpeModels(l_model, g_model, gamma, traj.space)


def tpe_propose(models: TpeModels, m: int, rng: np.random.Generator) -> CandidateSet:
    """
    Draw m proposals from l, clip them into the space and order them by l/g.

    Returns:
        CandidateSet sorted by decreasing log(l/g), with those values as scores
    """
    if m < 1:
        raise ValidationError(f"m must be >= 1, got {m}")
    space = models.space
    draws = np.clip(models.l.sample(m, rng), 0.0, 1.0)
    candidates = [space.from_unit(row) for row in draws]
    scores = models.log_ratio(unit_points(space, candidates))
    order = np.argsort(-scores, kind="stable")
    return CandidateSet(
        candidates=tuple(candidates[i] for i in order),
        acceptance_rate=1.0,
        attempted=m,
        scores=tuple(float(scores[i]) for i in order),
    )


class TpeSurrogate(Surrogate):
    """Acquisition log l(h) - log g(h), monotone in TPE's expected improvement."""

    def __init__(self, gamma: float = DEFAULT_GAMMA, kind: str = "multivariate") -> None:
        if kind not in KDE_KINDS:
            raise ValidationError(f"KDE kind must be one of {KDE_KINDS}, got {kind!r}")
        self.gamma = gamma
        self.kind = kind
        self.name = "tpe_ind" if kind == "independent" else "tpe_multi"
        self.models: Optional[TpeModels] = None

    def prepare(self, traj: Trajectory, rng: np.random.Generator) -> None:
        self.models = tpe_fit(traj, self.gamma, self.kind)

    def propose(self, traj: Trajectory, m: int, rng: np.random.Generator) -> CandidateSet:
        self.prepare(traj, rng)
        return tpe_propose(self.models, m, rng)

    def acquisition(self, cfg: Configuration, traj: Trajectory, rng: np.random.Generator) -> float:
        if self.models is None:
            self.prepare(traj, rng)
        return float(self.models.log_ratio(unit_points(traj.space, [cfg]))[0])

    def score_batch(
        self, candidates: Sequence[Configuration], traj: Trajectory, rng: np.random.Generator
    ) -> List[Optional[float]]:
        self.prepare(traj, rng)
        return [float(v) for v in self.models.log_ratio(unit_points(traj.space, candidates))]


# ------------------------------------------------------------------------- GP


def rbf_kernel(
    a: np.ndarray, b: np.ndarray, lengthscale: float, signal_variance: float
) -> np.ndarray:
    return signal_variance * np.exp(-0.5 * cdist(a, b, "sqeuclidean") / lengthscale**2)


def _factor(k: np.ndarray) -> Optional[Tuple[np.ndarray, float]]:
    """Lower Cholesky factor of k, escalating diagonal jitter on failure."""
    eye = np.eye(k.shape[0])
    for jitter in (0.0,) + GP_JITTER_LADDER:
        try:
            return cholesky(k + jitter * eye, lower=True), jitter
        except LinAlgError:
            continue
    return None


@dataclass(frozen=True, eq=False)
class GpModel:
    """
    Fitted GP on unit-cube inputs and standardized targets.

    ``grid_scores`` maps every (lengthscale, signal variance, noise variance)
    tried to its log marginal likelihood (-inf where no factorization succeeded).
    """

    X: np.ndarray
    y: np.ndarray
    y_mean: float
    y_std: float
    lengthscale: float
    signal_variance: float
    noise_variance: float
    jitter: float
    chol: np.ndarray
    alpha: np.ndarray
    log_marginal_likelihood: float
    grid_scores: Dict[Tuple[float, float, float], float] = field(default_factory=dict)
    space: Optional[SearchSpace] = None

    @classmethod
    def fit(
        cls,
        X: np.ndarray,
        y: Sequence[float],
        standardize: bool = True,
        hyperparameters: Optional[Tuple[float, float, float]] = None,
        space: Optional[SearchSpace] = None,
    ) -> "GpModel":
        """
        Fit by grid search over the marginal likelihood.

        Args:
            X: (n, d) inputs, n >= 2
            y: n targets
            standardize: Rescale y to zero mean and unit variance first
            hyperparameters: Fixed (lengthscale, signal variance, noise variance)
                instead of the grid
            space: Search space the inputs live in, for gp_predict

        Raises:
            InsufficientDataError: With fewer than 2 points
            FitError: If no grid point gives a positive-definite kernel matrix
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y_raw = np.asarray(y, dtype=float).ravel()
        if X.shape[0] < 2:
            raise InsufficientDataError(f"GP needs at least 2 observations, got {X.shape[0]}")
        if X.shape[0] != y_raw.size:
            raise ValidationError(f"{X.shape[0]} inputs but {y_raw.size} targets")

        y_mean, y_std = 0.0, 1.0
        if standardize:
            y_mean = float(y_raw.mean())
            y_std = float(y_raw.std()) or 1.0
        y_fit = (y_raw - y_mean) / y_std
        n = y_fit.size

        grid = (
            [tuple(hyperparameters)]
            if hyperparameters is not None
            else list(product(GP_LENGTHSCALE_GRID, GP_SIGNAL_VARIANCE_GRID, GP_NOISE_VARIANCE_GRID))
        )
        scores: Dict[Tuple[float, float, float], float] = {}
        best = None
        for ls, sf2, sn2 in grid:
            k = rbf_kernel(X, X, ls, sf2) + sn2 * np.eye(n)
            factored = _factor(k)
            if factored is None:
                scores[(ls, sf2, sn2)] = -np.inf
                continue
            chol, jitter = factored
            alpha = cho_solve((chol, True), y_fit)
            lml = float(
                -0.5 * y_fit @ alpha - np.log(np.diag(chol)).sum() - 0.5 * n * _LOG_2PI
            )
            scores[(ls, sf2, sn2)] = lml
            if best is None or lml > best[0]:
                best = (lml, ls, sf2, sn2, jitter, chol, alpha)

        if best is None:
            raise FitError(
                f"Kernel matrix not positive definite for any hyperparameters "
                f"(jitter up to {GP_JITTER_LADDER[-1]:g})"
            )
        lml, ls, sf2, sn2, jitter, chol, alpha = best
        if jitter > 0:
            logger.debug(f"GP fit needed jitter {jitter:g}")
        return cls(
            X=X,
            y=y_fit,
            y_mean=y_mean,
            y_std=y_std,
            lengthscale=ls,
            signal_variance=sf2,
            noise_variance=sn2,
            jitter=jitter,
            chol=chol,
            alpha=alpha,
            log_marginal_likelihood=lml,
            grid_scores=scores,
            space=space,
        )

    def predict(
        self, Xq: np.ndarray, include_noise: bool = False
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Predictive mean and standard deviation in the original target units.

        Args:
            Xq: (m, d) query inputs
            include_noise: Add the observation noise to the predictive variance
        """
        Xq = np.atleast_2d(np.asarray(Xq, dtype=float))
        k_star = rbf_kernel(self.X, Xq, self.lengthscale, self.signal_variance)
        mean = k_star.T @ self.alpha
        v = solve_triangular(self.chol, k_star, lower=True)
        var = self.signal_variance - (v**2).sum(axis=0)
        if include_noise:
            var = var + self.noise_variance
        std = np.sqrt(np.maximum(var, 0.0))
        return mean * self.y_std + self.y_mean, std * self.y_std


def gp_fit(traj: Trajectory, **kwargs) -> GpModel:
    """Fit a GP to the history (unit-cube inputs, raw scores standardized)."""
    X = unit_points(traj.space, traj.configs)
    return GpModel.fit(X, traj.scores, space=traj.space, **kwargs)


def gp_predict(
    model: GpModel, cfg: Configuration, include_noise: bool = False
) -> SurrogatePrediction:
    if model.space is None:
        raise ValidationError("gp_predict needs a model fitted with a search space")
    mean, std = model.predict(unit_points(model.space, [cfg]), include_noise)
    return SurrogatePrediction(float(mean[0]), float(std[0]), (), 0)


class GpSurrogate(Surrogate):
    """Closed-form EI under the GP posterior."""

    name = "gp"

    def __init__(self) -> None:
        self.model: Optional[GpModel] = None

    def prepare(self, traj: Trajectory, rng: np.random.Generator) -> None:
        self.model = gp_fit(traj)

    def acquisition(self, cfg: Configuration, traj: Trajectory, rng: np.random.Generator) -> float:
        if self.model is None:
            self.prepare(traj, rng)
        return expected_improvement(gp_predict(self.model, cfg), traj.stats().s_min)

    def score_batch(
        self, candidates: Sequence[Configuration], traj: Trajectory, rng: np.random.Generator
    ) -> List[Optional[float]]:
        self.prepare(traj, rng)
        means, stds = self.model.predict(unit_points(traj.space, candidates))
        s_min = traj.stats().s_min
        return [
            expected_improvement(SurrogatePrediction(float(mu), float(sd), (), 0), s_min)
            for mu, sd in zip(means, stds)
        ]
