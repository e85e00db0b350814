"""
Prompt construction: model and data cards, history serialization and the
four task templates (warmstart, discriminative surrogate, generative
surrogate, candidate sampler) with their ablation variants.

All functions here are pure. Numbers are rendered with format_number so a
prompt is byte-stable for a given input.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .constants import UNINFORMATIVE_NAME
from .exceptions import TemplateError, ValidationError
from .search_space import Configuration, HyperparamDef, SearchSpace
from .trajectory import Trajectory
from .utils import format_number

logger = logging.getLogger("iclbo.prompts")

PURPOSES = ("warmstart", "disc_sm", "gen_sm", "sampler")
ABLATIONS = ("full", "no_context", "no_instructions", "uninformative")
TASKS = ("classification", "regression")
STRONG_CORRELATION = 0.5

_TYPE_LABELS = {"integer": "int", "continuous": "float", "ordinal": "ordinal"}

SAMPLER_GUIDANCE = (
    "Do not recommend values at the minimum or maximum of allowable range, "
    "do not recommend rounded values. Recommend values with the highest possible "
    "precision, as requested by the allowed ranges."
)


# --------------------------------------------------------------------- cards


@dataclass(frozen=True)
class HyperparamDescription:
    name: str
    type_label: str
    transform: str
    lower: float
    upper: float

    @classmethod
    def from_def(cls, dim: HyperparamDef) -> "HyperparamDescription":
        return cls(dim.name, _TYPE_LABELS[dim.kind], dim.transform, dim.lower, dim.upper)

    def render(self, name: Optional[str] = None) -> str:
        """E.g. "max_features (float, logit scale, range [0.01, 0.99])"."""
        parts = [self.type_label]
        if self.transform != "linear":
            parts.append(f"{self.transform} scale")
        bounds = f"range [{format_number(self.lower)}, {format_number(self.upper)}]"
        return f"{name or self.name} ({', '.join(parts)}, {bounds})"


@dataclass(frozen=True)
class ModelCard:
    """The model being tuned: name, task, metric and hyperparameter ranges."""

    model_name: str
    task: str
    metric: str
    hyperparam_descriptions: Tuple[HyperparamDescription, ...]

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValidationError(f"task must be one of {TASKS}, got {self.task!r}")
        if not self.model_name or not self.metric:
            raise ValidationError("ModelCard needs a model_name and a metric")

    @classmethod
    def for_space(cls, space: SearchSpace, model_name: str, task: str, metric: str) -> "ModelCard":
        descriptions = tuple(HyperparamDescription.from_def(dim) for dim in space.dims)
        return cls(model_name, task, metric, descriptions)

    def check_space(self, space: SearchSpace) -> None:
        names = [desc.name for desc in self.hyperparam_descriptions]
        if names != space.names:
            raise ValidationError(
                f"ModelCard hyperparameters {names} do not match the search space {space.names}"
            )

    def render_hyperparams(self, rename: Optional[Mapping[str, str]] = None) -> str:
        rename = rename or {}
        return ", ".join(
            desc.render(rename.get(desc.name)) for desc in self.hyperparam_descriptions
        )


@dataclass(frozen=True)
class StatisticalInfo:
    """Dataset statistics for the full-context warmstart prompt."""

    n_features_onehot: int
    skewness: Tuple[float, ...]
    n_strong_target: int
    n_pairs: int
    n_strong_pairs: int

    @classmethod
    def from_frame(cls, df: pd.DataFrame, target: str) -> "StatisticalInfo":
        """
        Compute the statistics from a dataset.

        Categorical columns are one-hot encoded, every feature is standardized,
        then skewness and Pearson correlations are taken. A correlation is
        strong when its absolute value exceeds 0.5; undefined correlations
        (constant columns) never count.

        Args:
            df: Dataset including the target column
            target: Target column name

        Returns:
            StatisticalInfo

        Raises:
            ValidationError: If the target column is missing or no features remain
        """
        if target not in df.columns:
            raise ValidationError(f"Target column '{target}' not in frame")
        features = df.drop(columns=[target])
        if features.shape[1] == 0:
            raise ValidationError("Frame has no feature columns")

        encoded = pd.get_dummies(features, dtype=float)
        std = encoded.std(ddof=0).replace(0.0, 1.0)
        standardized = (encoded - encoded.mean()) / std
        skewness = tuple(round(float(v), 2) for v in standardized.skew().fillna(0.0))

        y = df[target]
        if not pd.api.types.is_numeric_dtype(y):
            y = pd.Series(pd.factorize(y, sort=True)[0], index=y.index, dtype=float)
        target_corr = standardized.corrwith(y.astype(float))
        n_strong_target = int((target_corr.abs() > STRONG_CORRELATION).sum())

        corr = standardized.corr().to_numpy()
        upper = corr[np.triu_indices(corr.shape[0], k=1)]
        n_strong_pairs = int(np.sum(np.abs(upper[~np.isnan(upper)]) > STRONG_CORRELATION))

        return cls(
            n_features_onehot=int(encoded.shape[1]),
            skewness=skewness,
            n_strong_target=n_strong_target,
            n_pairs=int(upper.size),
            n_strong_pairs=n_strong_pairs,
        )

    def render(self, model_name: str) -> str:
        skew = ", ".join(format_number(v) for v in self.skewness)
        return (
            "Considering one-hot encoding for categorical features the total amount input's "
            f"features of the {model_name} is {self.n_features_onehot}. We are standarizing "
            "numerical values to have mean 0 and std 1. The Skewness of each feature is "
            f"[{skew}]. The number of features that have strong correlation (defined as > 0.5 "
            f"or <-0.5) with the target feature is {self.n_strong_target}. Of the "
            f"{self.n_pairs} pairwise feature relationships, {self.n_strong_pairs} pairs of "
            "features are strongly correlated (>0.5, <-0.5)."
        )


@dataclass(frozen=True)
class DataCard:
    """Dataset attributes shown in context-bearing prompts."""

    n_samples: int
    n_features: int
    n_numerical: int
    n_categorical: int
    class_distribution: Optional[Tuple[float, ...]] = None
    statistical_info: Optional[Union[StatisticalInfo, str]] = None

    def __post_init__(self) -> None:
        if self.n_numerical + self.n_categorical != self.n_features:
            raise ValidationError(
                f"n_numerical + n_categorical must equal n_features "
                f"({self.n_numerical} + {self.n_categorical} != {self.n_features})"
            )
        if self.class_distribution is not None:
            fractions = tuple(float(p) for p in self.class_distribution)
            object.__setattr__(self, "class_distribution", fractions)
            if abs(sum(fractions) - 1.0) > 1e-9 or any(p < 0 for p in fractions):
                raise ValidationError(f"Class fractions must be >= 0 and sum to 1, got {fractions}")

    @property
    def n_classes(self) -> Optional[int]:
        return None if self.class_distribution is None else len(self.class_distribution)

    @classmethod
    def from_frame(
        cls, df: pd.DataFrame, target: str, task: str = "classification", full: bool = False
    ) -> "DataCard":
        """
        Derive counts (and, for classification, the class distribution) from a dataset.

        Args:
            df: Dataset including the target column
            target: Target column name
            task: "classification" or "regression"
            full: Also compute the StatisticalInfo block
        """
        if target not in df.columns:
            raise ValidationError(f"Target column '{target}' not in frame")
        features = df.drop(columns=[target])
        numerical = int(sum(pd.api.types.is_numeric_dtype(t) for t in features.dtypes))
        distribution = None
        if task == "classification":
            counts = df[target].value_counts(normalize=True).sort_index()
            distribution = tuple(float(p) for p in counts)
            # normalize away float drift so the sum check holds exactly
            total = sum(distribution)
            distribution = tuple(p / total for p in distribution)
        return cls(
            n_samples=int(len(df)),
            n_features=int(features.shape[1]),
            n_numerical=numerical,
            n_categorical=int(features.shape[1]) - numerical,
            class_distribution=distribution,
            statistical_info=StatisticalInfo.from_frame(df, target) if full else None,
        )

    def render_class_distribution(self) -> str:
        if self.class_distribution is None:
            return ""
        parts = [
            f"class {i}: {format_number(p * 100.0)}%" for i, p in enumerate(self.class_distribution)
        ]
        return f"[{', '.join(parts)}]"

    def render_statistical_info(self, model_name: str) -> str:
        if self.statistical_info is None:
            raise TemplateError("statistical_info")
        if isinstance(self.statistical_info, str):
            return self.statistical_info
        return self.statistical_info.render(model_name)


# -------------------------------------------------------------------- bundle


@dataclass(frozen=True)
class PromptBundle:
    """
    One assembled prompt.

    ``metadata`` carries structured facts about the request (query, target,
    incumbent, displayed names) for offline responders; it is never sent.
    """

    text: str
    role_messages: Tuple[Dict[str, str], ...]
    purpose: str
    ablation: str
    metadata: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.text:
            raise ValidationError("Prompt text must be non-empty")
        if self.purpose not in PURPOSES:
            raise ValidationError(f"purpose must be one of {PURPOSES}, got {self.purpose!r}")
        if self.ablation not in ABLATIONS:
            raise ValidationError(f"ablation must be one of {ABLATIONS}, got {self.ablation!r}")

    @property
    def aliases(self) -> Dict[str, str]:
        """Displayed name -> real hyperparameter name (empty unless names were hidden)."""
        return dict(self.metadata.get("aliases", {}))


def uninformative_names(space: SearchSpace) -> Dict[str, str]:
    """Real name -> "X_i" (1-based)."""
    return {name: UNINFORMATIVE_NAME.format(index=i + 1) for i, name in enumerate(space.names)}


def render_config(cfg: Mapping[str, float], rename: Optional[Mapping[str, str]] = None) -> str:
    """E.g. "max_depth is 15, max_features is 0.5"."""
    rename = rename or {}
    return ", ".join(f"{rename.get(k, k)} is {format_number(v)}" for k, v in cfg.items())


def serialize_history(
    traj: Trajectory,
    order: Optional[Sequence[int]] = None,
    value_format: Callable[[float], str] = format_number,
    style: str = "disc",
    labels: Optional[Sequence[int]] = None,
    rename: Optional[Mapping[str, str]] = None,
) -> str:
    """
    Render the history as few-shot blocks, one per observation.

    Styles:
        disc:    "Hyperparameter configuration: ...\\nPerformance: s"
        gen:     "Hyperparameter configuration: ...\\nClassification: z" (needs labels)
        sampler: "Performance: s\\nHyperparameter configuration: ..."

    Args:
        traj: Trajectory to render
        order: Permutation of range(len(traj)); identity when None
        value_format: Formatter for scores
        style: Block layout
        labels: Per-observation binary labels, in trajectory order (gen style)
        rename: Real name -> displayed name

    Returns:
        Blocks joined by newlines (empty string for an empty trajectory)

    Raises:
        ValidationError: If order is not a permutation or labels are missing for gen style
    """
    n = len(traj)
    if order is None:
        order = range(n)
    order = [int(i) for i in order]
    if sorted(order) != list(range(n)):
        raise ValidationError(f"order must be a permutation of range({n})")
    if style == "gen" and (labels is None or len(labels) != n):
        raise ValidationError("gen style needs one label per observation")

    blocks = []
    for i in order:
        obs = traj[i]
        config_line = f"Hyperparameter configuration: {render_config(obs.config, rename)}"
        if style == "disc":
            blocks.append(f"{config_line}\nPerformance: {value_format(obs.score)}")
        elif style == "gen":
            blocks.append(f"{config_line}\nClassification: {int(labels[i])}")
        elif style == "sampler":
            blocks.append(f"Performance: {value_format(obs.score)}\n{config_line}")
        else:
            raise ValidationError(f"Unknown history style {style!r}")
    return "\n".join(blocks)


# ----------------------------------------------------------------- templates


def _require(extras: Mapping[str, Any], key: str) -> Any:
    if key not in extras or extras[key] is None:
        raise TemplateError(key)
    return extras[key]


def _intro(model_card: Optional[ModelCard], data_card: Optional[DataCard], ablation: str) -> str:
    if ablation == "uninformative":
        return (
            "The following are examples of performance values and the corresponding "
            "hyperparameter configurations."
        )
    if model_card is None:
        raise TemplateError("model_card")
    text = (
        f"The following are examples of the performance of a {model_card.model_name} measured "
        f"in {model_card.metric} and the corresponding model hyperparameter configurations."
    )
    if ablation == "no_context":
        return text
    if data_card is None:
        raise TemplateError("data_card")
    if model_card.task == "classification":
        if data_card.n_classes is None:
            raise TemplateError("class_distribution")
        text += (
            f" The model is evaluated on a tabular classification task containing "
            f"{data_card.n_classes} classes."
        )
    else:
        text += " The model is evaluated on a tabular regression task."
    text += (
        f" The tabular dataset contains {data_card.n_samples} samples and "
        f"{data_card.n_features} features ({data_card.n_categorical} categorical, "
        f"{data_card.n_numerical} numerical)."
    )
    return text


def _warmstart_lines(
    model_card: Optional[ModelCard],
    data_card: Optional[DataCard],
    context: str,
    n_recommendations: int,
    ablation: str,
    rename: Mapping[str, str],
) -> List[str]:
    if model_card is None:
        raise TemplateError("model_card")
    if ablation == "uninformative":
        lines = ["You are assisting me with automated machine learning."]
    elif context == "none" or ablation == "no_context":
        lines = [
            f"You are assisting me with automated machine learning using {model_card.model_name}."
        ]
    else:
        if data_card is None:
            raise TemplateError("data_card")
        task = model_card.task
        lines = [
            f"You are assisting me with automated machine learning using {model_card.model_name} "
            f"for a {task} task. The {task} performance is measured using {model_card.metric}."
        ]
        dataset = (
            f"The dataset has {data_card.n_samples} samples with {data_card.n_features} total "
            f"features, of which {data_card.n_numerical} are numerical and "
            f"{data_card.n_categorical} are categorical."
        )
        if data_card.class_distribution is not None:
            dataset += f" Class distribution is {data_card.render_class_distribution()}."
        lines.append(dataset)
        if context == "full":
            lines.append(data_card.render_statistical_info(model_card.model_name))
    lines.extend(
        [
            "I'm exploring a subset of hyperparameters detailed as: "
            f"{model_card.render_hyperparams(rename)}.",
            f"Please suggest {n_recommendations} diverse yet effective configurations to "
            "initiate a Bayesian Optimization process for hyperparameter tuning.",
            "You mustn't include 'None' in the configurations.",
            "Your response should include only a list of dictionaries, where each dictionary "
            "describes one recommended configuration. Do not enumerate the dictionaries.",
        ]
    )
    return lines


def build_prompt(
    purpose: str,
    model_card: Optional[ModelCard],
    data_card: Optional[DataCard],
    traj: Optional[Trajectory],
    extras: Mapping[str, Any],
    ablation: str = "full",
    order: Optional[Sequence[int]] = None,
    system_message: str = "",
) -> PromptBundle:
    """
    Assemble the prompt for one LLM query.

    Required extras per purpose:
        warmstart: "context" (none/partial/full), "n_recommendations", "space"
        disc_sm:   "query"
        gen_sm:    "query", "gamma"
        sampler:   "target"

    Args:
        purpose: warmstart, disc_sm, gen_sm or sampler
        model_card: Model description (not shown under the uninformative ablation)
        data_card: Dataset description (needed unless context is stripped)
        traj: History; required for every purpose except warmstart
        extras: Per-purpose values, see above
        ablation: full, no_context, no_instructions or uninformative
        order: Permutation applied to the history blocks
        system_message: Optional system message; omitted when empty

    Returns:
        PromptBundle

    Raises:
        TemplateError: If a required value is missing (names the placeholder)
        ValidationError: On unknown purpose or ablation
    """
    if purpose not in PURPOSES:
        raise ValidationError(f"purpose must be one of {PURPOSES}, got {purpose!r}")
    if ablation not in ABLATIONS:
        raise ValidationError(f"ablation must be one of {ABLATIONS}, got {ablation!r}")

    if purpose == "warmstart":
        space: SearchSpace = _require(extras, "space")
    else:
        if traj is None:
            raise TemplateError("history")
        space = traj.space
    if model_card is not None:
        model_card.check_space(space)

    rename = uninformative_names(space) if ablation == "uninformative" else {}
    metadata: Dict[str, Any] = {
        "purpose": purpose,
        "space": space.to_dict(),
        "aliases": {alias: real for real, alias in rename.items()},
    }
    if traj is not None and len(traj) > 0:
        s_min, s_max, _ = traj.stats()
        metadata.update(
            s_min=s_min,
            s_max=s_max,
            incumbent=traj.incumbent().config.to_dict(),
            n_history=len(traj),
        )

    if purpose == "warmstart":
        context = _require(extras, "context")
        if context not in ("none", "partial", "full"):
            raise ValidationError(f"warmstart context must be none/partial/full, got {context!r}")
        n_rec = int(_require(extras, "n_recommendations"))
        lines = _warmstart_lines(model_card, data_card, context, n_rec, ablation, rename)
        metadata["n_recommendations"] = n_rec
        text = "\n".join(lines)

    elif purpose == "disc_sm":
        query = _require(extras, "query")
        if len(traj) == 0:
            raise TemplateError("history")
        if model_card is None and ablation != "uninformative":
            raise TemplateError("model_card")
        metric = "performance" if ablation == "uninformative" else model_card.metric
        header = (
            f"{_intro(model_card, data_card, ablation)} Your response should only contain the "
            f"predicted {metric} in the format ## performance ##."
        )
        history = serialize_history(traj, order=order, style="disc", rename=rename)
        text = (
            f"{header}\n{history}\n"
            f"Hyperparameter configuration: {render_config(query, rename)}\nPerformance:"
        )
        metadata["query"] = dict(query)

    elif purpose == "gen_sm":
        query = _require(extras, "query")
        gamma = float(_require(extras, "gamma"))
        labels = [z for _, z in traj.label_good_bad(gamma)]
        header = (
            f"{_intro(model_card, data_card, ablation)} The performance classification is 1 if "
            f"the configuration is in the best-performing {gamma * 100:.1f}% of all "
            "configurations, and 0 otherwise. Your response should only contain the predicted "
            "performance classification in the format ## performance classification ##."
        )
        history = serialize_history(traj, order=order, style="gen", labels=labels, rename=rename)
        text = (
            f"{header}\n{history}\n"
            f"Hyperparameter configuration: {render_config(query, rename)}\nClassification:"
        )
        metadata.update(query=dict(query), gamma=gamma, labels=labels)

    else:
        target = float(_require(extras, "target"))
        if len(traj) == 0:
            raise TemplateError("history")
        if model_card is None:
            raise TemplateError("model_card")
        header = (
            f"{_intro(model_card, data_card, ablation)} The allowable ranges for the "
            f"hyperparameters are: {model_card.render_hyperparams(rename)}."
        )
        instruction = (
            "Recommend a configuration that can achieve the target performance of "
            f"{format_number(target)}."
        )
        if ablation != "no_instructions":
            instruction += f" {SAMPLER_GUIDANCE}"
        instruction += (
            " Your response must only contain the predicted configuration, in the format "
            "## configuration ##."
        )
        history = serialize_history(traj, order=order, style="sampler", rename=rename)
        text = (
            f"{header}\n{instruction}\n{history}\n"
            f"Performance: {format_number(target)}\nHyperparameter configuration:"
        )
        metadata["target"] = target

    messages: List[Dict[str, str]] = []
    if system_message:
        messages.append({"role": "system", "content": system_message})
    messages.append({"role": "user", "content": text})
    return PromptBundle(
        text=text,
        role_messages=tuple(messages),
        purpose=purpose,
        ablation=ablation,
        metadata=metadata,
    )


# ------------------------------------------------------------ golden fixture


@dataclass(frozen=True)
class GoldenFixture:
    space: SearchSpace
    model_card: ModelCard
    data_card: DataCard
    traj: Trajectory
    query: Configuration


def golden_fixture() -> GoldenFixture:
    """Fixed inputs behind the checked-in golden prompt files."""
    space = SearchSpace(
        [
            HyperparamDef("max_depth", "integer", "linear", 1, 15),
            HyperparamDef("max_features", "continuous", "logit", 0.01, 0.99),
        ],
        name="golden_rf",
    )
    model_card = ModelCard.for_space(space, "RandomForest", "classification", "accuracy")
    data_card = DataCard(
        n_samples=400,
        n_features=4,
        n_numerical=3,
        n_categorical=1,
        class_distribution=(0.625, 0.375),
        statistical_info=StatisticalInfo(
            n_features_onehot=6,
            skewness=(0.12, -0.45, 1.3, 0.05, 2.1, -2.1),
            n_strong_target=2,
            n_pairs=15,
            n_strong_pairs=3,
        ),
    )
    traj = Trajectory(space)
    traj.append({"max_depth": 15, "max_features": 0.5}, 0.9)
    traj.append({"max_depth": 3, "max_features": 0.25}, 0.75)
    traj.append({"max_depth": 8, "max_features": 0.8125}, 0.8)
    query = space.make({"max_depth": 7, "max_features": 0.41})
    return GoldenFixture(space, model_card, data_card, traj, query)


def golden_cases() -> Dict[str, PromptBundle]:
    """Every golden prompt, keyed by its fixture file stem."""
    fx = golden_fixture()
    target = fx.traj.target_value(-0.1)

    def ws(context: str) -> PromptBundle:
        extras = {"context": context, "n_recommendations": 5, "space": fx.space}
        return build_prompt("warmstart", fx.model_card, fx.data_card, None, extras)

    def disc(ablation: str = "full") -> PromptBundle:
        return build_prompt(
            "disc_sm", fx.model_card, fx.data_card, fx.traj, {"query": fx.query}, ablation
        )

    def sampler(ablation: str = "full") -> PromptBundle:
        return build_prompt(
            "sampler", fx.model_card, fx.data_card, fx.traj, {"target": target}, ablation
        )

    return {
        "warmstart_none": ws("none"),
        "warmstart_partial": ws("partial"),
        "warmstart_full": ws("full"),
        "disc_sm": disc(),
        "gen_sm": build_prompt(
            "gen_sm",
            fx.model_card,
            fx.data_card,
            fx.traj,
            {"query": fx.query, "gamma": 0.25},
        ),
        "sampler": sampler(),
        "disc_sm_no_context": disc("no_context"),
        "sampler_no_context": sampler("no_context"),
        "sampler_no_instructions": sampler("no_instructions"),
        "disc_sm_uninformative": disc("uninformative"),
    }


def statistical_info_text() -> str:
    fx = golden_fixture()
    return fx.data_card.render_statistical_info(fx.model_card.model_name)


def golden_texts() -> Dict[str, str]:
    """Text of every golden file, keyed by file stem."""
    texts = {stem: bundle.text for stem, bundle in golden_cases().items()}
    texts["statistical_info"] = statistical_info_text()
    return texts
