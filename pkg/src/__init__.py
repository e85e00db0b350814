"""
iclbo - Bayesian optimization with in-context LLM surrogates and candidate samplers.
"""

from .config import config, Config, EngineSettings
from .search_space import Configuration, HyperparamDef, SearchSpace
from .trajectory import Observation, Trajectory
from .prompts import DataCard, ModelCard, PromptBundle, StatisticalInfo, build_prompt
from .llm_client import (
    CompletionRequest,
    CompletionResponse,
    HttpBackend,
    LLMClient,
    MockBackend,
    parse_classification,
    parse_configurations,
    parse_performance,
)
from .surrogate_disc import DiscriminativeSurrogate, SurrogatePrediction, expected_improvement
from .surrogate_gen import GenerativeSurrogate, ei_from_density_ratio
from .sampler import CandidateSet, SamplerConfig, propose, select_next
from .warmstart import WarmstartConfig, warmstart
from .baselines import GpModel, GpSurrogate, KdeModel, TpeSurrogate, tpe_fit, tpe_propose
from .metrics import TaskBounds, calibration, generalized_variance, normalized_regret
from .objectives import Objective, load_tabular, registry, synthetic
from .bench import RunSpec, report, run
from .exceptions import (
    IclboError,
    ConfigurationError,
    ValidationError,
    MissingFileError,
    InsufficientDataError,
    TemplateError,
    TransportError,
    ProtocolError,
    SurrogateFailureError,
    SamplerFailureError,
    FitError,
    DataIntegrityError,
    ObjectiveError,
)

__version__ = "0.1.0"
__all__ = [
    "config",
    "Config",
    "EngineSettings",
    "Configuration",
    "HyperparamDef",
    "SearchSpace",
    "Observation",
    "Trajectory",
    "DataCard",
    "ModelCard",
    "PromptBundle",
    "StatisticalInfo",
    "build_prompt",
    "CompletionRequest",
    "CompletionResponse",
    "HttpBackend",
    "LLMClient",
    "MockBackend",
    "parse_classification",
    "parse_configurations",
    "parse_performance",
    "DiscriminativeSurrogate",
    "SurrogatePrediction",
    "expected_improvement",
    "GenerativeSurrogate",
    "ei_from_density_ratio",
    "CandidateSet",
    "SamplerConfig",
    "propose",
    "select_next",
    "WarmstartConfig",
    "warmstart",
    "GpModel",
    "GpSurrogate",
    "KdeModel",
    "TpeSurrogate",
    "tpe_fit",
    "tpe_propose",
    "TaskBounds",
    "calibration",
    "generalized_variance",
    "normalized_regret",
    "Objective",
    "load_tabular",
    "registry",
    "synthetic",
    "RunSpec",
    "report",
    "run",
    "IclboError",
    "ConfigurationError",
    "ValidationError",
    "MissingFileError",
    "InsufficientDataError",
    "TemplateError",
    "TransportError",
    "ProtocolError",
    "SurrogateFailureError",
    "SamplerFailureError",
    "FitError",
    "DataIntegrityError",
    "ObjectiveError",
]
