"""
Configuration management for the iclbo engine.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from .constants import (
    DEFAULT_ALPHA,
    DEFAULT_API_KEY_ENV,
    DEFAULT_BACKOFF_BASE,
    DEFAULT_GAMMA,
    DEFAULT_GP_CANDIDATES,
    DEFAULT_K_SAMPLES,
    DEFAULT_M_CANDIDATES,
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_MAX_INVALID_RETRIES,
    DEFAULT_MAX_RETRY_ROUNDS,
    DEFAULT_MODEL_NAME,
    DEFAULT_PARALLELISM,
    DEFAULT_REQUEST_TIMEOUT,
    DEFAULT_TEMPERATURE,
    DEFAULT_TOP_P,
    DEFAULT_TPE_CANDIDATES,
)
from .exceptions import ConfigurationError, MissingFileError, ValidationError

BACKENDS = ("mock", "http")
ABLATIONS = ("full", "no_context", "no_instructions", "uninformative")
WARMSTART_CONTEXTS = ("none", "partial", "full")
EI_MODES = ("gaussian", "empirical")


def _check_keys(cls: type, data: Mapping[str, Any], where: str) -> None:
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ValidationError(f"{where}: unknown field '{key}'")


@dataclass
class EngineSettings:
    """Knobs of the model-based loop (sampler, surrogates, baselines)."""

    m_candidates: int = DEFAULT_M_CANDIDATES
    k_samples: int = DEFAULT_K_SAMPLES
    alpha: float = DEFAULT_ALPHA
    gamma: float = DEFAULT_GAMMA
    shuffle: bool = True  # False gives the plain Monte-Carlo variant
    max_retry_rounds: int = DEFAULT_MAX_RETRY_ROUNDS
    max_invalid_retries: int = DEFAULT_MAX_INVALID_RETRIES
    ei_mode: str = "gaussian"
    ablation: str = "full"
    warmstart_context: str = "none"
    gp_candidates: int = DEFAULT_GP_CANDIDATES
    tpe_candidates: int = DEFAULT_TPE_CANDIDATES

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EngineSettings":
        _check_keys(cls, data, "engine")
        settings = cls(**dict(data))
        settings.validate()
        return settings

    def validate(self) -> None:
        """
        Validate engine settings.

        Raises:
            ValidationError: If any setting is out of range
        """
        if self.m_candidates < 1:
            raise ValidationError(f"engine.m_candidates must be >= 1, got {self.m_candidates}")
        if self.k_samples < 2:
            raise ValidationError(f"engine.k_samples must be >= 2, got {self.k_samples}")
        if self.alpha < -1.0:
            raise ValidationError(f"engine.alpha must be >= -1, got {self.alpha}")
        if not 0.0 < self.gamma < 1.0:
            raise ValidationError(f"engine.gamma must be in (0, 1), got {self.gamma}")
        if self.max_retry_rounds < 0:
            raise ValidationError(
                f"engine.max_retry_rounds must be >= 0, got {self.max_retry_rounds}"
            )
        if self.max_invalid_retries < 0:
            raise ValidationError(
                f"engine.max_invalid_retries must be >= 0, got {self.max_invalid_retries}"
            )
        if self.ei_mode not in EI_MODES:
            raise ValidationError(f"engine.ei_mode must be one of {EI_MODES}, got {self.ei_mode}")
        if self.ablation not in ABLATIONS:
            raise ValidationError(
                f"engine.ablation must be one of {ABLATIONS}, got {self.ablation}"
            )
        if self.warmstart_context not in WARMSTART_CONTEXTS:
            raise ValidationError(
                f"engine.warmstart_context must be one of {WARMSTART_CONTEXTS}, "
                f"got {self.warmstart_context}"
            )
        if self.gp_candidates < 1 or self.tpe_candidates < 1:
            raise ValidationError("engine.gp_candidates and engine.tpe_candidates must be >= 1")


@dataclass
class Config:
    """Operator settings: LLM backend, transport and output locations."""

    # Backend selection
    backend: str = "mock"
    endpoint_url: Optional[str] = None  # full chat-completions URL for the http backend
    model_name: str = DEFAULT_MODEL_NAME
    api_key_env: str = DEFAULT_API_KEY_ENV  # credential is read from this variable only

    # Sampling parameters sent with every request
    temperature: float = DEFAULT_TEMPERATURE
    top_p: float = DEFAULT_TOP_P

    # Transport
    parallelism: int = DEFAULT_PARALLELISM
    request_timeout: float = DEFAULT_REQUEST_TIMEOUT
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    backoff_base: float = DEFAULT_BACKOFF_BASE

    # Mock backend
    mock_seed: int = 0
    mock_fixture: Optional[Path] = None  # digest-keyed JSON response table

    # Output
    output_dir: Path = field(default_factory=lambda: Path("workspace/results"))
    log_file: Path = field(default_factory=lambda: Path("workspace/logs/iclbo.log"))

    # None = freeze the wallclock for deterministic backends
    deterministic_timing: Optional[bool] = None

    def __post_init__(self) -> None:
        """Ensure all paths are Path objects."""
        self.output_dir = Path(self.output_dir)
        self.log_file = Path(self.log_file)
        if self.mock_fixture is not None:
            self.mock_fixture = Path(self.mock_fixture)

    @classmethod
    def from_file(cls, path: Path) -> "Config":
        """
        Load configuration from a JSON file.

        Args:
            path: Path to the JSON config file

        Returns:
            Parsed (not yet validated) Config

        Raises:
            MissingFileError: If the file does not exist
            ValidationError: If the file is not valid JSON or has unknown fields
        """
        path = Path(path)
        if not path.is_file():
            raise MissingFileError(f"Config file does not exist: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ValidationError(f"Config file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ValidationError(f"Config file {path} must contain a JSON object")
        _check_keys(cls, data, "config")
        return cls(**data)

    @property
    def api_key(self) -> Optional[str]:
        value = os.environ.get(self.api_key_env, "").strip()
        return value or None

    def setup_directories(self) -> None:
        """
        Create output and log directories if they don't exist.

        Raises:
            ConfigurationError: If directories cannot be created
        """
        try:
            self.output_dir.mkdir(parents=True, exist_ok=True)
            if self.log_file.parent:
                self.log_file.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigurationError(f"Cannot create required directories: {e}") from e

    def validate(self) -> None:
        """
        Validate configuration values.

        Raises:
            ValidationError: If configuration values are invalid
            ConfigurationError: If the http backend lacks its endpoint or credential
        """
        if self.backend not in BACKENDS:
            raise ValidationError(f"backend must be one of {BACKENDS}, got {self.backend}")

        if not 0.0 <= self.temperature <= 2.0:
            raise ValidationError(f"temperature must be between 0 and 2, got {self.temperature}")

        if not 0.0 < self.top_p <= 1.0:
            raise ValidationError(f"top_p must be in (0, 1], got {self.top_p}")

        if self.parallelism < 1:
            raise ValidationError(f"parallelism must be >= 1, got {self.parallelism}")

        if self.max_attempts < 1:
            raise ValidationError(f"max_attempts must be >= 1, got {self.max_attempts}")

        if self.request_timeout <= 0:
            raise ValidationError(f"request_timeout must be > 0, got {self.request_timeout}")

        if self.backoff_base < 0:
            raise ValidationError(f"backoff_base must be >= 0, got {self.backoff_base}")

        if self.mock_fixture is not None and not self.mock_fixture.is_file():
            raise ValidationError(f"mock_fixture must be an existing file, got {self.mock_fixture}")

        if self.backend == "http":
            if not self.endpoint_url:
                raise ConfigurationError("backend 'http' requires endpoint_url")
            if self.api_key is None:
                raise ConfigurationError(
                    f"backend 'http' requires the {self.api_key_env} environment variable"
                )

    def to_dict(self) -> Dict[str, Any]:
        """Return a JSON-safe view of the configuration (never includes the credential)."""
        out: Dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = str(value) if isinstance(value, Path) else value
        return out


# Global configuration instance
config = Config()
# Note: setup_directories() is NOT called automatically to avoid side effects on import.
