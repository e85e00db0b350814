"""
Custom exceptions for the iclbo engine.
"""

from __future__ import annotations

from typing import Optional


class IclboError(Exception):
    """Base exception for iclbo."""

    pass


class ConfigurationError(IclboError):
    """Raised when the operator configuration is unusable (e.g. missing credential)."""

    pass


class ValidationError(IclboError):
    """Raised when a value, spec file or configuration fails validation."""

    pass


class MissingFileError(IclboError):
    """Raised when a required file or directory is not found.

    Kept separate from the built-in FileNotFoundError so callers can catch
    every engine failure through IclboError.
    """

    pass


class InsufficientDataError(IclboError):
    """Raised when an operation needs more observations or points than it got."""

    pass


class TemplateError(IclboError):
    """Raised when a prompt template is missing a required placeholder value."""

    def __init__(self, placeholder: str, message: Optional[str] = None) -> None:
        self.placeholder = placeholder
        super().__init__(message or f"Missing value for prompt placeholder '{placeholder}'")


class _RequestError(IclboError):
    """Failure tied to one LLM request; carries the request digest for replay."""

    def __init__(self, message: str, digest: str = "") -> None:
        self.digest = digest
        suffix = f" (request digest {digest})" if digest else ""
        super().__init__(f"{message}{suffix}")


class TransportError(_RequestError):
    """Raised when the completion endpoint cannot be reached after all retries."""

    pass


class ProtocolError(_RequestError):
    """Raised when the completion endpoint answers with a malformed body."""

    pass


class SurrogateFailureError(IclboError):
    """Raised when too few surrogate samples could be parsed for a prediction."""

    pass


class SamplerFailureError(IclboError):
    """Raised when the candidate sampler produced no acceptable configuration."""

    pass


class FitError(IclboError):
    """Raised when a baseline model cannot be fitted."""

    pass


class DataIntegrityError(IclboError):
    """Raised when a bundled or user data file is inconsistent."""

    pass


class ObjectiveError(IclboError):
    """Raised when an objective evaluation fails during a run."""

    pass
