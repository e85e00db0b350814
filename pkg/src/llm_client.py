"""
LLM transport and response parsing.

Two backends share one interface:

- HttpBackend talks to an OpenAI-compatible chat-completions endpoint,
  retrying rate limits and server errors with exponential backoff.
- MockBackend answers from a digest-keyed table or a procedural responder,
  seeded per request so runs are reproducible regardless of thread timing.

The parsers turn raw completions into numbers, labels or configurations.
They never raise: a rejection is reported in the result.
"""

from __future__ import annotations

import json
import logging
import math
import time
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import httpx
import numpy as np
import regex
from tenacity import (
    RetryCallState,
    Retrying,
    retry_if_exception_type,
    stop_after_attempt,
    wait_exponential,
)

from .config import Config
from .constants import (
    DEFAULT_BACKOFF_BASE,
    DEFAULT_BACKOFF_MAX,
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_PARALLELISM,
    DEFAULT_REQUEST_TIMEOUT,
    DEFAULT_TEMPERATURE,
    DEFAULT_TOP_P,
    RETRYABLE_STATUS_CODES,
)
from .exceptions import (
    ConfigurationError,
    MissingFileError,
    ProtocolError,
    TransportError,
    ValidationError,
)
from .prompts import PromptBundle
from .search_space import Configuration, SearchSpace
from .utils import round_significant, stable_digest

logger = logging.getLogger("iclbo.llm_client")


@dataclass(frozen=True)
class CompletionRequest:
    prompt: PromptBundle
    temperature: float = DEFAULT_TEMPERATURE
    top_p: float = DEFAULT_TOP_P
    n_completions: int = 1
    seed: Optional[int] = None  # mock backend only
    request_index: int = 0

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValidationError(f"temperature must be in [0, 2], got {self.temperature}")
        if not 0.0 < self.top_p <= 1.0:
            raise ValidationError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.n_completions < 1:
            raise ValidationError(f"n_completions must be >= 1, got {self.n_completions}")

    @property
    def digest(self) -> str:
        """SHA-256 of the prompt text; keys scripted mock answers and error reports."""
        return stable_digest(self.prompt.text)


@dataclass(frozen=True)
class CompletionResponse:
    texts: Tuple[str, ...]
    backend_id: str
    latency_ms: float
    request_index: int = 0


# Responder: (request, seeded generator) -> completion text
Responder = Callable[[CompletionRequest, np.random.Generator], str]


class CompletionBackend(ABC):
    """A source of chat completions."""

    backend_id: str = "backend"
    deterministic: bool = False

    @abstractmethod
    def complete(self, req: CompletionRequest) -> CompletionResponse:
        """Answer one request with exactly req.n_completions texts."""

    def close(self) -> None:
        pass


class _RetryableStatus(Exception):
    def __init__(self, status_code: int) -> None:
        self.status_code = status_code
        super().__init__(f"HTTP {status_code}")


class HttpBackend(CompletionBackend):
    """OpenAI-compatible chat-completions backend over httpx."""

    backend_id = "http"
    deterministic = False

    def __init__(
        self,
        endpoint_url: str,
        model_name: str,
        api_key: str,
        timeout: float = DEFAULT_REQUEST_TIMEOUT,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        backoff_base: float = DEFAULT_BACKOFF_BASE,
        backoff_max: float = DEFAULT_BACKOFF_MAX,
        transport: Optional[httpx.BaseTransport] = None,
    ) -> None:
        if not endpoint_url:
            raise ConfigurationError("HTTP backend needs an endpoint URL")
        if not api_key:
            raise ConfigurationError("HTTP backend needs an API key")
        self.endpoint_url = endpoint_url
        self.model_name = model_name
        self.max_attempts = max_attempts
        self.backoff_base = backoff_base
        self.backoff_max = backoff_max
        self.client = httpx.Client(
            timeout=timeout,
            transport=transport,
            headers={"Authorization": f"Bearer {api_key}"},
        )

    def _log_retry(self, state: RetryCallState) -> None:
        exc = state.outcome.exception() if state.outcome else None
        logger.warning(
            f"Completion request failed ({exc}); attempt {state.attempt_number}/"
            f"{self.max_attempts}, retrying"
        )

    def _post(self, payload: Dict[str, Any]) -> httpx.Response:
        response = self.client.post(self.endpoint_url, json=payload)
        if response.status_code in RETRYABLE_STATUS_CODES:
            raise _RetryableStatus(response.status_code)
        return response

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        payload = {
            "model": self.model_name,
            "messages": [dict(m) for m in req.prompt.role_messages],
            "temperature": req.temperature,
            "top_p": req.top_p,
            "n": req.n_completions,
        }
        retryer = Retrying(
            stop=stop_after_attempt(self.max_attempts),
            wait=wait_exponential(multiplier=self.backoff_base, max=self.backoff_max),
            retry=retry_if_exception_type((_RetryableStatus, httpx.TransportError)),
            before_sleep=self._log_retry,
            reraise=True,
        )
        start = time.perf_counter()
        try:
            response = retryer(self._post, payload)
        except (_RetryableStatus, httpx.TransportError) as e:
            raise TransportError(
                f"Completion endpoint failed after {self.max_attempts} attempts: {e}", req.digest
            ) from e
        latency_ms = (time.perf_counter() - start) * 1000.0

        if response.status_code >= 400:
            raise TransportError(
                f"Completion endpoint answered HTTP {response.status_code}", req.digest
            )
        texts = self._extract_texts(response, req)
        return CompletionResponse(tuple(texts), self.backend_id, latency_ms, req.request_index)

    @staticmethod
    def _extract_texts(response: httpx.Response, req: CompletionRequest) -> List[str]:
        try:
            body = response.json()
            choices = body["choices"]
            texts = [choice["message"]["content"] for choice in choices]
        except (ValueError, KeyError, TypeError) as e:
            raise ProtocolError(f"Malformed completion body: {e}", req.digest) from e
        if len(texts) != req.n_completions or not all(isinstance(t, str) for t in texts):
            raise ProtocolError(
                f"Expected {req.n_completions} text completions, got {len(texts)}", req.digest
            )
        return texts

    def close(self) -> None:
        self.client.close()


class MockBackend(CompletionBackend):
    """
    Offline backend.

    A scripted table (prompt digest -> text or list of texts) wins; otherwise
    the responder is called once per completion with a generator seeded from
    (backend seed, request seed, prompt digest, request index).
    """

    backend_id = "mock"
    deterministic = True

    def __init__(
        self,
        seed: int = 0,
        table: Optional[Mapping[str, Union[str, Sequence[str]]]] = None,
        responder: Optional[Responder] = None,
    ) -> None:
        from .mock_responders import default_responder

        self.seed = int(seed)
        self.table = dict(table or {})
        self.responder: Responder = responder or default_responder

    @classmethod
    def from_fixture(
        cls, path: Union[str, Path], seed: int = 0, responder: Optional[Responder] = None
    ) -> "MockBackend":
        """
        Load a scripted response table from JSON ({"<sha256>": "text" | ["text", ...]}).

        Raises:
            MissingFileError: If the fixture does not exist
            ValidationError: If it is not a JSON object of strings
        """
        path = Path(path)
        if not path.is_file():
            raise MissingFileError(f"Mock fixture does not exist: {path}")
        try:
            table = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ValidationError(f"Mock fixture {path} is not valid JSON: {e}") from e
        if not isinstance(table, dict):
            raise ValidationError(f"Mock fixture {path} must be a JSON object")
        return cls(seed=seed, table=table, responder=responder)

    def rng_for(self, req: CompletionRequest) -> np.random.Generator:
        digest_int = int(req.digest[:8], 16)
        request_seed = 0 if req.seed is None else int(req.seed) & 0xFFFFFFFF
        return np.random.default_rng(
            [self.seed & 0xFFFFFFFF, request_seed, digest_int, int(req.request_index)]
        )

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        scripted = self.table.get(req.digest)
        if scripted is not None:
            options = [scripted] if isinstance(scripted, str) else list(scripted)
            texts = [options[i % len(options)] for i in range(req.n_completions)]
        else:
            rng = self.rng_for(req)
            texts = [self.responder(req, rng) for _ in range(req.n_completions)]
        return CompletionResponse(tuple(texts), self.backend_id, 0.0, req.request_index)


class LLMClient:
    """
    Front end used by the optimizer: builds requests with the configured
    sampling parameters and fans batches out over a bounded thread pool.
    """

    def __init__(
        self,
        backend: CompletionBackend,
        parallelism: int = DEFAULT_PARALLELISM,
        temperature: float = DEFAULT_TEMPERATURE,
        top_p: float = DEFAULT_TOP_P,
    ) -> None:
        if parallelism < 1:
            raise ValidationError(f"parallelism must be >= 1, got {parallelism}")
        self.backend = backend
        self.parallelism = parallelism
        self.temperature = temperature
        self.top_p = top_p

    @classmethod
    def from_config(
        cls,
        cfg: Config,
        responder: Optional[Responder] = None,
        transport: Optional[httpx.BaseTransport] = None,
    ) -> "LLMClient":
        """
        Build a client from operator configuration.

        Raises:
            ConfigurationError: If the http backend lacks endpoint or credential
        """
        if cfg.backend == "http":
            api_key = cfg.api_key
            if api_key is None:
                raise ConfigurationError(
                    f"backend 'http' requires the {cfg.api_key_env} environment variable"
                )
            backend: CompletionBackend = HttpBackend(
                endpoint_url=cfg.endpoint_url or "",
                model_name=cfg.model_name,
                api_key=api_key,
                timeout=cfg.request_timeout,
                max_attempts=cfg.max_attempts,
                backoff_base=cfg.backoff_base,
                transport=transport,
            )
        elif cfg.mock_fixture is not None:
            backend = MockBackend.from_fixture(cfg.mock_fixture, cfg.mock_seed, responder)
        else:
            backend = MockBackend(seed=cfg.mock_seed, responder=responder)
        return cls(backend, cfg.parallelism, cfg.temperature, cfg.top_p)

    @property
    def is_deterministic(self) -> bool:
        return self.backend.deterministic

    def request(
        self,
        prompt: PromptBundle,
        n_completions: int = 1,
        seed: Optional[int] = None,
        request_index: int = 0,
    ) -> CompletionRequest:
        return CompletionRequest(
            prompt=prompt,
            temperature=self.temperature,
            top_p=self.top_p,
            n_completions=n_completions,
            seed=seed,
            request_index=request_index,
        )

    def complete(self, req: CompletionRequest) -> CompletionResponse:
        return self.backend.complete(req)

    def complete_many(self, requests: Iterable[CompletionRequest]) -> List[CompletionResponse]:
        """
        Issue independent requests concurrently.

        Returns:
            Responses sorted by request_index, whatever order they finished in

        Raises:
            TransportError, ProtocolError: The failure of the lowest-index request that failed
        """
        requests = list(requests)
        if len(requests) <= 1 or self.parallelism == 1:
            responses = [self.backend.complete(req) for req in requests]
        else:
            with ThreadPoolExecutor(max_workers=min(self.parallelism, len(requests))) as pool:
                futures = [pool.submit(self.backend.complete, req) for req in requests]
                responses = [future.result() for future in futures]
        return sorted(responses, key=lambda r: r.request_index)

    def close(self) -> None:
        self.backend.close()

    def __enter__(self) -> "LLMClient":
        return self

    def __exit__(self, exc_type, exc_val, exc_tb) -> bool:
        self.close()
        return False


def complete(req: CompletionRequest, backend: CompletionBackend) -> CompletionResponse:
    return backend.complete(req)


# -------------------------------------------------------------------- parsers

_NUMBER = r"[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?"
NUMBER_RE = regex.compile(rf"(?<![\w.]){_NUMBER}(?!\w)")
SPAN_RE = regex.compile(r"##(.*?)##", regex.DOTALL)
DICT_RE = regex.compile(r"\{[^{}]*\}")
LABEL_RE = regex.compile(r"^\s*(?:classification\s*:\s*)?([01])\s*\.?\s*$", regex.IGNORECASE)
_VALUE = rf"['\"]?(None|null|nan|{_NUMBER}|[^\s,}}\]'\"]+)['\"]?"


@dataclass(frozen=True)
class ParsedScalar:
    scalar: Optional[float]
    raw: str
    accepted: bool
    reject_reason: Optional[str] = None


@dataclass(frozen=True)
class ParsedLabel:
    label: Optional[int]
    raw: str
    accepted: bool
    reject_reason: Optional[str] = None


@dataclass(frozen=True)
class ParsedConfigs:
    configs: Tuple[Configuration, ...]
    raw: str
    accepted: bool
    reject_reason: Optional[str] = None
    rejected: Tuple[Tuple[str, str], ...] = ()
    clamped: Tuple[str, ...] = ()
    attempted: int = 0

    @property
    def acceptance_rate(self) -> float:
        return len(self.configs) / self.attempted if self.attempted else 0.0


def _first_number(text: str) -> Optional[str]:
    match = NUMBER_RE.search(text)
    return match.group(0) if match else None


def parse_performance(text: str) -> ParsedScalar:
    """
    Extract a predicted score.

    The first number inside a "## ... ##" span wins; without one, the first
    standalone number anywhere in the text.
    """
    text = text if isinstance(text, str) else str(text)
    token = None
    for span in SPAN_RE.finditer(text):
        token = _first_number(span.group(1))
        if token is not None:
            break
    if token is None:
        token = _first_number(text)
    if token is None:
        return ParsedScalar(None, text, False, "no number found")
    value = float(token)
    if not math.isfinite(value):
        return ParsedScalar(None, text, False, f"non-finite number {token}")
    return ParsedScalar(value, text, True)


def parse_classification(text: str) -> ParsedLabel:
    """Extract a binary label; only a bare 0 or 1 is accepted."""
    text = text if isinstance(text, str) else str(text)
    span = SPAN_RE.search(text)
    content = span.group(1) if span else text
    match = LABEL_RE.match(content)
    if not match:
        return ParsedLabel(None, text, False, "label is not 0 or 1")
    return ParsedLabel(int(match.group(1)), text, True)


def _fragments(text: str) -> List[str]:
    dicts = DICT_RE.findall(text)
    if dicts:
        return [d for d in dicts]
    spans = [s.group(1) for s in SPAN_RE.finditer(text) if s.group(1).strip()]
    if spans:
        return spans
    return [text] if text.strip() else []


def _dedup_key(space: SearchSpace, cfg: Configuration) -> Tuple[float, ...]:
    return tuple(round_significant(x) for x in space.to_internal(cfg))


def _parse_fragment(
    fragment: str, space: SearchSpace, displayed: Mapping[str, str], clamped: List[str]
) -> Tuple[Optional[Configuration], Optional[str]]:
    values: Dict[str, float] = {}
    for real in space.names:
        shown = displayed.get(real, real)
        pattern = rf"(?<![\w]){regex.escape(shown)}['\"]?\s*(?::|=|\bis\b)\s*{_VALUE}"
        match = regex.search(pattern, fragment)
        if match is None:
            return None, f"missing hyperparameter {shown}"
        token = match.group(1)
        if token in ("None", "null"):
            return None, f"None value for {shown}"
        if not regex.fullmatch(_NUMBER, token):
            return None, f"non-numeric value for {shown}: {token}"
        value = float(token)
        if not math.isfinite(value):
            return None, f"non-finite value for {shown}"
        values[real] = value
    return space.clamp(values, clamped), None


def parse_configurations(
    text: str,
    space: SearchSpace,
    existing: Iterable[Mapping[str, float]] = (),
    aliases: Optional[Mapping[str, str]] = None,
) -> ParsedConfigs:
    """
    Extract configurations from a sampler or warmstart answer.

    Accepts dictionary literals (one or a list), "## name: value, ... ##"
    spans, or plain "name is value" text. Values may be separated by ":",
    "=" or "is". Out-of-range values are clamped; unknown keys are ignored.
    A configuration is rejected when a value is missing, None or non-numeric,
    or when it duplicates an existing or earlier one at 6 significant
    figures in internal space.

    Args:
        text: Raw completion
        space: Space to validate against
        existing: Configurations already known (e.g. the history)
        aliases: Displayed name -> real name, when names were hidden

    Returns:
        ParsedConfigs with accepted configs and per-fragment rejections
    """
    text = text if isinstance(text, str) else str(text)
    displayed = {real: shown for shown, real in (aliases or {}).items()}
    seen = set()
    for cfg in existing:
        try:
            seen.add(_dedup_key(space, cfg))
        except ValidationError:
            continue

    configs: List[Configuration] = []
    rejected: List[Tuple[str, str]] = []
    clamped: List[str] = []
    fragments = _fragments(text)
    if not fragments:
        return ParsedConfigs((), text, False, "no configuration found", (("", "empty"),), (), 1)

    for fragment in fragments:
        cfg, reason = _parse_fragment(fragment, space, displayed, clamped)
        if cfg is None:
            rejected.append((fragment, reason or "unparseable"))
            continue
        key = _dedup_key(space, cfg)
        if key in seen:
            rejected.append((fragment, "duplicate"))
            continue
        seen.add(key)
        configs.append(cfg)

    reason = None if configs else (rejected[0][1] if rejected else "no configuration found")
    return ParsedConfigs(
        configs=tuple(configs),
        raw=text,
        accepted=bool(configs),
        reject_reason=reason,
        rejected=tuple(rejected),
        clamped=tuple(clamped),
        attempted=len(fragments),
    )
