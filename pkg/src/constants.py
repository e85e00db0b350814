"""
Engine constants: default hyperparameters of the optimizer and numeric floors.
"""

from __future__ import annotations

from typing import FrozenSet, Tuple

# Candidate sampler: number of proposals per trial and exploration target offset
DEFAULT_M_CANDIDATES: int = 20
DEFAULT_ALPHA: float = -0.1
DEFAULT_MAX_RETRY_ROUNDS: int = 2

# Surrogates: Monte-Carlo predictions per query and good/bad quantile split
DEFAULT_K_SAMPLES: int = 10
DEFAULT_GAMMA: float = 0.25
# Extra attempts for unparseable surrogate answers before a sample is dropped
DEFAULT_MAX_INVALID_RETRIES: int = 3

# LLM sampling parameters
DEFAULT_MODEL_NAME: str = "gpt-3.5-turbo-0301"
DEFAULT_TEMPERATURE: float = 0.7
DEFAULT_TOP_P: float = 0.95
DEFAULT_PARALLELISM: int = 4
DEFAULT_API_KEY_ENV: str = "OPENAI_API_KEY"

# HTTP transport
DEFAULT_REQUEST_TIMEOUT: float = 60.0
DEFAULT_MAX_ATTEMPTS: int = 5
DEFAULT_BACKOFF_BASE: float = 1.0
DEFAULT_BACKOFF_MAX: float = 30.0
RETRYABLE_STATUS_CODES: FrozenSet[int] = frozenset({429, 500, 502, 503, 504})

# Experiment protocol
DEFAULT_N_INIT: int = 5
DEFAULT_N_TRIALS: int = 25
DEFAULT_GP_CANDIDATES: int = 512
DEFAULT_TPE_CANDIDATES: int = 24
TPE_MIN_OBSERVATIONS: int = 4

# Number formatting in prompts: significant digits and positional range
SIGNIFICANT_DIGITS: int = 6
POSITIONAL_RANGE: Tuple[float, float] = (1e-4, 1e6)

# Numeric floors
KDE_BANDWIDTH_FLOOR: float = 1e-3
KDE_REGULARIZATION: float = 1e-6
LPD_STD_FLOOR: float = 1e-6
GP_JITTER_LADDER: Tuple[float, ...] = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)

# GP ML-II grid (unit-cube inputs, standardized targets)
GP_LENGTHSCALE_GRID: Tuple[float, ...] = (0.03, 0.0949, 0.3, 0.949, 3.0)
GP_SIGNAL_VARIANCE_GRID: Tuple[float, ...] = (0.1, 0.316, 1.0, 3.16, 10.0)
GP_NOISE_VARIANCE_GRID: Tuple[float, ...] = (1e-6, 1.78e-5, 3.16e-4, 5.62e-3, 0.1)

# Name pattern used when hyperparameter names are hidden from the prompt
UNINFORMATIVE_NAME: str = "X_{index}"
