"""
Search space definitions: hyperparameter dimensions, value transforms and
space-filling initial designs.

Every dimension has a raw range (the units a person would type) and an
internal coordinate obtained through its transform (linear, log10 or logit).
Models, samplers and distance computations work in internal coordinates;
prompts and objectives see raw values.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from collections.abc import Mapping
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import special
from scipy.stats import qmc

from .exceptions import MissingFileError, ValidationError

logger = logging.getLogger("iclbo.search_space")

KINDS = ("continuous", "integer", "ordinal")
TRANSFORMS = ("linear", "log", "logit")
INIT_METHODS = ("random", "sobol", "latin_hypercube")

# Absolute slack under which an out-of-range value is float noise, not a clamp
_CLAMP_TOLERANCE = 1e-9


def round_half_away(value: float) -> float:
    """Round to the nearest integer, halves away from zero (2.5 -> 3, -2.5 -> -3)."""
    return float(math.copysign(math.floor(abs(value) + 0.5), value))


@dataclass(frozen=True)
class HyperparamDef:
    """One dimension of a search space, bounds in raw units."""

    name: str
    kind: str
    transform: str
    lower: float
    upper: float

    def __post_init__(self) -> None:
        if not self.name or not isinstance(self.name, str):
            raise ValidationError(f"Hyperparameter name must be a non-empty string: {self.name!r}")
        if self.kind not in KINDS:
            raise ValidationError(f"{self.name}: kind must be one of {KINDS}, got {self.kind!r}")
        if self.transform not in TRANSFORMS:
            raise ValidationError(
                f"{self.name}: transform must be one of {TRANSFORMS}, got {self.transform!r}"
            )
        lower, upper = float(self.lower), float(self.upper)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if not (math.isfinite(lower) and math.isfinite(upper)) or not lower < upper:
            raise ValidationError(f"{self.name}: need finite lower < upper, got [{lower}, {upper}]")
        if self.transform == "log" and lower <= 0:
            raise ValidationError(f"{self.name}: log transform requires lower > 0, got {lower}")
        if self.transform == "logit" and not (0.0 < lower and upper < 1.0):
            raise ValidationError(
                f"{self.name}: logit transform requires 0 < lower and upper < 1, "
                f"got [{lower}, {upper}]"
            )
        if self.kind == "integer" and not (lower.is_integer() and upper.is_integer()):
            raise ValidationError(
                f"{self.name}: integer kind requires integral bounds, got [{lower}, {upper}]"
            )

    def forward(self, value: float) -> float:
        """Raw value to internal coordinate."""
        if self.transform == "log":
            return float(np.log10(value))
        if self.transform == "logit":
            return float(special.logit(value))
        return float(value)

    def inverse(self, x: float) -> float:
        """Internal coordinate to raw value (no rounding or clamping)."""
        if self.transform == "log":
            return float(10.0**x)
        if self.transform == "logit":
            return float(special.expit(x))
        return float(x)

    @property
    def internal_bounds(self) -> Tuple[float, float]:
        return self.forward(self.lower), self.forward(self.upper)

    def contains(self, value: float) -> bool:
        if not self.lower <= value <= self.upper:
            return False
        return self.kind != "integer" or float(value).is_integer()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "transform": self.transform,
            "lower": self.lower,
            "upper": self.upper,
        }


class Configuration(Mapping):
    """
    Immutable, hashable mapping of hyperparameter name to raw value.

    Built through SearchSpace.make (validated) or SearchSpace.from_internal;
    keys keep the order of the space's dimensions.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, values: Union[Mapping[str, float], Sequence[Tuple[str, float]]]) -> None:
        pairs = values.items() if isinstance(values, Mapping) else values
        self._items: Tuple[Tuple[str, float], ...] = tuple((str(k), float(v)) for k, v in pairs)
        self._hash = hash(self._items)

    def __getitem__(self, key: str) -> float:
        for name, value in self._items:
            if name == key:
                return value
        raise KeyError(key)

    def __iter__(self) -> Iterator[str]:
        return (name for name, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Configuration):
            return self._items == other._items
        if isinstance(other, Mapping):
            return dict(self._items) == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._items)
        return f"Configuration({inner})"

    def to_dict(self) -> Dict[str, float]:
        return dict(self._items)


class SearchSpace:
    """Ordered collection of hyperparameter dimensions."""

    def __init__(self, dims: Sequence[HyperparamDef], name: str = "") -> None:
        if not dims:
            raise ValidationError("Search space needs at least one dimension")
        names = [dim.name for dim in dims]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise ValidationError(f"Duplicate hyperparameter names: {', '.join(duplicates)}")
        self.dims: Tuple[HyperparamDef, ...] = tuple(dims)
        self.name = name
        self._index = {dim.name: i for i, dim in enumerate(self.dims)}

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> List[str]:
        return [dim.name for dim in self.dims]

    def __getitem__(self, name: str) -> HyperparamDef:
        try:
            return self.dims[self._index[name]]
        except KeyError:
            raise KeyError(f"Unknown hyperparameter '{name}'") from None

    def __contains__(self, name: object) -> bool:
        return name in self._index

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SearchSpace) and self.dims == other.dims

    def __hash__(self) -> int:
        return hash(self.dims)

    def __repr__(self) -> str:
        label = f"{self.name!r}, " if self.name else ""
        return f"SearchSpace({label}d={self.d})"

    # ------------------------------------------------------------------ loading

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], name: str = "") -> "SearchSpace":
        """
        Build a space from its JSON document form.

        Args:
            data: {"dims": [{"name", "kind", "transform", "lower", "upper"}, ...]}
            name: Fallback space name when the document has none

        Returns:
            SearchSpace

        Raises:
            ValidationError: If the document is malformed or a dimension is invalid
        """
        dims_data = data.get("dims") if isinstance(data, Mapping) else None
        if not isinstance(dims_data, list):
            raise ValidationError("Search space document must contain a 'dims' list")
        dims = []
        for i, entry in enumerate(dims_data):
            if not isinstance(entry, Mapping):
                raise ValidationError(f"dims[{i}] must be an object")
            missing = [k for k in ("name", "kind", "transform", "lower", "upper") if k not in entry]
            if missing:
                raise ValidationError(f"dims[{i}] is missing fields: {', '.join(missing)}")
            try:
                lower, upper = float(entry["lower"]), float(entry["upper"])
            except (TypeError, ValueError) as e:
                raise ValidationError(f"dims[{i}] bounds must be numbers") from e
            dims.append(
                HyperparamDef(
                    name=entry["name"],
                    kind=entry["kind"],
                    transform=entry["transform"],
                    lower=lower,
                    upper=upper,
                )
            )
        return cls(dims, name=str(data.get("name", name)))

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "SearchSpace":
        path = Path(path)
        if not path.is_file():
            raise MissingFileError(f"Search space file does not exist: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ValidationError(f"Search space file {path} is not valid JSON: {e}") from e
        return cls.from_dict(data, name=path.stem)

    @classmethod
    def load_bundled(cls, name: str) -> "SearchSpace":
        """
        Load one of the search spaces shipped with the package.

        Args:
            name: Space name, e.g. "bayesmark_rf" or "hpobench_xgb"

        Raises:
            MissingFileError: If no bundled space has that name
        """
        resource = resources.files("src").joinpath("data", "spaces", f"{name}.json")
        if not resource.is_file():
            raise MissingFileError(
                f"No bundled search space '{name}' (available: {', '.join(bundled_spaces())})"
            )
        return cls.from_dict(json.loads(resource.read_text(encoding="utf-8")), name=name)

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "dims": [dim.to_dict() for dim in self.dims]}

    # ------------------------------------------------------------ configurations

    def make(self, values: Mapping[str, Any]) -> Configuration:
        """
        Validate raw values and wrap them as a Configuration.

        Raises:
            ValidationError: On missing/unknown keys, non-numeric values,
                out-of-range values or non-integral integer dims
        """
        unknown = [k for k in values if k not in self._index]
        if unknown:
            raise ValidationError(f"Unknown hyperparameters: {', '.join(map(str, unknown))}")
        pairs = []
        for dim in self.dims:
            if dim.name not in values:
                raise ValidationError(f"Missing value for hyperparameter '{dim.name}'")
            raw = values[dim.name]
            if isinstance(raw, bool) or not isinstance(raw, (int, float, np.integer, np.floating)):
                raise ValidationError(f"{dim.name}: value must be a number, got {raw!r}")
            value = float(raw)
            if not dim.contains(value):
                raise ValidationError(
                    f"{dim.name}: value {value} outside [{dim.lower}, {dim.upper}]"
                    + (" or not integral" if dim.kind == "integer" else "")
                )
            pairs.append((dim.name, value))
        return Configuration(pairs)

    def to_internal(self, cfg: Mapping[str, float]) -> np.ndarray:
        """
        Map a configuration to its internal coordinate vector.

        Args:
            cfg: Configuration valid for this space

        Returns:
            d-vector of transformed coordinates

        Raises:
            ValidationError: If a value is missing or outside its bounds (names the dimension)
        """
        out = np.empty(self.d, dtype=float)
        for i, dim in enumerate(self.dims):
            if dim.name not in cfg:
                raise ValidationError(f"Missing value for hyperparameter '{dim.name}'")
            value = float(cfg[dim.name])
            if not dim.lower <= value <= dim.upper:
                raise ValidationError(
                    f"{dim.name}: value {value} outside [{dim.lower}, {dim.upper}]"
                )
            out[i] = dim.forward(value)
        return out

    def from_internal(
        self, x: Sequence[float], clamped: Optional[List[str]] = None
    ) -> Configuration:
        """
        Map an internal coordinate vector back to a configuration.

        Integer dims are rounded half away from zero, then every value is
        clamped to its bounds. Clamp events are logged and, when a list is
        passed as ``clamped``, the affected dimension names are appended to it.

        Args:
            x: d-vector of internal coordinates
            clamped: Optional list collecting clamped dimension names

        Returns:
            Configuration
        """
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.shape[0] != self.d:
            raise ValidationError(f"Expected a {self.d}-vector, got length {x.shape[0]}")
        pairs = []
        for dim, xi in zip(self.dims, x):
            if math.isnan(xi):
                raise ValidationError(f"{dim.name}: internal coordinate is NaN")
            value = dim.inverse(xi)
            if dim.kind == "integer":
                value = round_half_away(value)
            pairs.append((dim.name, self._clamp(dim, value, clamped)))
        return Configuration(pairs)

    def clamp(
        self, values: Mapping[str, float], clamped: Optional[List[str]] = None
    ) -> Configuration:
        """Round integer dims and clamp raw values into bounds."""
        pairs = []
        for dim in self.dims:
            value = float(values[dim.name])
            if dim.kind == "integer" and math.isfinite(value):
                value = round_half_away(value)
            pairs.append((dim.name, self._clamp(dim, value, clamped)))
        return Configuration(pairs)

    @staticmethod
    def _clamp(dim: HyperparamDef, value: float, clamped: Optional[List[str]]) -> float:
        if dim.lower <= value <= dim.upper:
            return value
        bound = dim.lower if value < dim.lower else dim.upper
        if abs(value - bound) > _CLAMP_TOLERANCE * max(1.0, abs(bound)):
            logger.debug(f"Clamped {dim.name} from {value!r} to {bound!r}")
            if clamped is not None:
                clamped.append(dim.name)
        return bound

    # --------------------------------------------------------- unit-cube mapping

    def internal_bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Lower and upper internal bounds as two d-vectors."""
        bounds = np.array([dim.internal_bounds for dim in self.dims], dtype=float)
        return bounds[:, 0], bounds[:, 1]

    def to_unit(self, cfg: Mapping[str, float]) -> np.ndarray:
        """Internal coordinates rescaled to [0, 1] per dimension."""
        lo, hi = self.internal_bounds()
        return (self.to_internal(cfg) - lo) / (hi - lo)

    def from_unit(self, u: Sequence[float], clamped: Optional[List[str]] = None) -> Configuration:
        lo, hi = self.internal_bounds()
        return self.from_internal(lo + np.asarray(u, dtype=float) * (hi - lo), clamped)

    def sample_init(self, n: int, method: str = "random", seed: int = 0) -> List[Configuration]:
        """
        Draw an initial design.

        Each dimension is sampled in internal space (uniform over its internal
        range for "random", a scrambled Sobol or Latin hypercube design
        otherwise) and mapped back through from_internal.

        Args:
            n: Number of configurations (>= 1)
            method: "random", "sobol" or "latin_hypercube"
            seed: Seed; equal (method, seed) pairs give equal designs

        Returns:
            List of n configurations
        """
        return [self.from_unit(row) for row in unit_design(self.d, n, method, seed)]


def unit_design(d: int, n: int, method: str, seed: Union[int, np.random.Generator]) -> np.ndarray:
    """
    Draw an (n, d) design in the unit cube.

    Raises:
        ValidationError: If n < 1 or the method is unknown
    """
    if n < 1:
        raise ValidationError(f"Number of initial points must be >= 1, got {n}")
    if method == "random":
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        return rng.random((n, d))
    if method == "sobol":
        engine = qmc.Sobol(d=d, scramble=True, seed=seed)
        with warnings.catch_warnings():
            # non power-of-two n loses the balance guarantee; acceptable for small designs
            warnings.simplefilter("ignore", UserWarning)
            return engine.random(n)
    if method == "latin_hypercube":
        return qmc.LatinHypercube(d=d, seed=seed).random(n)
    raise ValidationError(f"Initial design method must be one of {INIT_METHODS}, got {method!r}")


def bundled_spaces() -> List[str]:
    """Names of the search spaces shipped in src/data/spaces."""
    folder = resources.files("src").joinpath("data", "spaces")
    return sorted(p.name[: -len(".json")] for p in folder.iterdir() if p.name.endswith(".json"))


def to_internal(space: SearchSpace, cfg: Mapping[str, float]) -> np.ndarray:
    return space.to_internal(cfg)


def from_internal(space: SearchSpace, x: Sequence[float]) -> Configuration:
    return space.from_internal(x)


def sample_init(
    space: SearchSpace, n: int, method: str = "random", seed: int = 0
) -> List[Configuration]:
    return space.sample_init(n, method, seed)
