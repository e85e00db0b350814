"""
Benchmark objectives (minimized): synthetic test functions over the unit
cube and tabular look-up grids of precomputed scores.

Objectives are resolved by name:
    rosenbrock_2d, griewank_5d, ktablet_15d   synthetic(<function>, <d>)
    tabular:demo_rf                           a grid shipped in src/data/tabular
    tabular:/path/to/grid.json                a grid file
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from importlib import resources
from itertools import product
from pathlib import Path
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import regex

from .exceptions import DataIntegrityError, MissingFileError, ObjectiveError, ValidationError
from .metrics import TaskBounds
from .prompts import DataCard, ModelCard, StatisticalInfo
from .search_space import Configuration, HyperparamDef, SearchSpace

logger = logging.getLogger("iclbo.objectives")

SYNTHETIC_DOMAINS: Dict[str, Tuple[float, float]] = {
    "rosenbrock": (-5.0, 10.0),
    "griewank": (-600.0, 600.0),
    "ktablet": (-5.12, 5.12),
}
ESTIMATE_SAMPLES = 100_000
_SYNTHETIC_RE = regex.compile(r"^(?P<func>[a-z]+)_(?P<d>\d+)d$")


@dataclass(frozen=True, eq=False)
class Objective:
    """A black-box function to minimize over a search space."""

    name: str
    space: SearchSpace
    eval_fn: Callable[[Configuration], float]
    bounds: TaskBounds
    model_card: Optional[ModelCard] = None
    data_card: Optional[DataCard] = None

    def evaluate(self, cfg: Mapping[str, float]) -> float:
        """
        Score a configuration.

        Raises:
            ObjectiveError: If the function fails or returns a non-finite value
        """
        try:
            value = float(self.eval_fn(cfg))
        except (DataIntegrityError, ObjectiveError):
            raise
        except Exception as e:
            raise ObjectiveError(f"{self.name}: evaluation failed for {dict(cfg)}: {e}") from e
        if not math.isfinite(value):
            raise ObjectiveError(f"{self.name}: non-finite score {value} for {dict(cfg)}")
        return value


# ------------------------------------------------------------------ synthetic


def rosenbrock(x: np.ndarray) -> np.ndarray:
    """sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2 over the last axis; minimum 0 at x = 1."""
    x = np.asarray(x, dtype=float)
    head, tail = x[..., :-1], x[..., 1:]
    return np.sum(100.0 * (tail - head**2) ** 2 + (1.0 - head) ** 2, axis=-1)


def griewank(x: np.ndarray) -> np.ndarray:
    """1 + sum x_i^2 / 4000 - prod cos(x_i / sqrt(i)); minimum 0 at the origin."""
    x = np.asarray(x, dtype=float)
    i = np.arange(1, x.shape[-1] + 1)
    return 1.0 + np.sum(x**2, axis=-1) / 4000.0 - np.prod(np.cos(x / np.sqrt(i)), axis=-1)


def ktablet(x: np.ndarray) -> np.ndarray:
    """sum_{i<k} (100 x_i)^2 + sum_{i>=k} x_i^2 with k = ceil(d / 4); minimum 0 at the origin."""
    x = np.asarray(x, dtype=float)
    k = math.ceil(x.shape[-1] / 4)
    return np.sum((100.0 * x[..., :k]) ** 2, axis=-1) + np.sum(x[..., k:] ** 2, axis=-1)


SYNTHETIC_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "rosenbrock": rosenbrock,
    "griewank": griewank,
    "ktablet": ktablet,
}


def to_canonical(name: str, u: np.ndarray) -> np.ndarray:
    """Map unit-cube inputs affinely onto the function's canonical domain."""
    lo, hi = SYNTHETIC_DOMAINS[name]
    return lo + np.asarray(u, dtype=float) * (hi - lo)


def load_task_bounds() -> Dict[str, TaskBounds]:
    resource = resources.files("src").joinpath("data", "task_bounds.json")
    data = json.loads(resource.read_text(encoding="utf-8"))
    return {key: TaskBounds(v["s_star_min"], v["s_star_max"]) for key, v in data.items()}


def estimate_bounds(name: str, d: int, n: int = ESTIMATE_SAMPLES, seed: int = 0) -> TaskBounds:
    """
    Bounds by dense uniform random search. The minimum is the known optimum
    (0 for every synthetic function); the maximum is the largest value seen.
    """
    rng = np.random.default_rng(seed)
    values = SYNTHETIC_FUNCTIONS[name](to_canonical(name, rng.random((n, d))))
    return TaskBounds(0.0, float(values.max()), estimated=True)


def synthetic(name: str, d: int) -> Objective:
    """
    Synthetic objective over x0..x{d-1} in [0, 1].

    Raises:
        ValidationError: On an unknown function or d < 2
    """
    if name not in SYNTHETIC_FUNCTIONS:
        raise ValidationError(
            f"objective: unknown synthetic function '{name}' "
            f"(available: {', '.join(SYNTHETIC_FUNCTIONS)})"
        )
    if d < 2:
        raise ValidationError(f"objective: synthetic functions need d >= 2, got {d}")

    space = SearchSpace(
        [HyperparamDef(f"x{i}", "continuous", "linear", 0.0, 1.0) for i in range(d)],
        name=f"{name}_{d}d",
    )
    func = SYNTHETIC_FUNCTIONS[name]
    names = space.names

    def eval_fn(cfg: Mapping[str, float]) -> float:
        u = np.array([cfg[key] for key in names], dtype=float)
        return float(func(to_canonical(name, u)))

    key = f"{name}_{d}d"
    bounds = load_task_bounds().get(key)
    if bounds is None:
        bounds = estimate_bounds(name, d)
        logger.warning(
            f"No shipped bounds for {key}, estimated from {ESTIMATE_SAMPLES} random samples "
            f"(max {bounds.s_star_max:g})"
        )
    model_card = ModelCard.for_space(space, f"{name} test function", "regression", "value")
    return Objective(key, space, eval_fn, bounds, model_card=model_card)


# -------------------------------------------------------------------- tabular


@dataclass(frozen=True, eq=False)
class TabularGrid:
    """
    Precomputed scores on a full grid.

    ``values[name]`` lists each dimension's grid values in ascending order;
    ``rows`` maps a tuple of per-dimension grid indices to the stored score.
    """

    space: SearchSpace
    values: Dict[str, Tuple[float, ...]]
    rows: Dict[Tuple[int, ...], float]

    def __post_init__(self) -> None:
        shape = [len(self.values[name]) for name in self.space.names]
        missing = [cell for cell in product(*(range(s) for s in shape)) if cell not in self.rows]
        if missing:
            shown = ", ".join(str(self.cell_config(cell).to_dict()) for cell in missing[:5])
            raise DataIntegrityError(
                f"Tabular grid '{self.space.name}' is missing {len(missing)} cells: {shown}"
                + (" ..." if len(missing) > 5 else "")
            )

    def cell_config(self, cell: Tuple[int, ...]) -> Configuration:
        return Configuration(
            [(name, self.values[name][i]) for name, i in zip(self.space.names, cell)]
        )

    def snap(self, cfg: Mapping[str, float]) -> Tuple[int, ...]:
        """
        Nearest grid cell per dimension, measured in internal coordinates;
        an exact tie goes to the lower cell.
        """
        cell = []
        for dim in self.space.dims:
            grid = np.array([dim.forward(v) for v in self.values[dim.name]])
            query = dim.forward(min(max(float(cfg[dim.name]), dim.lower), dim.upper))
            # argmin returns the first minimum; grids are ascending
            cell.append(int(np.argmin(np.abs(grid - query))))
        return tuple(cell)

    def lookup(self, cfg: Mapping[str, float]) -> float:
        cell = self.snap(cfg)
        if cell not in self.rows:
            raise DataIntegrityError(f"No stored score for cell {self.cell_config(cell).to_dict()}")
        return self.rows[cell]

    def configs(self) -> List[Configuration]:
        return [self.cell_config(cell) for cell in sorted(self.rows)]


def _grid_index(values: Tuple[float, ...], value: float, name: str) -> int:
    matches = np.flatnonzero(np.isclose(values, value, rtol=1e-9, atol=1e-12))
    if matches.size == 0:
        raise DataIntegrityError(f"{name}={value} is not on the declared grid {list(values)}")
    return int(matches[0])


def _data_card_from_dict(data: Mapping[str, Any]) -> DataCard:
    data = dict(data)
    stats = data.get("statistical_info")
    if isinstance(stats, Mapping):
        data["statistical_info"] = StatisticalInfo(
            **{**stats, "skewness": tuple(stats.get("skewness", ()))}
        )
    if data.get("class_distribution") is not None:
        data["class_distribution"] = tuple(data["class_distribution"])
    try:
        return DataCard(**data)
    except TypeError as e:
        raise ValidationError(f"Malformed data_card: {e}") from e


def tabular_from_dict(data: Mapping[str, Any], name: str = "") -> Objective:
    """
    Build a tabular objective from its JSON document.

    Document keys: "space" (search space document), "grid" ({name: [values]}),
    "rows" ([{"config": {...}, "score": s}]) and optionally "name",
    "model_card" ({model_name, task, metric}) and "data_card".

    Raises:
        ValidationError: If the document is malformed
        DataIntegrityError: If a row is off the grid or a cell has no score
    """
    for key in ("space", "grid", "rows"):
        if key not in data:
            raise ValidationError(f"Tabular document is missing '{key}'")
    name = str(data.get("name", name))
    space = SearchSpace.from_dict(data["space"], name=name)
    grid = data["grid"]
    if sorted(grid) != sorted(space.names):
        raise ValidationError(f"Grid dimensions {sorted(grid)} do not match space {space.names}")
    values = {key: tuple(sorted(float(v) for v in grid[key])) for key in space.names}

    rows: Dict[Tuple[int, ...], float] = {}
    for i, row in enumerate(data["rows"]):
        try:
            cfg, score = row["config"], float(row["score"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"rows[{i}] needs a config and a numeric score") from e
        cell = tuple(_grid_index(values[key], float(cfg[key]), key) for key in space.names)
        rows[cell] = score
    table = TabularGrid(space, values, rows)

    scores = list(rows.values())
    bounds = TaskBounds(min(scores), max(scores))
    model_card = None
    if "model_card" in data:
        card = data["model_card"]
        model_card = ModelCard.for_space(space, card["model_name"], card["task"], card["metric"])
    data_card = _data_card_from_dict(data["data_card"]) if "data_card" in data else None
    return Objective(
        name=f"tabular:{name}",
        space=space,
        eval_fn=table.lookup,
        bounds=bounds,
        model_card=model_card,
        data_card=data_card,
    )


def load_tabular(path: Union[str, Path]) -> Objective:
    """
    Load a tabular objective file.

    Raises:
        MissingFileError: If the file does not exist
        ValidationError: If it is not valid JSON or malformed
        DataIntegrityError: If the grid is not fully covered
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"Tabular objective file does not exist: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValidationError(f"Tabular objective file {path} is not valid JSON: {e}") from e
    return tabular_from_dict(data, name=path.stem)


def bundled_tabular(name: str) -> Objective:
    resource = resources.files("src").joinpath("data", "tabular", f"{name}.json")
    if not resource.is_file():
        raise MissingFileError(f"No bundled tabular objective '{name}'")
    return tabular_from_dict(json.loads(resource.read_text(encoding="utf-8")), name=name)


# ------------------------------------------------------------------- registry


class ObjectiveRegistry:
    """Resolves objective names; extra objectives can be registered by name."""

    def __init__(self) -> None:
        self._custom: Dict[str, Callable[[], Objective]] = {}

    def register(self, name: str, factory: Callable[[], Objective]) -> None:
        self._custom[name] = factory

    def resolve(self, name: str) -> Objective:
        """
        Raises:
            ValidationError: If the name matches no objective (message names the field)
        """
        if name in self._custom:
            return self._custom[name]()
        if name.startswith("tabular:"):
            ref = name[len("tabular:") :]
            if ref.endswith(".json") or "/" in ref:
                return load_tabular(ref)
            return bundled_tabular(ref)
        match = _SYNTHETIC_RE.match(name)
        if match is None or match.group("func") not in SYNTHETIC_FUNCTIONS:
            raise ValidationError(
                f"objective: unknown objective '{name}' (expected <function>_<d>d with "
                f"function in {list(SYNTHETIC_FUNCTIONS)}, or tabular:<name|path>)"
            )
        return synthetic(match.group("func"), int(match.group("d")))


registry = ObjectiveRegistry()
