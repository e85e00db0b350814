"""
Tests for the experiment runner and report aggregation.
"""

import json

import numpy as np
import pytest

from src.bench import RunSpec, expand_logs, load_log, log_filename, read_logs, report, run
from src.config import EngineSettings
from src.exceptions import (
    ConfigurationError,
    MissingFileError,
    ObjectiveError,
    ValidationError,
)
from src.llm_client import LLMClient, MockBackend
from src.metrics import TaskBounds, normalized_regret
from src.mock_responders import OracleResponder
from src.objectives import Objective, ObjectiveRegistry
from src.prompts import ModelCard
from src.search_space import HyperparamDef, SearchSpace


def _mock_client(responder=None, seed=0):
    return LLMClient(MockBackend(seed=seed, responder=responder), parallelism=2)


def _bowl_registry():
    """Registry with a quadratic bowl centred at (0.4, 0.4) on the unit square."""
    space = SearchSpace(
        [HyperparamDef(f"x{i}", "continuous", "linear", 0.0, 1.0) for i in range(2)],
        name="bowl_2d",
    )

    def eval_fn(cfg):
        return (cfg["x0"] - 0.4) ** 2 + (cfg["x1"] - 0.4) ** 2

    card = ModelCard.for_space(space, "bowl", "regression", "value")
    objective = Objective("bowl_2d", space, eval_fn, TaskBounds(0.0, 0.72), model_card=card)
    registry = ObjectiveRegistry()
    registry.register("bowl_2d", lambda: objective)
    return registry


class TestRunSpec:
    """Test cases for RunSpec parsing and validation."""

    def test_from_dict_defaults(self):
        """Test a minimal spec."""
        spec = RunSpec.from_dict({"objective": "rosenbrock_2d", "method": "random"})

        assert spec.n_init == 5
        assert spec.n_trials == 25
        assert spec.init_mode == "random_shared"
        assert spec.engine == EngineSettings()
        assert not spec.needs_client

    def test_nested_engine(self):
        """Test that engine overrides are parsed and validated."""
        spec = RunSpec.from_dict(
            {"objective": "rosenbrock_2d", "method": "llambo_disc", "engine": {"k_samples": 4}}
        )

        assert spec.engine.k_samples == 4
        assert spec.needs_client

    @pytest.mark.parametrize(
        "data, field",
        [
            ({"objective": "rosenbrock_2d", "method": "random", "budget": 3}, "budget"),
            ({"method": "random"}, "objective"),
            ({"objective": "rosenbrock_2d", "method": "smac"}, "method"),
            ({"objective": "rosenbrock_2d", "method": "random", "n_trials": 3}, "n_trials"),
            ({"objective": "rosenbrock_2d", "method": "random", "n_init": 0}, "n_init"),
            ({"objective": "rosenbrock_2d", "method": "llambo_gen", "n_init": 1}, "n_init"),
            ({"objective": "rosenbrock_2d", "method": "random", "seed": "7"}, "seed"),
            ({"objective": "rosenbrock_2d", "method": "random", "init_mode": "x"}, "init_mode"),
            (
                {"objective": "rosenbrock_2d", "method": "random", "engine": {"alpha": -3}},
                "engine.alpha",
            ),
        ],
    )
    def test_invalid_fields_are_named(self, data, field):
        """Test that validation errors name the offending field."""
        with pytest.raises(ValidationError, match=field):
            RunSpec.from_dict(data)

    def test_from_file(self, tmp_path):
        """Test loading, a missing file and corrupt JSON."""
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"objective": "ktablet_2d", "method": "gp"}), encoding="utf-8")

        assert RunSpec.from_file(path).method == "gp"
        with pytest.raises(MissingFileError):
            RunSpec.from_file(tmp_path / "absent.json")
        path.write_text("{", encoding="utf-8")
        with pytest.raises(ValidationError):
            RunSpec.from_file(path)

    def test_warmstart_needs_client(self):
        """Test that warmstart init needs a client for any method."""
        spec = RunSpec("rosenbrock_2d", "random", init_mode="warmstart")

        assert spec.needs_client

    def test_log_filename(self):
        """Test the per-run log name, with path characters replaced."""
        assert log_filename(RunSpec("rosenbrock_2d", "random", seed=3)) == (
            "rosenbrock_2d__random__seed3.jsonl"
        )
        name = log_filename(RunSpec("tabular:/data/grid.json", "gp"))
        assert "/" not in name
        assert name.endswith("__gp__seed0.jsonl")


class TestRun:
    """Test cases for run()."""

    def test_random_run_log(self, tmp_path):
        """Test 25 log lines with a running-minimum best_so_far."""
        log = tmp_path / "run.jsonl"
        result = run(RunSpec("rosenbrock_2d", "random", seed=1), log_path=log)
        records = load_log(log)

        assert len(records) == 25
        assert records == result.records
        assert set(records[0]) == {
            "task",
            "method",
            "seed",
            "trial",
            "config",
            "score",
            "best_so_far",
            "candidate_count",
            "acceptance_rate",
            "wallclock_ms",
        }
        scores = [r["score"] for r in records]
        assert [r["best_so_far"] for r in records] == list(np.minimum.accumulate(scores))
        assert [r["trial"] for r in records] == list(range(25))
        assert records[0]["candidate_count"] == 0
        assert records[0]["acceptance_rate"] is None
        assert records[5]["candidate_count"] == 1

    def test_shared_initialization(self):
        """Test that methods with the same seed start from the same points."""
        first = run(RunSpec("ktablet_2d", "random", n_trials=8, seed=4))
        second = run(RunSpec("ktablet_2d", "tpe_multi", n_trials=8, seed=4))

        assert [r["config"] for r in first.records[:5]] == [
            r["config"] for r in second.records[:5]
        ]
        assert [r["score"] for r in first.records[:5]] == [r["score"] for r in second.records[:5]]

    @pytest.mark.parametrize("method", ["tpe_ind", "tpe_multi", "gp"])
    def test_classical_methods(self, method):
        """Test that every baseline completes a short run."""
        spec = RunSpec(
            "griewank_2d", method, n_trials=9, seed=2, engine=EngineSettings(gp_candidates=64)
        )
        result = run(spec)

        assert len(result.trajectory) == 9
        assert 0.0 <= result.final_regret <= 1.0
        assert all(r["candidate_count"] > 0 for r in result.records[5:])

    def test_llm_method_needs_client(self):
        """Test the configuration error when no client is given."""
        with pytest.raises(ConfigurationError, match="needs an LLM client"):
            run(RunSpec("rosenbrock_2d", "llambo_disc"))

    def test_unknown_objective(self):
        """Test that resolution errors name the objective field."""
        with pytest.raises(ValidationError, match="objective"):
            run(RunSpec("sphere_2d", "random"))

    @pytest.mark.parametrize("method", ["llambo_disc", "llambo_gen"])
    def test_llm_methods_with_mock(self, method):
        """Test short in-context runs against the default mock."""
        spec = RunSpec(
            "rosenbrock_2d",
            method,
            n_trials=7,
            seed=3,
            engine=EngineSettings(m_candidates=5, k_samples=3),
        )
        result = run(spec, client=_mock_client())

        assert len(result.records) == 7
        for record in result.records[5:]:
            assert record["candidate_count"] >= 1
            assert 0.0 <= record["acceptance_rate"] <= 1.0
            assert record["wallclock_ms"] == 0.0

    def test_warmstart_init(self):
        """Test a run whose initial design comes from the mock LLM."""
        spec = RunSpec(
            "tabular:demo_rf",
            "random",
            n_trials=7,
            init_mode="warmstart",
            engine=EngineSettings(warmstart_context="partial"),
        )
        result = run(spec, client=_mock_client())

        assert len(result.trajectory) == 7
        assert result.objective.name == "tabular:demo_rf"

    def test_determinism(self, tmp_path):
        """Test byte-identical logs for two seeded in-context runs."""
        spec = RunSpec("rosenbrock_2d", "llambo_disc", n_trials=25, seed=7)
        run(spec, client=_mock_client(), log_path=tmp_path / "a.jsonl")
        run(spec, client=_mock_client(), log_path=tmp_path / "b.jsonl")

        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_objective_failure_keeps_partial_log(self, tmp_path):
        """Test that a failing objective aborts with the evaluated trials logged."""
        space = SearchSpace([HyperparamDef("x", "continuous", "linear", 0.0, 1.0)])
        calls = []

        def eval_fn(cfg):
            calls.append(cfg)
            if len(calls) > 3:
                raise RuntimeError("simulator crashed")
            return cfg["x"]

        registry = ObjectiveRegistry()
        registry.register("fragile", lambda: Objective("fragile", space, eval_fn, TaskBounds(0, 1)))
        log = tmp_path / "fragile.jsonl"

        with pytest.raises(ObjectiveError, match="simulator crashed"):
            run(RunSpec("fragile", "random", n_trials=6), registry=registry, log_path=log)
        assert len(load_log(log)) == 3

    def test_tpe_beats_random(self):
        """Test median final regret of tpe_multi against random over paired seeds."""
        tpe, rand = [], []
        for seed in range(10):
            tpe.append(run(RunSpec("rosenbrock_2d", "tpe_multi", n_trials=30, seed=seed)))
            rand.append(run(RunSpec("rosenbrock_2d", "random", n_trials=30, seed=seed)))

        assert np.median([r.final_regret for r in tpe]) < np.median(
            [r.final_regret for r in rand]
        )

    def test_oracle_guided_loop_beats_random(self):
        """Test that the in-context loop exploits an informative mock."""
        registry = _bowl_registry()
        oracle = OracleResponder({"x0": 0.4, "x1": 0.4}, scale=0.05)
        engine = EngineSettings(m_candidates=20, k_samples=2)
        wins = 0
        for seed in range(10):
            guided = run(
                RunSpec("bowl_2d", "llambo_disc", seed=seed, engine=engine),
                registry=registry,
                client=_mock_client(oracle, seed=seed),
            )
            baseline = run(RunSpec("bowl_2d", "random", seed=seed), registry=registry)
            wins += int(guided.final_regret <= baseline.final_regret)

        assert wins >= 8


class TestReport:
    """Test cases for log reading and report aggregation."""

    def _two_seeds(self, tmp_path):
        paths = []
        for seed in (0, 1):
            spec = RunSpec("rosenbrock_2d", "random", seed=seed)
            path = tmp_path / log_filename(spec)
            run(spec, log_path=path)
            paths.append(path)
        return paths

    def test_rows_and_means(self, tmp_path):
        """Test per-seed regret rows and the cross-seed mean."""
        paths = self._two_seeds(tmp_path)
        rep = report(paths)

        assert len(rep.rows) == 50
        assert len(rep.means) == 25
        assert rep.skipped == 0
        bounds = TaskBounds(0.0, 1102581.0)
        expected = [
            normalized_regret([r["score"] for r in load_log(p)], bounds) for p in paths
        ]
        assert rep.means["normalized_regret"].tolist() == pytest.approx(
            list(np.mean(expected, axis=0))
        )
        seed0 = rep.rows[rep.rows["seed"] == 0]["normalized_regret"].tolist()
        assert seed0 == pytest.approx(expected[0])

    def test_csv(self, tmp_path):
        """Test the CSV layout with mean rows appended."""
        rep = report(self._two_seeds(tmp_path))
        lines = rep.to_csv(tmp_path / "report.csv").splitlines()

        assert lines[0] == "task,method,seed,trial,normalized_regret"
        assert len(lines) == 1 + 50 + 25
        assert lines[-1].startswith("rosenbrock_2d,random,mean,24,")
        assert (tmp_path / "report.csv").read_text(encoding="utf-8").splitlines() == lines

    def test_corrupt_lines_are_skipped(self, tmp_path):
        """Test that bad lines are counted and the rest is kept."""
        path = tmp_path / "mixed.jsonl"
        good = {"task": "rosenbrock_2d", "method": "random", "seed": 0, "trial": 0, "score": 5.0}
        path.write_text(
            json.dumps(good) + "\n{truncated\n" + json.dumps({"task": "x"}) + "\n\n",
            encoding="utf-8",
        )
        frame, skipped = read_logs([path])

        assert skipped == 2
        assert len(frame) == 1
        assert report([path]).skipped == 2

    def test_undecodable_and_non_finite_lines_are_skipped(self, tmp_path):
        """Test that invalid UTF-8 bytes and NaN scores count as corrupt lines."""
        path = tmp_path / "bytes.jsonl"
        good = {"task": "rosenbrock_2d", "method": "random", "seed": 0, "trial": 0, "score": 5.0}
        nan = dict(good, trial=1, score=float("nan"))
        path.write_bytes(
            (json.dumps(good) + "\n").encode("utf-8")
            + b"\xff\xfe garbage\n"
            + (json.dumps(nan) + "\n").encode("utf-8")
        )
        frame, skipped = read_logs([path])

        assert skipped == 2
        assert frame["trial"].tolist() == [0]
        assert report([path]).skipped == 2

    def test_report_on_tabular_path_objective(self, tmp_path):
        """Test that a log written for a grid file can be reported without a registry."""
        grid = {
            "name": "my_grid",
            "space": {
                "dims": [
                    {
                        "name": "a",
                        "kind": "continuous",
                        "transform": "linear",
                        "lower": 0,
                        "upper": 2,
                    }
                ]
            },
            "grid": {"a": [0, 1, 2]},
            "rows": [
                {"config": {"a": 0}, "score": 1.0},
                {"config": {"a": 1}, "score": 0.5},
                {"config": {"a": 2}, "score": 2.0},
            ],
        }
        grid_path = tmp_path / "my_grid.json"
        grid_path.write_text(json.dumps(grid), encoding="utf-8")
        spec = RunSpec(f"tabular:{grid_path}", "random", n_init=3, n_trials=6)
        log = tmp_path / log_filename(spec)

        run(spec, log_path=log)
        rep = report([log])

        assert {r["task"] for r in load_log(log)} == {spec.objective}
        assert len(rep.rows) == 6
        assert set(rep.rows["task"]) == {spec.objective}
        assert rep.rows["normalized_regret"].between(0.0, 1.0).all()

    def test_explicit_bounds(self, tmp_path):
        """Test bounds passed in for a task the registry does not know."""
        path = tmp_path / "custom.jsonl"
        lines = [
            {"task": "custom", "method": "random", "seed": 0, "trial": t, "score": s}
            for t, s in enumerate([8.0, 4.0, 6.0])
        ]
        path.write_text("".join(json.dumps(x) + "\n" for x in lines), encoding="utf-8")
        rep = report([path], bounds={"custom": TaskBounds(0.0, 8.0)})

        assert rep.rows["normalized_regret"].tolist() == pytest.approx([1.0, 0.5, 0.5])

    def test_no_usable_lines(self, tmp_path):
        """Test that a report needs at least one record."""
        path = tmp_path / "empty.jsonl"
        path.write_text("not json\n", encoding="utf-8")

        with pytest.raises(ValidationError):
            report([path])

    def test_expand_logs(self, tmp_path):
        """Test glob expansion to sorted unique files."""
        paths = self._two_seeds(tmp_path)
        pattern = str(tmp_path / "*.jsonl")

        assert expand_logs([pattern, pattern]) == sorted(paths)
        assert expand_logs([str(tmp_path / "*.csv")]) == []
