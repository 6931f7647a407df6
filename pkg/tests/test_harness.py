import json
import os

import jsonschema
import pytest

from prlab import harness
from prlab.harness import ExperimentConfig, evaluate_band, recheck_report, run_experiment


def _report_schema():
    return harness._schema("report.schema.json")


def test_registry_contract():
    ids = set(harness.REGISTRY)
    assert len(ids) >= 8
    for required in ("decider-roundtrip", "restriction-check", "cp-duality",
                     "cp-generator-identity", "cp-mixing-a", "cp-mixing-b", "schonmann-a",
                     "schonmann-b", "mixture-variance"):
        assert required in ids


def test_unknown_experiment_names_available():
    with pytest.raises(harness.UnknownExperiment) as info:
        run_experiment(ExperimentConfig("no-such-thing"))
    assert "decider-roundtrip" in str(info.value)


def test_invalid_params_rejected():
    with pytest.raises(jsonschema.ValidationError):
        run_experiment(ExperimentConfig("decider-roundtrip", {"bogus": 1}))
    with pytest.raises(jsonschema.ValidationError):
        run_experiment(ExperimentConfig("decider-roundtrip", {"tol": -1.0}))
    with pytest.raises(jsonschema.ValidationError):
        ExperimentConfig.from_dict({"experiment": "x", "seed": -1})


def test_determinism_byte_identical(tmp_path):
    texts = []
    for run in range(2):
        out = tmp_path / f"r{run}"
        cfg = ExperimentConfig("restriction-check", n_samples=20_000, seed=11, out=str(out))
        run_experiment(cfg)
        data = json.loads((out / "restriction-check.report.json").read_text())
        data.pop("wall_clock_seconds")
        data["config"].pop("out")
        texts.append(json.dumps(data, sort_keys=True))
    assert texts[0] == texts[1]


def test_report_schema_and_recheck(tmp_path):
    cfg = ExperimentConfig("sampler-fidelity", n_samples=20_000, seed=3, out=str(tmp_path))
    report = run_experiment(cfg)
    data = json.loads((tmp_path / "sampler-fidelity.report.json").read_text())
    jsonschema.validate(data, _report_schema())
    assert data["config"]["seed"] == 3
    assert recheck_report(data)
    assert os.path.exists(tmp_path / "sampler-fidelity.avoidance.csv")
    assert report.exit_code == harness.EXIT_PASS
    data["quantities"]["max_abs_z"] = 99.0
    assert not recheck_report(data)


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"schema_version": "1", "experiment": "decider-witness",
                                "params": {"tol": 1e-12}, "seed": 5}))
    cfg = harness.load_config(path)
    assert cfg.seed == 5 and cfg.params == {"tol": 1e-12}
    report = run_experiment(cfg)
    assert report.passed and report.verdicts["law"] == "NotRepresentable"


def test_failing_band_gives_exit_one():
    report = run_experiment(ExperimentConfig("restriction-exact", {"tol": 1e-30}, n_samples=3))
    assert not report.passed and report.exit_code == harness.EXIT_FAIL


def test_band_kinds():
    est = lambda m, s: {"mean": m, "stderr": s, "n_samples": 10, "seed": 0}
    q = {"a": est(1.0, 0.1), "b": est(1.2, 0.1), "c": est(2.0, 0.1), "flag": True, "x": 0.3,
         "none": None}
    assert evaluate_band({"kind": "agree", "a": "a", "b": "b", "k": 4}, q)
    assert not evaluate_band({"kind": "agree", "a": "a", "b": "c", "k": 4}, q)
    assert evaluate_band({"kind": "lt", "quantity": "a", "value": 1.5, "k": 4}, q)
    assert not evaluate_band({"kind": "gt", "quantity": "a", "value": 0.7, "k": 4}, q)
    assert evaluate_band({"kind": "in_range", "quantity": "x", "lo": 0, "hi": 1}, q)
    assert evaluate_band({"kind": "is_true", "quantity": "flag"}, q)
    assert evaluate_band({"kind": "abs_le", "quantity": "x", "bound": 0.3}, q)
    inc = {"kind": "monotone", "direction": "increasing", "k": 3,
           "quantities": ["a", "none", "b", "c"]}
    assert evaluate_band(inc, q)
    assert not evaluate_band({**inc, "direction": "decreasing"}, q)
    assert evaluate_band({"kind": "gt", "quantity": "none", "value": 0}, q) is None


def test_infeasible_propagates():
    from prlab.stats import InfeasibleConditioning
    with pytest.raises(InfeasibleConditioning):
        run_experiment(ExperimentConfig("restriction-check", {"floor": 0.99}, n_samples=1000))
    assert harness.exit_code_for(InfeasibleConditioning(0.0, 1.0)) == harness.EXIT_INFEASIBLE


def test_derive_seed_reexported():
    assert harness.derive_seed(1, 0) != harness.derive_seed(1, 1)
