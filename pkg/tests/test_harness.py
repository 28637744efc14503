import json

import numpy as np
import pytest

from blocktri.harness import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_PARTIAL,
    ConfigError,
    ExperimentConfig,
    ResultRecord,
    config_from_dict,
    emit,
    main,
    run,
)


def _strip_wall(record):
    d = record.to_jsonable()
    d.pop("wall_time_s")
    return d


def test_run_deterministic_and_worker_invariant():
    cfg = ExperimentConfig("logdet-identity", n=4, ell=3, z=0.5 + 0.5j, trials=6, master_seed=42)
    first = run(cfg)
    second = run(cfg)
    assert _strip_wall(first) == _strip_wall(second)
    cfg_workers = ExperimentConfig("logdet-identity", n=4, ell=3, z=0.5 + 0.5j, trials=6, master_seed=42, workers=3)
    third = run(cfg_workers)
    d3 = _strip_wall(third)
    d3["config"]["workers"] = 1
    assert d3 == _strip_wall(first)


def test_single_trial_aggregate_equals_value():
    cfg = ExperimentConfig("ginibre", n=16, trials=1, master_seed=7)
    record = run(cfg)
    agg = record.aggregates["normalized_logdet"]
    assert agg["mean"] == record.trials[0].values["normalized_logdet"]
    assert agg["std"] == 0.0


def test_identity_experiment_values_are_tight():
    record = run(ExperimentConfig("logdet-identity", n=5, ell=2, trials=4, master_seed=1))
    assert record.aggregates["rel_error"]["max"] <= 1e-8


def test_all_experiments_produce_their_columns(tmp_path):
    cases = {
        "logdet-identity": dict(n=3, ell=2),
        "logdet-limit": dict(n=4, ell=4),
        "esd": dict(n=4, ell=2),
        "lsv-tail": dict(n=3, ell=4),
        "rigidity": dict(n=3, ell=4),
        "mde-compare": dict(n=4, ell=4),
        "concentration": dict(n=6, ell=3),
        "ginibre": dict(n=12),
    }
    for name, kw in cases.items():
        record = run(ExperimentConfig(name, trials=2, master_seed=3, **kw))
        assert len(record.trials) == 2
        for trial in record.trials:
            assert trial.status == "ok"
            assert set(trial.values) == set(record.columns)


def test_emit_csv_and_json_roundtrip(tmp_path):
    cfg = ExperimentConfig("concentration", n=4, ell=2, z=0.5, trials=3, master_seed=5)
    record = run(cfg)
    paths = emit(record, tmp_path / "out" / "conc")
    csv_path, json_path = paths
    lines = csv_path.read_text().strip().split("\n")
    assert lines[0] == "trial,seed,normalized_projected_growth,status"
    assert len(lines) == 4
    # CSV floats round-trip exactly through repr
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        assert float(cells[2]) == record.trials[i].values["normalized_projected_growth"]
    # JSON round-trips losslessly
    parsed = json.loads(json_path.read_text())
    assert parsed == record.to_jsonable()
    # aggregates are recomputable from the per-trial values
    col_vals = [t["values"]["normalized_projected_growth"] for t in parsed["trials"]]
    assert np.mean(col_vals) == pytest.approx(parsed["aggregates"]["normalized_projected_growth"]["mean"], abs=1e-15)


def test_emit_header_only_for_empty_trials(tmp_path):
    record = ResultRecord({"experiment": "x"}, ["value"], [], {}, 0.0)
    (csv_path,) = emit(record, tmp_path / "empty", formats=("csv",))
    assert csv_path.read_text() == "trial,seed,value,status\n"


def test_config_validation_errors():
    with pytest.raises(ConfigError):
        run(ExperimentConfig("unknown-experiment"))
    with pytest.raises(ConfigError):
        run(ExperimentConfig("esd", trials=0))
    with pytest.raises(ConfigError):
        config_from_dict({"experiment": "esd", "bogus": 1})
    with pytest.raises(ConfigError):
        config_from_dict({})


def test_failed_trials_are_recorded_not_fatal(tmp_path):
    # dense cap below the matrix size fails every trial without aborting
    cfg = ExperimentConfig("logdet-identity", n=8, ell=8, trials=2, master_seed=1, max_dense=4)
    record = run(cfg)
    assert all(t.status == "failed" for t in record.trials)
    assert all(np.isnan(list(t.values.values())).all() for t in record.trials)
    assert record.aggregates["rel_error"]["count"] == 0


def test_main_exit_codes(tmp_path, capsys):
    out = tmp_path / "res"
    code = main(
        [
            "--experiment",
            "ginibre",
            "--n",
            "16",
            "--trials",
            "2",
            "--seed",
            "9",
            "--out",
            str(out),
        ]
    )
    assert code == EXIT_OK
    assert out.with_suffix(".csv").exists() and out.with_suffix(".json").exists()

    assert main(["--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG

    bad = tmp_path / "partial"
    code = main(
        [
            "--experiment",
            "logdet-identity",
            "--n",
            "8",
            "--ell",
            "8",
            "--trials",
            "1",
            "--max-dense",
            "4",
            "--out",
            str(bad),
        ]
    )
    assert code == EXIT_PARTIAL


def test_main_with_config_file_and_overrides(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(
        json.dumps(
            {
                "experiment": "logdet-limit",
                "n": 6,
                "ell": 4,
                "z_re": 0.0,
                "z_im": 0.0,
                "trials": 2,
                "master_seed": 4,
                "out": str(tmp_path / "limit"),
            }
        )
    )
    assert main(["--config", str(cfg_path), "--trials", "3"]) == EXIT_OK
    parsed = json.loads((tmp_path / "limit.json").read_text())
    assert parsed["config"]["trials"] == 3
    assert len(parsed["trials"]) == 3
