import csv
import dataclasses
import json

import pytest

from polysched.errors import ConfigError
from polysched.experiments import (
    ExperimentConfig,
    build_instances,
    compare_flowtime_speed,
    load_config,
    run_experiment,
)


def _small(**kw):
    base = dict(family="multidim", generator={"n": 4, "m": 2}, schedulers=["pf", "maxmin"], speeds=[1.0, 2.0])
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("kw", [
    {"schedulers": []},
    {"schedulers": ["pf", "srpt"]},
    {"speeds": []},
    {"speeds": [0.5]},
    {"speeds": [float("inf")]},
    {"family": "gpu"},
    {"objective": "makespan"},
    {"epsilon": 0.3},
    {"count": 0},
])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        _small(**kw).validate()


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"schedulers": ["pf"], "colour": "red"})
    cfg = ExperimentConfig.from_dict({"schedulers": ["pf"], "speeds": [1, 2]})
    assert cfg.speeds == [1.0, 2.0]


def test_config_hash_ignores_output_dir():
    assert _small(out="a").hash == _small(out=None).hash
    assert _small(seed=1).hash != _small(seed=2).hash


def test_load_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"family": "unrelated", "schedulers": ["blass"], "speeds": [2.5]}))
    cfg = load_config(str(path))
    assert cfg.family == "unrelated"
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_build_instances_counts_seeds():
    cfg = _small(count=3, seed=10)
    labels = [label for label, _, _ in build_instances(cfg)]
    assert labels == ["multidim-10", "multidim-11", "multidim-12"]


def test_run_experiment_grid():
    report = run_experiment(_small())
    assert len(report.rows) == 4
    assert report.ok and report.errors == 0
    pf = [r for r in report.rows if r.scheduler == "pf"]
    assert all(r.cert_ok for r in pf)
    assert all(r.cert_kind == "completion" for r in pf)
    assert all(r.cert_ok is None for r in report.rows if r.scheduler == "maxmin")
    slow, fast = sorted(pf, key=lambda r: r.speed)
    assert fast.weighted_completion < slow.weighted_completion


def test_run_experiment_is_deterministic():
    def strip(report):
        return [dataclasses.replace(r, runtime=0.0) for r in report.rows]
    assert strip(run_experiment(_small())) == strip(run_experiment(_small()))


def test_cell_errors_are_recorded():
    report = run_experiment(_small(family="unrelated", schedulers=["drf"], speeds=[1.0]))
    assert report.errors == 1
    assert report.rows[0].error.startswith("UnsupportedFamilyError")


def test_blass_cells_are_certified():
    report = run_experiment(_small(family="unrelated", schedulers=["blass"], speeds=[1.0, 2.5]))
    at_eta = next(r for r in report.rows if r.speed == 2.5)
    assert at_eta.cert_kind == "blass"
    assert at_eta.cert_ok
    assert at_eta.cert_ratio == pytest.approx(20.0, rel=1e-6)
    below = next(r for r in report.rows if r.speed == 1.0)
    assert below.cert_ok is None


def test_outputs_written(tmp_path):
    report = run_experiment(_small(out=str(tmp_path)))
    with open(tmp_path / "report.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    assert rows[0]["config_hash"] == report.config_hash
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["cells"] == 4
    assert summary["certificate_failures"] == 0
    assert sorted(p.name for p in (tmp_path / "traces").iterdir()) == [
        "multidim-0_maxmin_1.json", "multidim-0_maxmin_2.json",
        "multidim-0_pf_1.json", "multidim-0_pf_2.json",
    ]


def test_flowtime_speed_sweep(tmp_path):
    cfg = _small(family="unrelated", generator={"n": 3, "m": 2}, objective="flow",
                 copies=3, gap=1.0, speeds=[2.0, 1.0], out=str(tmp_path))
    rows = compare_flowtime_speed(cfg)
    assert [r.speed for r in rows] == [1.0, 2.0]
    assert all(r.ratio >= 1.0 - 1e-9 for r in rows)
    assert rows[1].weighted_flow < rows[0].weighted_flow
    assert not rows[1].degraded
    assert (tmp_path / "sweep.csv").exists()
    with pytest.raises(ConfigError):
        compare_flowtime_speed(_small())
