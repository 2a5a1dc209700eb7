from __future__ import annotations

import csv
import io
import json
import math

import pytest

from betadelaunay.errors import ConfigurationError
from betadelaunay.harness import cli
from betadelaunay.harness.experiments import (ExperimentConfig, moment_triples, run_clt, run_kendall,
                                              run_lower_tail, run_modphi, run_moment_check)
from betadelaunay.harness.parallel import ordered_map, worker_count
from betadelaunay.harness.report import SCHEMA_VERSION, ExperimentReport
from betadelaunay.model import ModelParams, log_volume_moment


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_report_serialization_and_exit_codes(tmp_path):
    rep = ExperimentReport("demo", {"seed": 1}, rows=[{"a": 1.0, "b": math.inf}, {"a": 2.0, "c": "x"}])
    rep.add_verdict("C0", "first", True, "ok")
    assert rep.passed and rep.exit_code() == 0
    rep.add_verdict("C0", "second", None, "too noisy")
    assert not rep.passed and rep.exit_code() == 1
    doc = json.loads(rep.to_json())
    assert doc["schema_version"] == SCHEMA_VERSION and doc["experiment"] == "demo"
    assert [v["passed"] for v in doc["verdicts"]] == [True, None]
    text = rep.to_csv()
    assert text.startswith(f"# schema_version={SCHEMA_VERSION}")
    body = [line for line in text.splitlines() if not line.startswith("#")]
    table = list(csv.DictReader(io.StringIO("\n".join(body))))
    assert list(table[0]) == ["a", "b", "c"] and len(table) == 2
    assert "# verdict C0 second: uninformative" in text
    path = rep.write(tmp_path, "json")
    assert json.loads(path.read_text())["experiment"] == "demo"


def test_worker_count(monkeypatch):
    monkeypatch.delenv("BDL_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("BDL_THREADS", "3")
    assert worker_count() == 3
    assert ordered_map(lambda x: x * x, range(20)) == [x * x for x in range(20)]
    for bad in ("0", "-2", "many"):
        monkeypatch.setenv("BDL_THREADS", bad)
        with pytest.raises(ConfigurationError):
            worker_count()


def test_config_validation():
    p = ModelParams(3, 0.0, 0.0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(params=p, budget=0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(params=p, seed=-1)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(params=p, a_grid=[2.0, 1.0])
    with pytest.raises(ConfigurationError):
        ExperimentConfig(params=ModelParams(3, -2.0, 0.0))
    with pytest.raises(ConfigurationError):
        run_lower_tail(ExperimentConfig(params=ModelParams(2, -0.5, 0.0), budget=10 ** 6))
    with pytest.raises(ConfigurationError):
        run_kendall(ExperimentConfig(params=ModelParams(5, 0.0, 0.0), budget=10 ** 5))
    with pytest.raises(ConfigurationError):
        run_kendall(ExperimentConfig(params=p, budget=1000))


def test_moment_triples_cover_the_grid():
    cases = moment_triples()
    assert len(cases) == 9
    assert {c.d for c in cases} == {2, 3, 4}
    assert {c.beta for c in cases} == {-0.5, 0.0, 1.0}
    assert {c.nu for c in cases} == {-1.0, 0.0, 1.0}
    assert {c.gamma for c in cases} == {1.0, 2.0}


def test_small_moment_check_runs():
    rep = run_moment_check(ExperimentConfig(params=ModelParams(3, 0.0, 0.0), seed=3, budget=20_000),
                           cases=[ModelParams(3, 0.0, 0.0)])
    assert len(rep.rows) == 3 and rep.passed


def test_experiment_determinism_across_thread_counts(monkeypatch):
    cfg = ExperimentConfig(params=ModelParams(3, 0.0, -1.0), seed=5, budget=20_000, d_grid=[4, 8, 16])
    monkeypatch.setenv("BDL_THREADS", "1")
    one = run_clt(cfg).to_json()
    monkeypatch.setenv("BDL_THREADS", "3")
    assert run_clt(cfg).to_json() == one


def test_modphi_report_identity_row():
    rep = run_modphi(ExperimentConfig(params=ModelParams(3, 0.0, 0.0)))
    zero = [r for r in rep.rows if r["t"] == 0.0]
    assert zero and all(r["residual"] == 0.0 for r in zero)
    assert rep.passed


def test_cli_moments(capsys):
    code, out, _ = run_cli(capsys, "moments", "--d", "4", "--beta", "1", "--nu", "0", "--s", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["log_moment"] == pytest.approx(log_volume_moment(ModelParams(4, 1.0, 0.0), 2.0), rel=1e-15)
    code, out, _ = run_cli(capsys, "moments", "--format", "csv", "--s", "1")
    assert code == 0 and out.splitlines()[0] == "d,beta,nu,gamma,s,moment,log_moment"


def test_cli_cumulants_csv(capsys):
    code, out, _ = run_cli(capsys, "cumulants", "--d", "10", "--orders", "2", "3", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and [r["order"] for r in rows] == ["2", "3"]
    assert rows[0]["bound"] == "" and float(rows[1]["bound"]) > abs(float(rows[1]["value"]))


def test_cli_sample_is_byte_identical(capsys, tmp_path):
    argv = ["sample", "--d", "3", "--nu", "0.5", "--seed", "11", "--budget", "50", "--out", str(tmp_path)]
    code, first, _ = run_cli(capsys, *argv)
    assert code == 0
    dump = (tmp_path / "sample.csv").read_bytes()
    code, second, _ = run_cli(capsys, *argv)
    assert first == second and (tmp_path / "sample.csv").read_bytes() == dump
    header, *rows = first.splitlines()
    assert header == "stream,index,radius,log_volume,attempts" and len(rows) == 50
    _, other, _ = run_cli(capsys, "sample", "--d", "3", "--nu", "0.5", "--seed", "12", "--budget", "50")
    assert other != first


def test_cli_tessellate(capsys, tmp_path):
    code, out, _ = run_cli(capsys, "tessellate", "--d", "3", "--window", "6", "--seed", "2",
                           "--out", str(tmp_path), "--svg", str(tmp_path / "t.svg"))
    assert code == 0 and json.loads(out)["certified"]
    assert (tmp_path / "cells.csv").exists() and (tmp_path / "manifest.json").exists()
    assert (tmp_path / "t.svg").read_text().startswith("<svg")


def test_cli_experiment_and_rerun(capsys, tmp_path):
    argv = ["modphi", "--nu", "-1", "--beta", "1", "--out", str(tmp_path)]
    code, first, err = run_cli(capsys, *argv)
    assert code == 0 and "C6" in first and "PASS" in err
    code, second, _ = run_cli(capsys, *argv)
    assert first == second
    code, out, _ = run_cli(capsys, "ldp", "--format", "csv")
    assert code == 0 and out.startswith("# schema_version=")


def test_cli_errors(capsys):
    assert run_cli(capsys, "moments", "--beta", "-2")[0] == 2
    assert run_cli(capsys, "moments", "--s", "-5")[0] == 2
    assert run_cli(capsys, "nonsense")[0] == 2
    assert run_cli(capsys, "kendall", "--d", "7", "--budget", "100000")[0] == 2
    assert run_cli(capsys, "modphi", "--t-grid", "1,x")[0] == 2
    assert run_cli(capsys, "tessellate", "--d", "5")[0] == 2
    assert run_cli(capsys, "--help")[0] == 0
