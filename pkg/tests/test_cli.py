import csv
import json

import pytest

from isps_cli.main import run_cli
from tests.doubles import closed_form_certificate

FAST = ["--budget", "8", "--horizon", "10"]


def _run(tmp_path, *args):
    return run_cli([*args, *FAST, "--out", str(tmp_path)])


def test_linear_isps_writes_a_certificate(tmp_path):
    assert _run(tmp_path, "analyze", "linear", "--property", "isps", "--set", "origin") == 0
    report = json.loads((tmp_path / "linear_isps.json").read_text())
    assert report["verdict"] == "consistent"
    assert report["certificate"]["form"] == "isps"
    assert report["seed"] == 0
    assert "runtime_s" not in report
    with (tmp_path / "summary.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert [(r["system"], r["property"], r["set"], r["verdict"]) for r in rows] == [("linear", "isps", "origin", "consistent")]


def test_integrator_isps_is_falsified_with_a_witness_trajectory(tmp_path):
    assert _run(tmp_path, "analyze", "integrator", "--property", "isps", "--set", "origin") == 2
    report = json.loads((tmp_path / "integrator_isps.json").read_text())
    assert report["witness"]["kind"] == "growth"
    lines = (tmp_path / "integrator_isps_witness.csv").read_text().splitlines()
    assert lines[0] == "t,x1,distance"
    assert len(lines) > 2


def test_reruns_are_byte_identical_across_worker_counts(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    assert run_cli(["analyze", "linear", "--property", "ulim", *FAST, "--out", str(first)]) == 0
    assert run_cli(["analyze", "linear", "--property", "ulim", *FAST, "--out", str(second), "--workers", "2"]) == 0
    for name in ("linear_ulim.json", "linear_ulim_tau.csv", "summary.csv"):
        assert (first / name).read_bytes() == (second / name).read_bytes()


def test_rerun_replaces_its_summary_row(tmp_path):
    for _ in range(2):
        assert _run(tmp_path, "analyze", "linear", "--property", "brs") == 0
    with (tmp_path / "summary.csv").open() as fh:
        assert len(list(csv.DictReader(fh))) == 1


@pytest.mark.parametrize(
    "args",
    [
        ["analyze", "pendulum", "--property", "isps"],
        ["analyze", "linear", "--property", "stability"],
        ["analyze", "linear", "--property", "isps", "--set", "circle:1"],
        ["analyze", "linear", "--property", "isps", "--set", "point:1,2"],
        ["falsify", "linear", "--certificate", "missing.json"],
    ],
)
def test_usage_errors_exit_with_one(tmp_path, args):
    assert _run(tmp_path, *args) == 1


def test_missing_argument_is_a_usage_error(tmp_path):
    assert run_cli(["analyze", "--out", str(tmp_path)]) == 1


def test_config_file_supplies_the_run(tmp_path):
    cfg = tmp_path / "run.env"
    cfg.write_text("property=isps\nset=origin\nn_states=8\ntime_horizon=10\n")
    assert run_cli(["analyze", "linear", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "linear_isps.json").read_text())
    assert report["parameters"]["budget"]["n_states"] == 8


def test_unknown_config_key_is_rejected(tmp_path):
    cfg = tmp_path / "run.env"
    cfg.write_text("property=isps\nflavour=vanilla\n")
    assert run_cli(["analyze", "linear", "--config", str(cfg), "--out", str(tmp_path)]) == 1


def test_falsify_accepts_a_certificate_or_a_report(tmp_path):
    bare = tmp_path / "cert.json"
    bare.write_text(json.dumps(closed_form_certificate().to_dict()))
    wrapped = tmp_path / "report.json"
    wrapped.write_text(json.dumps({"certificate": closed_form_certificate().to_dict()}))
    search = ["--max-evaluations", "200", "--restarts", "4"]

    assert _run(tmp_path, "falsify", "linear", "--certificate", str(bare), *search) == 0
    assert _run(tmp_path, "falsify", "biased", "--certificate", str(wrapped), *search) == 2
    report = json.loads((tmp_path / "biased_falsify.json").read_text())
    assert report["witness"]["residual"] > 0.5
    assert (tmp_path / "biased_falsify_witness.csv").exists()


def test_falsify_runs_on_a_fitted_report(tmp_path):
    assert _run(tmp_path, "analyze", "linear", "--property", "isps", "--set", "origin") == 0
    code = _run(tmp_path, "falsify", "linear", "--certificate", str(tmp_path / "linear_isps.json"),
                "--max-evaluations", "200", "--restarts", "4")
    assert code in (0, 2)
    assert (tmp_path / "linear_falsify.json").exists()


def test_axioms_and_catalog_commands(tmp_path):
    assert run_cli(["axioms", "linear", "--samples", "8", "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "linear_axioms.json").read_text())["verdict"] == "consistent"
    assert run_cli(["catalog", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert len(manifest["systems"]) == 8


def test_prolong_writes_the_cloud(tmp_path):
    assert _run(tmp_path, "prolong", "linear", "--eps", "1", "--set", "origin") == 0
    report = json.loads((tmp_path / "linear_prolong.json").read_text())
    assert report["evidence"]["prolongation"]["cloud_radius"] == pytest.approx(1.01, abs=1e-6)
    assert (tmp_path / "linear_prolong_cloud.csv").read_text().startswith("x1\n")


def test_bench_on_the_integrator(tmp_path):
    assert _run(tmp_path, "bench", "--systems", "integrator", "--no-discretization") == 0
    bench = json.loads((tmp_path / "bench.json").read_text())
    assert bench["status"] == "consistent"
    assert bench["rows"][0]["system"] == "integrator"
