import math

import pytest

from isps_engine.tools.benchmarks import get_entry
from isps_engine.tools.sampling import SampleBudget
from isps_engine.tools.verdicts import VerdictStatus
from isps_engine.workflows.bench_workflow import BenchReport, discretization_study, entry_budget, run_bench


def test_integrator_row_is_consistently_negative(small_budget):
    report = run_bench(small_budget, ["integrator"], discretization=False)
    row = report.rows[0]
    assert row["isps"] == "falsified"
    assert row["ulim"] == "falsified"
    assert row["brs"] == "consistent"
    assert row["c"] is None
    assert report.checks["equivalence"] == "pass"
    assert report.checks["set_independence"] == "pass"
    assert "lim_uniform" not in report.checks
    assert report.status == VerdictStatus.CONSISTENT


def test_linear_row_does_not_contradict_itself(small_budget):
    report = run_bench(small_budget, ["linear"], discretization=False)
    row = report.rows[0]
    assert row["isps"] == "consistent"
    assert row["zero_invariance"] == "consistent"
    assert row["c"] < 0.05
    assert report.checks["equivalence"] != "fail"
    assert report.checks["ulim_gives_lim"] == "pass"
    assert "discretization" not in report.checks


def test_failed_check_dominates_the_status():
    report = BenchReport(checks={"equivalence": "pass", "set_independence": "undecided"})
    assert report.status == VerdictStatus.INCONCLUSIVE
    report.checks["ulim_gives_lim"] = "fail"
    assert report.status == VerdictStatus.FALSIFIED
    assert report.to_dict()["status"] == "falsified"


@pytest.mark.parametrize("name", ["biased", "saturated-bias", "planar-limit-cycle"])
def test_equivalence_holds_on_the_practically_stable_systems(small_budget, name):
    report = run_bench(small_budget, [name], discretization=False)
    assert report.rows[0]["system"] == name
    assert report.checks["equivalence"] != "fail"


def test_explicit_budget_fields_win_over_catalog_defaults():
    entry = get_entry("reaction-diffusion-16")
    explicit = SampleBudget(n_states=4, time_horizon=2.0, radii=[0.1, 0.2])
    merged = entry_budget(entry, explicit)
    assert merged.time_horizon == 2.0
    assert merged.radii == [0.1, 0.2]
    assert merged.epsilons == entry.default_budget["epsilons"]
    assert merged.u_max == entry.default_budget["u_max"]
    assert merged.n_states == 4


def test_unset_budget_fields_take_catalog_defaults():
    entry = get_entry("integrator")
    merged = entry_budget(entry, SampleBudget(n_states=4))
    assert merged.time_horizon == 10.0
    assert merged.radii == entry.default_budget["radii"]


def test_discretization_study_compares_coarse_grids_to_the_fine_one():
    budget = SampleBudget(
        n_states=4, n_inputs=1, time_horizon=2.0,
        radii=[0.1, 0.2, 0.4], epsilons=[0.05, 0.1, 0.2], u_max=0.5,
    )
    out = discretization_study(budget)
    assert out["levels"] == [0.1, 0.5, 1.0]
    assert set(out["gamma"]) == {"32", "64", "128"}
    assert out["check"] in ("pass", "fail", "undecided")
    if "relative_gap" in out:
        assert set(out["relative_gap"]) == {"32", "64"}
        assert all(math.isfinite(g) and g >= 0 for g in out["relative_gap"].values())
        assert out["check"] == ("pass" if max(out["relative_gap"].values()) <= 0.2 else "fail")
