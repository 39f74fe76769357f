import math

import numpy as np
import pytest

from isps_cli.core.config import build_budget, resolve_run_config
from isps_cli.core.set_specs import parse_set
from isps_cli.models.report_models import SummaryRow
from isps_cli.services.report_service import clean, dumps, update_summary
from isps_engine.tools.benchmarks import get_entry
from isps_engine.tools.errors import ConfigurationError
from isps_engine.tools.verdicts import VerdictStatus


def test_set_specs_resolve_in_the_system_space():
    planar = get_entry("planar-limit-cycle")
    assert parse_set("origin", planar).dim == 2
    assert parse_set("reference", planar).distance(np.zeros(2)) == pytest.approx(1.0)
    assert parse_set("ball:0.5,0:0.25", planar).inflation == 0.25
    assert parse_set("circle:2", planar).radius == pytest.approx(2.0)
    assert parse_set("point:1", get_entry("biased")).distance(np.array([3.0])) == pytest.approx(2.0)


@pytest.mark.parametrize("spec", ["cube:1", "ball:1", "ball:0,0:-1", "point:a,b"])
def test_malformed_set_specs(spec):
    with pytest.raises(ConfigurationError):
        parse_set(spec, get_entry("planar-limit-cycle"))


def test_clean_rounds_but_keeps_function_payloads_exact():
    x = 0.1 + 0.2
    payload = clean({"c": x, "gamma": {"knots": [[0.0, x]]}, "status": VerdictStatus.FALSIFIED, "inf": math.inf})
    assert payload["c"] == 0.3
    assert payload["gamma"]["knots"][0][1] == x
    assert payload["status"] == "falsified"
    assert payload["inf"] == "inf"


def test_dumps_sorts_keys():
    text = dumps({"b": 1, "a": np.float64(2.0)})
    assert text.index('"a"') < text.index('"b"')
    assert text.endswith("\n")


def test_summary_rows_are_sorted_and_replaced(tmp_path):
    update_summary(str(tmp_path), SummaryRow(system="z", property="isps", set="origin", verdict="consistent"))
    update_summary(str(tmp_path), SummaryRow(system="a", property="isps", set="origin", verdict="consistent"))
    update_summary(str(tmp_path), SummaryRow(system="z", property="isps", set="origin", verdict="falsified"))
    lines = (tmp_path / "summary.csv").read_text().splitlines()
    assert lines[0] == "system,property,set,verdict,key_parameters"
    assert lines[1].startswith("a,")
    assert lines[2] == "z,isps,origin,falsified,"


def test_cli_values_override_catalog_defaults():
    config = resolve_run_config({"system": "linear", "n_states": 5, "time_horizon": 3.0})
    budget = build_budget(config, get_entry("linear").default_budget)
    assert budget.n_states == 5
    assert budget.time_horizon == 3.0
    assert budget.radii == [0.5, 1.0, 2.0]


def test_invalid_budget_is_a_configuration_error():
    with pytest.raises(ConfigurationError):
        resolve_run_config({"segments": 12})
