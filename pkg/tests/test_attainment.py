import numpy as np
import pytest

from isps_engine.tools.attainment import check_lim, check_uag, estimate_ulim, extend_input
from isps_engine.tools.comparison import ComparisonFunction
from isps_engine.tools.geometry import origin
from isps_engine.tools.signals import InputSignal
from isps_engine.tools.verdicts import VerdictStatus

identity = ComparisonFunction.identity()


def test_linear_attainment_table_is_complete_and_monotone(linear, small_budget):
    table = estimate_ulim(linear, origin(1), identity, small_budget)
    assert table.verdict.status == VerdictStatus.CONSISTENT
    assert table.complete
    assert np.all(np.diff(table.tau, axis=1) >= 0)
    assert np.all(np.diff(table.tau, axis=0) <= 0)
    # free response from radius 2 down to 0.25 takes ln 8
    assert table.tau[0, -1] <= np.log(8.0) + 2 * small_budget.record_step


def test_lim_and_uag_agree_on_the_linear_system(linear, small_budget):
    lim = check_lim(linear, origin(1), identity, small_budget)
    uag = check_uag(linear, origin(1), identity, small_budget)
    assert lim.verdict.is_consistent
    assert uag.verdict.is_consistent
    assert uag.complete
    assert np.all(uag.tau >= lim.tau)


def test_integrator_attainment_is_falsified_by_growth(integrator, small_budget):
    table = estimate_ulim(integrator, origin(1), identity, small_budget)
    assert table.verdict.is_falsified
    w = table.verdict.witness
    assert w.measured > w.bound
    assert w.t > small_budget.time_horizon
    assert table.candidates > 0


def test_rows_flatten_the_grid(linear, tiny_budget):
    table = check_uag(linear, origin(1), identity, tiny_budget)
    rows = table.rows()
    assert len(rows) == 4
    assert {r["eps"] for r in rows} == {0.25, 0.5}


def test_extend_input_holds_the_last_value():
    u = InputSignal.constant([0.3], 2.0)
    longer = extend_input(u, 2.0, 8.0)
    assert longer.value_at(7.9)[0] == pytest.approx(0.3)
    short = InputSignal.constant([0.3], 1.0)
    assert extend_input(short, 2.0, 8.0) is short
