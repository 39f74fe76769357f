import math

import pytest

from isps_engine.tools.benchmarks import OdeSystem
from isps_engine.tools.errors import DomainError
from isps_engine.tools.reachability import check_brs, estimate_lipschitz


def test_linear_reach_set_stays_in_the_ball(linear, tiny_budget):
    result = check_brs(linear, 1.0, 5.0, tiny_budget, refine_evaluations=40)
    assert result.verdict.is_consistent
    assert result.reach_sup == pytest.approx(1.0, abs=1e-6)


def test_integrator_reach_grows_linearly(integrator, tiny_budget):
    result = check_brs(integrator, 1.0, 5.0, tiny_budget, refine_evaluations=0)
    assert result.verdict.is_consistent
    assert result.reach_sup == pytest.approx(6.0, abs=1e-9)


def test_zero_horizon_reaches_the_radius(linear, tiny_budget):
    assert check_brs(linear, 2.0, 0.0, tiny_budget).reach_sup == 2.0


def test_invalid_radius_is_rejected(linear, tiny_budget):
    with pytest.raises(DomainError):
        check_brs(linear, 0.0, 1.0, tiny_budget)


def test_linear_flow_is_one_lipschitz(linear, small_budget):
    est = estimate_lipschitz(linear, 1.0, 2.0, small_budget)
    assert est.verdict.is_consistent
    assert est.L == pytest.approx(1.0, abs=1e-9)
    assert est.pairs > 0


def test_lipschitz_estimate_is_stable_when_the_budget_doubles(small_budget):
    unstable = OdeSystem("unstable", 1, 1, lambda X, U: X + U[:, :1], description="x' = x + u")
    doubled = small_budget.model_copy(update={"n_states": 2 * small_budget.n_states})
    small = estimate_lipschitz(unstable, 1.0, 1.0, small_budget)
    large = estimate_lipschitz(unstable, 1.0, 1.0, doubled)
    assert large.pairs > small.pairs
    assert small.L == pytest.approx(math.e, rel=1e-6)
    assert large.L == pytest.approx(small.L, rel=1e-6)
