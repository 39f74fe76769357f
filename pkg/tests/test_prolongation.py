import numpy as np
import pytest

from isps_engine.tools.attainment import AttainmentTable
from isps_engine.tools.benchmarks import get_system
from isps_engine.tools.comparison import ComparisonFunction
from isps_engine.tools.errors import ConfigurationError, DomainError
from isps_engine.tools.geometry import ball, directed_hausdorff, origin, point
from isps_engine.tools.prolongation import (
    build_prolongation,
    check_prolongation_invariance,
    f_eps_profile,
    horizon_from_table,
    offset_constant,
)
from isps_engine.tools.sampling import SampleBudget
from isps_engine.tools.verdicts import Verdict

identity = ComparisonFunction.identity()


@pytest.fixture(scope="module")
def budget():
    return SampleBudget(n_states=8, n_inputs=2, time_horizon=10.0)


@pytest.fixture(scope="module")
def linear_cloud(budget):
    return build_prolongation(get_system("linear"), origin(1), 1.0, identity, budget)


def test_linear_cloud_is_the_unit_interval(linear_cloud):
    P = linear_cloud
    assert P.input_level == pytest.approx(0.5)
    assert P.slack == pytest.approx(0.01, abs=1e-8)
    assert P.dense
    assert not P.inconclusive
    assert P.return_fraction >= 0.99
    assert P.cloud.radius == pytest.approx(1.01, abs=1e-6)
    assert P.original_count >= P.cloud.size


def test_linear_cloud_is_invariant(linear_cloud, budget):
    verdict = check_prolongation_invariance(get_system("linear"), linear_cloud, budget)
    assert verdict.is_consistent


def test_offset_of_the_linear_cloud(linear_cloud):
    report = offset_constant(origin(1), linear_cloud)
    assert report.value == pytest.approx(1.01, abs=1e-6)
    assert report.hausdorff == pytest.approx(1.01, abs=1e-6)
    assert report.nonconvex is False


def test_offset_of_a_ball_around_its_center():
    report = offset_constant(origin(1), ball([0.0], 1.0))
    assert report.value == pytest.approx(1.0)
    assert report.hausdorff == pytest.approx(1.0)


def test_offset_needs_the_set_inside_the_cloud():
    with pytest.raises(ConfigurationError, match="not contained"):
        offset_constant(point([5.0]), ball([0.0], 1.0))


def test_nonpositive_epsilon_is_rejected(budget):
    with pytest.raises(DomainError):
        build_prolongation(get_system("linear"), origin(1), 0.0, identity, budget)


def test_horizon_needs_a_complete_table():
    tau = np.array([[1.0, np.nan], [0.5, 1.0]])
    table = AttainmentTable("ulim", Verdict.inconclusive(), np.array([0.25, 0.5]), np.array([1.0, 2.0]), tau)
    with pytest.raises(ConfigurationError, match="unresolved"):
        horizon_from_table(table, 0.5, 1.0)


def test_horizon_from_a_constant_table():
    tau = np.full((2, 2), 3.0)
    table = AttainmentTable("ulim", Verdict.consistent(), np.array([0.25, 0.5]), np.array([1.0, 2.0]), tau)
    assert horizon_from_table(table, 0.5, 1.0) == pytest.approx(3.0, rel=1e-6)


def test_f_eps_profile_vanishes_below_epsilon(budget):
    profile = f_eps_profile(get_system("linear"), origin(1), identity, 0.5, [0.25, 1.0], budget)
    assert profile.zero_below_eps
    assert profile.monotone
    assert profile.f_hat[0] <= profile.slack
    assert profile.f_hat[1] == pytest.approx(0.505, abs=1e-2)
    assert profile.sigma_eps(1.0) >= profile.f_hat[1]


@pytest.fixture(scope="module")
def rd16_cloud():
    budget = SampleBudget(
        n_states=4, n_inputs=1, time_horizon=2.0,
        radii=[0.1, 0.2, 0.4], epsilons=[0.05, 0.1, 0.2], u_max=1.0,
    )
    sys = get_system("reaction-diffusion-16")
    return sys, budget, build_prolongation(sys, origin(16, np.inf), 0.2, identity, budget)


def test_sparse_cloud_is_tested_through_its_envelope(rd16_cloud):
    sys, budget, P = rd16_cloud
    assert not P.dense
    region = P.membership_set
    assert region.inflation >= 0.2
    assert P.cloud.distance(np.zeros(16)) == 0.0
    verdict = check_prolongation_invariance(sys, P, budget)
    assert verdict.evidence["membership"] == "envelope"
    assert not verdict.is_falsified
    assert verdict.evidence["s"] == pytest.approx(0.1)


def test_dense_cloud_is_its_own_membership_set(linear_cloud):
    assert linear_cloud.membership_set is linear_cloud.cloud


def test_smaller_epsilon_cloud_nests_in_the_larger_one(linear_cloud, budget):
    inner = build_prolongation(get_system("linear"), origin(1), 0.5, identity, budget)
    assert inner.input_level < linear_cloud.input_level
    assert directed_hausdorff(inner.cloud, linear_cloud.cloud) <= linear_cloud.slack


def test_cloud_norm_is_stable_when_the_budget_doubles(linear_cloud, budget):
    doubled = budget.model_copy(update={"n_states": 2 * budget.n_states, "n_inputs": 2 * budget.n_inputs})
    P = build_prolongation(get_system("linear"), origin(1), 1.0, identity, doubled)
    assert P.cloud.radius == pytest.approx(linear_cloud.cloud.radius, abs=1e-6)
