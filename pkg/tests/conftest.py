import pytest

from isps_engine.tools.benchmarks import get_entry, get_system
from isps_engine.tools.sampling import SampleBudget


@pytest.fixture
def small_budget() -> SampleBudget:
    return SampleBudget(n_states=8, n_inputs=2, time_horizon=10.0)


@pytest.fixture
def tiny_budget() -> SampleBudget:
    return SampleBudget(n_states=4, n_inputs=1, time_horizon=5.0, radii=[0.5, 1.0], epsilons=[0.25, 0.5])


@pytest.fixture
def linear():
    return get_system("linear")


@pytest.fixture
def biased():
    return get_system("biased")


@pytest.fixture
def integrator():
    return get_system("integrator")


@pytest.fixture
def linear_entry():
    return get_entry("linear")
