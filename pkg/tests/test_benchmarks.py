import numpy as np
import pytest

from isps_engine.tools.benchmarks import catalog, get_entry, get_system, integrate, manifest, names
from isps_engine.tools.errors import ConfigurationError, DivergenceError
from isps_engine.tools.integrator import OVERFLOW_GUARD, propagate
from isps_engine.tools.signals import InputSignal


def test_catalog_lists_the_reference_systems():
    assert names() == [
        "linear",
        "biased",
        "integrator",
        "saturated-bias",
        "planar-limit-cycle",
        "reaction-diffusion",
        "reaction-diffusion-16",
        "reaction-diffusion-64",
    ]


def test_unknown_system_lists_the_valid_names():
    with pytest.raises(ConfigurationError, match="linear"):
        get_entry("pendulum")


def test_manifest_rows_are_complete():
    rows = manifest()["systems"]
    assert len(rows) == len(catalog())
    for row in rows:
        assert {"name", "state_dim", "known_status", "reference_set", "oracle", "flow_tolerance"} <= set(row)
    assert {r["name"]: r["known_status"] for r in rows}["integrator"] == "not ISpS"


def test_linear_free_response_matches_the_exponential(linear):
    x = integrate(linear, 2.0, [1.0], InputSignal.zero(1))
    assert x[0] == pytest.approx(np.exp(-2.0), abs=1e-9)


def test_linear_forced_response_matches_variation_of_constants(linear):
    u = InputSignal.constant([0.5], 3.0)
    x = integrate(linear, 3.0, [0.0], u)
    assert x[0] == pytest.approx(0.5 * (1.0 - np.exp(-3.0)), abs=1e-9)


def test_time_zero_returns_the_initial_state(biased):
    x0 = np.array([0.3])
    assert np.array_equal(integrate(biased, 0.0, x0, InputSignal.zero(1)), x0)


def test_biased_converges_to_one(biased):
    assert integrate(biased, 20.0, [-2.0], InputSignal.zero(1))[0] == pytest.approx(1.0, abs=1e-6)


def test_integrator_accumulates_the_input(integrator):
    u = InputSignal.constant([0.5], 4.0)
    assert integrate(integrator, 4.0, [1.0], u)[0] == pytest.approx(3.0, abs=1e-12)


def test_limit_cycle_settles_on_the_unit_circle():
    sys = get_system("planar-limit-cycle")
    x = integrate(sys, 10.0, [0.2, 0.0], InputSignal.zero(1))
    assert np.linalg.norm(x) == pytest.approx(1.0, abs=1e-3)


def test_reaction_diffusion_decays_in_sup_norm():
    sys = get_system("reaction-diffusion-16")
    x0 = np.ones(16)
    x = integrate(sys, 1.0, x0, InputSignal.zero(1))
    assert sys.norm(x) < 1e-2
    assert sys.norm_ord == np.inf


def test_overflow_guard_marks_diverged_runs():
    blowup = lambda X, U: X**2
    batch = propagate(blowup, np.array([[10.0], [0.0]]), np.zeros((2, 1, 1)), 0.1, 1.0)
    assert batch.diverged[0]
    assert not batch.diverged[1]
    assert np.isinf(batch.final[0, 0])
    assert OVERFLOW_GUARD == 1e12


def test_flow_reports_divergence_time():
    sys = get_system("linear")
    sys.rhs = lambda X, U: X**2
    with pytest.raises(DivergenceError) as info:
        sys.flow(1.0, np.array([10.0]), InputSignal.zero(1))
    assert 0.0 < info.value.time < 1.0


def test_limit_cycle_reference_set_is_the_unit_circle():
    A = get_entry("planar-limit-cycle").reference_set
    assert A.inflation == 0.0
    assert A.radius == pytest.approx(1.0)
    assert A.distance(np.zeros(2)) == pytest.approx(1.0)
    assert A.distance(np.array([0.0, 1.0])) < 2e-2


def test_integrator_under_constant_input_reaches_ten(integrator):
    u = InputSignal.constant([0.1], 100.0)
    assert integrate(integrator, 100.0, [0.0], u)[0] == pytest.approx(10.0, abs=1e-9)


def test_halving_the_substep_cuts_the_error_at_least_eightfold():
    sys = get_system("planar-limit-cycle")
    rng = np.random.default_rng(7)
    for _ in range(10):
        angle = rng.uniform(0.0, 2 * np.pi)
        x0 = rng.uniform(0.5, 1.5) * np.array([np.cos(angle), np.sin(angle)])
        t = 0.1 * int(rng.integers(10, 51))
        u = InputSignal(0.1, rng.uniform(-0.5, 0.5, (int(round(t / 0.1)), 1)))
        reference = integrate(sys.with_substep(0.1 / 128), t, x0, u)
        coarse = np.linalg.norm(integrate(sys.with_substep(0.1), t, x0, u) - reference)
        fine = np.linalg.norm(integrate(sys.with_substep(0.05), t, x0, u) - reference)
        assert fine * 8.0 <= coarse
