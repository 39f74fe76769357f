import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isps_engine.tools.comparison import (
    KINF,
    ComparisonFunction,
    KLFunction,
    add,
    compose,
    kl_majorize,
    monotone_smooth_tau,
    pointwise_max,
    running_average,
)
from isps_engine.tools.errors import ClassTagError, DataError, DomainError, ExtentError, PreconditionError
from tests.doubles import exponential_decay

increments = st.lists(st.floats(0.05, 5.0), min_size=1, max_size=6)


@st.composite
def kinf_functions(draw):
    da = draw(increments)
    dv = draw(st.lists(st.floats(0.05, 5.0), min_size=len(da), max_size=len(da)))
    args = np.concatenate([[0.0], np.cumsum(da)])
    vals = np.concatenate([[0.0], np.cumsum(dv)])
    tail = draw(st.floats(0.1, 5.0))
    return ComparisonFunction.from_samples(args, vals, KINF, tail)


arg = st.floats(0.0, 40.0)


def test_identity_is_exact_at_knots():
    f = ComparisonFunction.identity()
    assert f(0.0) == 0.0
    assert f(1.0) == 1.0
    assert f(7.5) == pytest.approx(7.5)


def test_negative_argument_is_a_domain_error():
    with pytest.raises(DomainError):
        ComparisonFunction.identity()(-1.0)


def test_non_monotone_knots_are_rejected():
    with pytest.raises(DataError):
        ComparisonFunction(KINF, ((0.0, 0.0), (1.0, 2.0), (2.0, 1.0)), 1.0)


def test_only_kinf_functions_invert():
    decay = ComparisonFunction("L", ((0.0, 1.0), (1.0, 0.5)), 1.0)
    with pytest.raises(ClassTagError):
        decay.invert()


@settings(max_examples=100, deadline=None)
@given(kinf_functions(), arg)
def test_invert_undoes_evaluate(f, r):
    assert f.invert()(f(r)) == pytest.approx(r, rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(kinf_functions())
def test_double_inversion_restores_the_knots(f):
    g = f.invert().invert()
    assert g.knots == f.knots
    assert g.tail == pytest.approx(f.tail, rel=1e-15)


@settings(max_examples=100, deadline=None)
@given(kinf_functions(), kinf_functions(), arg, st.floats(1e-6, 10.0))
def test_k_functions_vanish_at_zero_and_increase(f, g, r, gap):
    for h in (f, compose(f, g), pointwise_max(f, g)):
        assert h(0.0) == 0.0
        assert h(r) < h(r + gap)


@settings(max_examples=100, deadline=None)
@given(kinf_functions(), arg, arg, st.floats(0.0, 10.0))
def test_kl_weak_triangle(sigma, a, b, t):
    beta = KLFunction(sigma, exponential_decay())
    assert beta(a + b, t) <= beta(2 * a, t) + beta(2 * b, t) + 1e-9


@settings(max_examples=100, deadline=None)
@given(kinf_functions(), kinf_functions(), arg)
def test_algebra_matches_pointwise_values(f, g, r):
    assert compose(f, g)(r) == pytest.approx(f(g(r)), rel=1e-9, abs=1e-9)
    assert add(f, g)(r) == pytest.approx(f(r) + g(r), rel=1e-9, abs=1e-9)
    assert pointwise_max(f, g)(r) == pytest.approx(max(f(r), g(r)), rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(0.1, 3.0), min_size=2, max_size=6),
    st.lists(st.floats(0.05, 1.0), min_size=2, max_size=8),
)
def test_kl_majorize_dominates_every_node(r_steps, t_ratios):
    radii = np.cumsum(r_steps)
    times = np.arange(len(t_ratios), dtype=float)
    size = np.cumsum(r_steps)
    decay = np.cumprod(t_ratios)
    omega = np.outer(size, decay)
    beta = kl_majorize(radii, times, omega)
    bound = np.outer(beta.sigma(radii), beta.decay(times))
    assert np.all(bound >= omega)
    assert isinstance(beta, KLFunction)


def test_kl_majorize_dominates_halving_steps_with_a_zero_radius():
    grid = np.arange(4.0)
    omega = grid[:, None] * 2.0 ** -np.floor(grid)[None, :]
    beta = kl_majorize(grid, grid, omega)
    bound = np.outer(beta.sigma(grid), beta.decay(grid))
    assert np.all(bound >= omega)
    assert np.all(bound[0] == 0.0)


def test_kl_majorize_of_a_single_node():
    beta = kl_majorize([1.0], [0.0], [[5.0]])
    assert beta(1.0, 0.0) >= 5.0
    assert beta(1.0, 3.0) < beta(1.0, 1.0)


def test_kl_majorize_names_the_offending_nodes():
    omega = np.array([[1.0, 2.0], [2.0, 3.0]])
    with pytest.raises(DataError, match="increases in t"):
        kl_majorize([1.0, 2.0], [0.0, 1.0], omega)


# smoothing oracles

def test_smoothing_keeps_a_constant():
    eps = [0.25, 0.5, 1.0, 2.0]
    radii = [0.5, 1.0, 2.0, 4.0]
    tau = monotone_smooth_tau(eps, radii, np.full((4, 4), 5.0))
    assert tau(1.0, 1.0) == pytest.approx(5.0, rel=1e-6)


def test_smoothing_of_radius_gives_three_halves():
    eps = [0.25, 0.5, 1.0]
    radii = np.linspace(0.5, 4.0, 8)
    grid = np.tile(radii, (3, 1))
    tau = monotone_smooth_tau(eps, radii, grid)
    assert tau(0.5, 1.5) == pytest.approx(2.25, rel=1e-6)


def test_smoothing_of_inverse_epsilon_gives_log_two():
    eps = np.linspace(0.25, 2.0, 3501)
    radii = [0.5, 1.0, 2.0, 4.0]
    grid = np.tile((1.0 / eps)[:, None], (1, 4))
    tau = monotone_smooth_tau(eps, radii, grid)
    assert tau(1.0, 1.0) == pytest.approx(2.0 * math.log(2.0), rel=1e-6)


def test_smoothing_stencil_must_fit_the_grid():
    tau = monotone_smooth_tau([0.5, 1.0], [1.0, 2.0], np.ones((2, 2)))
    with pytest.raises(ExtentError):
        tau(1.0, 1.5)


def test_smoothing_rejects_tau_increasing_in_epsilon():
    with pytest.raises(DataError):
        monotone_smooth_tau([0.5, 1.0], [1.0, 2.0], [[1.0, 2.0], [3.0, 4.0]])


def test_smoothed_tau_dominates_the_nodes():
    eps = [0.25, 0.5, 1.0]
    radii = [0.5, 1.0, 2.0]
    grid = np.array([[3.0, 4.0, 6.0], [2.0, 3.0, 5.0], [1.0, 2.0, 4.0]])
    tau = monotone_smooth_tau(eps, radii, grid)
    assert tau(0.5, 1.0) >= grid[1, 1]
    assert tau(0.5, 0.5) < tau(0.5, 1.0)
    assert tau(1.0, 1.0) < tau(0.5, 1.0)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(0.05, 3.0), min_size=4, max_size=4),
    st.lists(st.floats(0.05, 3.0), min_size=4, max_size=4),
    st.floats(0.5, 1.9),
    st.floats(0.05, 1.0),
    st.floats(0.5, 1.9),
    st.floats(0.05, 1.0),
)
def test_smoothed_tau_is_monotone_on_random_grids(eps_steps, radius_steps, e1, de, r1, dr):
    eps = [0.25, 0.5, 1.0, 2.0]
    radii = [0.5, 1.0, 2.0, 4.0]
    falling = np.cumsum(eps_steps)[::-1]
    rising = np.cumsum(radius_steps)
    grid = falling[:, None] + rising[None, :]
    tau = monotone_smooth_tau(eps, radii, grid)
    e2, r2 = min(e1 + de, 2.0), min(r1 + dr, 2.0)
    assert tau(e1, r1) < tau(e1, r2)
    assert tau(e1, r1) > tau(e2, r1)
    for i in (1, 2, 3):
        for j in (0, 1, 2):
            assert tau(eps[i], radii[j]) >= grid[i, j] - 1e-9


# running averages

def test_running_average_of_identity():
    assert running_average(lambda s: s, 4.0) == pytest.approx(2.0, rel=1e-9)


def test_running_average_of_exponential():
    assert running_average(np.exp, 1.0) == pytest.approx(math.e - 1.0, rel=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 5.0), st.floats(0.0, 2.0), st.floats(-1.0, 1.0), st.floats(0.1, 5.0), st.floats(0.1, 5.0))
def test_running_average_is_increasing_and_below_f(a, b, c, t1, dt):
    f = lambda s: a * s + b * s**3 + c
    t2 = t1 + dt
    g1, g2 = running_average(f, t1), running_average(f, t2)
    assert g1 < g2
    assert g1 < f(t1)
    assert g2 < f(t2)


def test_running_average_needs_increasing_f():
    with pytest.raises(PreconditionError):
        running_average(lambda s: -s, 1.0)


def test_serialized_function_reloads_bit_exactly():
    f = ComparisonFunction.from_samples([0.0, 0.3, 1.7], [0.0, 0.1 + 0.2, math.pi], KINF, 2.0 / 3.0)
    g = ComparisonFunction.from_dict(f.to_dict())
    assert g.knots == f.knots
    assert g.tail == f.tail
