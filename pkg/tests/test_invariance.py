import pytest

from isps_engine.tools.errors import DomainError
from isps_engine.tools.geometry import ball, origin, point
from isps_engine.tools.invariance import check_iss_wrt_set, check_robust_s_invariance, check_s_invariance
from tests.doubles import Repelled


def test_equilibrium_is_zero_invariant(linear, tiny_budget):
    assert check_s_invariance(linear, origin(1), 0.0, tiny_budget).is_consistent


def test_inputs_push_the_state_off_the_equilibrium(linear, tiny_budget):
    verdict = check_s_invariance(linear, origin(1), 0.5, tiny_budget)
    assert verdict.is_falsified
    assert verdict.witness.measured > verdict.evidence["slack"]


def test_unit_ball_absorbs_unit_inputs(linear, tiny_budget):
    verdict = check_s_invariance(linear, ball([0.0], 1.0), 1.0, tiny_budget)
    assert verdict.is_consistent


def test_negative_level_is_rejected(linear, tiny_budget):
    with pytest.raises(DomainError):
        check_s_invariance(linear, origin(1), -1.0, tiny_budget)


def test_stable_equilibrium_is_robustly_invariant(linear, tiny_budget):
    result = check_robust_s_invariance(linear, origin(1), 0.0, 0.25, 1.0, tiny_budget)
    assert result.verdict.is_consistent
    assert result.delta == 0.25


def test_repelling_equilibrium_is_invariant_but_not_robust(tiny_budget):
    sys = Repelled()
    assert check_s_invariance(sys, origin(1), 0.0, tiny_budget).is_consistent
    result = check_robust_s_invariance(sys, origin(1), 0.0, 0.25, 1.0, tiny_budget)
    assert result.verdict.is_falsified
    assert result.verdict.witness.kind == "robustness"
    assert result.verdict.evidence["resolution"] == 1e-6


def test_biased_system_is_not_iss_about_the_origin(biased, small_budget):
    result = check_iss_wrt_set(biased, origin(1), small_budget)
    assert result.verdict.is_falsified
    assert result.verdict.evidence["failed_leg"] == "cuag"
    assert result.certificate is None


def test_biased_system_is_iss_about_its_equilibrium(biased, small_budget):
    result = check_iss_wrt_set(biased, point([1.0]), small_budget)
    assert result.verdict.is_consistent
    assert result.certificate.c == 0.0
    assert set(result.legs) == {"cuag", "robust_invariance", "iss"}
