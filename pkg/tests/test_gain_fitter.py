import numpy as np
import pytest

from isps_engine.tools.control_system import replay_witness
from isps_engine.tools.errors import PreconditionError
from isps_engine.tools.gain_fitter import (
    CUAG_OFFSETS,
    check_ugb,
    fit_cuag,
    fit_isps,
    growth_check,
    transfer_certificate,
    validate_certificate,
)
from isps_engine.tools.geometry import origin, point
from isps_engine.tools.sampling import SampleBudget
from isps_engine.tools.verdicts import VerdictStatus
from tests.doubles import closed_form_certificate


def test_linear_system_gets_a_tight_certificate(linear, small_budget):
    fit = fit_isps(linear, origin(1), small_budget)
    assert fit.verdict.is_consistent
    cert = fit.certificate
    assert cert.residual_max <= cert.tolerance
    assert cert.c < 2e-2
    assert cert.samples_validated > 0
    # free response from radius 2 dominated at t = 0
    assert cert.bound(2.0, 0.0, 0.0) >= 2.0 - cert.tolerance


def test_biased_system_needs_an_offset(biased, small_budget):
    fit = fit_isps(biased, origin(1), small_budget)
    assert fit.verdict.is_consistent
    assert 1.0 < fit.certificate.c < 1.1
    assert fit.certificate.form == "isps"


def test_biased_system_is_not_iss_about_the_origin(biased, small_budget):
    fit = fit_isps(biased, origin(1), small_budget, practical=False)
    assert fit.verdict.is_falsified
    assert fit.verdict.evidence["stage"] == "tail"
    assert fit.verdict.witness.measured > 0.9


def test_integrator_growth_witness_replays(integrator, small_budget):
    fit = fit_isps(integrator, origin(1), small_budget)
    assert fit.verdict.is_falsified
    w = fit.verdict.witness
    assert w.kind == "growth"
    assert w.measured > w.bound
    assert replay_witness(integrator, w, origin(1)) == pytest.approx(w.measured, rel=1e-9)


def test_linear_shows_no_growth(linear, small_budget):
    assert growth_check(linear, origin(1), small_budget, 1e-3) is None


def test_closed_form_certificate_survives_fresh_samples(linear):
    budget = SampleBudget(n_states=40, n_inputs=4, time_horizon=10.0)
    check = validate_certificate(linear, closed_form_certificate(), budget, seed=123)
    assert check.samples > 900
    assert check.residual_max <= 1e-9


def test_transfer_moves_the_certificate_to_another_set(linear, small_budget):
    cert = transfer_certificate(closed_form_certificate(), point([1.0]))
    assert cert.provenance == "transfer"
    assert cert.form == "isps"
    # k = 0 + 1, c' = 0 + β(2, 0) + 1
    assert cert.c == pytest.approx(3.0)
    assert cert.beta(1.0, 0.0) == pytest.approx(2.0)
    assert validate_certificate(linear, cert, small_budget).residual_max <= 1e-9


def test_cuag_certificates_cannot_be_transferred():
    cert = closed_form_certificate()
    cert.form = "cuag"
    with pytest.raises(PreconditionError):
        transfer_certificate(cert, point([1.0]))


def test_linear_cuag_fit(linear, small_budget):
    fit = fit_cuag(linear, origin(1), small_budget)
    assert fit.verdict.status != VerdictStatus.FALSIFIED
    if fit.verdict.is_consistent:
        assert fit.certificate.form == "cuag"
        assert fit.certificate.offset in CUAG_OFFSETS
        assert fit.certificate.c == 0.0


def test_ugb_forms_agree_on_the_linear_system(linear, small_budget):
    result = check_ugb(linear, origin(1), small_budget)
    assert result.verdict.is_consistent
    assert result.verdict.evidence["shift_dominates"]
    r = np.array([0.5, 1.0, 2.0])
    assert np.allclose(result.sigma1(r), result.sigma(r) + r)


def test_ugb_is_falsified_with_the_fit(integrator, small_budget):
    assert check_ugb(integrator, origin(1), small_budget).verdict.is_falsified
