# isps_engine/tools/gain_fitter.py

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .bundle import TrajectoryBundle, pair, simulate_bundle
from .comparison import KINF, ComparisonFunction, KLFunction, add, kl_majorize
from .control_system import ControlSystem
from .errors import PreconditionError
from .geometry import BoundedSetApprox
from .integrator import OVERFLOW_GUARD
from .sampling import (
    STREAM_FIT,
    STREAM_GROWTH,
    STREAM_INPUTS,
    STREAM_VALIDATION,
    SampleBudget,
    fit_radii,
    fit_states,
    rng_for,
    standard_inputs,
    states_at_distance,
    uniform_states,
)
from .signals import InputSignal
from .verdicts import Verdict, Witness

logger = logging.getLogger(__name__)

FORMS = ("isps", "iss", "cuag")
ENVELOPE_INFLATION = 1.05
OFFSET_INFLATION = 1.05
GAIN_SLOPE_FLOOR = 1e-6
SIGMA_ROUND_FACTOR = 1.1
GAMMA_ROUND_FACTOR = 1.05
MAX_REFIT_ROUNDS = 5
CUAG_OFFSETS = (0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0)
GROWTH_RATIO = 1.5


@dataclass
class GainCertificate:
    """
    Fitted stability estimate ‖φ(t,x,u)‖_A <= bound(‖x‖_A, t, ‖u‖) + residual_max.

    beta              : KLFunction          → transient term
    gamma             : ComparisonFunction  → Kinf input gain
    c                 : float               → practical offset (0 for iss and cuag)
    offset            : float               → C inside β(r + C, t) for the cuag form
    form              : str                 → "isps" | "iss" | "cuag"
    set_A             : BoundedSetApprox    → reference set
    residual_max      : float               → worst residual on fitting and validation samples
    samples_validated : int                 → trajectories in the fresh validation bundle
    tolerance         : float               → declared residual tolerance
    provenance        : str                 → "fit" | "transfer"
    """
    beta: KLFunction
    gamma: ComparisonFunction
    c: float
    offset: float
    form: str
    set_A: BoundedSetApprox
    residual_max: float = 0.0
    samples_validated: int = 0
    tolerance: float = 1e-3
    provenance: str = "fit"

    def __post_init__(self):
        if self.form not in FORMS:
            raise PreconditionError(f"Unknown certificate form {self.form!r}, expected one of {FORMS}")
        if self.c < 0 or self.offset < 0:
            raise PreconditionError(f"Certificate offsets must be nonnegative, got c={self.c}, C={self.offset}")

    def bound(self, r0, t, s):
        """Broadcasting evaluation of the right-hand side."""
        r0 = np.asarray(r0, dtype=float)
        return self.beta.sigma(r0 + self.offset) * self.beta.decay(t) + self.gamma(s) + self.c

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "beta": self.beta.to_dict(),
            "gamma": self.gamma.to_dict(),
            "c": self.c,
            "offset": self.offset,
            "set": self.set_A.to_dict(),
            "residual_max": self.residual_max,
            "samples_validated": self.samples_validated,
            "tolerance": self.tolerance,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GainCertificate":
        return cls(
            beta=KLFunction.from_dict(data["beta"]),
            gamma=ComparisonFunction.from_dict(data["gamma"]),
            c=float(data["c"]),
            offset=float(data.get("offset", 0.0)),
            form=data["form"],
            set_A=BoundedSetApprox.from_dict(data["set"]),
            residual_max=float(data.get("residual_max", 0.0)),
            samples_validated=int(data.get("samples_validated", 0)),
            tolerance=float(data.get("tolerance", 1e-3)),
            provenance=data.get("provenance", "fit"),
        )


@dataclass
class CertificateFit:
    """
    verdict     : Verdict                   → consistent | falsified | inconclusive
    certificate : GainCertificate | None    → present when consistent
    """
    verdict: Verdict
    certificate: Optional[GainCertificate] = None


@dataclass
class CertificateValidation:
    """
    Residual of a certificate on a fresh bundle.

    residual_max : float           → max of ‖φ‖_A - bound (inf after divergence)
    samples      : int             → trajectories simulated
    witness      : Witness | None  → worst sample, replayable
    """
    residual_max: float
    samples: int
    witness: Optional[Witness] = None


@dataclass
class UGBResult:
    """
    Uniform global boundedness in both equivalent forms.

    verdict        : Verdict
    sigma          : ComparisonFunction | None → σ in σ(‖x‖_A) + γ(‖u‖) + c
    sigma1         : ComparisonFunction | None → σ₁ = σ + id in σ₁(‖x‖_A + c) + γ(‖u‖)
    gamma          : ComparisonFunction | None
    c              : float
    residual_sum   : float  → worst residual of the (σ, γ, c) form
    residual_shift : float  → worst residual of the (σ₁, c, γ) form
    """
    verdict: Verdict
    sigma: Optional[ComparisonFunction] = None
    sigma1: Optional[ComparisonFunction] = None
    gamma: Optional[ComparisonFunction] = None
    c: float = 0.0
    residual_sum: float = math.nan
    residual_shift: float = math.nan


# ── bundles ──────────────────────────────────────────────────

def fit_bundle(sys: ControlSystem, A: BoundedSetApprox, budget: SampleBudget) -> TrajectoryBundle:
    X = fit_states(A, budget, rng_for(budget.seed, STREAM_FIT))
    inputs = standard_inputs(budget, sys.input_dim, sys.grid_step, rng_for(budget.seed, STREAM_INPUTS))
    X0, U = pair(X, inputs)
    return simulate_bundle(sys, X0, U, budget.time_horizon, budget.record_step, A, budget.workers)


def validation_bundle(sys: ControlSystem, A: BoundedSetApprox, budget: SampleBudget, seed: Optional[int] = None) -> TrajectoryBundle:
    """Fresh bundle; the default seed differs from the fitting seed."""
    seed = budget.seed + 1 if seed is None else seed
    rng = rng_for(seed, STREAM_VALIDATION)
    X = uniform_states(A, budget.r_max, budget.n_states, rng)
    inputs = standard_inputs(budget, sys.input_dim, sys.grid_step, rng)
    X0, U = pair(X, inputs)
    return simulate_bundle(sys, X0, U, budget.time_horizon, budget.record_step, A, budget.workers)


def _divergence_witness(bundle: TrajectoryBundle) -> Witness:
    b = int(np.flatnonzero(bundle.diverged)[0])
    return Witness("forward_completeness", float(bundle.times[-1]), bundle.x0[b].copy(), bundle.inputs[b], math.inf, OVERFLOW_GUARD)


def certificate_residual(cert: GainCertificate, bundle: TrajectoryBundle) -> CertificateValidation:
    if np.any(bundle.diverged):
        return CertificateValidation(math.inf, bundle.size, _divergence_witness(bundle))
    bound = cert.bound(bundle.r0[:, None], bundle.times[None, :], bundle.levels[:, None])
    excess = bundle.distances - bound
    b, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
    return CertificateValidation(float(excess[b, j]), bundle.size, bundle.witness(b, j, float(bound[b, j])))


def validate_certificate(sys: ControlSystem, cert: GainCertificate, budget: SampleBudget, seed: Optional[int] = None) -> CertificateValidation:
    """Residual of `cert` on a fresh bundle around its reference set."""
    bundle = validation_bundle(sys, cert.set_A, budget, seed)
    check = certificate_residual(cert, bundle)
    logger.info(f"validate_certificate: {sys.name} {cert.form} residual {check.residual_max:.4g} on {check.samples} samples")
    return check


# ── early falsification ──────────────────────────────────────

def growth_check(sys: ControlSystem, A: BoundedSetApprox, budget: SampleBudget, tolerance: float) -> Optional[Witness]:
    """
    Zero and ±u_max constant inputs from states at r_max, simulated to 4T. A
    trajectory with S(4T) > 1.5·S(T) and S(4T) - S(T) > tolerance is unbounded.
    """
    T = budget.time_horizon
    rng = rng_for(budget.seed, STREAM_GROWTH)
    states = np.vstack([A.points[:1], states_at_distance(A, np.full(2, budget.r_max), rng)])
    axis = np.zeros(sys.input_dim)
    axis[0] = budget.input_bound
    inputs = [
        InputSignal.zero(sys.input_dim, sys.grid_step),
        InputSignal.constant(axis, 4 * T, sys.grid_step),
        InputSignal.constant(-axis, 4 * T, sys.grid_step),
    ]
    X0, U = pair(states, inputs)
    bundle = simulate_bundle(sys, X0, U, 4 * T, budget.record_step, A, budget.workers)
    if np.any(bundle.diverged):
        return _divergence_witness(bundle)

    j_T = int(np.searchsorted(bundle.times, T - 1e-9))
    s_T, s_end = bundle.distances[:, j_T], bundle.distances[:, -1]
    growing = (s_end > GROWTH_RATIO * s_T) & (s_end - s_T > tolerance)
    if not np.any(growing):
        return None
    b = int(np.flatnonzero(growing)[np.argmax(s_end[growing])])
    logger.info(f"growth_check: {sys.name} distance {s_T[b]:.4g} -> {s_end[b]:.4g} between T and 4T")
    return bundle.witness(b, bundle.times.size - 1, GROWTH_RATIO * float(s_T[b]), kind="growth")


def tail_stall(bundle: TrajectoryBundle, tolerance: float) -> Optional[Witness]:
    """Zero-input trajectory still above 10·tolerance at T without decrease since T/2."""
    half = int(np.searchsorted(bundle.times, bundle.times[-1] / 2 - 1e-9))
    d_end, d_half = bundle.distances[:, -1], bundle.distances[:, half]
    stalled = (bundle.levels == 0) & (d_end > 10 * tolerance) & (d_end >= d_half - tolerance)
    if not np.any(stalled):
        return None
    b = int(np.flatnonzero(stalled)[np.argmax(d_end[stalled])])
    return bundle.witness(b, bundle.times.size - 1, 10 * tolerance)


# ── envelopes ────────────────────────────────────────────────

def gain_envelope(levels: np.ndarray, excess: np.ndarray) -> ComparisonFunction:
    """Inflated running-max envelope of (input level -> excess distance), strictly increasing from (0, 0)."""
    positive = levels > 0
    if not np.any(positive):
        return ComparisonFunction.linear(GAIN_SLOPE_FLOOR)
    s, inverse = np.unique(levels[positive], return_inverse=True)
    worst_excess = np.zeros(s.size)
    np.maximum.at(worst_excess, inverse, np.maximum(excess[positive], 0.0))
    envelope = np.maximum.accumulate(worst_excess) * ENVELOPE_INFLATION

    args, vals = [0.0], [0.0]
    for si, ei in zip(s, envelope):
        v = max(float(ei), vals[-1] + GAIN_SLOPE_FLOOR * (si - args[-1]))
        if v <= vals[-1]:
            v = float(np.nextafter(vals[-1], np.inf))
        args.append(float(si))
        vals.append(v)
    return ComparisonFunction.from_samples(args, vals, KINF, max(vals[-1] / args[-1], GAIN_SLOPE_FLOOR))


def residual_grid(bundle: TrajectoryBundle, nodes: np.ndarray, gamma: ComparisonFunction, c: float) -> np.ndarray:
    """
    ω(r_i, t_j): worst residual over samples with ‖x0‖_A <= r_i and times t >= t_{j-1},
    so that the node value covers the whole interval up to the next node.
    """
    residual = bundle.distances - gamma(bundle.levels)[:, None] - c
    omega = np.empty((nodes.size, bundle.times.size))
    for i, r in enumerate(nodes):
        rows = residual[bundle.r0 <= r * (1 + 1e-9)]
        per_time = np.max(rows, axis=0)
        suffix = np.maximum.accumulate(per_time[::-1])[::-1]
        omega[i] = np.concatenate([suffix[:1], suffix[:-1]])
    return omega


def fit_beta(bundle: TrajectoryBundle, nodes: np.ndarray, gamma: ComparisonFunction, c: float, offset: float = 0.0) -> KLFunction:
    return kl_majorize(nodes + offset, bundle.times, residual_grid(bundle, nodes, gamma, c))


def _inflate(cert: GainCertificate, residual: float, practical: bool) -> GainCertificate:
    c = cert.c + max(residual, 0.0) if practical else cert.c
    return replace(cert, beta=cert.beta.scaled(SIGMA_ROUND_FACTOR), gamma=cert.gamma.scaled(GAMMA_ROUND_FACTOR), c=c)


def _validate_rounds(
    sys: ControlSystem,
    cert: GainCertificate,
    fitted: TrajectoryBundle,
    budget: SampleBudget,
    practical: bool,
    **evidence,
) -> CertificateFit:
    fresh = validation_bundle(sys, cert.set_A, budget)
    if np.any(fresh.diverged):
        return CertificateFit(Verdict.falsified(_divergence_witness(fresh), **evidence))

    for round_ in range(MAX_REFIT_ROUNDS + 1):
        if round_:
            cert = _inflate(cert, residual, practical)
        residual = max(certificate_residual(cert, fitted).residual_max, certificate_residual(cert, fresh).residual_max)
        logger.debug(f"{cert.form} round {round_}: residual {residual:.4g} (tolerance {cert.tolerance})")
        if residual <= cert.tolerance:
            cert = replace(cert, residual_max=residual, samples_validated=fresh.size)
            logger.info(f"fit_{cert.form}: {sys.name} certified after {round_} inflation rounds")
            return CertificateFit(Verdict.consistent(rounds=round_, residual_max=residual, **evidence), cert)

    logger.warning(f"fit_{cert.form}: {sys.name} residual {residual:.4g} above tolerance after {MAX_REFIT_ROUNDS} rounds")
    return CertificateFit(Verdict.inconclusive(reason="validation residual above tolerance", residual_max=residual, **evidence))


def _preflight(sys: ControlSystem, A: BoundedSetApprox, budget: SampleBudget, tolerance: float, stall: bool) -> tuple:
    """Growth check and fitting bundle; returns (bundle, falsified verdict or None)."""
    witness = growth_check(sys, A, budget, tolerance)
    if witness is not None:
        return None, Verdict.falsified(witness, stage="growth")
    bundle = fit_bundle(sys, A, budget)
    if np.any(bundle.diverged):
        return bundle, Verdict.falsified(_divergence_witness(bundle), stage="fit")
    if stall:
        witness = tail_stall(bundle, tolerance)
        if witness is not None:
            logger.info(f"{sys.name}: zero-input distance stalls at {witness.measured:.4g}")
            return bundle, Verdict.falsified(witness, stage="tail")
    return bundle, None


# ── fitters ──────────────────────────────────────────────────

def fit_isps(
    sys: ControlSystem,
    A: BoundedSetApprox,
    budget: SampleBudget,
    tolerance: float = 1e-3,
    practical: bool = True,
) -> CertificateFit:
    """
    Fit β(‖x‖_A, t) + γ(‖u‖) + c.

    c comes first, from zero-input tails; γ is the envelope of the remaining
    long-time excess against input level; β majorizes what is left. With
    practical=False c is pinned to 0 (ISS form) and a stalled zero-input tail
    falsifies.
    """
    bundle, stop = _preflight(sys, A, budget, tolerance, stall=not practical)
    if stop is not None:
        return CertificateFit(stop)

    tail = bundle.tail_mask(0.5)
    tail_sup = np.max(bundle.distances[:, tail], axis=1)
    zero = bundle.levels == 0
    c = OFFSET_INFLATION * float(np.max(tail_sup[zero])) if practical and np.any(zero) else 0.0
    gamma = gain_envelope(bundle.levels, tail_sup - c)
    beta = fit_beta(bundle, fit_radii(budget), gamma, c)

    form = "isps" if practical else "iss"
    cert = GainCertificate(beta, gamma, c, 0.0, form, A, tolerance=tolerance)
    return _validate_rounds(sys, cert, bundle, budget, practical, samples=bundle.size, c=c)


def fit_cuag(sys: ControlSystem, A: BoundedSetApprox, budget: SampleBudget, tolerance: float = 1e-3) -> CertificateFit:
    """Fit β(‖x‖_A + C, t) + γ(‖u‖) with the smallest grid offset C that validates."""
    bundle, stop = _preflight(sys, A, budget, tolerance, stall=True)
    if stop is not None:
        return CertificateFit(stop)

    tail_sup = np.max(bundle.distances[:, bundle.tail_mask(0.5)], axis=1)
    gamma = gain_envelope(bundle.levels, tail_sup)
    nodes = fit_radii(budget)
    fresh = validation_bundle(sys, A, budget)
    if np.any(fresh.diverged):
        return CertificateFit(Verdict.falsified(_divergence_witness(fresh), stage="validation"))

    cert = None
    for offset in CUAG_OFFSETS:
        cert = GainCertificate(fit_beta(bundle, nodes, gamma, 0.0, offset), gamma, 0.0, offset, "cuag", A, tolerance=tolerance)
        residual = max(certificate_residual(cert, bundle).residual_max, certificate_residual(cert, fresh).residual_max)
        logger.debug(f"fit_cuag: C={offset} residual {residual:.4g}")
        if residual <= tolerance:
            cert = replace(cert, residual_max=residual, samples_validated=fresh.size)
            logger.info(f"fit_cuag: {sys.name} certified with C={offset}")
            return CertificateFit(Verdict.consistent(offset=offset, residual_max=residual, samples=bundle.size), cert)
    return _validate_rounds(sys, cert, bundle, budget, False, offset=cert.offset, samples=bundle.size)


def check_ugb(sys: ControlSystem, A: BoundedSetApprox, budget: SampleBudget, tolerance: float = 1e-3) -> UGBResult:
    """
    σ(‖x‖_A) + γ(‖u‖) + c taken from an ISpS fit, and the equivalent
    σ₁(‖x‖_A + c) + γ(‖u‖) with σ₁ = σ + id, both validated on a fresh bundle.
    """
    fit = fit_isps(sys, A, budget, tolerance)
    if not fit.verdict.is_consistent:
        return UGBResult(fit.verdict)

    cert = fit.certificate
    sigma = cert.beta.sigma
    sigma1 = add(sigma, ComparisonFunction.identity())
    fresh = validation_bundle(sys, A, budget)
    r0 = fresh.r0[:, None]
    gain = cert.gamma(fresh.levels)[:, None]
    sum_form = sigma(r0) + gain + cert.c
    shift_form = sigma1(r0 + cert.c) + gain
    residual_sum = float(np.max(fresh.distances - sum_form))
    residual_shift = float(np.max(fresh.distances - shift_form))
    dominated = bool(np.all(shift_form >= sum_form - 1e-12))

    evidence = {"residual_sum": residual_sum, "residual_shift": residual_shift, "shift_dominates": dominated, "c": cert.c}
    if residual_sum <= tolerance and dominated:
        verdict = Verdict.consistent(**evidence)
    else:
        verdict = Verdict.inconclusive(reason="bound forms disagree on validation samples", **evidence)
    logger.info(f"check_ugb: {sys.name} -> {verdict.status.value}")
    return UGBResult(verdict, sigma, sigma1, cert.gamma, cert.c, residual_sum, residual_shift)


def transfer_certificate(cert: GainCertificate, A2: BoundedSetApprox) -> GainCertificate:
    """
    Move an ISpS certificate from its set A1 to A2: with k = ‖A1‖ + ‖A2‖,
    β'(r, t) = β(2r, t), γ' = γ and c' = c + β(2k, 0) + k.
    """
    if cert.form == "cuag":
        raise PreconditionError("Only isps/iss certificates can be transferred between sets")
    k = cert.set_A.radius + A2.radius
    c = cert.c + float(cert.beta(2 * k, 0.0)) + k
    return GainCertificate(
        beta=cert.beta.dilated(2.0),
        gamma=cert.gamma,
        c=c,
        offset=0.0,
        form="isps",
        set_A=A2,
        residual_max=cert.residual_max,
        samples_validated=0,
        tolerance=cert.tolerance,
        provenance="transfer",
    )
