# isps_engine/tools/invariance.py

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bundle import TrajectoryBundle, pair, simulate_bundle
from .control_system import ControlSystem
from .errors import DomainError
from .gain_fitter import GainCertificate, fit_cuag, fit_isps
from .geometry import BoundedSetApprox
from .sampling import STREAM_INVARIANCE, SampleBudget, rng_for, standard_inputs, states_at_distance
from .verdicts import Verdict, Witness

logger = logging.getLogger(__name__)

BISECTION_RESOLUTION = 1e-6
SET_SAMPLE_CAP = 64
ROBUSTNESS_HORIZON = 1.0


@dataclass
class RobustInvarianceResult:
    """
    verdict : Verdict → falsified when no admissible δ exists at resolution 1e-6
    delta   : float   → largest sampled δ without violation (nan unless consistent)
    """
    verdict: Verdict
    delta: float = math.nan


@dataclass
class ISSResult:
    """
    ISS w.r.t. a set via CUAG plus robust 0-invariance.

    verdict     : Verdict
    certificate : GainCertificate | None → c = 0 certificate when consistent
    legs        : dict[str, Verdict]     → outcome of every leg that ran
    """
    verdict: Verdict
    certificate: Optional[GainCertificate] = None
    legs: dict = field(default_factory=dict)


def membership_slack(sys: ControlSystem, A: BoundedSetApprox) -> float:
    return A.inflation * 1e-3 + sys.flow_tolerance


def set_states(A: BoundedSetApprox, count: int, rng: np.random.Generator) -> np.ndarray:
    """Cloud points, inflation shell and interior samples of A."""
    if A.size > SET_SAMPLE_CAP:
        cloud = A.points[np.sort(rng.choice(A.size, SET_SAMPLE_CAP, replace=False))]
    else:
        cloud = A.points
    return np.vstack([cloud, A.shell_points(rng, count), A.sample_inside(rng, count)])


def _first_violation(bundle: TrajectoryBundle, limit: float, kind: str = "distance") -> Optional[Witness]:
    over = bundle.distances > limit
    if not np.any(over):
        return None
    b, j = np.unravel_index(int(np.argmax(np.where(over, bundle.distances, -np.inf))), over.shape)
    return bundle.witness(b, j, limit, kind=kind)


def check_s_invariance(sys: ControlSystem, A: BoundedSetApprox, s: float, budget: SampleBudget, slack: Optional[float] = None) -> Verdict:
    """
    Sampled test of φ(t, x, u) ∈ A for x ∈ A and ‖u‖ <= s up to the budget horizon.
    Membership is ‖φ‖_A <= slack, by default membership_slack(sys, A).
    """
    if s < 0:
        raise DomainError(f"Input level s must be nonnegative, got {s}")
    rng = rng_for(budget.seed, STREAM_INVARIANCE)
    states = set_states(A, budget.n_states, rng)
    inputs = standard_inputs(budget, sys.input_dim, sys.grid_step, rng, u_max=s)
    X0, U = pair(states, inputs)
    bundle = simulate_bundle(sys, X0, U, budget.time_horizon, budget.record_step, A, budget.workers)

    slack = membership_slack(sys, A) if slack is None else slack
    witness = _first_violation(bundle, slack)
    if witness is not None:
        logger.info(f"check_s_invariance: {sys.name} leaves A (distance {witness.measured:.4g} at t={witness.t:.4g})")
        return Verdict.falsified(witness, s=s, slack=slack, samples=bundle.size)
    logger.info(f"check_s_invariance: {sys.name} consistent for s={s} on {bundle.size} samples")
    return Verdict.consistent(s=s, slack=slack, samples=bundle.size, max_distance=float(np.max(bundle.distances)))


def _robust_violation(sys: ControlSystem, A: BoundedSetApprox, delta: float, eps: float, h: float, budget: SampleBudget) -> Optional[Witness]:
    rng = rng_for(budget.seed, STREAM_INVARIANCE + 100)
    distances = np.concatenate([rng.uniform(0.0, delta, budget.n_states), np.full(budget.n_states, delta)])
    states = np.vstack([A.points[: min(A.size, SET_SAMPLE_CAP)], states_at_distance(A, distances, rng)])
    inputs = standard_inputs(budget, sys.input_dim, sys.grid_step, rng, u_max=delta, duration=h)
    X0, U = pair(states, inputs)
    bundle = simulate_bundle(sys, X0, U, h, min(budget.record_step, h), A, budget.workers)
    return _first_violation(bundle, eps + sys.flow_tolerance, kind="robustness")


def check_robust_s_invariance(
    sys: ControlSystem,
    A: BoundedSetApprox,
    s: float,
    eps: float,
    h: float,
    budget: SampleBudget,
) -> RobustInvarianceResult:
    """
    Largest sampled δ in (0, eps] with ‖φ(t,x,u)‖_A <= eps whenever t <= h,
    ‖x‖_A <= δ and ‖u‖ <= δ, found by bisection after an s-invariance check.
    """
    if eps <= 0 or h <= 0:
        raise DomainError(f"Robust invariance needs eps > 0 and h > 0, got eps={eps}, h={h}")
    base = check_s_invariance(sys, A, s, budget)
    if not base.is_consistent:
        return RobustInvarianceResult(base)

    witness = _robust_violation(sys, A, eps, eps, h, budget)
    if witness is None:
        logger.info(f"check_robust_s_invariance: {sys.name} admits delta = eps = {eps}")
        return RobustInvarianceResult(Verdict.consistent(delta=eps, eps=eps, h=h, s=s), eps)

    lo, hi = 0.0, eps
    while hi - lo > BISECTION_RESOLUTION:
        mid = 0.5 * (lo + hi)
        found = _robust_violation(sys, A, mid, eps, h, budget)
        if found is None:
            lo = mid
        else:
            hi, witness = mid, found
        logger.debug(f"robust invariance bisection: [{lo:.3e}, {hi:.3e}]")

    if lo == 0.0:
        logger.info(f"check_robust_s_invariance: {sys.name} has no admissible delta at resolution {BISECTION_RESOLUTION}")
        return RobustInvarianceResult(Verdict.falsified(witness, eps=eps, h=h, s=s, resolution=BISECTION_RESOLUTION))
    return RobustInvarianceResult(Verdict.consistent(delta=lo, eps=eps, h=h, s=s), lo)


def check_iss_wrt_set(sys: ControlSystem, A: BoundedSetApprox, budget: SampleBudget, tolerance: float = 1e-3) -> ISSResult:
    """CUAG w.r.t. A and robust 0-invariance of A; both consistent gives a c = 0 certificate."""
    legs = {}
    cuag = fit_cuag(sys, A, budget, tolerance)
    legs["cuag"] = cuag.verdict
    if cuag.verdict.is_falsified:
        return ISSResult(Verdict.falsified(cuag.verdict.witness, failed_leg="cuag"), None, legs)

    robust = check_robust_s_invariance(sys, A, 0.0, min(budget.epsilons), ROBUSTNESS_HORIZON, budget)
    legs["robust_invariance"] = robust.verdict
    if robust.verdict.is_falsified:
        return ISSResult(Verdict.falsified(robust.verdict.witness, failed_leg="robust_invariance"), None, legs)
    if not (cuag.verdict.is_consistent and robust.verdict.is_consistent):
        return ISSResult(Verdict.inconclusive(reason="a leg was inconclusive"), None, legs)

    iss = fit_isps(sys, A, budget, tolerance, practical=False)
    legs["iss"] = iss.verdict
    if iss.verdict.is_falsified:
        return ISSResult(Verdict.falsified(iss.verdict.witness, failed_leg="iss"), None, legs)
    logger.info(f"check_iss_wrt_set: {sys.name} -> {iss.verdict.status.value}")
    return ISSResult(iss.verdict, iss.certificate, legs)
