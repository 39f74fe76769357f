# isps_engine/tools/falsifier.py

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bundle import simulate_bundle
from .control_system import ControlSystem
from .errors import PreconditionError
from .gain_fitter import GainCertificate
from .integrator import OVERFLOW_GUARD
from .sampling import STREAM_FALSIFY, SampleBudget, rng_for
from .search import coordinate_search
from .signals import InputSignal
from .verdicts import Verdict, Witness

logger = logging.getLogger(__name__)

MAX_SEGMENTS = 8
HORIZON_GROWTH = 16.0  # default cap on horizon doubling, as a multiple of the base horizon
HORIZON_SPREAD = 8.0  # searched horizons lie in [cap / 8, cap]


@dataclass
class FalsificationProblem:
    """
    Counterexample search against a candidate certificate.

    system          : ControlSystem
    certificate     : GainCertificate  → candidate bound and its reference set
    x_radius        : float            → initial states within this distance of the anchor box
    u_max           : float            → bound on every segment value
    segments        : int              → K piecewise-constant input segments, 1..8
    horizon         : float            → first horizon cap
    max_horizon     : float | None     → largest cap reached by doubling (default 16·horizon)
    max_evaluations : int              → flow evaluations (trajectories) allowed
    restarts        : int              → search starts
    seed            : int
    tolerance       : float            → residual above which the candidate is defeated
    record_step     : float
    """
    system: ControlSystem
    certificate: GainCertificate
    x_radius: float
    u_max: float
    segments: int = 4
    horizon: float = 20.0
    max_horizon: Optional[float] = None
    max_evaluations: int = 10_000
    restarts: int = 20
    seed: int = 0
    tolerance: float = 1e-3
    record_step: float = 0.1

    def __post_init__(self):
        if not 1 <= self.segments <= MAX_SEGMENTS:
            raise PreconditionError(f"segments must lie in [1, {MAX_SEGMENTS}], got {self.segments}")
        for name in ("x_radius", "u_max", "horizon", "record_step"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise PreconditionError(f"{name} must be finite and positive, got {value}")
        if self.max_horizon is None:
            self.max_horizon = HORIZON_GROWTH * self.horizon
        if not (math.isfinite(self.max_horizon) and self.max_horizon >= self.horizon):
            raise PreconditionError(f"max_horizon must be finite and >= horizon, got {self.max_horizon}")
        if self.restarts < 1 or self.max_evaluations < self.restarts:
            raise PreconditionError(f"Need 1 <= restarts <= max_evaluations, got {self.restarts} and {self.max_evaluations}")

    @classmethod
    def from_budget(cls, system: ControlSystem, certificate: GainCertificate, budget: SampleBudget, **overrides) -> "FalsificationProblem":
        fields = {
            "x_radius": budget.r_max,
            "u_max": budget.input_bound,
            "segments": budget.segments,
            "horizon": budget.time_horizon,
            "seed": budget.seed,
            "tolerance": certificate.tolerance,
            "record_step": budget.record_step,
        }
        fields.update(overrides)
        return cls(system, certificate, **fields)


class _Decoder:
    """
    z = (x0 - anchor, segment values, switch fractions, log horizon) ↔ (x0, input, horizon).

    The K-1 switch fractions are sorted and scaled to the horizon, so each row picks its
    own partition of [0, T] into K segments; the input is zero after T.
    """

    def __init__(self, problem: FalsificationProblem, cap: float):
        sys = problem.system
        A = problem.certificate.set_A
        self.problem = problem
        self.cap = cap
        self.anchor = A.points[0]
        spread = float(np.max(np.linalg.norm(A.points - self.anchor, axis=1))) + A.inflation
        self.n, self.m, self.K = sys.state_dim, sys.input_dim, problem.segments
        self.values_end = self.n + self.K * self.m
        reach = problem.x_radius + spread
        shortest = max(cap / HORIZON_SPREAD, problem.record_step)
        self.lower = np.concatenate([
            -reach * np.ones(self.n),
            -problem.u_max * np.ones(self.K * self.m),
            np.zeros(self.K - 1),
            [math.log(min(shortest, cap))],
        ])
        self.upper = np.concatenate([
            reach * np.ones(self.n),
            problem.u_max * np.ones(self.K * self.m),
            np.ones(self.K - 1),
            [math.log(cap)],
        ])

    def horizons(self, Z: np.ndarray) -> np.ndarray:
        """exp of the last coordinate, snapped to the recording grid."""
        step = self.problem.record_step
        T = np.exp(np.clip(Z[:, -1], self.lower[-1], self.upper[-1]))
        return np.minimum(step * np.maximum(1.0, np.round(T / step)), self.cap)

    def _signal(self, z: np.ndarray, T: float) -> InputSignal:
        g = self.problem.system.grid_step
        cells = max(1, int(math.ceil(T / g - 1e-9)))
        cuts = np.round(np.sort(z[self.values_end:-1]) * cells).astype(int)
        lengths = np.diff(np.concatenate([[0], cuts, [cells]]))
        levels = z[self.n:self.values_end].reshape(self.K, self.m)
        return InputSignal(g, np.repeat(levels, lengths, axis=0))

    def decode(self, Z: np.ndarray) -> tuple:
        X0 = self.anchor + Z[:, : self.n]
        T = self.horizons(Z)
        inputs = [self._signal(z, t) for z, t in zip(Z, T)]
        return X0, inputs, T

    def starts(self, rng: np.random.Generator) -> np.ndarray:
        """Zero and ±u_max constant inputs over the full cap first, then uniform draws."""
        dim = self.lower.size
        base = np.zeros(dim)
        base[self.values_end:-1] = np.arange(1, self.K) / self.K
        base[-1] = self.upper[-1]
        fixed = [base.copy()]
        for sign in (1.0, -1.0):
            z = base.copy()
            z[self.n:self.values_end:self.m] = sign * self.problem.u_max
            fixed.append(z)
        fixed = np.array(fixed[: self.problem.restarts])
        extra = self.problem.restarts - fixed.shape[0]
        if extra <= 0:
            return fixed
        return np.vstack([fixed, rng.uniform(self.lower, self.upper, (extra, dim))])


def _residuals(problem: FalsificationProblem, decoder: _Decoder, Z: np.ndarray) -> tuple:
    X0, inputs, T = decoder.decode(Z)
    cert = problem.certificate
    bundle = simulate_bundle(problem.system, X0, inputs, float(np.max(T)), problem.record_step, cert.set_A)
    bound = cert.bound(bundle.r0[:, None], bundle.times[None, :], bundle.levels[:, None])
    excess = np.where(np.isfinite(bundle.distances), bundle.distances - bound, np.inf)
    excess = np.where(bundle.times[None, :] <= T[:, None] + 1e-9, excess, -np.inf)
    return bundle, bound, excess


def _search(problem: FalsificationProblem, decoder: _Decoder, rng: np.random.Generator, evaluations: int):
    def objective(Z: np.ndarray) -> np.ndarray:
        return np.max(_residuals(problem, decoder, Z)[2], axis=1)

    return coordinate_search(
        objective,
        decoder.starts(rng),
        decoder.lower,
        decoder.upper,
        initial_step=0.25,
        min_step=1e-3,
        max_evaluations=evaluations,
    )


def falsify(problem: FalsificationProblem) -> Verdict:
    """
    Maximize ‖φ(t,x0,u)‖_A - bound(‖x0‖_A, t, ‖u‖) over the initial state, the
    segment levels and switch times of a piecewise-constant input, and the horizon,
    by multi-start coordinate search.

    The horizon cap starts at problem.horizon and doubles, up to max_horizon, while the
    best residual keeps rising by more than the tolerance. Each stage spends half of
    the evaluations left; the last possible stage spends all of them.
    """
    rng = rng_for(problem.seed, STREAM_FALSIFY)
    stages = 1 + int(math.floor(math.log2(problem.max_horizon / problem.horizon) + 1e-9))
    cap = problem.horizon
    remaining = problem.max_evaluations
    spent = 0
    previous = -math.inf
    best = None
    run = 0

    for stage in range(stages):
        run = stage + 1
        share = remaining if stage == stages - 1 else max(problem.restarts, remaining // 2)
        decoder = _Decoder(problem, cap)
        result = _search(problem, decoder, rng, share)
        spent += result.evaluations
        remaining -= result.evaluations
        if best is None or result.best_value > best[1].best_value:
            best = (decoder, result, stage)
        logger.debug(f"falsify: stage {stage}, horizon cap {cap:.4g}, best residual {result.best_value:.6g}")

        if result.best_value > problem.tolerance or stage == stages - 1 or remaining < problem.restarts:
            break
        if result.best_value <= previous + problem.tolerance:
            break
        previous = result.best_value
        cap *= 2.0

    decoder, result, _ = best
    evidence = {
        "evaluations": spent,
        "best_residual": result.best_value,
        "restart": result.restart,
        "horizon_cap": decoder.cap,
        "stages": run,
    }

    if result.best_value <= problem.tolerance:
        logger.info(f"falsify: {problem.system.name} candidate survives {spent} evaluations (best residual {result.best_value:.4g}, cap {cap:.4g})")
        return Verdict.consistent(**evidence)

    bundle, bound, excess = _residuals(problem, decoder, result.best_z[None, :])
    if bundle.diverged[0]:
        witness = Witness("forward_completeness", float(bundle.times[-1]), bundle.x0[0].copy(), bundle.inputs[0], math.inf, OVERFLOW_GUARD)
    else:
        j = int(np.argmax(excess[0]))
        witness = bundle.witness(0, j, float(bound[0, j]))
    logger.info(f"falsify: {problem.system.name} defeated candidate, residual {witness.residual:.4g} at t={witness.t:.4g}")
    return Verdict.falsified(witness, **evidence)
