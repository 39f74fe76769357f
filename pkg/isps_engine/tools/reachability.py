# isps_engine/tools/reachability.py

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .bundle import pair, simulate_batch
from .control_system import ControlSystem
from .errors import DomainError
from .geometry import norm, origin
from .integrator import OVERFLOW_GUARD
from .sampling import STREAM_BRS, STREAM_LIPSCHITZ, SampleBudget, rng_for, segment_cells, states_at_distance, uniform_states
from .search import coordinate_search
from .signals import InputSignal
from .verdicts import Verdict, Witness

logger = logging.getLogger(__name__)


@dataclass
class BRSResult:
    """
    Bounded-reachability check.

    verdict   : Verdict → consistent (finite sup found) | falsified (overflow guard tripped)
    reach_sup : float   → estimated sup of ‖φ(t,x,u)‖ over ‖x‖ <= C, ‖u‖ <= C, t in [0, tau]
    samples   : int     → trajectories simulated
    """
    verdict: Verdict
    reach_sup: float
    samples: int


@dataclass
class LipschitzEstimate:
    """
    Sampled Lipschitz constant of the flow on a ball.

    verdict : Verdict → falsified when a pair produced a non-finite ratio
    L       : float   → max ‖φ(t,x,u) - φ(t,y,u)‖ / ‖x - y‖ over pairs and t in [0, h]
    pairs   : int     → state pairs evaluated
    """
    verdict: Verdict
    L: float
    pairs: int


class _BoxInputs:
    """Maps a box vector z = (x0, segment values) to a state and an input bounded by C."""

    def __init__(self, sys: ControlSystem, C: float, tau: float, segments: int):
        self.sys = sys
        self.C = C
        self.segments = segments
        self.cells = segment_cells(max(tau, sys.grid_step), segments, sys.grid_step)
        self.dim = sys.state_dim + segments * sys.input_dim

    def _clip_rows(self, V: np.ndarray, ord_) -> np.ndarray:
        size = norm(V, ord_)
        scale = np.where(size > self.C, self.C / np.maximum(size, 1e-300), 1.0)
        return V * scale[..., None]

    def decode(self, Z: np.ndarray) -> tuple:
        n, m = self.sys.state_dim, self.sys.input_dim
        X0 = self._clip_rows(Z[:, :n], self.sys.norm_ord)
        inputs = []
        for z in Z:
            seg = self._clip_rows(z[n:].reshape(self.segments, m), 2)
            inputs.append(InputSignal.from_segments(seg, self.cells, self.sys.grid_step))
        return X0, inputs


def check_brs(sys: ControlSystem, C: float, tau: float, budget: SampleBudget, refine_evaluations: int = None) -> BRSResult:
    """
    Estimate sup ‖φ(t,x,u)‖ over ‖x‖ <= C, ‖u‖ <= C, t <= tau by Latin-hypercube
    sampling plus coordinate-ascent refinement of the largest samples.
    """
    if C <= 0 or tau < 0:
        raise DomainError(f"check_brs needs C > 0 and tau >= 0, got C={C}, tau={tau}")
    if tau == 0:
        return BRSResult(Verdict.consistent(reach_sup=C, tau=0.0, C=C), float(C), 0)

    rng = rng_for(budget.seed, STREAM_BRS)
    box = _BoxInputs(sys, C, tau, budget.segments)
    record = budget.record_step

    lhs = qmc.LatinHypercube(d=box.dim, rng=rng).random(budget.n_states * budget.n_inputs)
    Z = -C + 2 * C * lhs
    X_lhs, U_lhs = box.decode(Z)

    shell = states_at_distance(origin(sys.state_dim, sys.norm_ord), np.full(2 * sys.state_dim, C), rng)
    axis = np.zeros(sys.input_dim)
    if sys.input_dim:
        axis[0] = C
    presets = [InputSignal.zero(sys.input_dim, sys.grid_step),
               InputSignal.constant(axis, tau, sys.grid_step),
               InputSignal.constant(-axis, tau, sys.grid_step)]
    X_sh, U_sh = pair(shell, presets)

    X0 = np.vstack([X_lhs, X_sh])
    inputs = U_lhs + U_sh
    batch = simulate_batch(sys, X0, inputs, tau, record, budget.workers)
    samples = X0.shape[0]

    if np.any(batch.diverged):
        b = int(np.flatnonzero(batch.diverged)[0])
        witness = Witness("forward_completeness", float(batch.diverged_at[b]), X0[b], inputs[b], math.inf, OVERFLOW_GUARD)
        logger.info(f"check_brs: {sys.name} diverged at t={batch.diverged_at[b]:.4g}")
        return BRSResult(Verdict.falsified(witness, C=C, tau=tau, samples=samples), math.inf, samples)

    reach = np.max(norm(batch.states, sys.norm_ord), axis=1)
    best = float(np.max(reach))

    def objective(Zc: np.ndarray) -> np.ndarray:
        Xc, Uc = box.decode(Zc)
        out = simulate_batch(sys, Xc, Uc, tau, record, budget.workers)
        return np.max(norm(out.states, sys.norm_ord), axis=1)

    top = np.argsort(reach[: Z.shape[0]])[::-1][:4]
    evaluations = refine_evaluations if refine_evaluations is not None else 20 * budget.n_states
    if evaluations > 0:
        result = coordinate_search(objective, Z[top], -C * np.ones(box.dim), C * np.ones(box.dim),
                                   initial_step=0.25, min_step=1e-2, max_evaluations=evaluations)
        samples += result.evaluations
        if not np.isfinite(result.best_value):
            Xw, Uw = box.decode(result.best_z[None, :])
            witness = Witness("forward_completeness", tau, Xw[0], Uw[0], math.inf, OVERFLOW_GUARD)
            return BRSResult(Verdict.falsified(witness, C=C, tau=tau, samples=samples), math.inf, samples)
        best = max(best, result.best_value)

    logger.info(f"check_brs: {sys.name} reach_sup={best:.6g} over C={C}, tau={tau}")
    return BRSResult(Verdict.consistent(reach_sup=best, C=C, tau=tau, samples=samples), best, samples)


def estimate_lipschitz(sys: ControlSystem, r: float, h: float, budget: SampleBudget) -> LipschitzEstimate:
    """max over sampled pairs x, y in the closed r-ball and t in [0, h] of the flow's difference ratio."""
    if r <= 0 or h <= 0:
        raise DomainError(f"estimate_lipschitz needs r > 0 and h > 0, got r={r}, h={h}")
    rng = rng_for(budget.seed, STREAM_LIPSCHITZ)
    base = origin(sys.state_dim, sys.norm_ord)
    count = budget.n_states
    X = uniform_states(base, r, count, rng)[:count]
    Y = uniform_states(base, r, count, rng)[:count]
    gap = norm(X - Y, sys.norm_ord)
    keep = gap > 1e-9
    X, Y, gap = X[keep], Y[keep], gap[keep]

    inputs = []
    for _ in range(X.shape[0]):
        level = rng.uniform(0.0, r)
        values = rng.uniform(-1.0, 1.0, (budget.segments, sys.input_dim))
        values *= level / np.maximum(np.max(np.linalg.norm(values, axis=1)), 1e-300)
        inputs.append(InputSignal.from_segments(values, segment_cells(h, budget.segments, sys.grid_step), sys.grid_step))

    batch = simulate_batch(sys, np.vstack([X, Y]), inputs + inputs, h, budget.record_step, budget.workers)
    k = X.shape[0]
    diff = norm(batch.states[:k] - batch.states[k:], sys.norm_ord)
    ratios = np.max(diff, axis=1) / gap
    L = float(np.max(ratios)) if ratios.size else 0.0

    if not np.isfinite(L):
        b = int(np.flatnonzero(~np.isfinite(ratios))[0])
        witness = Witness("forward_completeness", h, X[b], inputs[b], math.inf, OVERFLOW_GUARD)
        return LipschitzEstimate(Verdict.falsified(witness, r=r, h=h), math.inf, k)
    logger.info(f"estimate_lipschitz: {sys.name} L({r}, {h}) ≈ {L:.6g} from {k} pairs")
    return LipschitzEstimate(Verdict.consistent(L=L, r=r, h=h, pairs=k), L, k)
