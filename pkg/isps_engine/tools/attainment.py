# isps_engine/tools/attainment.py

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bundle import TrajectoryBundle, pair, simulate_bundle
from .comparison import ComparisonFunction
from .control_system import ControlSystem
from .errors import ConfigurationError
from .geometry import BoundedSetApprox
from .sampling import STREAM_ATTAINMENT, STREAM_INPUTS, SampleBudget, rng_for, standard_inputs, states_at_distance, uniform_states
from .signals import InputSignal, concat
from .verdicts import Verdict

logger = logging.getLogger(__name__)

GROWTH_SLACK = 1e-9


@dataclass
class AttainmentTable:
    """
    Sampled attainment or settling times over an (ε, r) grid.

    property   : str          → "ulim" | "lim" | "uag"
    verdict    : Verdict      → consistent | falsified (growth witness) | inconclusive
    epsilons   : np.ndarray   → ε nodes
    radii      : np.ndarray   → r nodes
    tau        : np.ndarray   → shape (len(epsilons), len(radii)); nan where unresolved
    candidates : int          → trajectories that needed the extended horizon
    """
    property: str
    verdict: Verdict
    epsilons: np.ndarray
    radii: np.ndarray
    tau: np.ndarray
    candidates: int = 0

    @property
    def complete(self) -> bool:
        return bool(np.all(np.isfinite(self.tau)))

    def rows(self) -> list:
        return [
            {"eps": float(e), "r": float(r), "tau": float(self.tau[i, j])}
            for i, e in enumerate(self.epsilons)
            for j, r in enumerate(self.radii)
        ]


def attainment_samples(sys: ControlSystem, A: BoundedSetApprox, budget: SampleBudget) -> tuple:
    """States on shells of every radius node plus uniform fill, paired with the standard inputs."""
    rng = rng_for(budget.seed, STREAM_ATTAINMENT)
    per_shell = max(1, budget.n_states // (2 * len(budget.radii)))
    parts = [A.points[: min(A.size, 8)]]
    for r in budget.radii:
        parts.append(states_at_distance(A, np.full(2 * per_shell, r), rng))
    parts.append(uniform_states(A, budget.r_max, max(1, budget.n_states // 2), rng))
    states = np.vstack(parts)
    inputs = standard_inputs(budget, sys.input_dim, sys.grid_step, rng_for(budget.seed, STREAM_INPUTS))
    X0, U = pair(states, inputs)
    if X0.shape[0] == 0:
        raise ConfigurationError("Attainment sampling produced no trajectories")
    return X0, U


def extend_input(u: InputSignal, horizon: float, new_horizon: float) -> InputSignal:
    """Hold the last value of an input that is active up to `horizon` until `new_horizon`."""
    if u.values.shape[0] == 0 or u.duration < horizon - 1e-9:
        return u
    hold = InputSignal.constant(u.values[-1], new_horizon - u.duration, u.grid_step)
    return concat(u, hold, u.duration)


def _targets(bundle: TrajectoryBundle, epsilons: np.ndarray, gamma: ComparisonFunction) -> np.ndarray:
    """ε + γ(‖u‖) with shape (E, B)."""
    return epsilons[:, None] + gamma(bundle.levels)[None, :]


def _first_attainment(bundle: TrajectoryBundle, targets: np.ndarray) -> np.ndarray:
    """(E, B) first recorded time with distance <= target, nan if never."""
    hit = bundle.distances[None, :, :] <= targets[:, :, None]
    first = np.argmax(hit, axis=2)
    out = bundle.times[first]
    out[~np.any(hit, axis=2)] = np.nan
    return out


def _settling(bundle: TrajectoryBundle, targets: np.ndarray) -> np.ndarray:
    """(E, B) first recorded time after the last violation, nan if violated at the end."""
    viol = bundle.distances[None, :, :] > targets[:, :, None]
    T = bundle.times.size
    last = T - 1 - np.argmax(viol[:, :, ::-1], axis=2)
    out = np.where(last + 1 < T, bundle.times[np.minimum(last + 1, T - 1)], np.nan)
    out[~np.any(viol, axis=2)] = 0.0
    return out


def _resolve(
    sys: ControlSystem,
    A: BoundedSetApprox,
    gamma: ComparisonFunction,
    budget: SampleBudget,
    bundle: TrajectoryBundle,
    epsilons: np.ndarray,
    times: np.ndarray,
    measure,
    extensions: Sequence[int],
) -> tuple:
    """Re-simulate unresolved trajectories on extended horizons; return (times, witness, unresolved)."""
    T = budget.time_horizon
    open_b = np.flatnonzero(np.any(np.isnan(times), axis=0))
    candidates = int(open_b.size)
    witness = None
    for factor in extensions:
        if open_b.size == 0:
            break
        horizon = factor * T
        inputs = [extend_input(bundle.inputs[b], T, horizon) for b in open_b]
        ext = simulate_bundle(sys, bundle.x0[open_b], inputs, horizon, budget.record_step, A, budget.workers)
        ext_times = measure(ext, _targets(ext, epsilons, gamma))
        for k, b in enumerate(open_b):
            missing = np.isnan(times[:, b])
            times[missing, b] = ext_times[missing, k]
        still = np.any(np.isnan(ext_times), axis=0)
        if factor == extensions[-1] and np.any(still):
            base_end = np.searchsorted(ext.times, T - 1e-9)
            growing = ext.distances[:, -1] > ext.distances[:, base_end] + GROWTH_SLACK
            culprits = np.flatnonzero(still & growing)
            if culprits.size:
                k = int(culprits[np.argmax(ext.distances[culprits, -1])])
                e_idx = int(np.flatnonzero(np.isnan(ext_times[:, k]))[0])
                bound = float(epsilons[e_idx] + gamma(ext.levels[k]))
                witness = ext.witness(k, ext.times.size - 1, bound)
        open_b = open_b[still]
    return times, witness, int(open_b.size), candidates


def _table(
    prop: str,
    sys: ControlSystem,
    A: BoundedSetApprox,
    gamma: ComparisonFunction,
    budget: SampleBudget,
    measure,
    extensions: Sequence[int],
) -> AttainmentTable:
    epsilons = np.asarray(budget.epsilons, dtype=float)
    radii = np.asarray(budget.radii, dtype=float)
    X0, U = attainment_samples(sys, A, budget)
    bundle = simulate_bundle(sys, X0, U, budget.time_horizon, budget.record_step, A, budget.workers)

    times = measure(bundle, _targets(bundle, epsilons, gamma))
    times, witness, unresolved, candidates = _resolve(sys, A, gamma, budget, bundle, epsilons, times, measure, extensions)

    tau = np.full((epsilons.size, radii.size), np.nan)
    for j, r in enumerate(radii):
        inside = bundle.r0 <= r * (1 + 1e-12)
        block = times[:, inside]
        resolved = ~np.any(np.isnan(block), axis=1)
        tau[resolved, j] = np.max(block[resolved], axis=1)

    evidence = {"samples": bundle.size, "candidates": candidates, "unresolved": unresolved}
    if witness is not None:
        verdict = Verdict.falsified(witness, **evidence)
    elif unresolved:
        verdict = Verdict.inconclusive(reason="horizon exhausted without growth", **evidence)
    else:
        verdict = Verdict.consistent(**evidence)
    logger.info(f"{prop}: {sys.name} -> {verdict.status.value} ({bundle.size} samples, {candidates} extended)")
    return AttainmentTable(prop, verdict, epsilons, radii, tau, candidates)


def estimate_ulim(sys: ControlSystem, A: BoundedSetApprox, gamma: ComparisonFunction, budget: SampleBudget) -> AttainmentTable:
    """τ̂(ε, r) = max first time ‖φ(t,x,u)‖_A <= ε + γ(‖u‖) over samples with ‖x‖_A <= r."""
    return _table("ulim", sys, A, gamma, budget, _first_attainment, (4,))


def check_lim(sys: ControlSystem, A: BoundedSetApprox, gamma: ComparisonFunction, budget: SampleBudget) -> AttainmentTable:
    """Per-trajectory attainment, horizons extended ×2 then ×4; same samples as estimate_ulim."""
    return _table("lim", sys, A, gamma, budget, _first_attainment, (2, 4))


def check_uag(sys: ControlSystem, A: BoundedSetApprox, gamma: ComparisonFunction, budget: SampleBudget) -> AttainmentTable:
    """τ̂(ε, r) after which ‖φ(t,x,u)‖_A <= ε + γ(‖u‖) holds at every recorded time."""
    return _table("uag", sys, A, gamma, budget, _settling, (4,))
