# isps_engine/tools/bundle.py

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .control_system import ControlSystem
from .geometry import BoundedSetApprox
from .integrator import TrajectoryBatch
from .signals import InputSignal
from .verdicts import Witness

logger = logging.getLogger(__name__)


@dataclass
class TrajectoryBundle:
    """
    Simulated trajectories with their distances to a reference set.

    x0        : np.ndarray         → shape (B, n), initial states
    inputs    : list[InputSignal]  → one input per trajectory
    levels    : np.ndarray         → shape (B,), sup-norm of each input
    r0        : np.ndarray         → shape (B,), ‖x0‖_A
    times     : np.ndarray         → shape (T,), recording times
    states    : np.ndarray         → shape (B, T, n)
    distances : np.ndarray         → shape (B, T), ‖x(t)‖_A (+inf after divergence)
    diverged  : np.ndarray         → shape (B,), overflow guard tripped
    """
    x0: np.ndarray
    inputs: list
    levels: np.ndarray
    r0: np.ndarray
    times: np.ndarray
    states: np.ndarray
    distances: np.ndarray
    diverged: np.ndarray

    @property
    def size(self) -> int:
        return self.x0.shape[0]

    def witness(self, b: int, j: int, bound: float, kind: str = "distance") -> Witness:
        return Witness(kind, float(self.times[j]), self.x0[b].copy(), self.inputs[b], float(self.distances[b, j]), float(bound))

    def tail_mask(self, fraction: float = 0.5) -> np.ndarray:
        return self.times >= fraction * self.times[-1]


def pair(states: np.ndarray, inputs: Sequence[InputSignal]) -> tuple:
    """Every state with every input."""
    X = np.repeat(np.atleast_2d(states), len(inputs), axis=0)
    U = [u for _ in range(np.atleast_2d(states).shape[0]) for u in inputs]
    return X, U


def _chunks(count: int, workers: int) -> list:
    bounds = np.linspace(0, count, min(workers, count) + 1).astype(int)
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def simulate_batch(
    sys: ControlSystem,
    X0: np.ndarray,
    inputs: Sequence[InputSignal],
    horizon: float,
    record_step: Optional[float],
    workers: int = 1,
) -> TrajectoryBatch:
    """Batch simulation split over a thread pool; results keep the input order."""
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    if workers <= 1 or X0.shape[0] < 2:
        return sys.trajectories(X0, list(inputs), horizon, record_step)

    spans = _chunks(X0.shape[0], workers)
    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        parts = list(pool.map(lambda s: sys.trajectories(X0[s[0]:s[1]], list(inputs[s[0]:s[1]]), horizon, record_step), spans))
    return TrajectoryBatch(
        times=parts[0].times,
        states=np.concatenate([p.states for p in parts]),
        diverged_at=np.concatenate([p.diverged_at for p in parts]),
    )


def simulate_bundle(
    sys: ControlSystem,
    X0: np.ndarray,
    inputs: Sequence[InputSignal],
    horizon: float,
    record_step: Optional[float],
    A: BoundedSetApprox,
    workers: int = 1,
) -> TrajectoryBundle:
    batch = simulate_batch(sys, X0, inputs, horizon, record_step, workers)
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    bundle = TrajectoryBundle(
        x0=X0,
        inputs=list(inputs),
        levels=np.array([u.sup_norm() for u in inputs]),
        r0=np.asarray(A.distance(X0)),
        times=batch.times,
        states=batch.states,
        distances=np.asarray(A.distance(batch.states)),
        diverged=batch.diverged,
    )
    logger.debug(f"simulate_bundle: {sys.name}, {bundle.size} trajectories, {bundle.times.size} records, {int(bundle.diverged.sum())} diverged")
    return bundle
