# isps_engine/tools/integrator.py

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.linalg import expm

from .errors import DomainError, ShapeError

logger = logging.getLogger(__name__)

OVERFLOW_GUARD = 1e12
H_MAX = 0.01

Rhs = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class TrajectoryBatch:
    """
    Recorded states of a batch of trajectories.

    times       : np.ndarray → shape (T,), recording times (0 and the final time included)
    states      : np.ndarray → shape (B, T, n), +inf from the divergence time on
    diverged_at : np.ndarray → shape (B,), first time the overflow guard tripped, nan otherwise
    """
    times: np.ndarray
    states: np.ndarray
    diverged_at: np.ndarray

    @property
    def diverged(self) -> np.ndarray:
        return ~np.isnan(self.diverged_at)

    @property
    def final(self) -> np.ndarray:
        return self.states[:, -1]


def record_grid(horizon: float, grid_step: float, record_step: Optional[float]) -> tuple:
    """(cells recorded every, recording times) for a run of length horizon."""
    full_cells = int(math.floor(horizon / grid_step + 1e-9))
    if record_step is None:
        every = max(full_cells, 1)
    else:
        every = max(1, int(round(record_step / grid_step)))
    times = [k * grid_step for k in range(every, full_cells + 1, every)]
    times = [0.0] + times
    if horizon - times[-1] > 1e-9 * grid_step:
        times.append(float(horizon))
    return every, np.asarray(times, dtype=float)


class _Stepper:
    """Classic RK4, or its Lawson integrating-factor form when a linear operator is given."""

    def __init__(self, rhs: Rhs, linear_op: Optional[np.ndarray]):
        self.rhs = rhs
        self.linear_op = linear_op
        self._factors = {}

    def _factor(self, h: float) -> tuple:
        if h not in self._factors:
            half = expm(self.linear_op * (h / 2))
            self._factors[h] = (half.T, (half @ half).T)
        return self._factors[h]

    def step(self, X: np.ndarray, Uk: np.ndarray, h: float) -> np.ndarray:
        f = self.rhs
        if self.linear_op is None:
            k1 = f(X, Uk)
            k2 = f(X + 0.5 * h * k1, Uk)
            k3 = f(X + 0.5 * h * k2, Uk)
            k4 = f(X + h * k3, Uk)
            return X + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        E, E2 = self._factor(h)
        k1 = f(X, Uk)
        Xh = X @ E
        k2 = f(Xh + 0.5 * h * (k1 @ E), Uk)
        k3 = f(Xh + 0.5 * h * k2, Uk)
        k4 = f(X @ E2 + h * (k3 @ E), Uk)
        return X @ E2 + (h / 6.0) * (k1 @ E2 + 2.0 * ((k2 + k3) @ E) + k4)


def propagate(
    rhs: Rhs,
    X0: np.ndarray,
    U: np.ndarray,
    grid_step: float,
    t_end: float,
    linear_op: Optional[np.ndarray] = None,
    h_max: float = H_MAX,
    substep: Optional[float] = None,
    record_step: Optional[float] = None,
) -> TrajectoryBatch:
    """
    Fixed-substep integration of x' = A x + rhs(x, u) for a batch.

    X0 has shape (B, n), U has shape (B, K, m) (cell k acts on [k g, (k+1) g),
    zero after K). Substeps divide each grid cell evenly, so no step straddles an
    input switch; a final partial cell is split the same way.
    """
    if t_end < 0:
        raise DomainError(f"Integration time must be nonnegative, got {t_end}")
    X = np.array(X0, dtype=float)
    U = np.asarray(U, dtype=float)
    if X.ndim != 2 or U.ndim != 3 or U.shape[0] != X.shape[0]:
        raise ShapeError(f"Batch shapes do not match: X0 {X.shape}, U {U.shape}")

    batch = X.shape[0]
    n_cells_in = U.shape[1]
    zero_u = np.zeros((batch, U.shape[2]))
    stepper = _Stepper(rhs, linear_op)

    per_cell = max(1, int(round(grid_step / substep))) if substep else max(1, int(math.ceil(grid_step / h_max - 1e-9)))
    h = grid_step / per_cell
    every, times = record_grid(t_end, grid_step, record_step)
    full_cells = int(math.floor(t_end / grid_step + 1e-9))
    remainder = t_end - full_cells * grid_step
    if remainder <= 1e-9 * grid_step:
        remainder = 0.0

    alive = np.ones(batch, dtype=bool)
    diverged_at = np.full(batch, np.nan)
    records = [X.copy()]

    def guard(state: np.ndarray, t: float) -> np.ndarray:
        size = np.max(np.abs(state), axis=1) if state.shape[1] else np.zeros(batch)
        bad = alive & (~np.isfinite(size) | (size > OVERFLOW_GUARD))
        if np.any(bad):
            diverged_at[bad] = t
            alive[bad] = False
            logger.debug(f"propagate: {int(bad.sum())} trajectories crossed the overflow guard at t={t:.4g}")
        state[~alive] = 0.0
        return state

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(full_cells):
            Uk = U[:, k] if k < n_cells_in else zero_u
            t0 = k * grid_step
            for s in range(per_cell):
                X = guard(stepper.step(X, Uk, h), t0 + (s + 1) * h)
            if (k + 1) % every == 0:
                records.append(X.copy())

        if remainder > 0:
            Uk = U[:, full_cells] if full_cells < n_cells_in else zero_u
            pieces = max(1, int(math.ceil(remainder / h - 1e-9)))
            hr = remainder / pieces
            t0 = full_cells * grid_step
            for s in range(pieces):
                X = guard(stepper.step(X, Uk, hr), t0 + (s + 1) * hr)

    if len(records) < len(times):
        records.append(X.copy())

    states = np.stack(records, axis=1)
    dead = times[None, :] >= diverged_at[:, None]
    states[dead] = np.inf
    return TrajectoryBatch(times=times, states=states, diverged_at=diverged_at)
