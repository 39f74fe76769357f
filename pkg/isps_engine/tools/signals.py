# isps_engine/tools/signals.py

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError, DomainError, ShapeError

GRID_EPS = 1e-12  # tolerance when snapping times to the input grid


def _grid_index(t: float, grid_step: float) -> int:
    """Index of the grid cell containing t (t rounded down to the grid)."""
    return int(math.floor(t / grid_step + GRID_EPS))


@dataclass(frozen=True, eq=False)
class InputSignal:
    """
    Piecewise-constant input on a uniform grid, identically zero after the last value.

    grid_step : float       → cell length; value k holds on [k·g, (k+1)·g)
    values    : np.ndarray  → shape (K, m), trailing all-zero rows are stripped
    """
    grid_step: float
    values: np.ndarray

    def __post_init__(self):
        if not self.grid_step > 0:
            raise DomainError(f"grid_step must be positive, got {self.grid_step}")
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ShapeError(f"Input values must have shape (K, m), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError("Input values must be finite")
        nonzero = np.flatnonzero(np.any(values != 0, axis=1))
        values = values[: nonzero[-1] + 1] if nonzero.size else values[:0]
        values.setflags(write=False)
        object.__setattr__(self, "grid_step", float(self.grid_step))
        object.__setattr__(self, "values", values)

    @classmethod
    def zero(cls, input_dim: int, grid_step: float = 0.1) -> "InputSignal":
        return cls(grid_step, np.zeros((0, input_dim)))

    @classmethod
    def constant(cls, level: Sequence[float], duration: float, grid_step: float = 0.1) -> "InputSignal":
        level = np.atleast_1d(np.asarray(level, dtype=float))
        cells = max(1, int(math.ceil(duration / grid_step - GRID_EPS)))
        return cls(grid_step, np.tile(level, (cells, 1)))

    @classmethod
    def from_segments(cls, segments: np.ndarray, segment_cells: int, grid_step: float) -> "InputSignal":
        """segments has shape (S, m); each segment lasts segment_cells grid cells."""
        segments = np.atleast_2d(np.asarray(segments, dtype=float))
        return cls(grid_step, np.repeat(segments, segment_cells, axis=0))

    @property
    def input_dim(self) -> int:
        return self.values.shape[1]

    @property
    def duration(self) -> float:
        return self.values.shape[0] * self.grid_step

    def __eq__(self, other) -> bool:
        if not isinstance(other, InputSignal):
            return NotImplemented
        return (
            self.grid_step == other.grid_step
            and self.input_dim == other.input_dim
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def value_at(self, t: float) -> np.ndarray:
        if t < 0:
            raise DomainError(f"Inputs are defined for t >= 0, got {t}")
        k = _grid_index(t, self.grid_step)
        if k >= self.values.shape[0]:
            return np.zeros(self.input_dim)
        return self.values[k].copy()

    def sup_norm(self) -> float:
        if self.values.shape[0] == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def cells(self, count: int) -> np.ndarray:
        """First `count` cell values, zero-padded."""
        out = np.zeros((count, self.input_dim))
        n = min(count, self.values.shape[0])
        out[:n] = self.values[:n]
        return out

    def resample(self, grid_step: float) -> "InputSignal":
        """Values on a finer grid, sampled at the new cell starts."""
        if grid_step == self.grid_step:
            return self
        cells = int(math.ceil(self.duration / grid_step - GRID_EPS))
        starts = np.arange(cells) * grid_step
        idx = np.floor(starts / self.grid_step + GRID_EPS).astype(int)
        vals = np.zeros((cells, self.input_dim))
        inside = idx < self.values.shape[0]
        vals[inside] = self.values[idx[inside]]
        return InputSignal(grid_step, vals)

    def truncate(self, t: float) -> "InputSignal":
        """Keep the values acting on [0, t), zero afterwards."""
        if t < 0:
            raise DomainError(f"Truncation time must be nonnegative, got {t}")
        keep = int(math.ceil(t / self.grid_step - GRID_EPS))
        return InputSignal(self.grid_step, self.values[:keep])

    def to_dict(self) -> dict:
        return {"grid_step": self.grid_step, "input_dim": self.input_dim, "values": self.values.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "InputSignal":
        try:
            values = np.asarray(data["values"], dtype=float).reshape(-1, int(data["input_dim"]))
            return cls(float(data["grid_step"]), values)
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Malformed input signal payload: {e}")


def shift(u: InputSignal, tau: float) -> InputSignal:
    """u(· + τ), τ rounded down to the grid."""
    if tau < 0:
        raise DomainError(f"Shift must be nonnegative, got {tau}")
    return InputSignal(u.grid_step, u.values[_grid_index(tau, u.grid_step):])


def concat(u1: InputSignal, u2: InputSignal, t: float) -> InputSignal:
    """u1 on [0, t), u2(· - t) afterwards; mismatched grids are resampled to the finer one."""
    if t < 0:
        raise DomainError(f"Concatenation time must be nonnegative, got {t}")
    if u1.input_dim != u2.input_dim:
        raise ShapeError(f"Input dimensions differ: {u1.input_dim} vs {u2.input_dim}")
    g = min(u1.grid_step, u2.grid_step)
    a, b = u1.resample(g), u2.resample(g)
    k = _grid_index(t, g)
    return InputSignal(g, np.vstack([a.cells(k), b.values]))


def stack_inputs(inputs: Sequence[InputSignal], cells: int) -> np.ndarray:
    """Batch array of shape (B, cells, m); all signals must share the grid step."""
    if not inputs:
        raise DataError("stack_inputs needs at least one signal")
    g = inputs[0].grid_step
    if any(u.grid_step != g for u in inputs):
        raise ShapeError("All inputs of a batch must share one grid step")
    return np.stack([u.cells(cells) for u in inputs])
