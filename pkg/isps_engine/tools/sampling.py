# isps_engine/tools/sampling.py

import logging
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .geometry import BoundedSetApprox, unit_directions
from .signals import InputSignal

logger = logging.getLogger(__name__)

# seed streams, one per sampling purpose
STREAM_FIT = 1
STREAM_VALIDATION = 2
STREAM_INPUTS = 3
STREAM_BRS = 4
STREAM_ATTAINMENT = 5
STREAM_INVARIANCE = 6
STREAM_PROLONGATION = 7
STREAM_FALSIFY = 8
STREAM_LIPSCHITZ = 9
STREAM_GROWTH = 10


class SampleBudget(BaseModel):
    """Sampling budget shared by every estimator."""
    model_config = ConfigDict(frozen=True)

    n_states: int = Field(32, ge=1)
    n_inputs: int = Field(8, ge=1)
    time_horizon: float = Field(20.0, gt=0)
    radii: List[float] = Field(default_factory=lambda: [0.5, 1.0, 2.0])
    epsilons: List[float] = Field(default_factory=lambda: [0.25, 0.5, 1.0])
    seed: int = 0
    segments: int = Field(4, ge=1, le=8)
    record_step: float = Field(0.1, gt=0)
    u_max: Optional[float] = Field(None, gt=0)
    workers: int = Field(1, ge=1)

    @field_validator("radii", "epsilons")
    @classmethod
    def _positive_grid(cls, v: List[float]) -> List[float]:
        if not v:
            raise ValueError("grid must be nonempty")
        if any(x <= 0 for x in v):
            raise ValueError(f"grid values must be positive, got {v}")
        return sorted(float(x) for x in v)

    @property
    def input_bound(self) -> float:
        return float(self.u_max) if self.u_max is not None else max(self.radii)

    @property
    def r_max(self) -> float:
        return max(self.radii)

    def with_seed(self, seed: int) -> "SampleBudget":
        return self.model_copy(update={"seed": seed})


def rng_for(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


def states_at_distance(A: BoundedSetApprox, distances: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One state per requested distance, placed radially from a random base point of A."""
    distances = np.asarray(distances, dtype=float)
    centers = A.points[rng.integers(0, A.size, distances.size)]
    dirs = unit_directions(rng, distances.size, A.dim, A.norm_ord)
    return centers + dirs * (A.inflation + distances)[:, None]


def ladder_states(A: BoundedSetApprox, r_min: float, r_max: float, levels: int, rng: np.random.Generator) -> np.ndarray:
    """Geometric radius ladder, two directions per level, plus up to 8 points of A itself."""
    radii = np.geomspace(r_min, r_max, max(levels, 2))
    X = states_at_distance(A, np.repeat(radii, 2), rng)
    inside = A.points[: min(A.size, 8)]
    return np.vstack([inside, X])


def fit_radii(budget: SampleBudget) -> np.ndarray:
    """Radius nodes of the fitting ladder."""
    return np.geomspace(min(budget.radii) / 10, budget.r_max, max(2, budget.n_states // 2))


def fit_states(A: BoundedSetApprox, budget: SampleBudget, rng: np.random.Generator) -> np.ndarray:
    radii = fit_radii(budget)
    return ladder_states(A, radii[0], radii[-1], radii.size, rng)


def uniform_states(A: BoundedSetApprox, r_max: float, count: int, rng: np.random.Generator) -> np.ndarray:
    """States at uniformly drawn distances in [0, r_max] from A, plus the outer shell."""
    X = states_at_distance(A, rng.uniform(0.0, r_max, count), rng)
    return np.vstack([X, states_at_distance(A, np.full(2, r_max), rng)])


def segment_cells(duration: float, segments: int, grid_step: float) -> int:
    return max(1, int(round(duration / segments / grid_step)))


def input_presets(
    input_dim: int,
    levels: np.ndarray,
    duration: float,
    grid_step: float,
    segments: int,
) -> list:
    """Zero, constant ±level, bang-bang at the top level, and zero-tail inputs."""
    presets = [InputSignal.zero(input_dim, grid_step)]
    axis = np.zeros(input_dim)
    axis[0] = 1.0
    for level in levels:
        presets.append(InputSignal.constant(level * axis, duration, grid_step))
        presets.append(InputSignal.constant(-level * axis, duration, grid_step))
    top = float(np.max(levels)) if len(levels) else 0.0
    if top > 0:
        cells = segment_cells(duration, segments, grid_step)
        signs = np.where(np.arange(segments) % 2 == 0, 1.0, -1.0)
        presets.append(InputSignal.from_segments(signs[:, None] * top * axis, cells, grid_step))
        presets.append(InputSignal.constant(top * axis, duration / 2, grid_step))
    return presets


def random_inputs(
    rng: np.random.Generator,
    count: int,
    input_dim: int,
    u_max: float,
    duration: float,
    grid_step: float,
    segments: int,
) -> list:
    """Per signal a level uniform in [0, u_max], then segment values uniform in that ball."""
    cells = segment_cells(duration, segments, grid_step)
    signals = []
    for _ in range(count):
        level = rng.uniform(0.0, u_max)
        if input_dim == 1:
            values = rng.uniform(-level, level, (segments, 1))
        else:
            dirs = unit_directions(rng, segments, input_dim)
            values = dirs * (level * rng.uniform(0.0, 1.0, segments) ** (1.0 / input_dim))[:, None]
        signals.append(InputSignal.from_segments(values, cells, grid_step))
    return signals


def standard_inputs(
    budget: SampleBudget,
    input_dim: int,
    grid_step: float,
    rng: np.random.Generator,
    u_max: Optional[float] = None,
    duration: Optional[float] = None,
) -> list:
    """Presets on a geometric level ladder plus budget.n_inputs random signals."""
    u_max = budget.input_bound if u_max is None else u_max
    duration = budget.time_horizon if duration is None else duration
    if u_max <= 0:
        return [InputSignal.zero(input_dim, grid_step)]
    levels = np.geomspace(u_max / 100, u_max, 8)
    presets = input_presets(input_dim, levels, duration, grid_step, budget.segments)
    return presets + random_inputs(rng, budget.n_inputs, input_dim, u_max, duration, grid_step, budget.segments)
