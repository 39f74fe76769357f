# isps_engine/tools/geometry.py

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import DataError, DomainError, ShapeError

logger = logging.getLogger(__name__)


def norm(x: np.ndarray, norm_ord: float = 2, axis: int = -1) -> np.ndarray:
    return np.linalg.norm(np.asarray(x, dtype=float), ord=norm_ord, axis=axis)


def unit_directions(rng: np.random.Generator, count: int, dim: int, norm_ord: float = 2) -> np.ndarray:
    """Random directions of unit norm; in 1-D these alternate +1, -1."""
    if dim == 1:
        return np.where(np.arange(count) % 2 == 0, 1.0, -1.0)[:, None]
    d = rng.standard_normal((count, dim))
    return d / norm(d, norm_ord)[:, None]


@dataclass(frozen=True, eq=False)
class BoundedSetApprox:
    """
    Bounded set approximated as a union of closed balls of common radius.

    points    : np.ndarray → shape (P, n), ball centers
    inflation : float      → common ball radius (uniform Minkowski inflation)
    norm_ord  : float      → 2 (Euclidean) or np.inf (sup-norm)
    """
    points: np.ndarray
    inflation: float = 0.0
    norm_ord: float = 2

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise DataError(f"A bounded set needs a nonempty (P, n) point array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise DataError("Set points must be finite")
        if self.inflation < 0:
            raise DomainError(f"Inflation must be nonnegative, got {self.inflation}")
        if self.norm_ord not in (2, np.inf):
            raise DataError(f"norm_ord must be 2 or inf, got {self.norm_ord}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "inflation", float(self.inflation))

    @cached_property
    def _tree(self) -> cKDTree:
        return cKDTree(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def radius(self) -> float:
        """‖A‖ = max_p ‖p‖ + inflation."""
        return float(np.max(norm(self.points, self.norm_ord)) + self.inflation)

    def distance(self, x: np.ndarray):
        """‖x‖_A for one state (returns float) or a batch (..., n)."""
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1] != self.dim:
            raise ShapeError(f"State dimension {arr.shape[-1]} does not match set dimension {self.dim}")
        flat = arr.reshape(-1, self.dim)
        out = np.full(flat.shape[0], np.inf)
        finite = np.all(np.isfinite(flat), axis=1)
        if np.any(finite):
            d, _ = self._tree.query(flat[finite], k=1, p=self.norm_ord)
            out[finite] = np.maximum(d - self.inflation, 0.0)
        if arr.ndim == 1:
            return float(out[0])
        return out.reshape(arr.shape[:-1])

    def inflate(self, eps: float) -> "BoundedSetApprox":
        """B_eps(A)."""
        if eps < 0:
            raise DomainError(f"Inflation increment must be nonnegative, got {eps}")
        return BoundedSetApprox(self.points, self.inflation + eps, self.norm_ord)

    def sample_inside(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform-radius points of the inflated balls around random centers."""
        centers = self.points[rng.integers(0, self.size, count)]
        if self.inflation == 0:
            return centers.copy()
        dirs = unit_directions(rng, count, self.dim, self.norm_ord)
        radii = self.inflation * rng.uniform(0.0, 1.0, count) ** (1.0 / self.dim)
        return centers + dirs * radii[:, None]

    def shell_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Points at exactly `inflation` from a random center."""
        centers = self.points[rng.integers(0, self.size, count)]
        dirs = unit_directions(rng, count, self.dim, self.norm_ord)
        return centers + dirs * self.inflation

    def to_dict(self) -> dict:
        return {
            "points": self.points.tolist(),
            "inflation": self.inflation,
            "norm": "inf" if self.norm_ord == np.inf else "2",
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BoundedSetApprox":
        try:
            norm_ord = np.inf if str(data.get("norm", "2")) == "inf" else 2
            return cls(np.asarray(data["points"], dtype=float), float(data.get("inflation", 0.0)), norm_ord)
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Malformed set payload: {e}")


def set_distance(x: np.ndarray, A: BoundedSetApprox) -> float:
    return A.distance(x)


def origin(dim: int, norm_ord: float = 2) -> BoundedSetApprox:
    return BoundedSetApprox(np.zeros((1, dim)), 0.0, norm_ord)


def point(coords, norm_ord: float = 2) -> BoundedSetApprox:
    return BoundedSetApprox(np.atleast_2d(np.asarray(coords, dtype=float)), 0.0, norm_ord)


def ball(center, radius: float, norm_ord: float = 2) -> BoundedSetApprox:
    return BoundedSetApprox(np.atleast_2d(np.asarray(center, dtype=float)), radius, norm_ord)


def circle(radius: float, count: int = 64) -> BoundedSetApprox:
    angles = 2 * np.pi * np.arange(count) / count
    return BoundedSetApprox(radius * np.column_stack([np.cos(angles), np.sin(angles)]), 0.0, 2)


def directed_hausdorff(source: BoundedSetApprox, target: BoundedSetApprox) -> float:
    """Upper bound of sup_{x in source} ‖x‖_target, exact when source is a single ball."""
    raw, _ = target._tree.query(source.points, k=1, p=target.norm_ord)
    return float(max(0.0, np.max(raw) + source.inflation - target.inflation))


def farthest_point_subsample(points: np.ndarray, count: int, norm_ord: float = 2) -> np.ndarray:
    """Deterministic farthest-point selection starting at index 0."""
    n = points.shape[0]
    if count >= n:
        return points
    chosen = np.empty(count, dtype=int)
    chosen[0] = 0
    nearest = norm(points - points[0], norm_ord)
    for i in range(1, count):
        chosen[i] = int(np.argmax(nearest))
        nearest = np.minimum(nearest, norm(points - points[chosen[i]], norm_ord))
    return points[np.sort(chosen)]


def merge(sets: list, inflation: Optional[float] = None) -> BoundedSetApprox:
    if not sets:
        raise DataError("merge needs at least one set")
    pts = np.vstack([s.points for s in sets])
    infl = max(s.inflation for s in sets) if inflation is None else inflation
    return BoundedSetApprox(pts, infl, sets[0].norm_ord)
