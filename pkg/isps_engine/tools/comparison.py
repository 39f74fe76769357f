# isps_engine/tools/comparison.py

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import ClassTagError, DataError, DomainError, ExtentError, PreconditionError

logger = logging.getLogger(__name__)

K = "K"
KINF = "Kinf"
L = "L"
CLASS_TAGS = (K, KINF, L)

MIN_SLOPE = 1e-9          # floor for strict increase of fitted K-functions
SIGMA_INFLATION = 1.01    # envelope inflation used by kl_majorize
STRICTNESS_DELTA = 1e-9   # perturbation that makes a non-strict tau grid strict


@dataclass(frozen=True, eq=False)
class ComparisonFunction:
    """
    Piecewise-linear comparison function with a class-dependent tail.

    class_tag : str    → "K" | "Kinf" | "L"
    knots     : tuple  → ((arg, value), ...) with args strictly increasing, first arg 0
    tail      : float  → slope after the last knot (K, Kinf) or exponential rate (L)

    K/Kinf values start at exactly 0 and increase strictly; L values decrease strictly
    and stay positive, the tail value·exp(-rate·(t - t_last)) carries them to 0.
    """
    class_tag: str
    knots: tuple
    tail: float

    def __post_init__(self):
        knots = tuple((float(a), float(v)) for a, v in self.knots)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "tail", float(self.tail))
        self._validate()

    def _validate(self):
        if self.class_tag not in CLASS_TAGS:
            raise ClassTagError(f"Unknown class tag {self.class_tag!r}, expected one of {CLASS_TAGS}")
        if not self.knots:
            raise DataError("A comparison function needs at least one knot")
        args, values = self.args, self.values
        if not (np.all(np.isfinite(args)) and np.all(np.isfinite(values)) and np.isfinite(self.tail)):
            raise DataError(f"Non-finite knot data in {self.class_tag} function")
        if args[0] != 0.0:
            raise DataError(f"First knot must sit at argument 0, got {args[0]}")
        if np.any(np.diff(args) <= 0):
            raise DataError("Knot arguments must be strictly increasing")
        if self.tail <= 0:
            raise DataError(f"Tail parameter must be positive, got {self.tail}")
        if self.class_tag == L:
            if np.any(values <= 0) or np.any(np.diff(values) >= 0):
                raise DataError("L-function values must be positive and strictly decreasing")
        else:
            if values[0] != 0.0:
                raise DataError(f"{self.class_tag}-function must vanish at 0, got {values[0]}")
            if np.any(np.diff(values) <= 0):
                raise DataError(f"{self.class_tag}-function values must be strictly increasing")

    @cached_property
    def args(self) -> np.ndarray:
        return np.array([a for a, _ in self.knots], dtype=float)

    @cached_property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.knots], dtype=float)

    # ── constructors ─────────────────────────────────────────

    @classmethod
    def identity(cls) -> "ComparisonFunction":
        return cls(KINF, ((0.0, 0.0), (1.0, 1.0)), 1.0)

    @classmethod
    def linear(cls, slope: float) -> "ComparisonFunction":
        if slope <= 0:
            raise DomainError(f"Linear gain slope must be positive, got {slope}")
        return cls(KINF, ((0.0, 0.0), (1.0, float(slope))), slope)

    @classmethod
    def from_samples(cls, args: Sequence[float], values: Sequence[float], class_tag: str, tail: float) -> "ComparisonFunction":
        return cls(class_tag, tuple(zip(args, values)), tail)

    # ── evaluation ───────────────────────────────────────────

    def evaluate(self, r):
        """Value at r (scalar or array). Exact at knots."""
        arr = np.asarray(r, dtype=float)
        flat = np.atleast_1d(arr).ravel()
        if np.any(np.isnan(flat)) or np.any(flat < 0):
            raise DomainError(f"Comparison functions are defined on [0, inf), got {r!r}")

        a, v = self.args, self.values
        last = len(a) - 1
        idx = np.searchsorted(a, flat, side="right") - 1
        out = np.empty_like(flat)

        in_tail = idx >= last
        if self.class_tag == L:
            out[in_tail] = v[last] * np.exp(-self.tail * (flat[in_tail] - a[last]))
        else:
            out[in_tail] = v[last] + self.tail * (flat[in_tail] - a[last])

        inner = ~in_tail
        if np.any(inner):
            i = idx[inner]
            w = (flat[inner] - a[i]) / (a[i + 1] - a[i])
            out[inner] = v[i] + w * (v[i + 1] - v[i])

        if arr.ndim == 0:
            return float(out[0])
        return out.reshape(arr.shape)

    __call__ = evaluate

    def invert(self) -> "ComparisonFunction":
        """Inverse of a Kinf function: knots swapped, tail slope inverted."""
        if self.class_tag != KINF:
            raise ClassTagError(f"Only Kinf functions are invertible, got {self.class_tag}")
        return ComparisonFunction(KINF, tuple((v, a) for a, v in self.knots), 1.0 / self.tail)

    def scaled(self, factor: float) -> "ComparisonFunction":
        if factor <= 0:
            raise DomainError(f"Scaling factor must be positive, got {factor}")
        if self.class_tag == L:
            raise ClassTagError("Scaling is defined for K/Kinf functions only")
        return ComparisonFunction(self.class_tag, tuple((a, v * factor) for a, v in self.knots), self.tail * factor)

    def preimage(self, y):
        """Solve f(r) = y for a K/Kinf function (y beyond the last value uses the tail)."""
        _require_k(self)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        a, v = self.args, self.values
        out = np.interp(y, v, a)
        beyond = y > v[-1]
        out[beyond] = a[-1] + (y[beyond] - v[-1]) / self.tail
        return out

    # ── serialization ────────────────────────────────────────

    def to_dict(self) -> dict:
        return {
            "class": self.class_tag,
            "knots": [[a, v] for a, v in self.knots],
            "tail": {"kind": "rate" if self.class_tag == L else "slope", "param": self.tail},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ComparisonFunction":
        try:
            return cls(data["class"], tuple(tuple(k) for k in data["knots"]), data["tail"]["param"])
        except (KeyError, TypeError) as e:
            raise DataError(f"Malformed comparison function payload: {e}")


@dataclass(frozen=True, eq=False)
class KLFunction:
    """
    Factorized KL bound β(r, t) = sigma(r) · decay(t).

    sigma : ComparisonFunction  → class K/Kinf
    decay : ComparisonFunction  → class L, decay(0) = 1
    """
    sigma: ComparisonFunction
    decay: ComparisonFunction

    def __post_init__(self):
        if self.sigma.class_tag == L:
            raise ClassTagError("KL sigma factor must be a K/Kinf function")
        if self.decay.class_tag != L:
            raise ClassTagError("KL decay factor must be an L function")
        if self.decay.knots[0] != (0.0, 1.0):
            raise DataError(f"KL decay must be normalized to decay(0) = 1, got {self.decay.knots[0]}")

    def evaluate(self, r, t):
        return self.sigma(r) * self.decay(t)

    __call__ = evaluate

    def scaled(self, factor: float) -> "KLFunction":
        return KLFunction(self.sigma.scaled(factor), self.decay)

    def dilated(self, factor: float) -> "KLFunction":
        """β(factor · r, t)."""
        return KLFunction(compose(self.sigma, ComparisonFunction.linear(factor)), self.decay)

    def to_dict(self) -> dict:
        return {"sigma": self.sigma.to_dict(), "decay": self.decay.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "KLFunction":
        try:
            return cls(ComparisonFunction.from_dict(data["sigma"]), ComparisonFunction.from_dict(data["decay"]))
        except KeyError as e:
            raise DataError(f"Malformed KL payload, missing {e}")


# ── algebra ──────────────────────────────────────────────────

def _require_k(*functions: ComparisonFunction):
    for f in functions:
        if f.class_tag == L:
            raise ClassTagError("Composition, max and sum are defined on K/Kinf functions only")


def _joint_tag(f: ComparisonFunction, g: ComparisonFunction, both: bool) -> str:
    if both:
        return KINF if f.class_tag == KINF and g.class_tag == KINF else K
    return KINF if KINF in (f.class_tag, g.class_tag) else K


def _strict_knots(args: np.ndarray, values: np.ndarray) -> tuple:
    """Drop grid points that rounding made non-strict."""
    order = np.argsort(args, kind="stable")
    args, values = args[order], values[order]
    kept_a, kept_v = [float(args[0])], [float(values[0])]
    for a, v in zip(args[1:], values[1:]):
        if a - kept_a[-1] > 1e-12 * max(1.0, a) and v > kept_v[-1]:
            kept_a.append(float(a))
            kept_v.append(float(v))
    return tuple(zip(kept_a, kept_v))


def compose(f: ComparisonFunction, g: ComparisonFunction) -> ComparisonFunction:
    """f ∘ g on the union of g's knots and the preimages of f's knots under g."""
    _require_k(f, g)
    grid = np.union1d(g.args, g.preimage(f.args))
    return ComparisonFunction(_joint_tag(f, g, both=True), _strict_knots(grid, f(g(grid))), f.tail * g.tail)


def pointwise_max(f: ComparisonFunction, g: ComparisonFunction) -> ComparisonFunction:
    _require_k(f, g)
    grid = np.union1d(f.args, g.args)
    diff = f(grid) - g(grid)

    crossings = []
    for i in range(len(grid) - 1):
        if diff[i] * diff[i + 1] < 0:
            crossings.append(grid[i] + (grid[i + 1] - grid[i]) * diff[i] / (diff[i] - diff[i + 1]))
    slope_gap = f.tail - g.tail
    if diff[-1] * slope_gap < 0:
        crossings.append(grid[-1] - diff[-1] / slope_gap)

    grid = np.union1d(grid, np.asarray(crossings, dtype=float))
    return ComparisonFunction(
        _joint_tag(f, g, both=False),
        _strict_knots(grid, np.maximum(f(grid), g(grid))),
        max(f.tail, g.tail),
    )


def add(f: ComparisonFunction, g: ComparisonFunction) -> ComparisonFunction:
    _require_k(f, g)
    grid = np.union1d(f.args, g.args)
    return ComparisonFunction(_joint_tag(f, g, both=False), _strict_knots(grid, f(grid) + g(grid)), f.tail + g.tail)


# ── monotone constructions ───────────────────────────────────

def _check_monotone_grid(radii: np.ndarray, times: np.ndarray, omega: np.ndarray):
    bad_r = np.argwhere(np.diff(omega, axis=0) < 0)
    if bad_r.size:
        i, j = bad_r[0]
        raise DataError(
            f"ω decreases in r between nodes (r={radii[i]}, t={times[j]}) and (r={radii[i + 1]}, t={times[j]}): "
            f"{omega[i, j]} > {omega[i + 1, j]}"
        )
    bad_t = np.argwhere(np.diff(omega, axis=1) > 0)
    if bad_t.size:
        i, j = bad_t[0]
        raise DataError(
            f"ω increases in t between nodes (r={radii[i]}, t={times[j]}) and (r={radii[i]}, t={times[j + 1]}): "
            f"{omega[i, j]} < {omega[i, j + 1]}"
        )


def kl_majorize(radii: Sequence[float], times: Sequence[float], omega) -> KLFunction:
    """
    Factorized KL function dominating ω(radii[i], times[j]) at every node.

    sigma is the 1%-inflated envelope ω(r, t_0), made strictly increasing;
    decay is the normalized envelope max_i ω(r_i, t)/sigma(r_i), made strictly
    decreasing with an exponential tail. Domination is then verified node by node
    and sigma inflated until it holds exactly.
    """
    r = np.asarray(radii, dtype=float)
    t = np.asarray(times, dtype=float)
    w = np.asarray(omega, dtype=float)

    if r.size == 0 or t.size == 0:
        raise DataError("kl_majorize needs at least one node per axis")
    if w.shape != (r.size, t.size):
        raise DataError(f"ω grid has shape {w.shape}, expected {(r.size, t.size)}")
    if np.any(r < 0) or np.any(t < 0):
        raise DomainError("Radii and times must be nonnegative")
    if np.any(np.diff(r) <= 0) or np.any(np.diff(t) <= 0):
        raise DataError("Radii and times must be strictly increasing")
    if not np.all(np.isfinite(w)):
        raise DataError("ω grid contains non-finite values")
    _check_monotone_grid(r, t, w)
    w = np.maximum(w, 0.0)

    envelope = w[:, 0]
    start = 0
    if r[0] == 0.0:
        if envelope[0] > 0:
            raise DataError(f"ω(0, t) must vanish for a K-majorant, got {envelope[0]}")
        start = 1

    args, vals = [0.0], [0.0]
    for ri, ei in zip(r[start:], envelope[start:]):
        v = max(SIGMA_INFLATION * ei, vals[-1] + MIN_SLOPE * (ri - args[-1]))
        if v <= vals[-1]:
            v = float(np.nextafter(vals[-1], np.inf))
        args.append(float(ri))
        vals.append(float(v))
    slope = (vals[-1] - vals[-2]) / (args[-1] - args[-2]) if len(args) > 1 else 1.0
    sigma = ComparisonFunction.from_samples(args, vals, KINF, max(slope, MIN_SLOPE))

    sig_nodes = sigma(r)
    positive = sig_nodes > 0
    ratios = np.zeros(t.size)
    if np.any(positive):
        ratios = np.max(w[positive] / sig_nodes[positive, None], axis=0)

    t_args, d_vals = [0.0], [1.0]
    for tj, dj in zip(t, ratios):
        if tj == 0.0:
            continue
        d = max(float(dj), 0.5 * d_vals[-1])
        if d >= d_vals[-1]:
            d = d_vals[-1] * (1.0 - 1e-9)
        t_args.append(float(tj))
        d_vals.append(d)
    if len(t_args) > 1:
        rate = -np.log(d_vals[-1] / d_vals[-2]) / (t_args[-1] - t_args[-2])
    else:
        rate = 1.0
    decay = ComparisonFunction.from_samples(t_args, d_vals, L, max(rate, 1e-6))

    beta = KLFunction(sigma, decay)
    for round_ in range(60):
        bound = np.outer(beta.sigma(r), beta.decay(t))
        over = w > bound
        if not np.any(over):
            logger.debug(f"kl_majorize: domination after {round_} repair rounds")
            return beta
        factor = float(np.max(w[over] / bound[over])) * SIGMA_INFLATION
        beta = beta.scaled(factor)
    raise DataError("kl_majorize could not reach domination after 60 repair rounds")


class SmoothedTau:
    """
    τ(ε, R) = (2 / (ε R)) ∫_R^{2R} ∫_{ε/2}^{ε} τ̃(s, q) ds dq over the bilinear interpolant of a grid.

    The interpolant is piecewise bilinear, so the composite trapezoid rule on its
    breakpoints is exact; the bisection loop only confirms it.
    """

    def __init__(self, eps_grid: np.ndarray, radius_grid: np.ndarray, values: np.ndarray, rel_tol: float = 1e-8):
        self.eps_grid = eps_grid
        self.radius_grid = radius_grid
        self.values = values
        self.rel_tol = rel_tol
        self._interp = RegularGridInterpolator((eps_grid, radius_grid), values, method="linear")

    def _check_extent(self, eps: float, radius: float):
        e_lo, e_hi = self.eps_grid[0], self.eps_grid[-1]
        r_lo, r_hi = self.radius_grid[0], self.radius_grid[-1]
        if eps <= 0 or radius <= 0:
            raise DomainError(f"τ is defined for ε > 0 and R > 0, got ({eps}, {radius})")
        if eps / 2 < e_lo * (1 - 1e-12) or eps > e_hi * (1 + 1e-12):
            raise ExtentError(f"ε stencil [{eps / 2}, {eps}] leaves the sampled range [{e_lo}, {e_hi}]")
        if radius < r_lo * (1 - 1e-12) or 2 * radius > r_hi * (1 + 1e-12):
            raise ExtentError(f"R stencil [{radius}, {2 * radius}] leaves the sampled range [{r_lo}, {r_hi}]")

    @staticmethod
    def _breakpoints(lo: float, hi: float, knots: np.ndarray, bisections: int) -> np.ndarray:
        pts = np.concatenate(([lo], knots[(knots > lo) & (knots < hi)], [hi]))
        for _ in range(bisections):
            mids = 0.5 * (pts[:-1] + pts[1:])
            pts = np.sort(np.concatenate((pts, mids)))
        return pts

    def _average(self, eps: float, radius: float, bisections: int) -> float:
        e_pts = self._breakpoints(eps / 2, eps, self.eps_grid, bisections)
        r_pts = self._breakpoints(radius, 2 * radius, self.radius_grid, bisections)
        e_pts = np.clip(e_pts, self.eps_grid[0], self.eps_grid[-1])
        r_pts = np.clip(r_pts, self.radius_grid[0], self.radius_grid[-1])
        ee, rr = np.meshgrid(e_pts, r_pts, indexing="ij")
        surface = self._interp(np.stack([ee.ravel(), rr.ravel()], axis=1)).reshape(ee.shape)
        inner = np.trapezoid(surface, r_pts, axis=1)
        return float(np.trapezoid(inner, e_pts) / ((eps / 2) * radius))

    def __call__(self, eps: float, radius: float) -> float:
        eps, radius = float(eps), float(radius)
        self._check_extent(eps, radius)
        value = self._average(eps, radius, 0)
        for bisections in range(1, 8):
            refined = self._average(eps, radius, bisections)
            if abs(refined - value) <= self.rel_tol * max(abs(refined), 1e-300):
                return refined
            value = refined
        return value


def monotone_smooth_tau(eps_grid: Sequence[float], radius_grid: Sequence[float], tau_tilde) -> SmoothedTau:
    """
    Smooth a sampled attainment-time grid τ̃(ε_i, R_j) into a continuous τ that is
    strictly decreasing in ε, strictly increasing in R and ≥ τ̃ at the nodes.
    """
    eps = np.asarray(eps_grid, dtype=float)
    radius = np.asarray(radius_grid, dtype=float)
    values = np.asarray(tau_tilde, dtype=float)

    if eps.size < 2 or radius.size < 2:
        raise ExtentError("The double-average stencil needs at least two nodes per axis")
    if values.shape != (eps.size, radius.size):
        raise DataError(f"τ̃ grid has shape {values.shape}, expected {(eps.size, radius.size)}")
    if np.any(np.diff(eps) <= 0) or np.any(np.diff(radius) <= 0) or eps[0] <= 0 or radius[0] <= 0:
        raise DataError("ε and R axes must be positive and strictly increasing")
    if not np.all(np.isfinite(values)):
        raise DataError("τ̃ grid contains non-finite entries (unattained nodes)")

    d_eps = np.diff(values, axis=0)
    d_rad = np.diff(values, axis=1)
    bad = np.argwhere(d_eps > 0)
    if bad.size:
        i, j = bad[0]
        raise DataError(f"τ̃ increases in ε between (ε={eps[i]}, R={radius[j]}) and (ε={eps[i + 1]}, R={radius[j]})")
    bad = np.argwhere(d_rad < 0)
    if bad.size:
        i, j = bad[0]
        raise DataError(f"τ̃ decreases in R between (ε={eps[i]}, R={radius[j]}) and (ε={eps[i]}, R={radius[j + 1]})")

    if np.any(d_eps == 0) or np.any(d_rad == 0):
        values = values + STRICTNESS_DELTA * (radius[None, :] - eps[:, None] + eps[-1])
        logger.debug("monotone_smooth_tau: non-strict grid, strictness perturbation applied")

    return SmoothedTau(eps, radius, values)


def running_average(f: Callable[[np.ndarray], np.ndarray], t: float, rel_tol: float = 1e-10) -> float:
    """
    Running average g(t) = (1/t) ∫_0^t f(s) ds of a strictly increasing f.

    f must accept a numpy array. The composite trapezoid rule is refined by doubling
    until two successive values agree to rel_tol.
    """
    if t <= 0:
        raise DomainError(f"Average needs t > 0, got {t}")
    n = 16
    previous = None
    value = 0.0
    for _ in range(22):
        s = np.linspace(0.0, t, n + 1)
        samples = np.asarray(f(s), dtype=float)
        if np.any(np.diff(samples) <= 0):
            raise PreconditionError("running_average needs a strictly increasing f on [0, t]")
        value = float(np.trapezoid(samples, s) / t)
        if previous is not None and abs(value - previous) <= rel_tol * max(abs(value), 1e-300):
            return value
        previous = value
        n *= 2
    return value
