# isps_engine/tools/prolongation.py

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial import Delaunay

from .attainment import AttainmentTable, estimate_ulim
from .bundle import TrajectoryBundle, pair, simulate_bundle
from .comparison import ComparisonFunction, monotone_smooth_tau
from .control_system import ControlSystem
from .errors import ConfigurationError, DataError, DomainError, ExtentError
from .gain_fitter import gain_envelope
from .geometry import BoundedSetApprox, directed_hausdorff, farthest_point_subsample
from .invariance import SET_SAMPLE_CAP, check_s_invariance
from .sampling import STREAM_PROLONGATION, SampleBudget, rng_for, standard_inputs
from .signals import InputSignal
from .verdicts import Verdict, worst

logger = logging.getLogger(__name__)

RETURN_FRACTION = 0.99
MAX_CLOUD_POINTS = 100_000
LATTICE_CAP_1D = 4096
LATTICE_CAP_2D = 64  # per axis
SPOT_COUNT = 512


@dataclass
class ProlongationSet:
    """
    Sampled approximation of the prolongation set A_{ε,γ}: every state reachable
    from B_ε(A) under inputs with ‖u‖ <= γ⁻¹(ε/2).

    base_A          : BoundedSetApprox     → the set being prolonged
    epsilon         : float                → ε
    gamma           : ComparisonFunction   → Kinf gain
    horizon_used    : float                → simulation horizon (smoothed attainment time, maybe doubled)
    cloud           : BoundedSetApprox     → collected states inflated by `slack`
    return_fraction : float                → share of trajectories re-entering B_{ε/2+γ(‖u‖)}(A)
    original_count  : int                  → states collected before deduplication/down-sampling
    input_level     : float                → γ⁻¹(ε/2)
    slack           : float                → cloud inflation
    dense           : bool                 → lattice-backed (state dimension <= 2)
    inconclusive    : bool                 → return statistic stayed below 99% or a trajectory diverged
    """
    base_A: BoundedSetApprox
    epsilon: float
    gamma: ComparisonFunction
    horizon_used: float
    cloud: BoundedSetApprox
    return_fraction: float
    original_count: int
    input_level: float
    slack: float
    dense: bool
    inconclusive: bool = False

    @property
    def membership_set(self) -> BoundedSetApprox:
        """
        Region membership is tested against: the cloud when lattice-backed, otherwise
        its envelope {x : ‖x‖_A <= sup of ‖·‖_A over the cloud}.
        """
        if self.dense:
            return self.cloud
        return self.base_A.inflate(max(0.0, directed_hausdorff(self.cloud, self.base_A)))

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "gamma": self.gamma.to_dict(),
            "horizon_used": self.horizon_used,
            "input_level": self.input_level,
            "slack": self.slack,
            "return_fraction": self.return_fraction,
            "original_count": self.original_count,
            "dense": self.dense,
            "inconclusive": self.inconclusive,
            "base_set": self.base_A.to_dict(),
            "cloud": self.cloud.to_dict(),
        }


@dataclass
class OffsetReport:
    """
    value       : float        → smallest tested C with ‖x‖_A <= ‖x‖_cloud + C
    hausdorff   : float        → directed Hausdorff distance from the cloud into A (upper bound)
    nonconvex   : bool | None  → convex-hull spot check (None above dimension 3)
    """
    value: float
    hausdorff: float
    nonconvex: Optional[bool]


@dataclass
class FEpsProfile:
    """
    s_grid         : np.ndarray          → sampled s values
    f_hat          : np.ndarray          → max distance of the s-cloud to the ε-cloud
    sigma_eps      : ComparisonFunction  → Kinf majorant of f_hat on the grid
    monotone       : bool                → f_hat nondecreasing within slack (no repair)
    zero_below_eps : bool                → f_hat <= slack for every s <= ε
    slack          : float
    """
    s_grid: np.ndarray
    f_hat: np.ndarray
    sigma_eps: ComparisonFunction
    monotone: bool
    zero_below_eps: bool
    slack: float


# ── horizon ──────────────────────────────────────────────────

def horizon_from_table(table: AttainmentTable, eps: float, radius: float) -> float:
    """Smoothed attainment time τ(eps, radius) from a complete table."""
    if not table.complete:
        missing = [(float(table.epsilons[i]), float(table.radii[j])) for i, j in np.argwhere(np.isnan(table.tau))]
        raise ConfigurationError(f"Attainment table has unresolved nodes {missing}; cannot derive a horizon")
    try:
        return monotone_smooth_tau(table.epsilons, table.radii, table.tau)(eps, radius)
    except (ExtentError, DataError) as e:
        raise ConfigurationError(f"Attainment table cannot provide τ({eps}, {radius}): {e}") from e


def prolongation_horizon(sys: ControlSystem, A: BoundedSetApprox, epsilon: float, gamma: ComparisonFunction, input_level: float, budget: SampleBudget) -> float:
    """
    Time for trajectories from B_ε(A) to re-enter B_{ε/2+γ(‖u‖)}(A): attainment
    targets ε/4..ε/2 over radii ε..2ε, smoothed at (ε/2, ε).
    """
    grid = budget.model_copy(update={
        "epsilons": [epsilon / 4, 3 * epsilon / 8, epsilon / 2],
        "radii": [epsilon, 1.5 * epsilon, 2 * epsilon],
        "u_max": input_level,
    })
    table = estimate_ulim(sys, A, gamma, grid)
    return max(horizon_from_table(table, epsilon / 2, epsilon), budget.record_step)


# ── cloud ────────────────────────────────────────────────────

def _lattice(A: BoundedSetApprox, epsilon: float, spacing: float) -> tuple:
    """Grid points of B_ε(A) for dimension <= 2, with the spacing actually used."""
    reach = A.inflation + epsilon
    lo = A.points.min(axis=0) - reach
    hi = A.points.max(axis=0) + reach
    if A.dim == 1:
        count = min(LATTICE_CAP_1D, int(math.ceil((hi[0] - lo[0]) / spacing)) + 1)
        pts = np.linspace(lo[0], hi[0], count)[:, None]
    else:
        count = min(LATTICE_CAP_2D, int(math.ceil(float(np.max(hi - lo)) / spacing)) + 1)
        axes = [np.linspace(lo[k], hi[k], count) for k in range(2)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2)
    used = float(np.max(hi - lo)) / (count - 1)
    keep = np.asarray(A.distance(pts)) <= epsilon + 1e-12
    return pts[keep], used


def _deduplicate(points: np.ndarray, cell: float) -> np.ndarray:
    """One representative per grid cell, first occurrence, original order."""
    keys = np.floor(points / cell).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(first)]


def _return_fraction(bundle: TrajectoryBundle, epsilon: float, gamma: ComparisonFunction) -> float:
    target = epsilon / 2 + gamma(bundle.levels)
    returned = np.any(bundle.distances <= target[:, None], axis=1)
    return float(np.mean(returned))


def build_prolongation(sys: ControlSystem, A: BoundedSetApprox, epsilon: float, gamma: ComparisonFunction, budget: SampleBudget) -> ProlongationSet:
    """
    Collect states of trajectories from B_ε(A) under inputs bounded by γ⁻¹(ε/2)
    over the smoothed return horizon. In dimension <= 2 a lattice of B_ε(A) is
    added so the cloud covers the start set.
    """
    if epsilon <= 0:
        raise DomainError(f"Prolongation needs ε > 0, got {epsilon}")
    input_level = float(gamma.invert()(epsilon / 2))
    horizon = prolongation_horizon(sys, A, epsilon, gamma, input_level, budget)
    slack = sys.flow_tolerance + 0.01 * epsilon

    rng = rng_for(budget.seed, STREAM_PROLONGATION)
    start = A.inflate(epsilon)
    states = np.vstack([
        A.points[: min(A.size, SET_SAMPLE_CAP)],
        start.sample_inside(rng, budget.n_states),
        start.shell_points(rng, budget.n_states),
    ])
    inputs = standard_inputs(budget, sys.input_dim, sys.grid_step, rng, u_max=input_level, duration=2 * horizon)
    X0, U = pair(states, inputs)

    inflation = slack
    dense = A.dim <= 2
    if dense:
        grid, spacing = _lattice(A, epsilon, slack)
        inflation = max(slack, 0.5 * spacing * math.sqrt(A.dim))
        axis = np.zeros(sys.input_dim)
        axis[0] = input_level
        presets = [
            InputSignal.zero(sys.input_dim, sys.grid_step),
            InputSignal.constant(axis, 2 * horizon, sys.grid_step),
            InputSignal.constant(-axis, 2 * horizon, sys.grid_step),
        ]
        X_grid, U_grid = pair(grid, presets)
        X0, U = np.vstack([X0, X_grid]), U + U_grid

    for attempt in range(2):
        record = min(budget.record_step, horizon / 4)
        bundle = simulate_bundle(sys, X0, U, horizon, record, A, budget.workers)
        fraction = _return_fraction(bundle, epsilon, gamma)
        if fraction >= RETURN_FRACTION or attempt:
            break
        logger.info(f"build_prolongation: return fraction {fraction:.3f} below {RETURN_FRACTION}, doubling horizon {horizon:.4g}")
        horizon *= 2

    inconclusive = fraction < RETURN_FRACTION or bool(np.any(bundle.diverged))
    raw = bundle.states.reshape(-1, sys.state_dim)
    raw = raw[np.all(np.isfinite(raw), axis=1)]
    original = raw.shape[0]
    points = _deduplicate(raw, inflation / (2 * math.sqrt(sys.state_dim)))
    if points.shape[0] > MAX_CLOUD_POINTS:
        points = farthest_point_subsample(points, MAX_CLOUD_POINTS, A.norm_ord)

    cloud = BoundedSetApprox(points, inflation, A.norm_ord)
    if inconclusive:
        logger.warning(f"build_prolongation: {sys.name} cloud flagged inconclusive (return fraction {fraction:.3f})")
    logger.info(f"build_prolongation: {sys.name} ε={epsilon} horizon {horizon:.4g}, {points.shape[0]} of {original} states, radius {cloud.radius:.4g}")
    return ProlongationSet(A, epsilon, gamma, horizon, cloud, fraction, original, input_level, inflation, dense, inconclusive)


# ── checks on a built set ────────────────────────────────────

def check_prolongation_invariance(sys: ControlSystem, P: ProlongationSet, budget: SampleBudget) -> Verdict:
    """
    γ⁻¹(ε/2)-invariance and 0-invariance of the cloud. Sparse clouds (dimension > 2)
    are tested through their envelope, with the cloud inflation as membership slack.
    """
    region = P.membership_set
    membership = "cloud" if P.dense else "envelope"
    slack = None if P.dense else P.slack
    level = check_s_invariance(sys, region, P.input_level, budget, slack)
    if level.is_falsified:
        return Verdict.falsified(level.witness, membership=membership, **level.evidence)
    zero = check_s_invariance(sys, region, 0.0, budget, slack)
    if zero.is_falsified:
        return Verdict.falsified(zero.witness, membership=membership, **zero.evidence)
    if P.inconclusive:
        return Verdict.inconclusive(reason="prolongation cloud flagged inconclusive", s=P.input_level, membership=membership)
    samples = level.evidence.get("samples", 0) + zero.evidence.get("samples", 0)
    return Verdict(worst(level.status, zero.status), None, {"s": P.input_level, "samples": samples, "membership": membership})


def _nonconvex(cloud: BoundedSetApprox, rng: np.random.Generator) -> Optional[bool]:
    pts = cloud.points
    if cloud.dim == 1:
        gaps = np.diff(np.sort(pts[:, 0]))
        return bool(np.any(gaps > 2 * cloud.inflation))
    if cloud.dim > 3 or pts.shape[0] <= cloud.dim:
        return None
    if pts.shape[0] > 2000:
        pts = pts[np.sort(rng.choice(pts.shape[0], 2000, replace=False))]
    try:
        hull = Delaunay(pts)
    except Exception as e:  # degenerate (flat) clouds
        logger.debug(f"convex-hull spot check skipped: {e}")
        return None
    spots = rng.uniform(pts.min(axis=0), pts.max(axis=0), (SPOT_COUNT, cloud.dim))
    inside = spots[hull.find_simplex(spots) >= 0]
    if inside.shape[0] == 0:
        return False
    return bool(np.any(np.asarray(cloud.distance(inside)) > cloud.inflation))


def offset_constant(A: BoundedSetApprox, P: Union[ProlongationSet, BoundedSetApprox], seed: int = 0) -> OffsetReport:
    """
    Smallest tested C with ‖x‖_A <= ‖x‖_cloud + C, checked on cloud points, the
    cloud's inflation shell and a box around both sets.
    """
    cloud = P.cloud if isinstance(P, ProlongationSet) else P
    rng = rng_for(seed, STREAM_PROLONGATION + 100)

    base = np.vstack([A.points, A.shell_points(rng, SPOT_COUNT)])
    stray = np.asarray(cloud.distance(base))
    if np.any(stray > cloud.inflation + 1e-12):
        raise ConfigurationError(f"A is not contained in the cloud: a point of A lies {float(np.max(stray)):.4g} away")

    reach = max(A.radius, cloud.radius) + 1.0
    box = rng.uniform(-reach, reach, (SPOT_COUNT, A.dim))
    pts = cloud.points
    if pts.shape[0] > 4 * SPOT_COUNT:
        pts = pts[np.sort(rng.choice(pts.shape[0], 4 * SPOT_COUNT, replace=False))]
    spots = np.vstack([pts, cloud.shell_points(rng, SPOT_COUNT), box])

    gap = np.asarray(A.distance(spots)) - np.asarray(cloud.distance(spots))
    value = max(0.0, float(np.max(gap)))
    hausdorff = directed_hausdorff(cloud, A)
    return OffsetReport(value, hausdorff, _nonconvex(cloud, rng))


def f_eps_profile(
    sys: ControlSystem,
    A: BoundedSetApprox,
    gamma: ComparisonFunction,
    eps: float,
    s_grid: Sequence[float],
    budget: SampleBudget,
) -> FEpsProfile:
    """
    f̂(s) = sup of the ε-cloud distance over the s-cloud, with a Kinf majorant
    σ_ε. Non-monotone values are reported, never repaired.
    """
    s_grid = np.asarray(sorted(float(s) for s in s_grid))
    if s_grid.size == 0 or np.any(s_grid <= 0):
        raise DomainError(f"s grid must be nonempty and positive, got {s_grid.tolist()}")
    target = build_prolongation(sys, A, eps, gamma, budget)
    f_hat = np.array([
        directed_hausdorff(build_prolongation(sys, A, float(s), gamma, budget).cloud, target.cloud)
        for s in s_grid
    ])
    slack = target.slack
    monotone = bool(np.all(np.diff(f_hat) >= -slack))
    zero_below = bool(np.all(f_hat[s_grid <= eps * (1 + 1e-12)] <= slack))
    if not monotone:
        logger.warning(f"f_eps_profile: {sys.name} f̂ decreases beyond slack on {s_grid.tolist()}: {f_hat.tolist()}")
    return FEpsProfile(s_grid, f_hat, gain_envelope(s_grid, f_hat), monotone, zero_below, slack)


def cloud_radius_profile(
    sys: ControlSystem,
    A: BoundedSetApprox,
    gamma: ComparisonFunction,
    eps_grid: Sequence[float],
    budget: SampleBudget,
) -> list:
    """Rows (eps, radius, points) of prolongation-cloud size against ε."""
    rows = []
    for eps in sorted(float(e) for e in eps_grid):
        P = build_prolongation(sys, A, eps, gamma, budget)
        rows.append({"eps": eps, "radius": P.cloud.radius, "hausdorff_to_A": directed_hausdorff(P.cloud, A), "points": P.cloud.size})
    return rows
