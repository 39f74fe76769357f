# isps_engine/tools/benchmarks.py

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .control_system import ControlSystem
from .errors import ConfigurationError, DivergenceError, DomainError, ShapeError
from .geometry import BoundedSetApprox, circle, origin, point
from .integrator import H_MAX, TrajectoryBatch, propagate
from .signals import InputSignal, stack_inputs

logger = logging.getLogger(__name__)


class OdeSystem(ControlSystem):
    """
    x' = A x + f(x, u) realized by the fixed-substep integrator.

    rhs       : vectorized f(X, U) with X of shape (B, n) and U of shape (B, m)
    linear_op : optional matrix A, handled exactly by the integrating factor
    """

    def __init__(
        self,
        name: str,
        state_dim: int,
        input_dim: int,
        rhs: Callable[[np.ndarray, np.ndarray], np.ndarray],
        linear_op: Optional[np.ndarray] = None,
        description: str = "",
        flow_tolerance: float = 1e-9,
        norm_ord: float = 2,
        grid_step: float = 0.1,
        h_max: float = H_MAX,
        substep: Optional[float] = None,
    ):
        super().__init__(name, state_dim, input_dim, description, flow_tolerance, norm_ord, grid_step)
        self.rhs = rhs
        self.linear_op = linear_op
        self.h_max = h_max
        self.substep = substep

    def with_substep(self, substep: float) -> "OdeSystem":
        return OdeSystem(
            self.name, self.state_dim, self.input_dim, self.rhs, self.linear_op, self.description,
            self.flow_tolerance, self.norm_ord, self.grid_step, self.h_max, substep,
        )

    def trajectories(
        self,
        X0: np.ndarray,
        inputs: Sequence[InputSignal],
        horizon: float,
        record_step: Optional[float] = None,
    ) -> TrajectoryBatch:
        X0 = np.atleast_2d(np.asarray(X0, dtype=float))
        if X0.shape[1] != self.state_dim:
            raise ShapeError(f"{self.name}: state dimension {X0.shape[1]} != {self.state_dim}")
        if len(inputs) != X0.shape[0]:
            raise ShapeError(f"{self.name}: {len(inputs)} inputs for {X0.shape[0]} states")
        signals = [u if u.grid_step == self.grid_step else u.resample(self.grid_step) for u in inputs]
        if any(u.input_dim != self.input_dim for u in signals):
            raise ShapeError(f"{self.name}: inputs must have dimension {self.input_dim}")
        cells = int(math.ceil(horizon / self.grid_step - 1e-9)) + 1
        U = stack_inputs(signals, cells)
        return propagate(self.rhs, X0, U, self.grid_step, horizon, self.linear_op, self.h_max, self.substep, record_step)

    def flow(self, t: float, x: np.ndarray, u: InputSignal) -> np.ndarray:
        if t < 0:
            raise DomainError(f"Flow time must be nonnegative, got {t}")
        x = np.asarray(x, dtype=float)
        if t == 0:
            return x.copy()
        batch = self.trajectories(x[None, :], [u], t)
        if batch.diverged[0]:
            raise DivergenceError(f"{self.name}: state left the overflow guard at t={batch.diverged_at[0]:.4g}", float(batch.diverged_at[0]))
        return batch.final[0].copy()


class DiscretizedEvolutionSystem(OdeSystem):
    """
    Method-of-lines system x' = A_N x + f(x, u) on a uniform interior grid of [0, 1].

    A_N is the Dirichlet second-difference Laplacian with spacing 1/(N+1).
    """

    def __init__(self, name: str, N: int, nonlinearity: Callable, description: str = "", **kwargs):
        self.N = N
        dx = 1.0 / (N + 1)
        laplacian = (np.diag(-2.0 * np.ones(N)) + np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)) / dx**2
        kwargs.setdefault("flow_tolerance", 1e-6)
        kwargs.setdefault("norm_ord", np.inf)
        super().__init__(name, N, 1, nonlinearity, linear_op=laplacian, description=description, **kwargs)


# ── right-hand sides ─────────────────────────────────────────

def _linear(X, U):
    return -X + U[:, :1]


def _biased(X, U):
    return -X + U[:, :1] + 1.0


def _integrator(X, U):
    return np.broadcast_to(U[:, :1], X.shape).copy()


def _saturated_bias(X, U):
    return -X + np.clip(U[:, :1], -1.0, 1.0) + 1.0


def _planar_limit_cycle(X, U):
    r = np.linalg.norm(X, axis=1, keepdims=True)
    gain = 1.0 - r + U[:, :1]
    return np.column_stack([X[:, 0:1] * gain - X[:, 1:2], X[:, 1:2] * gain + X[:, 0:1]])


def _cubic_reaction(X, U):
    return -X**3 + U[:, :1]


def reaction_diffusion(N: int) -> DiscretizedEvolutionSystem:
    return DiscretizedEvolutionSystem(
        f"reaction-diffusion-{N}", N, _cubic_reaction,
        description=f"x_t = x_ss - x^3 + u on [0,1], Dirichlet, N={N}",
    )


@dataclass
class CatalogEntry:
    """
    Benchmark system with its known stability status.

    name           : str               → catalog key
    system         : ControlSystem     → the system itself
    known_status   : str               → "ISS" | "ISpS" | "not ISpS" (w.r.t. the origin)
    reference_set  : BoundedSetApprox  → set the status is stated against by default
    oracle         : str               → closed form or reference computation backing the status
    default_budget : dict              → SampleBudget overrides suited to the system
    """
    name: str
    system: ControlSystem
    known_status: str
    reference_set: BoundedSetApprox
    oracle: str
    default_budget: dict = field(default_factory=dict)

    def manifest_row(self) -> dict:
        return {
            "name": self.name,
            "state_dim": self.system.state_dim,
            "input_dim": self.system.input_dim,
            "description": self.system.description,
            "known_status": self.known_status,
            "reference_set": self.reference_set.to_dict(),
            "oracle": self.oracle,
            "flow_tolerance": self.system.flow_tolerance,
            "default_budget": self.default_budget,
        }


_ODE_BUDGET = {"radii": [0.5, 1.0, 2.0], "epsilons": [0.25, 0.5, 1.0], "time_horizon": 20.0}
_PDE_BUDGET = {"radii": [0.25, 0.5, 1.0], "epsilons": [0.05, 0.1, 0.2], "time_horizon": 5.0, "u_max": 1.0}
CIRCLE_POINTS = 256  # reference circle samples, vertex gap 2·sin(π/256)


def catalog() -> list:
    entries = [
        CatalogEntry(
            "linear",
            OdeSystem("linear", 1, 1, _linear, description="x' = -x + u"),
            "ISS", origin(1),
            "|x(t)| <= e^{-t}|x0| + ||u||_inf (variation of constants)",
            dict(_ODE_BUDGET),
        ),
        CatalogEntry(
            "biased",
            OdeSystem("biased", 1, 1, _biased, description="x' = -x + u + 1"),
            "ISpS", point([1.0]),
            "y = x - 1 reduces to the linear system; ISpS with c = 1 w.r.t. {0}, ISS w.r.t. {1}",
            dict(_ODE_BUDGET),
        ),
        CatalogEntry(
            "integrator",
            OdeSystem("integrator", 1, 1, _integrator, description="x' = u"),
            "not ISpS", origin(1),
            "u = delta gives x(t) = x0 + delta t, unbounded for every delta > 0",
            {**_ODE_BUDGET, "time_horizon": 10.0},
        ),
        CatalogEntry(
            "saturated-bias",
            OdeSystem("saturated-bias", 1, 1, _saturated_bias, description="x' = -x + sat(u) + 1"),
            "ISpS", point([1.0]),
            "bounded forcing: x(t) -> [0, 2] for every input",
            dict(_ODE_BUDGET),
        ),
        CatalogEntry(
            "planar-limit-cycle",
            OdeSystem("planar-limit-cycle", 2, 1, _planar_limit_cycle,
                      description="r' = r(1 - r + u), theta' = 1 (Cartesian form)"),
            "ISpS", circle(1.0, CIRCLE_POINTS),
            "radial comparison r' = r(1 - r + u): r -> 1 + u; ISpS w.r.t. the unit circle (c >= 1, the origin is an equilibrium), ISS w.r.t. the unit disc",
            {**_ODE_BUDGET, "time_horizon": 10.0, "u_max": 1.0},
        ),
    ]
    for N, key in ((32, "reaction-diffusion"), (16, "reaction-diffusion-16"), (64, "reaction-diffusion-64")):
        system = reaction_diffusion(N)
        system.name = key
        entries.append(
            CatalogEntry(
                key, system, "ISS", origin(N, np.inf),
                "fine-grid reference at N=128; linearization decays at rate pi^2, steady gain ~ s/8",
                dict(_PDE_BUDGET),
            )
        )
    return entries


def names() -> list:
    return [e.name for e in catalog()]


def get_entry(name: str) -> CatalogEntry:
    for entry in catalog():
        if entry.name == name:
            return entry
    raise ConfigurationError(f"Unknown system {name!r}. Valid systems: {', '.join(names())}")


def get_system(name: str) -> ControlSystem:
    return get_entry(name).system


def integrate(sys: ControlSystem, t: float, x0, u: InputSignal) -> np.ndarray:
    """φ(t, x0, u); t = 0 returns x0 unchanged."""
    return sys.flow(t, np.asarray(x0, dtype=float), u)


def manifest() -> dict:
    return {"systems": [e.manifest_row() for e in catalog()]}
