# isps_engine/tools/control_system.py

import logging
import math
from abc import ABC, abstractmethod
from typing import Optional, Sequence

import numpy as np

from .errors import DivergenceError, DomainError, PreconditionError
from .geometry import BoundedSetApprox, norm
from .integrator import TrajectoryBatch, record_grid
from .signals import InputSignal, shift
from .verdicts import Verdict, Witness

logger = logging.getLogger(__name__)

CONTINUITY_STEPS = (1e-6, 1e-3)


class ControlSystem(ABC):
    """
    Control system Σ = (X, U, φ) exposed through its flow map.

    Subclasses implement `flow`; `trajectories` evaluates a batch and may be
    overridden with a vectorized integrator.
    """

    def __init__(
        self,
        name: str,
        state_dim: int,
        input_dim: int,
        description: str = "",
        flow_tolerance: float = 1e-9,
        norm_ord: float = 2,
        grid_step: float = 0.1,
    ):
        if state_dim < 1 or input_dim < 0:
            raise DomainError(f"Invalid dimensions: state_dim={state_dim}, input_dim={input_dim}")
        self.name = name
        self.state_dim = state_dim
        self.input_dim = input_dim
        self.description = description
        self.flow_tolerance = flow_tolerance
        self.norm_ord = norm_ord
        self.grid_step = grid_step

    @abstractmethod
    def flow(self, t: float, x: np.ndarray, u: InputSignal) -> np.ndarray:
        """φ(t, x, u)."""

    def norm(self, x: np.ndarray):
        return norm(x, self.norm_ord)

    def trajectories(
        self,
        X0: np.ndarray,
        inputs: Sequence[InputSignal],
        horizon: float,
        record_step: Optional[float] = None,
    ) -> TrajectoryBatch:
        _, times = record_grid(horizon, self.grid_step, record_step)
        X0 = np.atleast_2d(np.asarray(X0, dtype=float))
        states = np.empty((X0.shape[0], times.size, self.state_dim))
        diverged_at = np.full(X0.shape[0], np.nan)
        for b, (x, u) in enumerate(zip(X0, inputs)):
            for j, t in enumerate(times):
                if not np.isnan(diverged_at[b]):
                    states[b, j] = np.inf
                    continue
                try:
                    states[b, j] = self.flow(float(t), x, u)
                except DivergenceError as e:
                    diverged_at[b] = e.time
                    states[b, j] = np.inf
        return TrajectoryBatch(times=times, states=states, diverged_at=diverged_at)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r}, n={self.state_dim}, m={self.input_dim})"


def _axiom_witness(kind: str, t: float, x: np.ndarray, u: InputSignal, measured: float, bound: float, h=None) -> Verdict:
    logger.info(f"check_axioms: {kind} axiom violated at t={t:.4g} (defect {measured:.3e} > {bound:.3e})")
    return Verdict.falsified(Witness(kind, t, x, u, measured, bound, h), axiom=kind)


def check_axioms(sys: ControlSystem, sample_budget: int, horizon: float, seed: int) -> Verdict:
    """
    Sampled check of the identity, causality, cocycle and continuity axioms.

    Times are grid-aligned; the cocycle defect may reach 10·flow_tolerance, the
    causality defect flow_tolerance, and the continuity modulus is
    jump(1e-6) <= 10·flow_tolerance + 1e-2·jump(1e-3).
    """
    if sample_budget < 1:
        raise PreconditionError(f"check_axioms needs a budget of at least 1, got {sample_budget}")
    if horizon <= 0:
        raise DomainError(f"Axiom horizon must be positive, got {horizon}")

    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    g = sys.grid_step
    cells = max(1, int(math.floor(horizon / g + 1e-9)))
    tol = sys.flow_tolerance
    small, big = CONTINUITY_STEPS
    worst = {"cocycle": 0.0, "causality": 0.0, "continuity": 0.0}

    for _ in range(sample_budget):
        x = rng.uniform(-1.0, 1.0, sys.state_dim)
        u = InputSignal(g, rng.uniform(-1.0, 1.0, (2 * cells, sys.input_dim)))
        t = float(rng.integers(0, cells + 1)) * g
        h = float(rng.integers(1, cells + 1)) * g

        try:
            x_back = sys.flow(0.0, x, u)
            if not np.array_equal(x_back, x):
                return _axiom_witness("identity", 0.0, x, u, float(sys.norm(x_back - x)), 0.0)

            xt = sys.flow(t, x, u)
            if not np.all(np.isfinite(xt)):
                return _axiom_witness("forward_completeness", t, x, u, math.inf, 0.0)

            causal = float(sys.norm(sys.flow(t, x, u.truncate(t)) - xt))
            worst["causality"] = max(worst["causality"], causal)
            if causal > tol:
                return _axiom_witness("causality", t, x, u, causal, tol)

            cocycle = float(sys.norm(sys.flow(h, xt, shift(u, t)) - sys.flow(t + h, x, u)))
            worst["cocycle"] = max(worst["cocycle"], cocycle)
            if not cocycle <= 10 * tol:
                return _axiom_witness("cocycle", t, x, u, cocycle, 10 * tol, h)

            jump_small = float(sys.norm(sys.flow(t + small, x, u) - xt))
            jump_big = float(sys.norm(sys.flow(t + big, x, u) - xt))
            allowed = 10 * tol + 10 * big * jump_big
            worst["continuity"] = max(worst["continuity"], jump_small)
            if not jump_small <= allowed:
                return _axiom_witness("continuity", t, x, u, jump_small, allowed, small)
        except DivergenceError as e:
            return _axiom_witness("forward_completeness", e.time, x, u, math.inf, 0.0)

    logger.info(f"check_axioms: {sys.name} consistent on {sample_budget} samples")
    return Verdict.consistent(samples=sample_budget, horizon=horizon, **{f"max_{k}_defect": v for k, v in worst.items()})


def replay_witness(sys: ControlSystem, witness: Witness, A: Optional[BoundedSetApprox] = None) -> float:
    """Recompute the measured quantity of a witness from scratch."""
    x0, u, t = np.asarray(witness.x0, dtype=float), witness.u, witness.t
    try:
        if witness.kind == "identity":
            return float(sys.norm(sys.flow(0.0, x0, u) - x0))
        if witness.kind == "causality":
            return float(sys.norm(sys.flow(t, x0, u.truncate(t)) - sys.flow(t, x0, u)))
        if witness.kind == "cocycle":
            return float(sys.norm(sys.flow(witness.h, sys.flow(t, x0, u), shift(u, t)) - sys.flow(t + witness.h, x0, u)))
        if witness.kind == "continuity":
            return float(sys.norm(sys.flow(t + witness.h, x0, u) - sys.flow(t, x0, u)))
        if witness.kind == "forward_completeness":
            state = sys.flow(t, x0, u)
            return float(sys.norm(state)) if np.all(np.isfinite(state)) else math.inf
        if A is None:
            raise PreconditionError(f"Replaying a {witness.kind!r} witness needs the reference set")
        return float(A.distance(sys.flow(t, x0, u)))
    except DivergenceError:
        return math.inf
