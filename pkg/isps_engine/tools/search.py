# isps_engine/tools/search.py

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class SearchResult:
    """
    Outcome of a multi-start coordinate search (maximization).

    best_z      : np.ndarray → best parameter vector found
    best_value  : float      → objective at best_z
    restart     : int        → index of the restart that produced best_z
    evaluations : int        → objective evaluations spent
    """
    best_z: np.ndarray
    best_value: float
    restart: int
    evaluations: int


def coordinate_search(
    objective: Callable[[np.ndarray], np.ndarray],
    starts: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    initial_step: float = 0.25,
    min_step: float = 1e-3,
    max_evaluations: int = 10_000,
) -> SearchResult:
    """
    Derivative-free coordinate ascent run from every start at once.

    Each round evaluates z ± step·(upper - lower)·e_i for every active restart in a
    single batch; a restart moves to its best improving candidate or halves its
    step. The objective maps an array (k, d) to k values.
    """
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    span = upper - lower
    R, d = starts.shape

    z = np.clip(starts, lower, upper)
    values = np.asarray(objective(z), dtype=float)
    evaluations = R
    steps = np.full(R, initial_step)
    eye = np.eye(d)

    while evaluations < max_evaluations:
        active = np.flatnonzero(steps >= min_step)
        if active.size == 0:
            break
        offsets = np.concatenate([eye, -eye]) * span
        cands = (z[active, None, :] + steps[active, None, None] * offsets[None]).reshape(-1, d)
        cands = np.clip(cands, lower, upper)
        cand_values = np.asarray(objective(cands), dtype=float).reshape(active.size, 2 * d)
        evaluations += cands.shape[0]

        best = np.argmax(cand_values, axis=1)
        gains = cand_values[np.arange(active.size), best]
        for row, r in enumerate(active):
            if gains[row] > values[r]:
                z[r] = cands[row * 2 * d + best[row]]
                values[r] = gains[row]
            else:
                steps[r] *= 0.5

    # deterministic pick: largest value, lowest restart index on ties
    winner = int(np.argmax(values))
    logger.debug(f"coordinate_search: best {values[winner]:.6g} from restart {winner} after {evaluations} evaluations")
    return SearchResult(z[winner].copy(), float(values[winner]), winner, evaluations)
