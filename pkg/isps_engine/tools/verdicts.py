# isps_engine/tools/verdicts.py

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .signals import InputSignal


class VerdictStatus(str, Enum):
    CONSISTENT = "consistent"
    FALSIFIED = "falsified"
    INCONCLUSIVE = "inconclusive"


SEVERITY = {VerdictStatus.CONSISTENT: 0, VerdictStatus.INCONCLUSIVE: 1, VerdictStatus.FALSIFIED: 2}


@dataclass
class Witness:
    """
    Replayable evidence of a violation.

    kind     : str           → "distance" | "identity" | "cocycle" | "causality" | "continuity"
                               | "forward_completeness" | "growth" | "robustness"
    t        : float         → time at which the violation is measured
    x0       : np.ndarray    → initial state
    u        : InputSignal   → input driving the trajectory
    measured : float         → observed quantity (set distance or axiom defect)
    bound    : float         → value the quantity should not exceed
    h        : float | None  → second time argument (cocycle, continuity)
    """
    kind: str
    t: float
    x0: np.ndarray
    u: InputSignal
    measured: float
    bound: float
    h: Optional[float] = None

    @property
    def residual(self) -> float:
        return float(self.measured - self.bound)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "t": float(self.t),
            "x0": np.asarray(self.x0, dtype=float).tolist(),
            "u": self.u.to_dict(),
            "measured": float(self.measured),
            "bound": float(self.bound),
            "residual": self.residual,
            "h": self.h,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Witness":
        return cls(
            kind=data["kind"],
            t=float(data["t"]),
            x0=np.asarray(data["x0"], dtype=float),
            u=InputSignal.from_dict(data["u"]),
            measured=float(data["measured"]),
            bound=float(data["bound"]),
            h=data.get("h"),
        )


@dataclass
class Verdict:
    """
    Three-valued outcome of a sampled check.

    status   : VerdictStatus   → consistent | falsified | inconclusive
    witness  : Witness | None  → present whenever status is falsified
    evidence : dict            → summary statistics (sample counts, sups, tables)
    """
    status: VerdictStatus
    witness: Optional[Witness] = None
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status == VerdictStatus.FALSIFIED and self.witness is None:
            raise ValueError("A falsified verdict must carry a witness")

    @classmethod
    def consistent(cls, **evidence) -> "Verdict":
        return cls(VerdictStatus.CONSISTENT, None, evidence)

    @classmethod
    def falsified(cls, witness: Witness, **evidence) -> "Verdict":
        return cls(VerdictStatus.FALSIFIED, witness, evidence)

    @classmethod
    def inconclusive(cls, **evidence) -> "Verdict":
        return cls(VerdictStatus.INCONCLUSIVE, None, evidence)

    @property
    def is_consistent(self) -> bool:
        return self.status == VerdictStatus.CONSISTENT

    @property
    def is_falsified(self) -> bool:
        return self.status == VerdictStatus.FALSIFIED

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "witness": self.witness.to_dict() if self.witness else None,
            "evidence": self.evidence,
        }


def worst(*statuses: VerdictStatus) -> VerdictStatus:
    return max(statuses, key=lambda s: SEVERITY[s])
