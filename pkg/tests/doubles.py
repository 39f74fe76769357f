import numpy as np

from isps_engine.tools.comparison import L, ComparisonFunction, KLFunction
from isps_engine.tools.control_system import ControlSystem
from isps_engine.tools.gain_fitter import GainCertificate
from isps_engine.tools.geometry import origin


def exponential_decay() -> ComparisonFunction:
    """Chord of e^{-t} on [0, 1], exact exponential afterwards; dominates e^{-t}."""
    return ComparisonFunction(L, ((0.0, 1.0), (1.0, float(np.exp(-1.0)))), 1.0)


def closed_form_certificate(c: float = 0.0) -> GainCertificate:
    """β(r, t) = r·e^{-t}, γ = id for x' = -x + u w.r.t. the origin."""
    beta = KLFunction(ComparisonFunction.identity(), exponential_decay())
    form = "isps" if c > 0 else "iss"
    return GainCertificate(beta, ComparisonFunction.identity(), c, 0.0, form, origin(1))


class ShiftedIdentity(ControlSystem):
    """Breaks φ(0, x, u) = x."""

    def __init__(self):
        super().__init__("shifted-identity", 1, 1)

    def flow(self, t, x, u):
        return np.asarray(x, dtype=float) + 1e-3 + 0.0 * t


class Clairvoyant(ControlSystem):
    """Reads the input one grid step ahead, so truncation changes the past."""

    def __init__(self):
        super().__init__("clairvoyant", 1, 1)

    def flow(self, t, x, u):
        x = np.asarray(x, dtype=float)
        return x + t * u.value_at(t + self.grid_step)[:1]


class Repelled(ControlSystem):
    """Origin is an equilibrium; every other state moves away at unit speed."""

    def __init__(self):
        super().__init__("repelled", 1, 1)

    def flow(self, t, x, u):
        x = np.asarray(x, dtype=float)
        return x + np.sign(x) * t
