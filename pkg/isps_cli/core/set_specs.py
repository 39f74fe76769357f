from isps_engine.tools.benchmarks import CatalogEntry
from isps_engine.tools.errors import ConfigurationError
from isps_engine.tools.geometry import BoundedSetApprox, ball, circle, origin, point

SET_FORMS = "origin | reference | point:x1,x2,... | ball:c1,c2,...:R | circle:R"


def _floats(text: str, spec: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigurationError(f"Malformed set spec {spec!r}; expected {SET_FORMS}")


def parse_set(spec: str, entry: CatalogEntry) -> BoundedSetApprox:
    """Set spec → set approximation in the system's state space and norm."""
    sys = entry.system
    kind, _, rest = spec.strip().partition(":")
    if kind == "origin":
        A = origin(sys.state_dim, sys.norm_ord)
    elif kind == "reference":
        A = entry.reference_set
    elif kind == "point":
        A = point(_floats(rest, spec), sys.norm_ord)
    elif kind == "ball":
        center, _, radius = rest.rpartition(":")
        values = _floats(radius, spec)
        if not center or len(values) != 1 or values[0] < 0:
            raise ConfigurationError(f"Malformed set spec {spec!r}; expected {SET_FORMS}")
        A = ball(_floats(center, spec), values[0], sys.norm_ord)
    elif kind == "circle":
        values = _floats(rest, spec)
        if len(values) != 1 or values[0] <= 0 or sys.state_dim != 2:
            raise ConfigurationError(f"circle:R needs a positive radius and a planar system, got {spec!r}")
        A = circle(values[0])
    else:
        raise ConfigurationError(f"Unknown set spec {spec!r}; expected {SET_FORMS}")

    if A.dim != sys.state_dim:
        raise ConfigurationError(f"Set {spec!r} has dimension {A.dim}, system {sys.name} has {sys.state_dim}")
    return A
