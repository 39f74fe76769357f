from pydantic import BaseModel, ConfigDict, Field, field_validator
from typing import Literal, List, Optional

Property = Literal["brs", "lim", "ulim", "uag", "ugb", "cuag", "isps", "iss"]
PROPERTIES = ("brs", "lim", "ulim", "uag", "ugb", "cuag", "isps", "iss")

BUDGET_FIELDS = ("n_states", "n_inputs", "time_horizon", "radii", "epsilons", "segments", "record_step", "u_max")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    system: Optional[str] = None
    property: Optional[Property] = None
    set: str = "reference"
    seed: int = 0
    workers: int = Field(1, ge=1)
    out_dir: str = "reports"
    # budget overrides, catalog defaults otherwise
    n_states: Optional[int] = Field(None, ge=1)
    n_inputs: Optional[int] = Field(None, ge=1)
    time_horizon: Optional[float] = Field(None, gt=0)
    radii: Optional[List[float]] = None
    epsilons: Optional[List[float]] = None
    segments: Optional[int] = Field(None, ge=1, le=8)
    record_step: Optional[float] = Field(None, gt=0)
    u_max: Optional[float] = Field(None, gt=0)
    # estimator knobs
    tolerance: float = Field(1e-3, gt=0)
    gain_slope: float = Field(1.0, gt=0)
    epsilon: float = Field(1.0, gt=0)
    robustness_horizon: float = Field(1.0, gt=0)
    max_evaluations: int = Field(10_000, ge=1)
    restarts: int = Field(20, ge=1)
    axiom_samples: int = Field(64, ge=1)
    record_runtime: bool = False

    @field_validator("radii", "epsilons", mode="before")
    @classmethod
    def _split_list(cls, v):
        # "0.5,1,2" depuis un fichier de config
        if isinstance(v, str):
            return [float(x) for x in v.split(",") if x.strip()]
        return v

    def budget_overrides(self) -> dict:
        out = {k: getattr(self, k) for k in BUDGET_FIELDS if getattr(self, k) is not None}
        out["seed"] = self.seed
        out["workers"] = self.workers
        return out
