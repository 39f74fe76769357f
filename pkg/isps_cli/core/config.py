import os
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import ValidationError

from isps_cli.models.run_models import RunConfig
from isps_engine.tools.errors import ConfigurationError
from isps_engine.tools.sampling import SampleBudget

load_dotenv()  # charge .env


class Settings:
    OUT_DIR: str = os.getenv("ISPS_OUT_DIR", "reports")
    WORKERS: int = int(os.getenv("ISPS_WORKERS", "1"))
    LOG_LEVEL: str = os.getenv("ISPS_LOG_LEVEL", "WARNING")
    SEED: int = int(os.getenv("ISPS_SEED", "0"))


settings = Settings()


def read_config_file(path: Optional[str]) -> dict:
    """Flat key=value file; empty values are dropped."""
    if path is None:
        return {}
    if not Path(path).is_file():
        raise ConfigurationError(f"Config file not found: {path}")
    return {k.strip().lower(): v for k, v in dotenv_values(path).items() if v not in (None, "")}


def resolve_run_config(cli_values: dict, config_path: Optional[str] = None) -> RunConfig:
    """CLI flag > config file > environment > model default."""
    merged = {"out_dir": settings.OUT_DIR, "workers": settings.WORKERS, "seed": settings.SEED}
    merged.update(read_config_file(config_path))
    merged.update({k: v for k, v in cli_values.items() if v is not None})
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid run configuration: {e}") from e


def build_budget(config: RunConfig, defaults: dict) -> SampleBudget:
    """Catalog defaults under the run config's overrides."""
    try:
        return SampleBudget(**{**defaults, **config.budget_overrides()})
    except ValidationError as e:
        raise ConfigurationError(f"Invalid sampling budget: {e}") from e
