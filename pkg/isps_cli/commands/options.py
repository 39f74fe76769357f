from typing import Annotated, Optional

import typer
from rich.console import Console

from isps_cli.core.config import resolve_run_config
from isps_cli.models.run_models import RunConfig

console = Console()

SystemArg = Annotated[str, typer.Argument(help="Catalog system name")]
SeedOpt = Annotated[Optional[int], typer.Option("--seed", help="Master seed")]
BudgetOpt = Annotated[Optional[int], typer.Option("--budget", help="Initial states per sampling round")]
HorizonOpt = Annotated[Optional[float], typer.Option("--horizon", help="Simulation horizon")]
OutOpt = Annotated[Optional[str], typer.Option("--out", help="Output directory")]
ConfigOpt = Annotated[Optional[str], typer.Option("--config", help="key=value run configuration file")]
WorkersOpt = Annotated[Optional[int], typer.Option("--workers", help="Parallel simulation workers")]
SetOpt = Annotated[Optional[str], typer.Option("--set", help="origin | reference | point:x | ball:c:R | circle:R")]
ToleranceOpt = Annotated[Optional[float], typer.Option("--tolerance", help="Residual tolerance")]


def load_config(
    config: Optional[str],
    system: Optional[str] = None,
    seed: Optional[int] = None,
    budget: Optional[int] = None,
    horizon: Optional[float] = None,
    out: Optional[str] = None,
    workers: Optional[int] = None,
    **extra,
) -> RunConfig:
    """Shared flags folded into a validated RunConfig."""
    values = {
        "system": system,
        "seed": seed,
        "n_states": budget,
        "time_horizon": horizon,
        "out_dir": out,
        "workers": workers,
        **extra,
    }
    return resolve_run_config(values, config)


def announce(system: str, prop: str, verdict: str, exit_code: int) -> int:
    style = {"consistent": "green", "falsified": "red", "inconclusive": "yellow"}.get(verdict, "white")
    console.print(f"{system} [bold]{prop}[/bold]: [{style}]{verdict}[/{style}]")
    return exit_code
