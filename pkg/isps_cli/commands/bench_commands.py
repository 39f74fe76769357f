from typing import Annotated, Optional

import typer

from isps_cli.commands.options import (
    BudgetOpt,
    ConfigOpt,
    HorizonOpt,
    OutOpt,
    SeedOpt,
    ToleranceOpt,
    WorkersOpt,
    console,
    load_config,
)
from isps_cli.services.bench_service import run_bench_suite
from isps_cli.services.report_service import write_json
from isps_engine.tools.benchmarks import manifest


def bench(
    systems: Annotated[Optional[str], typer.Option("--systems", help="Comma-separated subset of the catalog")] = None,
    discretization: Annotated[bool, typer.Option("--discretization/--no-discretization", help="Run the N=32/64/128 study")] = True,
    tolerance: ToleranceOpt = None,
    seed: SeedOpt = None,
    budget: BudgetOpt = None,
    horizon: HorizonOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
    config: ConfigOpt = None,
) -> int:
    """Every catalog system against every property, with the cross-property checks."""
    cfg = load_config(config, None, seed, budget, horizon, out, workers, tolerance=tolerance)
    names = [s.strip() for s in systems.split(",") if s.strip()] if systems else None
    report, code = run_bench_suite(cfg, names, discretization)
    for name, outcome in report.checks.items():
        style = {"pass": "green", "fail": "red"}.get(outcome, "yellow")
        console.print(f"{name}: [{style}]{outcome}[/{style}]")
    console.print(f"bench: [bold]{report.status.value}[/bold]")
    return code


def catalog(out: OutOpt = None, config: ConfigOpt = None) -> int:
    """List the catalog and write its machine-readable manifest."""
    cfg = load_config(config, out=out)
    data = manifest()
    write_json(data, cfg.out_dir, "manifest")
    for row in data["systems"]:
        console.print(f"{row['name']}: n={row['state_dim']} {row['known_status']} ({row['description']})")
    return 0
