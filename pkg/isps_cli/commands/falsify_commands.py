import json
from pathlib import Path
from typing import Annotated, Optional

import typer

from isps_cli.commands.options import (
    BudgetOpt,
    ConfigOpt,
    HorizonOpt,
    OutOpt,
    SeedOpt,
    SystemArg,
    ToleranceOpt,
    WorkersOpt,
    announce,
    load_config,
)
from isps_cli.services.analysis_service import load_certificate, run_falsify
from isps_cli.services.report_service import persist_outcome
from isps_engine.tools.errors import ConfigurationError


def falsify(
    system: SystemArg,
    certificate: Annotated[str, typer.Option("--certificate", help="Certificate JSON, or a report holding one")],
    max_evaluations: Annotated[Optional[int], typer.Option("--max-evaluations", help="Flow evaluations allowed")] = None,
    restarts: Annotated[Optional[int], typer.Option("--restarts", help="Search starts")] = None,
    segments: Annotated[Optional[int], typer.Option("--segments", help="Piecewise-constant input segments, 1..8")] = None,
    tolerance: ToleranceOpt = None,
    seed: SeedOpt = None,
    budget: BudgetOpt = None,
    horizon: HorizonOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
    config: ConfigOpt = None,
) -> int:
    """Search for a trajectory that violates a candidate certificate."""
    path = Path(certificate)
    if not path.is_file():
        raise ConfigurationError(f"Certificate file not found: {certificate}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Certificate file {certificate} is not JSON: {e}") from e
    cert = load_certificate(payload)

    cfg = load_config(
        config, system, seed, budget, horizon, out, workers,
        max_evaluations=max_evaluations, restarts=restarts, segments=segments, tolerance=tolerance,
    )
    outcome = run_falsify(cfg, cert)
    persist_outcome(outcome, cfg.out_dir, f"{system}_falsify", outcome.report.parameters["budget"]["record_step"])
    return announce(system, "falsify", outcome.status.value, outcome.exit_code)
