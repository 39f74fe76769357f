from typing import Annotated, Optional

import typer

from isps_cli.commands.options import (
    BudgetOpt,
    ConfigOpt,
    HorizonOpt,
    OutOpt,
    SeedOpt,
    SetOpt,
    SystemArg,
    ToleranceOpt,
    WorkersOpt,
    announce,
    load_config,
)
from isps_cli.models.run_models import PROPERTIES
from isps_cli.services.analysis_service import run_analysis, run_axioms, run_pipeline, run_prolongation
from isps_cli.services.report_service import persist_outcome
from isps_engine.tools.errors import ConfigurationError


def axioms(
    system: SystemArg,
    samples: Annotated[Optional[int], typer.Option("--samples", help="Sampled (t, x, u) triples")] = None,
    seed: SeedOpt = None,
    budget: BudgetOpt = None,
    horizon: HorizonOpt = None,
    out: OutOpt = None,
    config: ConfigOpt = None,
) -> int:
    """Check the identity, causality, cocycle and continuity axioms of a catalog system."""
    cfg = load_config(config, system, seed, budget, horizon, out, axiom_samples=samples)
    outcome = run_axioms(cfg)
    persist_outcome(outcome, cfg.out_dir, f"{system}_axioms", outcome.report.parameters["budget"]["record_step"])
    return announce(system, "axioms", outcome.status.value, outcome.exit_code)


def analyze(
    system: SystemArg,
    prop: Annotated[Optional[str], typer.Option("--property", help="|".join(PROPERTIES))] = None,
    set_spec: SetOpt = None,
    gain_slope: Annotated[Optional[float], typer.Option("--gain-slope", help="Slope of γ for lim/ulim/uag")] = None,
    tolerance: ToleranceOpt = None,
    seed: SeedOpt = None,
    budget: BudgetOpt = None,
    horizon: HorizonOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
    config: ConfigOpt = None,
) -> int:
    """Run one estimator on a catalog system w.r.t. a set."""
    if prop is not None and prop not in PROPERTIES:
        raise ConfigurationError(f"Unknown property {prop!r}. Valid properties: {', '.join(PROPERTIES)}")
    cfg = load_config(
        config, system, seed, budget, horizon, out, workers,
        property=prop, set=set_spec, gain_slope=gain_slope, tolerance=tolerance,
    )
    outcome = run_analysis(cfg)
    stem = f"{system}_{cfg.property}"
    persist_outcome(outcome, cfg.out_dir, stem, outcome.report.parameters["budget"]["record_step"])
    return announce(system, cfg.property, outcome.status.value, outcome.exit_code)


def prolong(
    system: SystemArg,
    eps: Annotated[Optional[float], typer.Option("--eps", help="Inflation ε of the base set")] = None,
    set_spec: SetOpt = None,
    gain_slope: Annotated[Optional[float], typer.Option("--gain-slope", help="Slope of γ")] = None,
    profile: Annotated[bool, typer.Option("--profile", help="Also write cloud radius against every budget ε")] = False,
    seed: SeedOpt = None,
    budget: BudgetOpt = None,
    horizon: HorizonOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
    config: ConfigOpt = None,
) -> int:
    """Build the prolongation cloud of a set and check its invariance."""
    cfg = load_config(
        config, system, seed, budget, horizon, out, workers,
        epsilon=eps, set=set_spec, gain_slope=gain_slope,
    )
    outcome = run_prolongation(cfg, profile)
    persist_outcome(outcome, cfg.out_dir, f"{system}_prolong", outcome.report.parameters["budget"]["record_step"])
    return announce(system, "prolong", outcome.status.value, outcome.exit_code)


def pipeline(
    system: SystemArg,
    set_spec: SetOpt = None,
    eps: Annotated[Optional[float], typer.Option("--eps", help="Prolongation ε")] = None,
    tolerance: ToleranceOpt = None,
    seed: SeedOpt = None,
    budget: BudgetOpt = None,
    horizon: HorizonOpt = None,
    out: OutOpt = None,
    workers: WorkersOpt = None,
    config: ConfigOpt = None,
) -> int:
    """Construct a bounded invariant set w.r.t. which the system is ISS, leg by leg."""
    cfg = load_config(
        config, system, seed, budget, horizon, out, workers,
        set=set_spec, epsilon=eps, tolerance=tolerance,
    )
    outcome = run_pipeline(cfg)
    persist_outcome(outcome, cfg.out_dir, f"{system}_pipeline")
    return announce(system, "pipeline", outcome.status.value, outcome.exit_code)
