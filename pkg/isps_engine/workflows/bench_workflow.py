# isps_engine/workflows/bench_workflow.py

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..tools.attainment import check_lim, check_uag, estimate_ulim
from ..tools.benchmarks import CatalogEntry, DiscretizedEvolutionSystem, catalog, get_entry, reaction_diffusion
from ..tools.comparison import ComparisonFunction
from ..tools.gain_fitter import fit_cuag, fit_isps, transfer_certificate, validate_certificate
from ..tools.geometry import ball, origin
from ..tools.invariance import check_iss_wrt_set, check_s_invariance
from ..tools.reachability import check_brs
from ..tools.sampling import SampleBudget
from ..tools.verdicts import VerdictStatus

logger = logging.getLogger(__name__)

DISCRETIZATION_SIZES = (32, 64)
DISCRETIZATION_ORACLE = 128
DISCRETIZATION_LEVELS = (0.1, 0.5, 1.0)
DISCRETIZATION_TOLERANCE = 0.2


@dataclass
class BenchReport:
    """
    Catalog × property matrix with the cross-property checks.

    rows           : list[dict]  → one row per system
    checks         : dict        → name → "pass" | "fail" | "undecided"
    discretization : dict        → γ at fixed input levels per grid size and relative gaps to the fine-grid oracle
    """
    rows: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    discretization: dict = field(default_factory=dict)

    @property
    def status(self) -> VerdictStatus:
        outcomes = set(self.checks.values())
        if "fail" in outcomes:
            return VerdictStatus.FALSIFIED
        if "undecided" in outcomes:
            return VerdictStatus.INCONCLUSIVE
        return VerdictStatus.CONSISTENT

    def to_dict(self) -> dict:
        return {"status": self.status.value, "checks": self.checks, "rows": self.rows, "discretization": self.discretization}


def entry_budget(entry: CatalogEntry, budget: SampleBudget) -> SampleBudget:
    """Catalog defaults for the fields the caller left unset; explicitly set fields win."""
    explicit = budget.model_fields_set
    defaults = {k: v for k, v in entry.default_budget.items() if k not in explicit}
    if defaults:
        logger.debug(f"entry_budget: {entry.name} takes catalog defaults for {sorted(defaults)}")
    return budget.model_copy(update=defaults)


def _outcome(statuses: Sequence[VerdictStatus], holds: bool) -> str:
    if holds:
        return "pass"
    if any(s == VerdictStatus.INCONCLUSIVE for s in statuses):
        return "undecided"
    return "fail"


def bench_entry(entry: CatalogEntry, budget: SampleBudget, tolerance: float = 1e-3) -> dict:
    """Every property of one catalog system w.r.t. its reference set."""
    sys, A = entry.system, entry.reference_set
    budget = entry_budget(entry, budget)
    logger.info(f"bench: {entry.name} ({entry.known_status})")

    isps = fit_isps(sys, A, budget, tolerance)
    cert = isps.certificate
    gamma = cert.gamma if cert is not None else ComparisonFunction.identity()
    A1 = A.inflate(cert.c) if cert is not None else A

    brs = check_brs(sys, budget.r_max, budget.time_horizon, budget)
    ulim = estimate_ulim(sys, A1, gamma, budget)
    lim = check_lim(sys, A1, gamma, budget)
    uag = check_uag(sys, A1, gamma, budget)
    still = check_s_invariance(sys, A1, 0.0, budget)
    cuag = fit_cuag(sys, A1, budget, tolerance)
    iss = check_iss_wrt_set(sys, A, budget, tolerance)

    row = {
        "system": entry.name,
        "known_status": entry.known_status,
        "brs": brs.verdict.status.value,
        "reach_sup": brs.reach_sup,
        "ulim": ulim.verdict.status.value,
        "ulim_complete": ulim.complete,
        "lim": lim.verdict.status.value,
        "uag": uag.verdict.status.value,
        "zero_invariance": still.status.value,
        "cuag": cuag.verdict.status.value,
        "isps": isps.verdict.status.value,
        "iss": iss.verdict.status.value,
        "c": cert.c if cert is not None else None,
    }

    # equivalence: (ULIM ∧ BRS) ⟺ ISpS ⟺ (CUAG ∧ 0-invariance)
    sides = [
        ulim.verdict.is_consistent and ulim.complete and brs.verdict.is_consistent,
        isps.verdict.is_consistent,
        cuag.verdict.is_consistent and still.is_consistent,
    ]
    legs = [ulim.verdict.status, brs.verdict.status, isps.verdict.status, cuag.verdict.status, still.status]
    row["equivalence"] = _outcome(legs, all(sides) or not any(sides))

    # UAG ∧ BRS ⇒ CUAG
    premise = uag.verdict.is_consistent and brs.verdict.is_consistent
    holds = not premise or (cuag.verdict.is_consistent and cuag.certificate.residual_max <= tolerance)
    row["uag_brs_gives_cuag"] = _outcome([cuag.verdict.status], holds)

    # ULIM ⇒ LIM on identical samples
    row["ulim_gives_lim"] = _outcome([lim.verdict.status], not ulim.verdict.is_consistent or not lim.verdict.is_falsified)

    if not isinstance(sys, DiscretizedEvolutionSystem):
        if entry.known_status in ("ISS", "ISpS"):
            row["lim_uniform"] = _outcome([lim.verdict.status], lim.verdict.is_consistent and lim.complete)
        row["set_independence"] = _set_independence(entry, budget, tolerance)
    logger.info(f"bench: {entry.name} row {row}")
    return row


def _set_independence(entry: CatalogEntry, budget: SampleBudget, tolerance: float) -> str:
    """ISpS w.r.t. {0} iff w.r.t. ball(0, 1); transferred certificates validate on the other set."""
    sys = entry.system
    A0 = origin(sys.state_dim, sys.norm_ord)
    A1 = ball(np.zeros(sys.state_dim), 1.0, sys.norm_ord)
    fit0 = fit_isps(sys, A0, budget, tolerance)
    fit1 = fit_isps(sys, A1, budget, tolerance)
    statuses = [fit0.verdict.status, fit1.verdict.status]
    if fit0.verdict.is_consistent != fit1.verdict.is_consistent:
        return _outcome(statuses, False)
    if not fit0.verdict.is_consistent:
        return _outcome(statuses, True)
    forward = validate_certificate(sys, transfer_certificate(fit0.certificate, A1), budget)
    backward = validate_certificate(sys, transfer_certificate(fit1.certificate, A0), budget)
    return _outcome(statuses, max(forward.residual_max, backward.residual_max) <= tolerance)


def discretization_study(budget: SampleBudget, tolerance: float = 1e-3) -> dict:
    """ISS gains of the reaction-diffusion family at coarse grids against the fine-grid oracle."""
    base = entry_budget(get_entry("reaction-diffusion"), budget)
    levels = np.array(DISCRETIZATION_LEVELS)
    gains, status = {}, {}
    for N in (*DISCRETIZATION_SIZES, DISCRETIZATION_ORACLE):
        sys = reaction_diffusion(N)
        fit = fit_isps(sys, origin(N, np.inf), base, tolerance, practical=False)
        status[N] = fit.verdict.status
        gains[N] = fit.certificate.gamma(levels) if fit.certificate is not None else None

    oracle = gains[DISCRETIZATION_ORACLE]
    out = {"levels": levels.tolist(), "gamma": {str(N): (g.tolist() if g is not None else None) for N, g in gains.items()}}
    if oracle is None or any(gains[N] is None for N in DISCRETIZATION_SIZES):
        out["check"] = _outcome(list(status.values()), False)
        return out
    gaps = {str(N): float(np.max(np.abs(gains[N] - oracle) / oracle)) for N in DISCRETIZATION_SIZES}
    out["relative_gap"] = gaps
    out["check"] = "pass" if max(gaps.values()) <= DISCRETIZATION_TOLERANCE else "fail"
    return out


def run_bench(budget: SampleBudget, systems: Optional[Sequence[str]] = None, tolerance: float = 1e-3, discretization: bool = True) -> BenchReport:
    entries = [get_entry(name) for name in systems] if systems else catalog()
    report = BenchReport()
    for entry in entries:
        report.rows.append(bench_entry(entry, budget, tolerance))

    for name in ("equivalence", "uag_brs_gives_cuag", "ulim_gives_lim", "lim_uniform", "set_independence"):
        outcomes = [row[name] for row in report.rows if name in row]
        if outcomes:
            report.checks[name] = "fail" if "fail" in outcomes else ("undecided" if "undecided" in outcomes else "pass")
    if discretization:
        report.discretization = discretization_study(budget, tolerance)
        report.checks["discretization"] = report.discretization["check"]
    logger.info(f"bench: {len(report.rows)} systems -> {report.status.value} {report.checks}")
    return report
