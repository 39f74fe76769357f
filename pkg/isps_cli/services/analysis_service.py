import logging
import time
from dataclasses import dataclass
from typing import Optional

from isps_cli.core.config import build_budget
from isps_cli.core.set_specs import parse_set
from isps_cli.models.report_models import AnalysisReport, SummaryRow
from isps_cli.models.run_models import RunConfig
from isps_engine.agents.invariant_set_pipeline import InvariantSetPipelineAgent
from isps_engine.tools.attainment import AttainmentTable, check_lim, check_uag, estimate_ulim
from isps_engine.tools.benchmarks import get_entry
from isps_engine.tools.comparison import ComparisonFunction
from isps_engine.tools.control_system import check_axioms
from isps_engine.tools.errors import ConfigurationError
from isps_engine.tools.falsifier import FalsificationProblem, falsify
from isps_engine.tools.gain_fitter import GainCertificate, check_ugb, fit_cuag, fit_isps
from isps_engine.tools.geometry import BoundedSetApprox
from isps_engine.tools.invariance import check_iss_wrt_set
from isps_engine.tools.prolongation import (
    build_prolongation,
    check_prolongation_invariance,
    cloud_radius_profile,
    offset_constant,
)
from isps_engine.tools.reachability import check_brs
from isps_engine.tools.sampling import SampleBudget
from isps_engine.tools.verdicts import Verdict, VerdictStatus, Witness

logger = logging.getLogger(__name__)

EXIT_CODES = {VerdictStatus.CONSISTENT: 0, VerdictStatus.FALSIFIED: 2, VerdictStatus.INCONCLUSIVE: 3}


@dataclass
class AnalysisOutcome:
    """
    report  : AnalysisReport                → JSON payload
    summary : SummaryRow                    → row for summary.csv
    status  : VerdictStatus                 → drives the exit code
    table   : AttainmentTable | None        → τ grid for lim/ulim/uag
    witness : Witness | None                → replayable evidence when falsified
    set_A   : BoundedSetApprox | None       → set the witness distance is measured against
    extra   : dict                          → additional payloads (prolongation cloud rows)
    """
    report: AnalysisReport
    summary: SummaryRow
    status: VerdictStatus
    table: Optional[AttainmentTable] = None
    witness: Optional[Witness] = None
    set_A: Optional[BoundedSetApprox] = None
    extra: Optional[dict] = None

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]


def _key_parameters(values: dict) -> str:
    parts = []
    for k, v in values.items():
        if isinstance(v, float):
            v = f"{v:.6g}"
        parts.append(f"{k}={v}")
    return ";".join(parts)


def _outcome(
    config: RunConfig,
    budget: SampleBudget,
    prop: str,
    verdict: Verdict,
    set_A: Optional[BoundedSetApprox],
    started: float,
    key: Optional[dict] = None,
    certificate: Optional[dict] = None,
    table: Optional[AttainmentTable] = None,
    extra_evidence: Optional[dict] = None,
    parameters: Optional[dict] = None,
) -> AnalysisOutcome:
    evidence = {**verdict.evidence, **(extra_evidence or {})}
    witness = verdict.witness
    report = AnalysisReport(
        property=prop,
        system=config.system,
        set=config.set,
        verdict=verdict.status.value,
        parameters={
            "budget": budget.model_dump(exclude={"workers"}),
            "tolerance": config.tolerance,
            **(parameters or {}),
        },
        evidence=evidence,
        certificate=certificate,
        witness=witness.to_dict() if witness is not None else None,
        samples=int(evidence.get("samples", 0) or 0),
        seed=budget.seed,
        runtime_s=time.perf_counter() - started if config.record_runtime else None,
    )
    summary = SummaryRow(
        system=config.system,
        property=prop,
        set=config.set,
        verdict=verdict.status.value,
        key_parameters=_key_parameters(key or {}),
    )
    logger.info(f"{prop}: {config.system} w.r.t. {config.set} -> {verdict.status.value}")
    return AnalysisOutcome(report, summary, verdict.status, table, witness, set_A)


def _context(config: RunConfig) -> tuple:
    if config.system is None:
        raise ConfigurationError("No system selected")
    entry = get_entry(config.system)
    budget = build_budget(config, entry.default_budget)
    A = parse_set(config.set, entry)
    return entry.system, A, budget


def run_analysis(config: RunConfig) -> AnalysisOutcome:
    """One estimator on one (system, set) pair."""
    if config.property is None:
        raise ConfigurationError("No property selected")
    started = time.perf_counter()
    sys, A, budget = _context(config)
    prop, tol = config.property, config.tolerance
    gamma = ComparisonFunction.linear(config.gain_slope)
    logger.info(f"analyze: {sys.name} property={prop} set={config.set} seed={budget.seed}")

    if prop == "brs":
        res = check_brs(sys, budget.r_max, budget.time_horizon, budget)
        return _outcome(
            config, budget, prop, res.verdict, None, started,
            key={"reach_sup": res.reach_sup},
            extra_evidence={"reach_sup": res.reach_sup, "samples": res.samples},
        )

    if prop in ("lim", "ulim", "uag"):
        estimator = {"lim": check_lim, "ulim": estimate_ulim, "uag": check_uag}[prop]
        table = estimator(sys, A, gamma, budget)
        return _outcome(
            config, budget, prop, table.verdict, A, started,
            key={"complete": table.complete, "gain_slope": config.gain_slope},
            table=table,
            extra_evidence={"complete": table.complete, "candidates": table.candidates, "tau": table.rows()},
            parameters={"gamma": gamma.to_dict()},
        )

    if prop == "ugb":
        res = check_ugb(sys, A, budget, tol)
        payload = None
        if res.sigma is not None:
            payload = {"sigma": res.sigma.to_dict(), "sigma1": res.sigma1.to_dict(), "gamma": res.gamma.to_dict(), "c": res.c}
        return _outcome(
            config, budget, prop, res.verdict, A, started,
            key={"c": res.c},
            certificate=payload,
            extra_evidence={"residual_sum": res.residual_sum, "residual_shift": res.residual_shift},
        )

    if prop in ("isps", "cuag"):
        fit = fit_isps(sys, A, budget, tol) if prop == "isps" else fit_cuag(sys, A, budget, tol)
        cert = fit.certificate
        key = {"c": cert.c, "offset": cert.offset, "residual": cert.residual_max} if cert is not None else {}
        return _outcome(
            config, budget, prop, fit.verdict, A, started,
            key=key,
            certificate=cert.to_dict() if cert is not None else None,
        )

    # iss
    res = check_iss_wrt_set(sys, A, budget, tol)
    cert = res.certificate
    return _outcome(
        config, budget, prop, res.verdict, A, started,
        key={"residual": cert.residual_max} if cert is not None else {},
        certificate=cert.to_dict() if cert is not None else None,
        extra_evidence={"legs": {name: v.to_dict() for name, v in res.legs.items()}},
    )


def run_axioms(config: RunConfig) -> AnalysisOutcome:
    started = time.perf_counter()
    entry = get_entry(config.system)
    budget = build_budget(config, entry.default_budget)
    verdict = check_axioms(entry.system, config.axiom_samples, budget.time_horizon, budget.seed)
    return _outcome(
        config, budget, "axioms", verdict, None, started,
        key={"samples": config.axiom_samples},
        parameters={"axiom_samples": config.axiom_samples},
    )


def run_prolongation(config: RunConfig, profile: bool = False) -> AnalysisOutcome:
    """Prolongation cloud of the chosen set under γ = gain_slope·id, with its offset constant and invariance leg."""
    started = time.perf_counter()
    sys, A, budget = _context(config)
    gamma = ComparisonFunction.linear(config.gain_slope)
    P = build_prolongation(sys, A, config.epsilon, gamma, budget)
    offset = offset_constant(A, P, budget.seed)
    verdict = check_prolongation_invariance(sys, P, budget)

    summary = P.to_dict()
    summary.pop("cloud")
    summary.update(
        cloud_points=P.cloud.size,
        cloud_radius=P.cloud.radius,
        offset_constant=offset.value,
        offset_hausdorff=offset.hausdorff,
        nonconvex=offset.nonconvex,
    )
    outcome = _outcome(
        config, budget, "prolong", verdict, P.cloud, started,
        key={"epsilon": config.epsilon, "radius": P.cloud.radius, "offset": offset.value},
        extra_evidence={"prolongation": summary},
        parameters={"epsilon": config.epsilon, "gamma": gamma.to_dict()},
    )
    outcome.extra = {"cloud": P.cloud.points}
    if profile:
        outcome.extra["profile"] = cloud_radius_profile(sys, A, gamma, budget.epsilons, budget)
    return outcome


def run_pipeline(config: RunConfig) -> AnalysisOutcome:
    started = time.perf_counter()
    sys, A, budget = _context(config)
    agent = InvariantSetPipelineAgent(budget, config.tolerance, config.epsilon, config.robustness_horizon)
    result = agent.run(sys, A)
    status = VerdictStatus(result["verdict"])
    witness = next((leg["witness"] for leg in result["legs"].values() if leg["witness"] is not None), None)
    report = AnalysisReport(
        property="pipeline",
        system=config.system,
        set=config.set,
        verdict=status.value,
        parameters={
            "budget": budget.model_dump(exclude={"workers"}),
            "tolerance": config.tolerance,
            "epsilon": config.epsilon,
            "robustness_horizon": config.robustness_horizon,
        },
        evidence={"stopped_at": result["stopped_at"], "legs": result["legs"], "prolongation": result.get("prolongation")},
        certificate=result.get("certificate"),
        witness=witness,
        seed=budget.seed,
        runtime_s=time.perf_counter() - started if config.record_runtime else None,
    )
    summary = SummaryRow(
        system=config.system, property="pipeline", set=config.set, verdict=status.value,
        key_parameters=_key_parameters({"stopped_at": result["stopped_at"] or "none"}),
    )
    # leg witnesses refer to different sets; no trajectory CSV for them
    return AnalysisOutcome(report, summary, status)


def load_certificate(payload: dict) -> GainCertificate:
    """A certificate JSON, or a report carrying one under "certificate"."""
    data = payload.get("certificate", payload) if isinstance(payload, dict) else None
    if not isinstance(data, dict) or "beta" not in data or "set" not in data:
        raise ConfigurationError("Certificate file holds neither a certificate nor a report with one")
    try:
        return GainCertificate.from_dict(data)
    except (KeyError, TypeError) as e:
        raise ConfigurationError(f"Malformed certificate: {e}") from e


def run_falsify(config: RunConfig, cert: GainCertificate) -> AnalysisOutcome:
    started = time.perf_counter()
    entry = get_entry(config.system)
    sys = entry.system
    if cert.set_A.dim != sys.state_dim:
        raise ConfigurationError(f"Certificate set has dimension {cert.set_A.dim}, system {sys.name} has {sys.state_dim}")
    budget = build_budget(config, entry.default_budget)
    problem = FalsificationProblem.from_budget(
        sys, cert, budget,
        max_evaluations=config.max_evaluations,
        restarts=config.restarts,
        tolerance=config.tolerance,
    )
    verdict = falsify(problem)
    return _outcome(
        config, budget, "falsify", verdict, cert.set_A, started,
        key={"best_residual": verdict.evidence["best_residual"], "evaluations": verdict.evidence["evaluations"]},
        extra_evidence={"samples": verdict.evidence["evaluations"]},
        certificate=cert.to_dict(),
        parameters={"max_evaluations": config.max_evaluations, "restarts": config.restarts, "segments": budget.segments},
    )
