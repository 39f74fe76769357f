# isps_engine/agents/invariant_set_pipeline.py

import logging
from typing import Optional

from ..tools.attainment import check_uag
from ..tools.benchmarks import DiscretizedEvolutionSystem, OdeSystem
from ..tools.control_system import ControlSystem
from ..tools.errors import IspsError
from ..tools.gain_fitter import fit_isps
from ..tools.geometry import BoundedSetApprox, origin
from ..tools.invariance import check_iss_wrt_set, check_robust_s_invariance, check_s_invariance
from ..tools.prolongation import build_prolongation, check_prolongation_invariance, offset_constant
from ..tools.reachability import estimate_lipschitz
from ..tools.sampling import SampleBudget
from ..tools.verdicts import Verdict, VerdictStatus, worst

logger = logging.getLogger(__name__)


class InvariantSetPipelineAgent:
    """
    End-to-end construction of a bounded invariant set w.r.t. which an ISpS
    system is ISS: Lipschitz check, ISpS fit, prolongation of B_c(A), invariance,
    robust invariance, ISS w.r.t. the cloud and, for ODEs, compact ISS.
    Stops at the first falsified leg.
    """

    def __init__(self, budget: SampleBudget, tolerance: float = 1e-3, epsilon: float = 1.0, robustness_horizon: float = 1.0):
        self.budget = budget
        self.tolerance = tolerance
        self.epsilon = epsilon
        self.robustness_horizon = robustness_horizon

    def _report(self, sys: ControlSystem, legs: dict, stopped_at: Optional[str], **extra) -> dict:
        statuses = [v.status for v in legs.values()] or [VerdictStatus.INCONCLUSIVE]
        verdict = worst(*statuses)
        logger.info(f"pipeline: {sys.name} -> {verdict.value} (stopped at {stopped_at})")
        return {
            "system": sys.name,
            "verdict": verdict.value,
            "stopped_at": stopped_at,
            "legs": {name: v.to_dict() for name, v in legs.items()},
            **extra,
        }

    def run(self, sys: ControlSystem, A: Optional[BoundedSetApprox] = None) -> dict:
        A = A if A is not None else origin(sys.state_dim, sys.norm_ord)
        budget = self.budget
        legs = {}

        # Step 1: sampled Lipschitz bound of the flow
        lipschitz = estimate_lipschitz(sys, budget.r_max, self.robustness_horizon, budget)
        legs["lipschitz"] = lipschitz.verdict
        if lipschitz.verdict.is_falsified:
            return self._report(sys, legs, "lipschitz")

        # Step 2: ISpS certificate, source of γ and c
        fit = fit_isps(sys, A, budget, self.tolerance)
        legs["isps"] = fit.verdict
        if fit.certificate is None:
            return self._report(sys, legs, "isps")
        cert = fit.certificate

        # Step 3: prolongation of B_c(A)
        base = A.inflate(cert.c)
        try:
            P = build_prolongation(sys, base, self.epsilon, cert.gamma, budget)
        except IspsError as e:
            legs["prolongation"] = Verdict.inconclusive(reason=str(e))
            return self._report(sys, legs, "prolongation", certificate=cert.to_dict())
        legs["prolongation"] = (
            Verdict.inconclusive(reason="return statistic below threshold") if P.inconclusive
            else Verdict.consistent(points=P.cloud.size, radius=P.cloud.radius, horizon=P.horizon_used)
        )
        offset = offset_constant(base, P, budget.seed)
        summary = {
            "epsilon": P.epsilon,
            "input_level": P.input_level,
            "horizon_used": P.horizon_used,
            "return_fraction": P.return_fraction,
            "cloud_points": P.cloud.size,
            "cloud_radius": P.cloud.radius,
            "offset_constant": offset.value,
            "offset_hausdorff": offset.hausdorff,
            "nonconvex": offset.nonconvex,
            "membership": "cloud" if P.dense else "envelope",
        }
        extra = {"certificate": cert.to_dict(), "prolongation": summary}

        # Step 4: γ⁻¹(ε/2)- and 0-invariance of the cloud
        legs["invariance"] = check_prolongation_invariance(sys, P, budget)
        if legs["invariance"].is_falsified:
            return self._report(sys, legs, "invariance", **extra)
        region = P.membership_set

        # Step 5: robust invariance at the smallest budget ε
        robust = check_robust_s_invariance(sys, region, P.input_level, min(budget.epsilons), self.robustness_horizon, budget)
        legs["robust_invariance"] = robust.verdict
        if robust.verdict.is_falsified:
            return self._report(sys, legs, "robust_invariance", **extra)

        # Step 6: ISS w.r.t. the constructed set
        iss = check_iss_wrt_set(sys, region, budget, self.tolerance)
        legs["iss_wrt_cloud"] = iss.verdict
        if iss.verdict.is_falsified:
            return self._report(sys, legs, "iss_wrt_cloud", **extra)

        # Step 7: compact ISS for finite-dimensional ODEs
        if isinstance(sys, OdeSystem) and not isinstance(sys, DiscretizedEvolutionSystem) and iss.certificate is not None:
            uag = check_uag(sys, region, iss.certificate.gamma, budget)
            still = check_s_invariance(sys, region, 0.0, budget)
            legs["compact_iss"] = still if still.is_falsified else uag.verdict
            if legs["compact_iss"].is_falsified:
                return self._report(sys, legs, "compact_iss", **extra)

        return self._report(sys, legs, None, **extra)
