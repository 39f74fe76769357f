import logging
from typing import Optional, Sequence

from isps_cli.core.config import build_budget
from isps_cli.models.report_models import SummaryRow
from isps_cli.models.run_models import RunConfig
from isps_cli.services.analysis_service import EXIT_CODES
from isps_cli.services.report_service import update_summary, write_json
from isps_engine.workflows.bench_workflow import BenchReport, run_bench

logger = logging.getLogger(__name__)

BENCH_PROPERTIES = ("brs", "ulim", "lim", "uag", "cuag", "isps", "iss")


def summary_rows(report: BenchReport) -> list:
    rows = []
    for row in report.rows:
        key = f"c={row['c']:.6g}" if row.get("c") is not None else ""
        for prop in BENCH_PROPERTIES:
            rows.append(SummaryRow(system=row["system"], property=prop, set="reference", verdict=row[prop], key_parameters=key))
    return rows


def run_bench_suite(config: RunConfig, systems: Optional[Sequence[str]] = None, discretization: bool = True) -> tuple:
    """Full catalog × property matrix; returns (report, exit code) after writing bench.json and summary rows."""
    budget = build_budget(config, {})
    report = run_bench(budget, systems, config.tolerance, discretization)
    write_json({**report.to_dict(), "seed": budget.seed}, config.out_dir, "bench")
    for row in summary_rows(report):
        update_summary(config.out_dir, row)
    logger.info(f"bench: {report.status.value}")
    return report, EXIT_CODES[report.status]
