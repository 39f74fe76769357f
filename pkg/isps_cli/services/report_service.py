import csv
import json
import logging
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np

from isps_cli.models.report_models import AnalysisReport, SummaryRow
from isps_engine.tools.attainment import AttainmentTable
from isps_engine.tools.benchmarks import get_system
from isps_engine.tools.control_system import ControlSystem
from isps_engine.tools.geometry import BoundedSetApprox
from isps_engine.tools.verdicts import Witness

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 12
# comparison-function payloads keep full precision so they reload bit-exactly
EXACT_KEYS = {"beta", "gamma", "sigma", "sigma1", "decay"}
SUMMARY_FIELDS = ["system", "property", "set", "verdict", "key_parameters"]


def clean(obj: Any, exact: bool = False) -> Any:
    """JSON-ready copy: numpy → Python, non-finite → string, floats rounded unless exact."""
    if isinstance(obj, dict):
        return {str(k): clean(v, exact or k in EXACT_KEYS) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v, exact) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist(), exact)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        return x if exact else float(f"{x:.{SIGNIFICANT_DIGITS}g}")
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def dumps(payload: dict) -> str:
    return json.dumps(clean(payload), indent=2, sort_keys=True) + "\n"


def write_report(report: AnalysisReport, out_dir: str, stem: str) -> Path:
    path = Path(out_dir) / f"{stem}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(report.model_dump(exclude_none=True)))
    logger.info(f"report written: {path}")
    return path


def write_json(payload: dict, out_dir: str, stem: str) -> Path:
    path = Path(out_dir) / f"{stem}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload))
    return path


def update_summary(out_dir: str, row: SummaryRow) -> Path:
    """summary.csv keyed on (system, property, set); a rerun replaces its row."""
    path = Path(out_dir) / "summary.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = {}
    if path.exists():
        with path.open(newline="") as fh:
            for existing in csv.DictReader(fh):
                rows[(existing["system"], existing["property"], existing["set"])] = existing
    rows[(row.system, row.property, row.set)] = row.model_dump()
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
        writer.writeheader()
        for key in sorted(rows):
            writer.writerow({f: rows[key].get(f, "") for f in SUMMARY_FIELDS})
    return path


def write_tau_csv(table: AttainmentTable, out_dir: str, stem: str) -> Path:
    path = Path(out_dir) / f"{stem}_tau.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["eps", "r", "tau"])
        for row in table.rows():
            writer.writerow([clean(row["eps"]), clean(row["r"]), clean(row["tau"])])
    return path


def write_points_csv(points: np.ndarray, out_dir: str, stem: str) -> Path:
    path = Path(out_dir) / f"{stem}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f"x{i + 1}" for i in range(points.shape[1])])
        for x in points:
            writer.writerow([clean(v) for v in x])
    return path


def write_rows_csv(rows: list, out_dir: str, stem: str) -> Path:
    path = Path(out_dir) / f"{stem}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = list(rows[0]) if rows else []
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: clean(v) for k, v in row.items()})
    return path


def write_witness_trajectory(
    sys: ControlSystem,
    witness: Witness,
    A: Optional[BoundedSetApprox],
    out_dir: str,
    stem: str,
    record_step: float = 0.1,
) -> Path:
    """Re-simulated trajectory behind a witness: t, x_1..x_n, distance."""
    horizon = max(witness.t + (witness.h or 0.0), record_step)
    batch = sys.trajectories(np.asarray(witness.x0, dtype=float)[None, :], [witness.u], horizon, record_step)
    states = batch.states[0]
    distance = A.distance(states) if A is not None else sys.norm(states)
    path = Path(out_dir) / f"{stem}_witness.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t"] + [f"x{i + 1}" for i in range(sys.state_dim)] + ["distance"])
        for t, x, d in zip(batch.times, states, np.atleast_1d(distance)):
            writer.writerow([clean(t)] + [clean(v) for v in x] + [clean(d)])
    return path


def persist_outcome(outcome, out_dir: str, stem: str, record_step: float = 0.1) -> list:
    """Report JSON, summary row, τ table, witness trajectory and extra payloads of one run."""
    paths = [write_report(outcome.report, out_dir, stem), update_summary(out_dir, outcome.summary)]
    if outcome.table is not None:
        paths.append(write_tau_csv(outcome.table, out_dir, stem))
    if isinstance(outcome.witness, Witness):
        sys = get_system(outcome.report.system)
        paths.append(write_witness_trajectory(sys, outcome.witness, outcome.set_A, out_dir, stem, record_step))
    extra = outcome.extra or {}
    if "cloud" in extra:
        paths.append(write_points_csv(np.asarray(extra["cloud"]), out_dir, f"{stem}_cloud"))
    if extra.get("profile"):
        paths.append(write_rows_csv(extra["profile"], out_dir, f"{stem}_profile"))
    return paths
