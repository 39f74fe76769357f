from pydantic import BaseModel
from typing import Dict, Optional, Any


class AnalysisReport(BaseModel):
    property: str
    system: str
    set: str
    verdict: str
    parameters: Dict[str, Any] = {}
    evidence: Dict[str, Any] = {}
    certificate: Optional[Dict[str, Any]] = None
    witness: Optional[Dict[str, Any]] = None
    samples: int = 0
    seed: int = 0
    runtime_s: Optional[float] = None


class SummaryRow(BaseModel):
    system: str
    property: str
    set: str
    verdict: str
    key_parameters: str = ""
