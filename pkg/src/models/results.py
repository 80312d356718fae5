from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class SolveMetadata(BaseModel):
    """Iteration record attached to every computed field"""
    nonlinearity: str = "none"
    residual: float = 0.0
    newton_iterations: int = 0
    linear_iterations: List[int] = Field(default_factory=list)
    linear_methods: List[str] = Field(default_factory=list)
    residual_trace: List[float] = Field(default_factory=list)
    damping_trace: List[float] = Field(default_factory=list)
    eigenvalue: Optional[float] = None


class CriticalClass(str, Enum):
    MAX = "MAX"
    MIN = "MIN"
    SADDLE = "SADDLE"
    DEGENERATE = "DEGENERATE"


class CriticalPoint(BaseModel):
    x: float
    y: float
    value: float
    grad_norm: float
    hessian: List[List[float]]
    critical_class: CriticalClass
    index: Optional[int] = Field(None, description="Winding-number index; None when the circle test was not possible")
    hessian_index: int = Field(..., description="+1 for MAX/MIN, -1 for SADDLE, 0 for DEGENERATE")

    @property
    def location(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def to_json_entry(self) -> Dict[str, Any]:
        hess = self.hessian
        return {
            "x": self.x,
            "y": self.y,
            "value": self.value,
            "index": self.index,
            "class": self.critical_class.value,
            "grad_norm": self.grad_norm,
            "hess": [hess[0][0], hess[0][1], hess[1][1]],
        }


class RingDiagnostic(BaseModel):
    """A circle of degenerate critical points around the hole centre"""
    center: Tuple[float, float]
    mean_radius: float
    spread: float = Field(..., description="max - min candidate radius")
    candidates: int
    max_angular_gap: float


class CritSet(BaseModel):
    points: List[CriticalPoint] = Field(default_factory=list)
    margin: float
    dedup_radius: float
    dropped_seeds: int = 0
    degenerate_count: int = 0
    unindexed_count: int = 0
    near_critical: List[Tuple[float, float]] = Field(default_factory=list)
    ring: Optional[RingDiagnostic] = None

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def index_sum(self) -> int:
        return sum(p.index if p.index is not None else p.hessian_index for p in self.points)

    def by_class(self, critical_class: CriticalClass) -> List[CriticalPoint]:
        return [p for p in self.points if p.critical_class == critical_class]

    def to_json(self) -> List[Dict[str, Any]]:
        return [p.to_json_entry() for p in self.points]


class AuditVerdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INAPPLICABLE = "INAPPLICABLE"


class AuditRecord(BaseModel):
    index_sum: int
    target: int
    verdict: AuditVerdict
    probes: int = 0
    worst_inward_product: Optional[float] = Field(None, description="max of grad.normal over all probes")
    detail: Optional[str] = None


class PairedPoint(BaseModel):
    base: CriticalPoint
    perturbed: CriticalPoint
    distance: float


class Pairing(BaseModel):
    pairs: List[PairedPoint] = Field(default_factory=list)
    extras: List[CriticalPoint] = Field(default_factory=list)
    unmatched_base: List[CriticalPoint] = Field(default_factory=list)


class LocalData(BaseModel):
    """u0 and its derivatives at the hole centre"""
    model_config = ConfigDict(frozen=True)

    N: int = Field(2, ge=2)
    P: List[float]
    u0P: float
    grad0P: List[float]
    hess0P: List[List[float]]
    fu0P: Optional[float] = None
    HPP: Optional[float] = None


class PredictionKind(str, Enum):
    NONDEG_SADDLE = "NONDEG_SADDLE"
    DEGEN_FAMILY = "DEGEN_FAMILY"
    RADIAL = "RADIAL"
    COUNT = "COUNT"


class ScalingLaw(str, Enum):
    POWER = "POWER"
    LOG = "LOG"


class Prediction(BaseModel):
    kind: PredictionKind
    law: ScalingLaw
    exponent: Optional[float] = Field(None, description="p of eps^p for POWER laws")
    eps: Optional[float] = None
    c: List[List[float]] = Field(default_factory=list, description="offset = c * law(eps), one row per point")
    points: List[List[float]] = Field(default_factory=list)
    count_delta: int = 0
    count_is_lower_bound: bool = False
    expected_index: Optional[int] = None
    expected_value: Optional[float] = None
    constant: Optional[float] = None
    radius: Optional[float] = None
    radius_cross: Optional[float] = None
    coefficient: Optional[float] = None
    coefficient_cross: Optional[float] = None
    flags: List[str] = Field(default_factory=list)

    def to_json(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "kind": self.kind.value,
            "law": self.law.value,
            "c": self.c,
            "count_delta": self.count_delta,
            "flags": self.flags,
        }
        if self.exponent is not None:
            payload["exponent"] = self.exponent
        if self.points:
            payload["points"] = self.points
        if self.count_is_lower_bound:
            payload["count_delta"] = f">= {self.count_delta}"
        if self.kind == PredictionKind.RADIAL:
            payload["radius"] = self.radius
            payload["coefficient"] = self.coefficient
            if self.radius_cross is not None:
                payload["radius_cross"] = self.radius_cross
                payload["coefficient_cross"] = self.coefficient_cross
        return payload


class LocationVerdict(BaseModel):
    verdict: str = Field(..., examples=["MATCH", "NO_MATCH"])
    branch: Optional[str] = None
    residual: float

    @property
    def matched(self) -> bool:
        return self.verdict == "MATCH"


class RateFit(BaseModel):
    law: ScalingLaw
    exponent: Optional[float] = None
    c: List[float]
    residual: float
    n_records: int


class ErrorRecord(BaseModel):
    """Structured failure embedded in a report instead of aborting it"""
    success: bool = False
    error_message: str
    error_code: str
    request_params: Optional[Dict[str, Any]] = None


class PsiEpsRecord(BaseModel):
    eps: float
    h: Optional[float] = None
    deviation: Optional[float] = None
    probes: int = 0
    sample_phase: float = 0.0
    error: Optional[ErrorRecord] = None


class RadialSweepEntry(BaseModel):
    eps: float
    n: int = 0
    r_eps: Optional[float] = None
    ratio_to_law: Optional[float] = None
    pred_printed: Optional[float] = None
    pred_cross: Optional[float] = None
    newton_iters: int = 0
    error: Optional[ErrorRecord] = None


class SweepRecord(BaseModel):
    eps: float
    h: float
    crit_count: Optional[int] = None
    points: List[Dict[str, Any]] = Field(default_factory=list)
    index_sum: Optional[int] = None
    audit: Optional[AuditRecord] = None
    prediction: Optional[Prediction] = None
    saddle: Optional[List[float]] = None
    predicted_saddle: Optional[List[float]] = Field(None, description="Predicted point matched to the measured saddle")
    saddle_value: Optional[float] = None
    saddle_value_gap: Optional[float] = Field(None, description="|u_eps(x_eps) - u0(P)| / u0(P)")
    err_abs: Optional[float] = None
    err_rel: Optional[float] = None
    align_deg: Optional[float] = None
    ring: Optional[RingDiagnostic] = None
    expansion_error: Optional[float] = None
    runtime_s: float = 0.0
    error: Optional[ErrorRecord] = None


class SolveRecord(BaseModel):
    """One field solve of the solve and critpoints commands"""
    eps: Optional[float] = Field(None, description="None for the unpunctured domain")
    h: float
    unknowns: int = 0
    newton_iterations: int = 0
    residual: Optional[float] = None
    sup_norm: Optional[float] = None
    eigenvalue: Optional[float] = None
    field_file: Optional[str] = None
    error: Optional[ErrorRecord] = None


class EnvironmentStamp(BaseModel):
    version: str
    build_hash: str
    numpy: str
    scipy: str


class SweepReport(BaseModel):
    command: str
    config_hash: str
    records: List[SweepRecord] = Field(default_factory=list)
    solves: List[SolveRecord] = Field(default_factory=list)
    fits: List[RateFit] = Field(default_factory=list)
    green: List[PsiEpsRecord] = Field(default_factory=list)
    radial: List[RadialSweepEntry] = Field(default_factory=list)
    prediction: Optional[Prediction] = None
    local_data: Optional[LocalData] = None
    critpoints: Optional[CritSet] = None
    summary: Dict[str, Any] = Field(default_factory=dict)
    environment: EnvironmentStamp

    @property
    def failures(self) -> int:
        return (sum(r.error is not None for r in self.records)
                + sum(s.error is not None for s in self.solves)
                + sum(g.error is not None for g in self.green)
                + sum(e.error is not None for e in self.radial))
