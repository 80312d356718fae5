import math
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import InsufficientData
from ..models.results import RateFit, ScalingLaw

MIN_RECORDS = 3


def _prepare(records: Sequence[Tuple[float, Sequence[float]]]) -> Tuple[np.ndarray, np.ndarray]:
    if len(records) < MIN_RECORDS:
        raise InsufficientData(f"need at least {MIN_RECORDS} records, got {len(records)}",
                               context={"records": len(records)})
    eps = np.array([float(e) for e, _ in records])
    if np.any(np.diff(eps) >= 0.0):
        raise ValueError("eps values must be strictly decreasing")
    offsets = np.array([np.atleast_1d(np.asarray(o, dtype=np.float64)) for _, o in records])
    return eps, offsets


def law_factor(eps, law: ScalingLaw, exponent: float):
    """eps^p for POWER, |log eps|^(-p) for LOG"""
    eps = np.asarray(eps, dtype=np.float64)
    if law == ScalingLaw.POWER:
        return eps ** exponent
    return np.abs(np.log(eps)) ** (-exponent)


def fit_rate(records: Sequence[Tuple[float, Sequence[float]]], law: ScalingLaw,
             exponent: Optional[float] = None) -> RateFit:
    """Least-squares c in offset = c * law(eps).

    The exponent defaults to 1 for LOG (offset = c / |log eps|) and is
    required for POWER. The residual is |offset - fit| / |offset| over all
    records.

    Raises:
        InsufficientData: fewer than 3 records
    """
    eps, offsets = _prepare(records)
    if exponent is None:
        if law == ScalingLaw.POWER:
            raise ValueError("POWER law needs an exponent")
        exponent = 1.0
    g = law_factor(eps, law, exponent)
    c = (g @ offsets) / float(g @ g)
    misfit = offsets - np.outer(g, c)
    total = float(np.linalg.norm(offsets))
    residual = float(np.linalg.norm(misfit)) / total if total > 0.0 else 0.0
    return RateFit(law=law, exponent=exponent, c=c.tolist(), residual=residual, n_records=len(records))


def fit_exponent(records: Sequence[Tuple[float, Sequence[float]]]) -> RateFit:
    """Fits both c and p of offset = c * eps^p from the log-log slope of the offset magnitudes."""
    eps, offsets = _prepare(records)
    magnitudes = np.linalg.norm(offsets, axis=1)
    if np.any(magnitudes <= 0.0):
        raise ValueError("offsets must be nonzero to fit an exponent")
    slope, intercept = np.polyfit(np.log(eps), np.log(magnitudes), 1)
    direction = np.sum(offsets / magnitudes[:, None], axis=0)
    direction /= np.linalg.norm(direction)
    c = math.exp(intercept) * direction
    predicted = np.outer(eps ** slope, c)
    residual = float(np.linalg.norm(offsets - predicted)) / float(np.linalg.norm(offsets))
    return RateFit(law=ScalingLaw.POWER, exponent=float(slope), c=c.tolist(), residual=residual,
                   n_records=len(records))


def observed_order(h_values: Sequence[float], errors: Sequence[float]) -> float:
    """Slope of log(error) against log(h); two points give the classic two-grid estimate."""
    h = np.asarray(h_values, dtype=np.float64)
    e = np.asarray(errors, dtype=np.float64)
    if h.size < 2 or h.size != e.size:
        raise InsufficientData("need matching h and error lists with at least two entries",
                               context={"h": h.size, "errors": e.size})
    if h.size == 2:
        return float(math.log(e[0] / e[1]) / math.log(h[0] / h[1]))
    slope, _ = np.polyfit(np.log(h), np.log(e), 1)
    return float(slope)
