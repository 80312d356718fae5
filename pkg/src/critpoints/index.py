import math
from typing import Optional, Union

import numpy as np
from scipy.optimize import minimize_scalar

from ..elliptic.field import Field, sample_gradients
from ..errors import BoundaryConditionViolated, GradientTooSmallOnCircle, TooCloseToBoundary, UnderSampled
from ..models.domain import LevelSetDomain, PuncturedDomain
from ..models.results import AuditRecord, AuditVerdict, CritSet
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

WINDING_SAMPLES = 256
WINDING_RETRY_SAMPLES = 1024
MIN_GRADIENT_RATIO = 1e-3
BOUNDARY_PROBES = 128
CIRCLE_CLEARANCE = 2.0  # in units of h

Domain = Union[LevelSetDomain, PuncturedDomain]


def circle_clearance(field: Field, x, rho: float) -> float:
    """Smallest distance from the circle |y - x| = rho to either boundary."""
    x = np.asarray(x, dtype=np.float64)
    t = 2.0 * math.pi * np.arange(64) / 64
    circle = x + rho * np.column_stack([np.cos(t), np.sin(t)])
    return float(np.min(field.grid.domain.distance_estimate(circle[:, 0], circle[:, 1])))


def _winding(gradients: np.ndarray) -> Optional[int]:
    angles = np.arctan2(gradients[:, 1], gradients[:, 0])
    increments = np.diff(np.append(angles, angles[0]))
    increments = (increments + math.pi) % (2.0 * math.pi) - math.pi
    if np.any(np.abs(increments) > math.pi / 2.0):
        return None
    return int(round(float(np.sum(increments)) / (2.0 * math.pi)))


def _refined_min_gradient(field: Field, x: np.ndarray, rho: float, theta0: float, width: float) -> float:
    def gradient_norm(theta: float) -> float:
        point = x + rho * np.array([math.cos(theta), math.sin(theta)])
        return float(np.linalg.norm(sample_gradients(field, point)[0]))

    result = minimize_scalar(gradient_norm, bounds=(theta0 - width, theta0 + width), method="bounded",
                             options={"xatol": 1e-10})
    return float(result.fun)


def index_of(field: Field, x, rho: float) -> int:
    """Winding number of the gradient along the circle |y - x| = rho.

    Raises:
        TooCloseToBoundary: the circle comes within 2h of a boundary
        GradientTooSmallOnCircle: min |grad u| on the circle below 1e-3 of its max
        UnderSampled: wrapped angle increments above pi/2 with 1024 samples
    """
    x = np.asarray(x, dtype=np.float64)
    h = field.grid.h
    if circle_clearance(field, x, rho) < CIRCLE_CLEARANCE * h:
        raise TooCloseToBoundary(f"index circle of radius {rho:.4g} at {x.tolist()} is within 2h of a boundary",
                                 context={"x": x.tolist(), "rho": rho})

    for samples in (WINDING_SAMPLES, WINDING_RETRY_SAMPLES):
        t = 2.0 * math.pi * np.arange(samples) / samples
        gradients = sample_gradients(field, x + rho * np.column_stack([np.cos(t), np.sin(t)]))
        norms = np.linalg.norm(gradients, axis=1)
        g_max = float(np.max(norms))
        k = int(np.argmin(norms))
        g_min = min(float(norms[k]), _refined_min_gradient(field, x, rho, float(t[k]), 2.0 * math.pi / samples))
        if g_min < MIN_GRADIENT_RATIO * g_max:
            raise GradientTooSmallOnCircle(
                f"|grad u| drops to {g_min:.3e} (max {g_max:.3e}) on the circle around {x.tolist()}",
                context={"x": x.tolist(), "rho": rho, "ratio": g_min / g_max if g_max > 0 else 0.0},
            )
        index = _winding(gradients)
        if index is not None:
            return index
        logger.debug(f"Winding at {x.tolist()} under-sampled with {samples} points")

    raise UnderSampled(f"gradient angle jumps exceed pi/2 even with {WINDING_RETRY_SAMPLES} samples",
                       context={"x": x.tolist(), "rho": rho})


def _probe_rings(domain: Domain, h: float, probes: int):
    """(points, outward normals of the domain) on rings 3h inside each boundary."""
    outer = domain.outer if isinstance(domain, PuncturedDomain) else domain
    boundary = outer.boundary_points(probes)
    normals = outer.outward_normals(boundary)
    rings = [(boundary - 3.0 * h * normals, normals)]
    if isinstance(domain, PuncturedDomain):
        t = 2.0 * math.pi * np.arange(probes) / probes
        radial = np.column_stack([np.cos(t), np.sin(t)])
        rings.append((np.asarray(domain.P) + (domain.eps + 3.0 * h) * radial, -radial))
    return rings


def check_inward_gradient(field: Field, domain: Domain, probes: int = BOUNDARY_PROBES) -> float:
    """Largest grad u . nu over the probe rings; negative when the gradient points strictly inward.

    Raises:
        BoundaryConditionViolated: some probe has grad u . nu >= 0
    """
    worst = -math.inf
    for points, normals in _probe_rings(domain, field.grid.h, probes):
        products = np.sum(sample_gradients(field, points) * normals, axis=1)
        worst = max(worst, float(np.max(products)))
    if worst >= 0.0:
        raise BoundaryConditionViolated(f"gradient not inward-pointing on a boundary probe (max v.nu = {worst:.3e})",
                                        context={"worst_inward_product": worst})
    return worst


def poincare_hopf_audit(cs: CritSet, domain: Domain, field: Field, strict: bool = True) -> AuditRecord:
    """Sum of indices against the Euler characteristic of the domain.

    With strict=False a violated boundary condition yields an INAPPLICABLE
    record instead of raising.

    Raises:
        BoundaryConditionViolated: strict and the gradient is not inward-pointing
    """
    target = domain.euler_characteristic
    try:
        worst = check_inward_gradient(field, domain)
    except BoundaryConditionViolated as e:
        if strict:
            raise
        logger.warning(f"Poincare-Hopf audit inapplicable: {e.message}")
        return AuditRecord(index_sum=cs.index_sum, target=target, verdict=AuditVerdict.INAPPLICABLE,
                           probes=BOUNDARY_PROBES, worst_inward_product=e.context["worst_inward_product"],
                           detail=e.message)

    verdict = AuditVerdict.PASS if cs.index_sum == target else AuditVerdict.FAIL
    logger.info(f"Poincare-Hopf audit: index sum {cs.index_sum}, target {target} -> {verdict.value}")
    return AuditRecord(index_sum=cs.index_sum, target=target, verdict=verdict, probes=BOUNDARY_PROBES,
                       worst_inward_product=worst)


def local_index_audit(cs: CritSet, P, d: float, index_P: int = 0) -> AuditRecord:
    """Index sum of the points within distance d of P against index_P(grad u0) - 1."""
    P = np.asarray(P, dtype=np.float64)
    near = [p for p in cs.points if float(np.linalg.norm(p.location - P)) < d]
    total = sum(p.index if p.index is not None else p.hessian_index for p in near)
    target = index_P - 1
    verdict = AuditVerdict.PASS if total == target else AuditVerdict.FAIL
    return AuditRecord(index_sum=total, target=target, verdict=verdict,
                       detail=f"{len(near)} points within {d:g} of {P.tolist()}")
