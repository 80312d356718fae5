import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .index import circle_clearance, index_of
from ..elliptic.field import Field, sample_gradients, sample_hessians, sample_value
from ..errors import GradientTooSmallOnCircle, TooCloseToBoundary, UnderSampled
from ..models.domain import PuncturedDomain
from ..models.results import CriticalClass, CriticalPoint, CritSet, RingDiagnostic
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

NEWTON_MAX_STEPS = 40
GRADIENT_TOLERANCE = 1e-8
NEAR_CRITICAL_RATIO = 1e-3
HESSIAN_TOLERANCE = 1e-4
RING_MIN_CANDIDATES = 8
RING_SPREAD = 3.0  # in units of h


@dataclass
class _Refined:
    location: np.ndarray
    center: Tuple[int, int]
    grad_norm: float
    seed_order: int


def _node_gradients(field: Field) -> Tuple[np.ndarray, np.ndarray]:
    """Central-difference gradient at every node, NaN where a neighbour is EXTERIOR.

    This is the derivative of the biquadratic interpolant at its centre node.
    """
    U = field.nodes
    h = field.grid.h
    gx = np.full(U.shape, np.nan)
    gy = np.full(U.shape, np.nan)
    gx[:, 1:-1] = (U[:, 2:] - U[:, :-2]) / (2.0 * h)
    gy[1:-1, :] = (U[2:, :] - U[:-2, :]) / (2.0 * h)
    return gx, gy


def _node_hessian_scale(field: Field, region: np.ndarray) -> float:
    U = field.nodes
    h2 = field.grid.h ** 2
    hxx = np.full(U.shape, np.nan)
    hyy = np.full(U.shape, np.nan)
    hxx[:, 1:-1] = (U[:, 2:] - 2.0 * U[:, 1:-1] + U[:, :-2]) / h2
    hyy[1:-1, :] = (U[2:, :] - 2.0 * U[1:-1, :] + U[:-2, :]) / h2
    scale = np.hypot(hxx, hyy)[region]
    scale = scale[np.isfinite(scale)]
    return float(np.max(scale)) if scale.size else 1.0


def _detection_region(field: Field, margin: float, hole_margin: float) -> np.ndarray:
    """Node mask of points at least margin from the outer boundary and hole_margin from the hole."""
    grid = field.grid
    X, Y = grid.node_coordinates()
    region = grid.outer.distance_estimate(X, Y) >= margin
    if isinstance(grid.domain, PuncturedDomain):
        region &= grid.domain.hole_distance(X, Y) >= hole_margin
    return region & grid.unknown_mask


def flag_cells(field: Field, region: np.ndarray) -> np.ndarray:
    """Lower-left node indices (j, i) of cells whose corner gradients change sign in both components."""
    gx, gy = _node_gradients(field)
    corners_x = np.stack([gx[:-1, :-1], gx[:-1, 1:], gx[1:, :-1], gx[1:, 1:]])
    corners_y = np.stack([gy[:-1, :-1], gy[:-1, 1:], gy[1:, :-1], gy[1:, 1:]])
    inside = region[:-1, :-1] & region[:-1, 1:] & region[1:, :-1] & region[1:, 1:]
    valid = inside & np.isfinite(corners_x).all(axis=0) & np.isfinite(corners_y).all(axis=0)
    with np.errstate(invalid="ignore"):
        change_x = (np.nanmin(corners_x, axis=0) <= 0.0) & (np.nanmax(corners_x, axis=0) >= 0.0)
        change_y = (np.nanmin(corners_y, axis=0) <= 0.0) & (np.nanmax(corners_y, axis=0) >= 0.0)
    return np.argwhere(valid & change_x & change_y)


def _nearest(field: Field, x: np.ndarray) -> Tuple[int, int]:
    return field.grid.locate(float(x[0]), float(x[1]))


def refine(field: Field, seed: np.ndarray, tolerance: float) -> Tuple[Optional[_Refined], float]:
    """Newton on the biquadratic gradient from seed, steps clipped to h.

    When the iterate bounces between two stencils the stencil centre is
    pinned and Newton continues on that single biquadratic. Returns the
    refined point (or None) and the last gradient norm.
    """
    h = field.grid.h
    x = np.array(seed, dtype=np.float64)
    pinned: Optional[Tuple[int, int]] = None
    history: List[Tuple[int, int]] = []
    last_norm = math.inf

    for _ in range(NEWTON_MAX_STEPS):
        center = pinned if pinned is not None else _nearest(field, x)
        g = sample_gradients(field, x, strict=False, center=center)[0]
        if not np.all(np.isfinite(g)):
            return None, last_norm
        last_norm = float(np.linalg.norm(g))
        if last_norm <= tolerance:
            return _Refined(location=x, center=center, grad_norm=last_norm, seed_order=0), last_norm
        H = sample_hessians(field, x, strict=False, center=center)[0]
        try:
            step = np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = np.linalg.pinv(H) @ g
        length = float(np.linalg.norm(step))
        if length > h:
            step *= h / length
        x = x - step

        if pinned is None:
            following = _nearest(field, x)
            if len(history) >= 1 and following == history[-1] and following != center:
                pinned = center
            history.append(center)
        elif max(abs(x[0] - (field.grid.origin[0] + pinned[0] * h)),
                 abs(x[1] - (field.grid.origin[1] + pinned[1] * h))) > 1.5 * h:
            return None, last_norm

    return None, last_norm


def classify_hessian(hessian: np.ndarray, tau: float) -> Tuple[CriticalClass, int]:
    """Class and Hessian-sign index with threshold tau on the eigenvalues."""
    eigenvalues = np.linalg.eigvalsh(0.5 * (hessian + hessian.T))
    if np.all(eigenvalues < -tau):
        return CriticalClass.MAX, 1
    if np.all(eigenvalues > tau):
        return CriticalClass.MIN, 1
    if float(np.linalg.det(hessian)) < -tau * tau:
        return CriticalClass.SADDLE, -1
    return CriticalClass.DEGENERATE, 0


def default_index_radius(field: Field, x: np.ndarray) -> float:
    """4h, or max(4h, eps/2) within 10 eps of the hole centre."""
    grid = field.grid
    rho = 4.0 * grid.h
    if isinstance(grid.domain, PuncturedDomain):
        if float(np.hypot(x[0] - grid.domain.P[0], x[1] - grid.domain.P[1])) <= 10.0 * grid.domain.eps:
            rho = max(rho, grid.domain.eps / 2.0)
    return rho


def _dedup(locations: Sequence[np.ndarray], radius: float) -> List[int]:
    kept: List[int] = []
    for k, x in enumerate(locations):
        if all(float(np.linalg.norm(x - locations[j])) >= radius for j in kept):
            kept.append(k)
    return kept


def detect_ring(candidates: Sequence[np.ndarray], P: Sequence[float], h: float) -> Optional[RingDiagnostic]:
    """Largest group of candidates at a common distance from P (spread <= 3h) that surrounds P.

    Reported when the group has at least 8 members and no angular gap reaches pi.
    """
    if len(candidates) < RING_MIN_CANDIDATES:
        return None
    P = np.asarray(P, dtype=np.float64)
    offsets = np.asarray(candidates) - P
    radii = np.hypot(offsets[:, 0], offsets[:, 1])
    order = np.argsort(radii, kind="stable")
    sorted_radii = radii[order]

    best = (0, 0)
    hi = 0
    for lo in range(len(sorted_radii)):
        while hi < len(sorted_radii) and sorted_radii[hi] - sorted_radii[lo] <= RING_SPREAD * h:
            hi += 1
        if hi - lo > best[1] - best[0]:
            best = (lo, hi)
    members = order[best[0]:best[1]]
    if len(members) < RING_MIN_CANDIDATES:
        return None

    angles = np.sort(np.arctan2(offsets[members, 1], offsets[members, 0]))
    gaps = np.diff(np.append(angles, angles[0] + 2.0 * math.pi))
    max_gap = float(np.max(gaps))
    if max_gap >= math.pi:
        return None
    ring_radii = radii[members]
    return RingDiagnostic(
        center=(float(P[0]), float(P[1])),
        mean_radius=float(np.mean(ring_radii)),
        spread=float(np.max(ring_radii) - np.min(ring_radii)),
        candidates=int(len(members)),
        max_angular_gap=max_gap,
    )


def find_critical_points(field: Field, margin: Optional[float] = None,
                         hole_margin: Optional[float] = None) -> CritSet:
    """All interior critical points of field at distance >= margin from the boundaries.

    Coarse pass over grid cells, Newton refinement per flagged cell,
    deduplication within 2h in cell order, then Hessian classification and
    winding-number index. Candidates whose index circle reports a vanishing
    gradient are collected with the unconverged near-critical seeds; when
    they form a ring around the hole centre a RingDiagnostic replaces them.
    """
    grid = field.grid
    h = grid.h
    margin = max(3.0 * h, margin if margin is not None else 3.0 * h)
    hole_margin = 3.0 * h if hole_margin is None else hole_margin
    region = _detection_region(field, margin, hole_margin)

    gx, gy = _node_gradients(field)
    g_sup = float(np.nanmax(np.where(region, np.hypot(gx, gy), np.nan))) if region.any() else 0.0
    tolerance = GRADIENT_TOLERANCE * g_sup
    tau = HESSIAN_TOLERANCE * _node_hessian_scale(field, region)

    cells = flag_cells(field, region)
    logger.info(f"Coarse pass flagged {len(cells)} cells (margin {margin:.4g}, hole margin {hole_margin:.4g})")

    refined: List[_Refined] = []
    near_critical: List[np.ndarray] = []
    dropped = 0
    for order, (j, i) in enumerate(cells):
        seed = np.array([grid.origin[0] + (i + 0.5) * h, grid.origin[1] + (j + 0.5) * h])
        result, last_norm = refine(field, seed, tolerance)
        if result is None:
            dropped += 1
            if last_norm <= NEAR_CRITICAL_RATIO * g_sup:
                near_critical.append(seed)
            continue
        result.seed_order = order
        refined.append(result)
    if dropped:
        logger.warning(f"{dropped} Newton seeds did not converge ({len(near_critical)} near-critical kept)")

    def in_region(x: np.ndarray) -> bool:
        if float(grid.outer.distance_estimate(x[0], x[1])) < margin:
            return False
        if isinstance(grid.domain, PuncturedDomain) and float(grid.domain.hole_distance(x[0], x[1])) < hole_margin:
            return False
        return True

    refined = [r for r in refined if in_region(r.location)]
    refined = [refined[k] for k in _dedup([r.location for r in refined], 2.0 * h)]

    points: List[CriticalPoint] = []
    ring_candidates: List[np.ndarray] = []
    unindexed = 0
    for r in refined:
        hessian = sample_hessians(field, r.location, center=r.center)[0]
        critical_class, hessian_index = classify_hessian(hessian, tau)
        index: Optional[int] = None
        rho = default_index_radius(field, r.location)
        clearance = circle_clearance(field, r.location, rho)
        if clearance < 2.0 * h and clearance + rho - 2.0 * h >= 2.0 * h:
            rho = clearance + rho - 2.0 * h
        try:
            index = index_of(field, r.location, rho)
        except GradientTooSmallOnCircle:
            ring_candidates.append(r.location)
        except (TooCloseToBoundary, UnderSampled) as e:
            logger.debug(f"No winding index at {r.location.tolist()}: {e.message}")
        if index is None:
            unindexed += 1
        elif hessian_index != 0 and index != hessian_index:
            logger.warning(f"Winding index {index} disagrees with Hessian class {critical_class.value} "
                           f"at {r.location.tolist()}")
        points.append(CriticalPoint(
            x=float(r.location[0]),
            y=float(r.location[1]),
            value=sample_value(field, r.location, center=r.center),
            grad_norm=r.grad_norm,
            hessian=hessian.tolist(),
            critical_class=critical_class,
            index=index,
            hessian_index=hessian_index,
        ))

    ring = None
    if isinstance(grid.domain, PuncturedDomain):
        candidates = ring_candidates + [near_critical[k] for k in _dedup(near_critical, 2.0 * h)]
        ring = detect_ring(candidates, grid.domain.P, h)
        if ring is not None:
            distance = [abs(math.hypot(p.x - ring.center[0], p.y - ring.center[1]) - ring.mean_radius) for p in points]
            removed = [p for p, d in zip(points, distance) if d <= RING_SPREAD * h]
            points = [p for p, d in zip(points, distance) if d > RING_SPREAD * h]
            unindexed -= sum(p.index is None for p in removed)
            logger.info(f"Critical ring around {ring.center} at radius {ring.mean_radius:.6g} "
                        f"({ring.candidates} candidates)")

    cs = CritSet(
        points=points,
        margin=margin,
        dedup_radius=2.0 * h,
        dropped_seeds=dropped,
        degenerate_count=sum(p.critical_class == CriticalClass.DEGENERATE for p in points),
        unindexed_count=unindexed,
        near_critical=[(float(x[0]), float(x[1])) for x in near_critical],
        ring=ring,
    )
    logger.info(f"Found {cs.count} critical points: "
                f"{', '.join(p.critical_class.value for p in points) or 'none'}")
    return cs
