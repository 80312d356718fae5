import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Tuple, Union

import numpy as np

from ..errors import EmptyInterior, HoleUnresolved
from ..models.domain import LevelSetDomain, PuncturedDomain
from ..utils.logging_config import get_logger
from ..utils.utils import stable_hash

logger = get_logger(__name__)

Domain = Union[LevelSetDomain, PuncturedDomain]

# Arm order along the last axis of Grid2D.arms
EAST, WEST, NORTH, SOUTH = 0, 1, 2, 3
ARM_OFFSETS = ((1, 0), (-1, 0), (0, 1), (0, -1))

BISECTION_TOLERANCE = 1e-12


class NodeClass(IntEnum):
    INTERIOR = 0
    BOUNDARY_CUT = 1
    EXTERIOR = 2


class Surface(IntEnum):
    NONE = 0
    OUTER = 1
    HOLE = 2


@dataclass(frozen=True, eq=False)
class Grid2D:
    """Uniform node grid over a level-set domain.

    Node arrays are indexed [j, i] with j along y and i along x (row-major,
    x fastest). ``arms`` holds the fraction of h at which each stencil arm
    meets the boundary: 1.0 where the neighbour is an unknown node, NaN on
    EXTERIOR nodes.
    """
    domain: Domain
    h: float
    origin: Tuple[float, float]
    nx: int
    ny: int
    node_class: np.ndarray
    arms: np.ndarray
    arm_surface: np.ndarray
    unknown_index: np.ndarray = field(repr=False)

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + self.h * np.arange(self.nx)

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + self.h * np.arange(self.ny)

    @property
    def unknown_mask(self) -> np.ndarray:
        return self.node_class != NodeClass.EXTERIOR

    @property
    def n_unknowns(self) -> int:
        return int(np.count_nonzero(self.unknown_mask))

    @property
    def punctured(self) -> bool:
        return isinstance(self.domain, PuncturedDomain)

    @property
    def outer(self) -> LevelSetDomain:
        return self.domain.outer if self.punctured else self.domain

    @property
    def domain_hash(self) -> str:
        return stable_hash({"domain": self.domain.model_dump(mode="json"), "h": self.h})

    def count(self, node_class: NodeClass) -> int:
        return int(np.count_nonzero(self.node_class == node_class))

    def node_coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y)

    def unknown_coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        X, Y = self.node_coordinates()
        mask = self.unknown_mask
        return X[mask], Y[mask]

    def evaluate(self, func: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> np.ndarray:
        """Samples func(x, y) at the unknown nodes, in unknown-index order."""
        x, y = self.unknown_coordinates()
        return np.asarray(func(x, y), dtype=np.float64) * np.ones_like(x)

    def to_nodes(self, values: np.ndarray) -> np.ndarray:
        """Scatters an unknown vector onto the (ny, nx) node array, NaN on EXTERIOR nodes."""
        nodes = np.full((self.ny, self.nx), np.nan)
        nodes[self.unknown_mask] = values
        return nodes

    def locate(self, x: float, y: float) -> Tuple[int, int]:
        """Indices (i, j) of the node nearest to (x, y)."""
        return (int(round((x - self.origin[0]) / self.h)),
                int(round((y - self.origin[1]) / self.h)))


def _neighbour(mask: np.ndarray, di: int, dj: int) -> np.ndarray:
    """mask value of the (i + di, j + dj) neighbour; False beyond the array."""
    shifted = np.zeros_like(mask)
    ny, nx = mask.shape
    src_j = slice(max(dj, 0), ny + min(dj, 0))
    src_i = slice(max(di, 0), nx + min(di, 0))
    dst_j = slice(max(-dj, 0), ny + min(-dj, 0))
    dst_i = slice(max(-di, 0), nx + min(-di, 0))
    shifted[dst_j, dst_i] = mask[src_j, src_i]
    return shifted


def _bisect_arms(domain: Domain, x0: np.ndarray, y0: np.ndarray, dx: float, dy: float, h: float) -> np.ndarray:
    """Fraction t in (0, 1] where phi changes sign along (x0, y0) + t (dx, dy), vectorized."""
    lo = np.zeros_like(x0)
    hi = np.ones_like(x0)
    while np.max(hi - lo, initial=0.0) * h > BISECTION_TOLERANCE * h:
        mid = 0.5 * (lo + hi)
        inside = domain.phi(x0 + mid * dx, y0 + mid * dy) < 0.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return hi


def classify(domain: Domain, h: float) -> Grid2D:
    """Classify grid nodes of spacing h and compute Shortley-Weller arm fractions.

    Nodes sit at integer multiples of h, so symmetric domains get symmetric grids.

    Raises:
        HoleUnresolved: h > eps / 4 for a punctured domain
        EmptyInterior: no node lies inside the domain
    """
    if h <= 0.0:
        raise ValueError(f"grid spacing must be positive, got {h}")
    if isinstance(domain, PuncturedDomain) and h > domain.eps / 4.0 * (1.0 + 1e-12):
        raise HoleUnresolved(
            f"h = {h} does not resolve the hole (need h <= eps/4 = {domain.eps / 4.0})",
            context={"h": h, "eps": domain.eps},
        )

    xmin, xmax, ymin, ymax = domain.bounding_box
    i_lo, i_hi = math.floor(xmin / h) - 1, math.ceil(xmax / h) + 1
    j_lo, j_hi = math.floor(ymin / h) - 1, math.ceil(ymax / h) + 1
    nx, ny = i_hi - i_lo + 1, j_hi - j_lo + 1
    x = (i_lo + np.arange(nx)) * h
    y = (j_lo + np.arange(ny)) * h
    X, Y = np.meshgrid(x, y)

    unknown = domain.phi(X, Y) < 0.0
    if not unknown.any():
        raise EmptyInterior(f"no interior nodes at h = {h}", context={"h": h})

    arms = np.full((ny, nx, 4), np.nan)
    arm_surface = np.zeros((ny, nx, 4), dtype=np.int8)
    arms[unknown] = 1.0
    any_cut = np.zeros_like(unknown)

    for arm, (di, dj) in enumerate(ARM_OFFSETS):
        cut = unknown & ~_neighbour(unknown, di, dj)
        if not cut.any():
            continue
        any_cut |= cut
        x0, y0 = X[cut], Y[cut]
        theta = _bisect_arms(domain, x0, y0, di * h, dj * h, h)
        arms[cut, arm] = theta

        xc, yc = x0 + theta * di * h, y0 + theta * dj * h
        surface = np.full(theta.shape, Surface.OUTER, dtype=np.int8)
        if isinstance(domain, PuncturedDomain):
            on_hole = -domain.hole_distance(xc, yc) > domain.outer.phi(xc, yc)
            surface[on_hole] = Surface.HOLE
        arm_surface[cut, arm] = surface

    node_class = np.full((ny, nx), NodeClass.EXTERIOR, dtype=np.int8)
    node_class[unknown] = NodeClass.INTERIOR
    node_class[any_cut] = NodeClass.BOUNDARY_CUT

    unknown_index = np.full((ny, nx), -1, dtype=np.int64)
    unknown_index[unknown] = np.arange(int(np.count_nonzero(unknown)))

    grid = Grid2D(
        domain=domain,
        h=h,
        origin=(float(x[0]), float(y[0])),
        nx=nx,
        ny=ny,
        node_class=node_class,
        arms=arms,
        arm_surface=arm_surface,
        unknown_index=unknown_index,
    )
    logger.info(f"Classified {nx}x{ny} grid at h={h}: {grid.count(NodeClass.INTERIOR)} interior, "
                f"{grid.count(NodeClass.BOUNDARY_CUT)} boundary-cut nodes")
    return grid
