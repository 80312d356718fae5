"""Grid fields and their biquadratic sampling.

Sampling needs only a complete 3x3 stencil: a point whose stencil holds no
EXTERIOR node is accepted even when it lies closer than 2h to a boundary.
The 2h clearance is enforced by the callers that need it (detection
margins, index circles, boundary sample rings), which measure it with the
domain's distance estimate, a lower bound on ellipses.
"""
import json
from dataclasses import dataclass, field as dataclass_field
from functools import cached_property
from pathlib import Path
from typing import Callable, Optional, Tuple, Union

import numpy as np

from ..errors import IoError, TooCloseToBoundary
from ..geometry.grid import Grid2D
from ..models.results import SolveMetadata
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

Point = Union[Tuple[float, float], np.ndarray]


@dataclass(frozen=True, eq=False)
class Field:
    """Discrete scalar field: one value per non-EXTERIOR node of ``grid``."""
    grid: Grid2D
    values: np.ndarray
    metadata: SolveMetadata = dataclass_field(default_factory=SolveMetadata)

    @classmethod
    def from_function(cls, grid: Grid2D, func: Callable[[np.ndarray, np.ndarray], np.ndarray],
                      label: str = "synthetic") -> "Field":
        return cls(grid=grid, values=grid.evaluate(func), metadata=SolveMetadata(nonlinearity=label))

    @cached_property
    def nodes(self) -> np.ndarray:
        """(ny, nx) node array, NaN on EXTERIOR nodes"""
        return self.grid.to_nodes(self.values)

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))

    def sample_value(self, x: Point, center: Optional[Tuple[int, int]] = None) -> float:
        return sample_value(self, x, center)

    def sample_gradient(self, x: Point, center: Optional[Tuple[int, int]] = None) -> np.ndarray:
        return sample_gradient(self, x, center)

    def sample_hessian(self, x: Point, center: Optional[Tuple[int, int]] = None) -> np.ndarray:
        return sample_hessian(self, x, center)


def _lagrange(s: np.ndarray):
    """Quadratic Lagrange basis on nodes -1, 0, 1 and its first two derivatives, shape (m, 3)."""
    ones = np.ones_like(s)
    basis = np.stack([0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)], axis=1)
    first = np.stack([s - 0.5, -2.0 * s, s + 0.5], axis=1)
    second = np.stack([ones, -2.0 * ones, ones], axis=1)
    return basis, first, second


def _stencils(field: Field, points: np.ndarray, center: Optional[Tuple[int, int]] = None):
    """3x3 node neighbourhoods around each point plus local coordinates in units of h.

    Returns (U, s, t, valid) with U[m, b, a] the value at node offset (a - 1, b - 1).
    """
    grid = field.grid
    ox, oy = grid.origin
    if center is None:
        ic = np.rint((points[:, 0] - ox) / grid.h).astype(np.int64)
        jc = np.rint((points[:, 1] - oy) / grid.h).astype(np.int64)
    else:
        ic = np.full(points.shape[0], center[0], dtype=np.int64)
        jc = np.full(points.shape[0], center[1], dtype=np.int64)

    inside = (ic >= 1) & (ic <= grid.nx - 2) & (jc >= 1) & (jc <= grid.ny - 2)
    ic = np.where(inside, ic, 1)
    jc = np.where(inside, jc, 1)
    offsets = np.arange(-1, 2)
    J = jc[:, None, None] + offsets[None, :, None]
    I = ic[:, None, None] + offsets[None, None, :]
    U = field.nodes[J, I]
    valid = inside & ~np.isnan(U).any(axis=(1, 2))

    s = (points[:, 0] - (ox + ic * grid.h)) / grid.h
    t = (points[:, 1] - (oy + jc * grid.h)) / grid.h
    return np.nan_to_num(U), s, t, valid


def _as_points(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=np.float64))


def _check(valid: np.ndarray, points: np.ndarray) -> None:
    if not valid.all():
        bad = points[~valid][0]
        raise TooCloseToBoundary(
            f"sampling stencil at ({bad[0]:.6g}, {bad[1]:.6g}) reaches an EXTERIOR node",
            context={"x": float(bad[0]), "y": float(bad[1])},
        )


def sample_values(field: Field, points, strict: bool = True) -> np.ndarray:
    """Biquadratic interpolant at many points; NaN where the stencil is incomplete unless strict."""
    pts = _as_points(points)
    U, s, t, valid = _stencils(field, pts)
    if strict:
        _check(valid, pts)
    Lx, _, _ = _lagrange(s)
    Ly, _, _ = _lagrange(t)
    out = np.einsum("mba,ma,mb->m", U, Lx, Ly)
    return np.where(valid, out, np.nan)


def sample_gradients(field: Field, points, strict: bool = True,
                     center: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Gradient of the biquadratic interpolant, shape (m, 2)."""
    pts = _as_points(points)
    U, s, t, valid = _stencils(field, pts, center)
    if strict:
        _check(valid, pts)
    Lx, dLx, _ = _lagrange(s)
    Ly, dLy, _ = _lagrange(t)
    h = field.grid.h
    gx = np.einsum("mba,ma,mb->m", U, dLx, Ly) / h
    gy = np.einsum("mba,ma,mb->m", U, Lx, dLy) / h
    out = np.column_stack([gx, gy])
    out[~valid] = np.nan
    return out


def sample_hessians(field: Field, points, strict: bool = True,
                    center: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Hessian of the biquadratic interpolant, shape (m, 2, 2)."""
    pts = _as_points(points)
    U, s, t, valid = _stencils(field, pts, center)
    if strict:
        _check(valid, pts)
    Lx, dLx, d2Lx = _lagrange(s)
    Ly, dLy, d2Ly = _lagrange(t)
    h2 = field.grid.h ** 2
    hxx = np.einsum("mba,ma,mb->m", U, d2Lx, Ly) / h2
    hyy = np.einsum("mba,ma,mb->m", U, Lx, d2Ly) / h2
    hxy = np.einsum("mba,ma,mb->m", U, dLx, dLy) / h2
    out = np.stack([np.stack([hxx, hxy], axis=-1), np.stack([hxy, hyy], axis=-1)], axis=-2)
    out[~valid] = np.nan
    return out


def sample_value(field: Field, x: Point, center: Optional[Tuple[int, int]] = None) -> float:
    """Value of the biquadratic interpolant on the 3x3 neighbourhood of the nearest node.

    Raises:
        TooCloseToBoundary: the neighbourhood contains an EXTERIOR node
    """
    pts = _as_points(x)
    U, s, t, valid = _stencils(field, pts, center)
    _check(valid, pts)
    Lx, _, _ = _lagrange(s)
    Ly, _, _ = _lagrange(t)
    return float(np.einsum("mba,ma,mb->m", U, Lx, Ly)[0])


def sample_gradient(field: Field, x: Point, center: Optional[Tuple[int, int]] = None) -> np.ndarray:
    return sample_gradients(field, x, strict=True, center=center)[0]


def sample_hessian(field: Field, x: Point, center: Optional[Tuple[int, int]] = None) -> np.ndarray:
    return sample_hessians(field, x, strict=True, center=center)[0]


def save_field(field: Field, path: Union[str, Path]) -> Path:
    """Header JSON line, then nx*ny little-endian float64 values in row-major order (NaN on EXTERIOR)."""
    grid = field.grid
    header = {
        "nx": grid.nx,
        "ny": grid.ny,
        "h": grid.h,
        "origin": list(grid.origin),
        "domain_hash": grid.domain_hash,
    }
    path = Path(path)
    try:
        with path.open("wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
            fh.write(np.ascontiguousarray(field.nodes, dtype="<f8").tobytes(order="C"))
    except OSError as e:
        raise IoError(f"cannot write field to {path}: {e}", context={"path": str(path)}) from e
    logger.info(f"Saved {grid.nx}x{grid.ny} field to {path}")
    return path


def load_field(path: Union[str, Path], grid: Grid2D) -> Field:
    """Reads a field written by save_field back onto a matching grid.

    Raises:
        IoError: unreadable file, truncated payload or a header that does not match ``grid``
    """
    path = Path(path)
    try:
        with path.open("rb") as fh:
            header = json.loads(fh.readline().decode("utf-8"))
            payload = fh.read()
    except (OSError, ValueError) as e:
        raise IoError(f"cannot read field from {path}: {e}", context={"path": str(path)}) from e

    if (header.get("nx"), header.get("ny"), header.get("domain_hash")) != (grid.nx, grid.ny, grid.domain_hash):
        raise IoError(f"field file {path} was written for a different grid", context={"header": header})
    expected = grid.nx * grid.ny * 8
    if len(payload) != expected:
        raise IoError(f"field file {path} holds {len(payload)} bytes, expected {expected}",
                      context={"path": str(path)})
    nodes = np.frombuffer(payload, dtype="<f8").reshape(grid.ny, grid.nx)
    return Field(grid=grid, values=nodes[grid.unknown_mask].astype(np.float64),
                 metadata=SolveMetadata(nonlinearity="loaded"))
