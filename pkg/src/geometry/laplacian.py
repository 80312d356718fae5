import numpy as np
from scipy import sparse

from .grid import ARM_OFFSETS, EAST, NORTH, SOUTH, WEST, Grid2D, Surface
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

# Each arm paired with the opposite arm of the same axis
_OPPOSITE = {EAST: WEST, WEST: EAST, NORTH: SOUTH, SOUTH: NORTH}


def _arm_coefficients(grid: Grid2D):
    """Shortley-Weller weights 2 / (h^2 theta (theta + theta_opp)) per unknown node and arm."""
    mask = grid.unknown_mask
    theta = grid.arms[mask]
    h2 = grid.h * grid.h
    weights = np.empty_like(theta)
    for arm, opposite in _OPPOSITE.items():
        weights[:, arm] = 2.0 / (h2 * theta[:, arm] * (theta[:, arm] + theta[:, opposite]))
    diagonal = 2.0 / h2 * (1.0 / (theta[:, EAST] * theta[:, WEST]) + 1.0 / (theta[:, NORTH] * theta[:, SOUTH]))
    return weights, diagonal


def build_laplacian(grid: Grid2D) -> sparse.csr_matrix:
    """Discrete -Δ with homogeneous Dirichlet data on both boundaries.

    Regular nodes get the 5-point stencil; nodes next to a cut get the
    unequal-arm Shortley-Weller stencil. The result is an M-matrix: positive
    diagonal, non-positive off-diagonal entries, strictly dominant rows at
    boundary-adjacent nodes.
    """
    n = grid.n_unknowns
    weights, diagonal = _arm_coefficients(grid)
    jj, ii = np.nonzero(grid.unknown_mask)
    rows_self = grid.unknown_index[jj, ii]

    rows = [rows_self]
    cols = [rows_self]
    vals = [diagonal]
    for arm, (di, dj) in enumerate(ARM_OFFSETS):
        surface = grid.arm_surface[jj, ii, arm]
        linked = surface == Surface.NONE
        rows.append(rows_self[linked])
        cols.append(grid.unknown_index[jj[linked] + dj, ii[linked] + di])
        vals.append(-weights[linked, arm])

    operator = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    operator.sum_duplicates()
    logger.debug(f"Assembled Laplacian with {n} unknowns and {operator.nnz} nonzeros")
    return operator


def dirichlet_rhs(grid: Grid2D, outer_value: float = 0.0, hole_value: float = 0.0) -> np.ndarray:
    """Right-hand side contribution of constant Dirichlet data on the outer boundary and the hole."""
    weights, _ = _arm_coefficients(grid)
    surfaces = grid.arm_surface[grid.unknown_mask]
    data = np.zeros(surfaces.shape)
    data[surfaces == Surface.OUTER] = outer_value
    data[surfaces == Surface.HOLE] = hole_value
    return np.sum(weights * data, axis=1)
