import math

import numpy as np
import pytest

from src.errors import HoleUnresolved
from src.geometry.grid import ARM_OFFSETS, NodeClass, classify
from src.geometry.laplacian import build_laplacian, dirichlet_rhs
from src.models.domain import LevelSetDomain, PuncturedDomain


def interior_rows(grid):
    return grid.unknown_index[grid.node_class == NodeClass.INTERIOR]


def test_coarse_disc_grid(unit_disc):
    grid = classify(unit_disc, 0.5)
    assert grid.n_unknowns >= 1
    arms = grid.arms[grid.unknown_mask]
    assert np.all((arms > 0.0) & (arms <= 1.0))
    assert np.all(np.isnan(grid.arms[~grid.unknown_mask]))


def test_disc_boundary_points_on_level_set(unit_disc):
    points = unit_disc.boundary_points(64)
    assert np.max(np.abs(unit_disc.phi(points[:, 0], points[:, 1]))) < 1e-14
    assert unit_disc.phi(0.0, 0.0) < 0.0


def test_hole_must_fit_inside_outer_domain(unit_disc):
    with pytest.raises(ValueError):
        PuncturedDomain(outer=unit_disc, P=(0.9, 0.0), eps=0.05)


def test_euler_characteristic(unit_disc, punctured_disc_04):
    assert unit_disc.euler_characteristic == 1
    assert punctured_disc_04.euler_characteristic == 0


def test_no_exterior_nodes_around_resolved_hole(unit_disc):
    domain = PuncturedDomain(outer=unit_disc, P=(0.3, 0.0), eps=0.01)
    grid = classify(domain, 0.0025)
    X, Y = grid.node_coordinates()
    r = np.hypot(X - 0.3, Y)
    band = (r > 0.02) & (r < 0.05)
    assert band.any()
    assert not np.any(grid.node_class[band] == NodeClass.EXTERIOR)
    inside_hole = r <= 0.01
    assert np.all(grid.node_class[inside_hole] == NodeClass.EXTERIOR)


def test_unresolved_hole_is_rejected(unit_disc):
    domain = PuncturedDomain(outer=unit_disc, P=(0.3, 0.0), eps=0.01)
    with pytest.raises(HoleUnresolved):
        classify(domain, 0.01)


def test_interior_nodes_have_unknown_neighbours(punctured_disc_04):
    grid = classify(punctured_disc_04, 0.01)
    jj, ii = np.nonzero(grid.node_class == NodeClass.INTERIOR)
    for di, dj in ARM_OFFSETS:
        assert np.all(grid.node_class[jj + dj, ii + di] != NodeClass.EXTERIOR)


def test_classify_is_deterministic(punctured_disc_04):
    a = classify(punctured_disc_04, 0.01)
    b = classify(punctured_disc_04, 0.01)
    assert np.array_equal(a.node_class, b.node_class)
    assert np.array_equal(a.arms, b.arms, equal_nan=True)
    assert a.domain_hash == b.domain_hash


def test_laplacian_exact_on_quadratics(disc_grid_64):
    A = build_laplacian(disc_grid_64)
    q = disc_grid_64.evaluate(lambda x, y: x ** 2 + y ** 2)
    rows = interior_rows(disc_grid_64)
    assert (A @ q)[rows] == pytest.approx(np.full(rows.size, -4.0), abs=1e-8)


@pytest.mark.parametrize("domain", [
    LevelSetDomain.disc(1.0),
    LevelSetDomain.ellipse(1.5, 1.0),
    PuncturedDomain(outer=LevelSetDomain.disc(1.0), P=(0.3, 0.0), eps=0.05),
])
def test_laplacian_is_m_matrix(domain):
    grid = classify(domain, 1.0 / 32)
    A = build_laplacian(grid).tocoo()
    off = A.row != A.col
    assert np.all(A.data[~off] > 0.0)
    assert np.all(A.data[off] <= 0.0)

    row_sums = build_laplacian(grid) @ np.ones(grid.n_unknowns)
    diagonal = build_laplacian(grid).diagonal()
    assert np.all(row_sums >= -1e-12 * diagonal)
    cut = grid.unknown_index[grid.node_class == NodeClass.BOUNDARY_CUT]
    assert np.all(row_sums[cut] > 0.0)


def test_laplacian_second_order_on_smooth_function(unit_disc):
    errors = []
    for h in (1.0 / 64, 1.0 / 128):
        grid = classify(unit_disc, h)
        u = grid.evaluate(lambda x, y: np.sin(math.pi * x) * np.sin(math.pi * y))
        rows = interior_rows(grid)
        residual = (build_laplacian(grid) @ u - 2.0 * math.pi ** 2 * u)[rows]
        errors.append(float(np.max(np.abs(residual))))
    order = math.log(errors[0] / errors[1]) / math.log(2.0)
    assert order >= 1.8


def test_dirichlet_lift_is_zero_for_zero_data(punctured_disc_04):
    grid = classify(punctured_disc_04, 0.01)
    assert not np.any(dirichlet_rhs(grid))
    lift = dirichlet_rhs(grid, outer_value=1.0, hole_value=0.0)
    cut = grid.unknown_index[grid.node_class == NodeClass.BOUNDARY_CUT]
    assert np.all(lift >= 0.0)
    assert np.count_nonzero(lift) <= cut.size
