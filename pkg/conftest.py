import math

import numpy as np
import pytest

from src.elliptic.field import Field
from src.elliptic.solvers import EllipticSolver, solve_poisson
from src.geometry.grid import classify
from src.models.domain import LevelSetDomain, PuncturedDomain
from src.models.problem import Nonlinearity


@pytest.fixture(scope="session")
def unit_disc():
    return LevelSetDomain.disc(1.0)


@pytest.fixture(scope="session")
def disc_grid_64(unit_disc):
    return classify(unit_disc, 1.0 / 64)


@pytest.fixture(scope="session")
def disc_grid_128(unit_disc):
    return classify(unit_disc, 1.0 / 128)


@pytest.fixture(scope="session")
def disc_torsion_64(disc_grid_64):
    return solve_poisson(disc_grid_64, 1.0)


@pytest.fixture(scope="session")
def disc_torsion_128(disc_grid_128):
    return solve_poisson(disc_grid_128, 1.0)


@pytest.fixture(scope="session")
def punctured_disc_04(unit_disc):
    """Unit disc with a hole of radius 0.04 at (0.3, 0)"""
    return PuncturedDomain(outer=unit_disc, P=(0.3, 0.0), eps=0.04)


@pytest.fixture(scope="session")
def punctured_torsion_04(punctured_disc_04):
    grid = classify(punctured_disc_04, 0.01)
    return EllipticSolver(grid).solve_semilinear(Nonlinearity.torsion())


@pytest.fixture(scope="session")
def centered_torsion_04(unit_disc):
    domain = PuncturedDomain(outer=unit_disc, P=(0.0, 0.0), eps=0.04)
    return EllipticSolver(classify(domain, 0.01)).solve_semilinear(Nonlinearity.torsion())


@pytest.fixture
def paraboloid_field(disc_grid_64):
    return Field.from_function(disc_grid_64, lambda x, y: x ** 2 + y ** 2, label="paraboloid")


@pytest.fixture
def saddle_field(disc_grid_64):
    return Field.from_function(disc_grid_64, lambda x, y: x ** 2 - y ** 2, label="saddle")


@pytest.fixture
def annulus_radius():
    """Exact critical radius of the torsion function on the 2D annulus eps < r < 1"""
    return lambda eps: math.sqrt((1.0 - eps ** 2) / (2.0 * abs(math.log(eps))))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
