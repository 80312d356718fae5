import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.asymptotics.rates import observed_order
from src.errors import NoSignChange
from src.models.problem import Nonlinearity
from src.radial.solver import RadialProblem, resolve_mesh, solve_radial, solve_radial_ball
from src.radial.sweep import (RADIAL_CSV_COLUMNS, radial_entry, radial_sweep, radial_weak_limit,
                              scaling_law, write_radial_csv)


def test_resolve_mesh():
    assert resolve_mesh(0.5) == 256
    assert resolve_mesh(1e-3) == 20000
    assert resolve_mesh(1e-3, 1000) == 1000
    assert resolve_mesh(1e-3, 10) == 256


def test_two_dimensional_annulus_radius(annulus_radius):
    solution = solve_radial(RadialProblem(N=2, eps=1e-3, n=20000))
    assert solution.r_eps == pytest.approx(annulus_radius(1e-3), abs=1e-5)
    assert solution.sign_changes == 1


def test_three_dimensional_annulus_radius():
    eps = 1e-4
    solution = solve_radial(RadialProblem(N=3, eps=eps, n=resolve_mesh(eps)))
    assert solution.r_eps == pytest.approx((eps * (1.0 + eps) / 2.0) ** (1.0 / 3.0), abs=1e-5)


def test_solution_shape():
    solution = solve_radial(RadialProblem(N=3, eps=0.05, n=1024))
    assert solution.u[0] == 0.0 and solution.u[-1] == 0.0
    assert np.all(solution.u[1:-1] > 0.0)
    assert solution.r[0] == 0.05 and solution.r[-1] == 1.0
    assert solution.residual <= 1e-11
    k = int(np.argmax(solution.u))
    assert abs(solution.r[k] - solution.r_eps) <= 2.0 * (solution.r[1] - solution.r[0])


def test_negative_source_has_no_critical_radius():
    with pytest.raises(NoSignChange):
        solve_radial(RadialProblem(N=2, eps=0.1, nonlinearity=Nonlinearity.constant(-1.0)))


@pytest.mark.parametrize("N", [2, 3, 5])
def test_ball_torsion_center(N):
    ball = solve_radial_ball(N, Nonlinearity.torsion(), n=512)
    assert ball.u_center == pytest.approx(1.0 / (2 * N), abs=1e-9)
    assert ball.r_eps is None
    assert radial_weak_limit(N, Nonlinearity.torsion(), n=512) == pytest.approx((1.0 / (2 * N), 1.0), abs=1e-9)


def test_ball_gelfand_above_torsion():
    ball = solve_radial_ball(3, Nonlinearity.gelfand(1.0), n=1024)
    assert ball.u_center > 1.0 / 6.0
    assert ball.newton_iterations >= 2


def test_three_dimensional_sweep():
    entries = radial_sweep(3, [1e-2, 1e-3, 1e-4], Nonlinearity.torsion())
    assert all(e.error is None for e in entries)
    for e in entries:
        assert e.ratio_to_law == pytest.approx(((1.0 + e.eps) / 2.0) ** (1.0 / 3.0), rel=1e-3)
    assert entries[-1].ratio_to_law == pytest.approx(0.793700, rel=0.02)
    assert entries[0].ratio_to_law > entries[-1].ratio_to_law
    assert entries[-1].pred_printed == entries[-1].pred_cross
    assert entries[-1].n == 200000


def test_two_dimensional_sweep_follows_cross_coefficient():
    entries = radial_sweep(2, [1e-2, 1e-3], Nonlinearity.torsion())
    last = entries[-1]
    assert last.ratio_to_law == pytest.approx(0.70711, abs=1e-3)
    assert last.r_eps / last.pred_cross == pytest.approx(1.0, abs=1e-3)
    assert last.pred_printed == pytest.approx(0.5 * last.pred_cross)


def test_four_dimensional_sweep():
    entries = radial_sweep(4, [1e-2, 1e-3], Nonlinearity.torsion())
    for e in entries:
        assert e.ratio_to_law == pytest.approx(1.0, rel=0.05)
        assert e.r_eps == pytest.approx(math.sqrt(e.eps), rel=0.05)
    assert scaling_law(4, 1e-2) == pytest.approx(0.1)


@pytest.mark.slow
def test_scaling_law_at_tiny_holes():
    three = radial_sweep(3, [1e-5], Nonlinearity.torsion())[0]
    assert three.error is None
    assert three.ratio_to_law == pytest.approx(0.79370, rel=0.02)
    four = radial_sweep(4, [1e-4], Nonlinearity.torsion())[0]
    assert four.error is None
    assert four.ratio_to_law == pytest.approx(1.0, rel=0.05)

def test_mesh_refinement_order(annulus_radius):
    exact = annulus_radius(0.1)
    meshes = [256, 512, 1024]
    errors = [abs(solve_radial(RadialProblem(N=2, eps=0.1, n=n)).r_eps - exact) for n in meshes]
    assert observed_order([0.9 / n for n in meshes], errors) >= 1.8


def test_problem_validation():
    with pytest.raises(ValidationError):
        RadialProblem(N=1, eps=0.1)
    with pytest.raises(ValidationError):
        RadialProblem(N=2, eps=1.0)
    with pytest.raises(ValidationError):
        RadialProblem(N=2, eps=0.1, n=100)
    with pytest.raises(ValidationError):
        RadialProblem(N=2, eps=0.1, nonlinearity=Nonlinearity.linear_eigen())
    with pytest.raises(ValueError):
        solve_radial_ball(3, Nonlinearity.linear_eigen())
    with pytest.raises(ValueError):
        radial_sweep(3, [1e-3, 1e-2], Nonlinearity.torsion())


def test_failed_entry_is_recorded():
    entry = radial_entry(2, 0.1, Nonlinearity.constant(-1.0), 0.25, 1.0)
    assert entry.error is not None
    assert entry.error.error_code == "NO_SIGN_CHANGE"
    assert entry.r_eps is None


def test_radial_csv(tmp_path):
    path = tmp_path / "radial.csv"
    write_radial_csv([], path)
    assert path.read_text(encoding="utf-8") == ",".join(RADIAL_CSV_COLUMNS) + "\n"

    entry = radial_entry(4, 1e-2, Nonlinearity.torsion(), 0.125, 1.0, n=2048)
    write_radial_csv([entry], path)
    header, row = path.read_text(encoding="utf-8").splitlines()
    cells = row.split(",")
    assert len(cells) == len(RADIAL_CSV_COLUMNS)
    assert float(cells[0]) == 0.01
    assert float(cells[1]) == entry.r_eps
