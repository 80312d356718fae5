import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from src.asymptotics.expansion import expansion_field
from src.asymptotics.jacobi import jacobi_eigh
from src.asymptotics.predictors import (b_matrix_spectrum, c_constant, local_data_from_field,
                                        necessary_location_check, offset_alignment_deg, predict,
                                        predict_degenerate, predict_nondegenerate, predict_radial,
                                        radial_local_data)
from src.asymptotics.rates import fit_exponent, fit_rate, law_factor, observed_order
from src.errors import DegenerateHessian, InsufficientData, NonpositiveF, TooCloseToHole, ZeroGradient, ZeroVector
from src.models.problem import Nonlinearity
from src.models.results import LocalData, PredictionKind, ScalingLaw


@pytest.fixture
def off_center_disc():
    """Disc torsion data at P = (0.3, 0)"""
    return LocalData(P=[0.3, 0.0], u0P=0.2275, grad0P=[-0.15, 0.0], hess0P=[[-0.5, 0.0], [0.0, -0.5]])


@pytest.fixture
def ellipse_center():
    """Torsion of the ellipse with semi-axes 1.5 and 1 at its centre"""
    K = 2.25 / (2.0 * 3.25)
    return LocalData(P=[0.0, 0.0], u0P=K, grad0P=[0.0, 0.0],
                     hess0P=[[-2.0 * K / 2.25, 0.0], [0.0, -2.0 * K]])


def test_c_constant():
    assert c_constant(3, 1.0, [1.0, 0.0, 0.0]) == pytest.approx(-1.0)
    assert c_constant(2, 0.2275, [-0.15, 0.0]) == pytest.approx(-10.1111, abs=1e-4)
    with pytest.raises(ZeroGradient):
        c_constant(2, 0.2275, [0.0, 0.0])
    with pytest.raises(ValueError):
        c_constant(2, 0.0, [1.0, 0.0])


def test_nondegenerate_saddle_prediction(off_center_disc):
    prediction = predict_nondegenerate(off_center_disc, 0.01)
    assert prediction.kind == PredictionKind.NONDEG_SADDLE
    assert prediction.law == ScalingLaw.LOG
    offset = np.asarray(prediction.points[0]) - np.asarray(off_center_disc.P)
    assert offset == pytest.approx([0.32934, 0.0], abs=1e-4)
    assert prediction.points[0][0] == pytest.approx(0.62934, abs=1e-4)
    assert prediction.count_delta == 1
    assert prediction.expected_index == -1
    assert prediction.expected_value == 0.2275


def test_nondegenerate_power_law():
    ld = LocalData(N=3, P=[0.0, 0.0, 0.0], u0P=1.0, grad0P=[1.0, 0.0, 0.0],
                   hess0P=[[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]])
    for eps in (1e-2, 1e-4):
        prediction = predict_nondegenerate(ld, eps)
        assert prediction.law == ScalingLaw.POWER
        assert prediction.exponent == pytest.approx(0.5)
        assert prediction.points[0] == pytest.approx([-math.sqrt(eps), 0.0, 0.0], rel=1e-12)


def test_ellipse_centre_family(ellipse_center):
    prediction = predict_degenerate(ellipse_center, 1e-3)
    assert prediction.kind == PredictionKind.DEGEN_FAMILY
    assert prediction.count_delta == 3
    assert not prediction.count_is_lower_bound
    magnitudes = sorted(float(np.linalg.norm(row)) for row in prediction.c)
    assert magnitudes == pytest.approx([0.70711, 0.70711, 1.06066, 1.06066], abs=1e-5)
    # the longer arm of the family follows the major axis
    x_rows = [row for row in prediction.c if abs(row[0]) > 1.0]
    assert len(x_rows) == 2 and all(abs(row[1]) < 1e-12 for row in x_rows)


def test_disc_centre_multiple_eigenvalue():
    ld = LocalData(P=[0.0, 0.0], u0P=0.25, grad0P=[0.0, 0.0], hess0P=[[-0.5, 0.0], [0.0, -0.5]])
    prediction = predict(ld, 1e-3)
    assert "MULTIPLE_EIGENVALUE" in prediction.flags
    assert prediction.count_is_lower_bound
    assert prediction.to_json()["count_delta"] == ">= 3"
    assert all(np.linalg.norm(row) == pytest.approx(math.sqrt(0.5)) for row in prediction.c)


def test_minimum_loses_a_point():
    ld = LocalData(P=[0.0, 0.0], u0P=0.1, grad0P=[0.0, 0.0], hess0P=[[1.0, 0.0], [0.0, 2.0]])
    prediction = predict_degenerate(ld, 1e-2)
    assert prediction.count_delta == -1
    assert prediction.points == []
    assert prediction.flags == ["MINIMUM"]


def test_degenerate_hessian_rejected():
    ld = LocalData(P=[0.0, 0.0], u0P=0.1, grad0P=[0.0, 0.0], hess0P=[[-1.0, 0.0], [0.0, 0.0]])
    with pytest.raises(DegenerateHessian):
        predict_degenerate(ld, 1e-2)


def test_predict_dispatch(off_center_disc, ellipse_center):
    assert predict(off_center_disc, 0.05).kind == PredictionKind.NONDEG_SADDLE
    assert predict(ellipse_center, 0.05).kind == PredictionKind.DEGEN_FAMILY


def test_radial_constants():
    assert predict_radial(3, 1e-3, 1.0 / 6.0, 1.0).coefficient == pytest.approx(0.793700, abs=1e-6)
    two = predict_radial(2, 1e-3, 0.25, 1.0)
    assert two.coefficient == pytest.approx(0.353553, abs=1e-6)
    assert two.coefficient_cross == pytest.approx(0.707106, abs=1e-6)
    assert two.radius_cross == pytest.approx(0.707106 / math.sqrt(abs(math.log(1e-3))), abs=1e-6)
    assert two.flags == ["PRINTED", "CROSS"]
    assert predict_radial(4, 1e-4, 1.0 / 8.0, 1.0).radius == pytest.approx(1e-2, rel=1e-12)
    with pytest.raises(NonpositiveF):
        predict_radial(3, 1e-3, 1.0 / 6.0, 0.0)


@pytest.mark.parametrize("N", [3, 4, 5])
def test_radial_matches_degenerate_family(N):
    u0, f = 1.0 / (2 * N), 1.0
    radial = predict_radial(N, 1e-4, u0, f)
    family = predict_degenerate(radial_local_data(N, u0, f), 1e-4)
    assert family.exponent == pytest.approx(radial.exponent)
    for row in family.c:
        assert float(np.linalg.norm(row)) == pytest.approx(radial.coefficient, abs=1e-12)


def test_location_check(off_center_disc, ellipse_center):
    target = predict_nondegenerate(off_center_disc, 0.01).points[0]
    verdict = necessary_location_check(target, off_center_disc, 0.01)
    assert verdict.matched and verdict.branch == "NONDEG"
    assert verdict.residual == pytest.approx(0.0, abs=1e-12)
    assert necessary_location_check((0.3, 0.3), off_center_disc, 0.01).verdict == "NO_MATCH"

    family = predict_degenerate(ellipse_center, 1e-3)
    verdict = necessary_location_check(family.points[3], ellipse_center, 1e-3)
    assert verdict.matched
    assert verdict.branch == "EIG1-"


def test_expansion_field():
    def bump(x):
        return float(x[0] ** 2 + x[1] ** 2)

    x = np.array([0.2, 0.1])
    assert expansion_field(x, bump, (0.0, 0.0), 0.01, 2) == bump(x)

    def flat(x):
        return 0.5

    assert expansion_field((0.01, 0.0), flat, (0.0, 0.0), 0.01, 2) == pytest.approx(0.0, abs=1e-15)
    assert expansion_field((0.0, 0.0, 0.01), flat, (0.0, 0.0, 0.0), 0.01, 3) == pytest.approx(0.0, abs=1e-15)
    assert expansion_field((0.0, 0.0, 0.02), flat, (0.0, 0.0, 0.0), 0.01, 3) == pytest.approx(0.25)
    with pytest.raises(TooCloseToHole):
        expansion_field((0.005, 0.0), flat, (0.0, 0.0), 0.01, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5).flatmap(
    lambda n: st.lists(st.floats(-10.0, 10.0, allow_nan=False), min_size=n, max_size=n)))
def test_b_matrix_spectrum(xi):
    assume(np.linalg.norm(xi) > 1e-3)
    N = len(xi)
    expected = np.array([1.0 - N] + [1.0] * (N - 1))
    assert b_matrix_spectrum(xi, N) == pytest.approx(expected, abs=1e-10)


def test_b_matrix_errors():
    with pytest.raises(ZeroVector):
        b_matrix_spectrum([0.0, 0.0], 2)
    with pytest.raises(ValueError):
        b_matrix_spectrum([1.0, 0.0], 3)


def test_jacobi_matches_numpy(rng):
    M = rng.normal(size=(5, 5))
    A = M + M.T
    values, vectors = jacobi_eigh(A)
    assert values == pytest.approx(np.linalg.eigvalsh(A), abs=1e-10)
    assert A @ vectors == pytest.approx(vectors * values, abs=1e-10)
    assert vectors.T @ vectors == pytest.approx(np.eye(5), abs=1e-12)
    for k in range(5):
        assert vectors[np.argmax(np.abs(vectors[:, k])), k] > 0.0


def test_fit_rate_exact():
    eps = [0.1, 0.05, 0.02, 0.01]
    records = [(e, 1.5 * law_factor(e, ScalingLaw.LOG, 1.0) * np.array([1.0, 0.0])) for e in eps]
    fit = fit_rate(records, ScalingLaw.LOG)
    assert fit.c == pytest.approx([1.5, 0.0], abs=1e-12)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    assert fit.n_records == 4


def test_fit_rate_with_noise(rng):
    eps = np.array([0.1, 0.05, 0.02, 0.01, 0.005])
    clean = 0.8 * eps ** (1.0 / 3.0)
    for _ in range(100):
        noisy = clean * (1.0 + 0.05 * rng.standard_normal(eps.size))
        fit = fit_rate(list(zip(eps, noisy)), ScalingLaw.POWER, 1.0 / 3.0)
        assert abs(fit.c[0] - 0.8) / 0.8 < 0.1


def test_fit_rate_errors():
    with pytest.raises(InsufficientData):
        fit_rate([(0.1, 1.0), (0.05, 0.8)], ScalingLaw.LOG)
    with pytest.raises(ValueError):
        fit_rate([(0.05, 1.0), (0.1, 0.8), (0.01, 0.5)], ScalingLaw.LOG)
    with pytest.raises(ValueError):
        fit_rate([(0.1, 1.0), (0.05, 0.8), (0.01, 0.5)], ScalingLaw.POWER)


def test_fit_exponent():
    records = [(e, -2.0 * math.sqrt(e) * np.array([1.0, 0.0])) for e in (1e-1, 1e-2, 1e-3)]
    fit = fit_exponent(records)
    assert fit.exponent == pytest.approx(0.5, abs=1e-10)
    assert fit.c == pytest.approx([-2.0, 0.0], abs=1e-9)


def test_observed_order():
    assert observed_order([0.1, 0.05], [1e-2, 2.5e-3]) == pytest.approx(2.0)
    assert observed_order([0.1, 0.05, 0.025], [1e-2, 2.5e-3, 6.25e-4]) == pytest.approx(2.0)
    with pytest.raises(InsufficientData):
        observed_order([0.1], [1e-2])


def test_offset_alignment():
    assert offset_alignment_deg((1.0, 0.0), (0.0, 2.0)) == pytest.approx(90.0)
    assert offset_alignment_deg((1.0, 1.0), (2.0, 2.0)) == pytest.approx(0.0, abs=1e-5)


def test_local_data_from_disc_torsion(disc_torsion_128):
    ld = local_data_from_field(disc_torsion_128, (0.3, 0.0), Nonlinearity.torsion())
    assert ld.u0P == pytest.approx(0.2275, abs=1e-6)
    assert ld.grad0P == pytest.approx([-0.15, 0.0], abs=1e-6)
    assert np.asarray(ld.hess0P) == pytest.approx(-0.5 * np.eye(2), abs=1e-4)
    assert ld.fu0P == 1.0
    assert ld.HPP == pytest.approx(math.log(0.91) / (2.0 * math.pi), abs=1e-12)
