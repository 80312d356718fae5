import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from src.data.constants import unit_ball_volume
from src.errors import DomainViolation
from src.green.kernels import (KernelContext, disc_green, disc_regular_part, g0,
                               g0_normal_derivative)
from src.green.verify import poisson_identity_check, psi_eps_verify, sphere_rule
from src.models.problem import QuadraticPolynomial


def polar(radius, angle):
    return np.array([radius * math.cos(angle), radius * math.sin(angle)])


def test_unit_ball_volumes():
    assert KernelContext(2).omega == pytest.approx(math.pi)
    assert KernelContext(3).omega == pytest.approx(4.0 * math.pi / 3.0)
    assert unit_ball_volume(7) == pytest.approx(math.pi ** 3.5 / math.gamma(4.5))
    with pytest.raises(ValueError):
        KernelContext(1)


def test_g0_vanishes_on_unit_sphere():
    assert g0((1.0, 0.0), (2.0, 0.5), 2) == pytest.approx(0.0, abs=1e-15)
    w = np.array([0.0, 0.6, 0.8])
    assert g0(w, (0.0, 0.0, 3.0), 3) == pytest.approx(0.0, abs=1e-15)


def test_g0_value_in_three_dimensions():
    assert g0((2.0, 0.0, 0.0), (3.0, 0.0, 0.0), 3) == pytest.approx(0.0636619, abs=1e-7)


def test_g0_rejects_points_in_ball_and_coincident_points():
    with pytest.raises(DomainViolation):
        g0((0.5, 0.0), (2.0, 0.0), 2)
    with pytest.raises(DomainViolation):
        g0((2.0, 1.0), (2.0, 1.0), 2)
    with pytest.raises(ValueError):
        g0((2.0, 0.0), (3.0, 0.0, 0.0), 2)


@settings(max_examples=60, deadline=None)
@given(
    r1=st.floats(1.01, 5.0), r2=st.floats(1.01, 5.0),
    a1=st.floats(0.0, 2.0 * math.pi), a2=st.floats(0.0, 2.0 * math.pi),
)
def test_g0_is_symmetric(r1, r2, a1, a2):
    w, z = polar(r1, a1), polar(r2, a2)
    assume(np.linalg.norm(w - z) > 1e-3)
    assert g0(w, z, 2) == pytest.approx(g0(z, w, 2), rel=1e-9, abs=1e-12)
    w3, z3 = np.append(w, 0.3), np.append(z, -0.2)
    assert g0(w3, z3, 3) == pytest.approx(g0(z3, w3, 3), rel=1e-9, abs=1e-12)
    w4, z4 = np.append(w3, -0.1), np.append(z3, 0.4)
    assert g0(w4, z4, 4) == pytest.approx(g0(z4, w4, 4), rel=1e-9, abs=1e-12)


def test_g0_positive_off_boundary():
    assert g0((1.5, 0.0), (0.0, 2.0), 2) > 0.0
    assert g0((1.5, 0.0, 0.0), (0.0, 0.0, 2.0), 3) > 0.0


def test_g0_normal_derivative_value():
    assert g0_normal_derivative((2.0, 0.0), (1.0, 0.0), 2) == pytest.approx(-0.477464, abs=1e-6)


@pytest.mark.parametrize("N", [2, 3])
def test_g0_normal_derivative_matches_finite_difference(N):
    w = np.array([1.5, 0.7, 0.4][:N])
    z = np.array([math.cos(0.3), math.sin(0.3), 0.0][:N])
    t = 1e-4
    values = [g0(w, (1.0 + k * t) * z, N) for k in (1, 2)]
    # one-sided second-order difference along -z; g0 vanishes at k = 0
    fd = -(4.0 * values[0] - values[1]) / (2.0 * t)
    assert g0_normal_derivative(w, z, N) == pytest.approx(fd, abs=1e-6)


def test_g0_normal_derivative_domain():
    with pytest.raises(DomainViolation):
        g0_normal_derivative((0.5, 0.0), (1.0, 0.0), 2)
    with pytest.raises(DomainViolation):
        g0_normal_derivative((2.0, 0.0), (1.2, 0.0), 2)


def test_sphere_rule_weights_sum_to_area():
    for N, area in [(2, 2.0 * math.pi), (3, 4.0 * math.pi), (4, 2.0 * math.pi ** 2)]:
        nodes, weights = sphere_rule(N, 16)
        assert np.sum(weights) == pytest.approx(area, rel=1e-12)
        assert np.linalg.norm(nodes, axis=1) == pytest.approx(np.ones(len(nodes)))


@pytest.mark.parametrize("phi, s, tolerance", [
    (QuadraticPolynomial(constant=1.0, linear=[1.0, -1.0], quadratic=[[0.0, 0.5], [0.5, 0.0]]),
     (-0.5, 0.1), 1e-8),
    (QuadraticPolynomial(linear=[0.0, 0.0], quadratic=[[1.0, 0.0], [0.0, 0.0]]), (0.3, 0.2), 1e-8),
])
def test_poisson_identity_two_dimensions(phi, s, tolerance):
    assert poisson_identity_check(phi, s, 2) <= tolerance


@pytest.mark.parametrize("phi, s, tolerance", [
    (QuadraticPolynomial(constant=1.0, linear=[0.0, 0.0], quadratic=[[0.0, 0.0], [0.0, 0.0]]), (0.0, 0.0), 1e-8),
    (QuadraticPolynomial(linear=[1.0, 0.0], quadratic=[[0.0, 0.0], [0.0, 0.0]]), (0.0, 0.0), 1e-8),
    (QuadraticPolynomial(linear=[1.0, 0.0], quadratic=[[0.0, 0.0], [0.0, 0.0]]), (0.45, -0.6), 1e-8),
    (QuadraticPolynomial(linear=[0.0, 0.0], quadratic=[[1.0, 0.0], [0.0, 1.0]]), (0.0, 0.0), 1e-6),
])
def test_poisson_identity_reference_cases(phi, s, tolerance):
    assert poisson_identity_check(phi, s, 2) <= tolerance


@pytest.mark.slow
def test_poisson_identity_three_dimensions():
    phi = QuadraticPolynomial(linear=[1.0, 0.0, 0.0], quadratic=[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    assert poisson_identity_check(phi, (0.2, 0.1, -0.3), 3) <= 1e-6


def test_poisson_identity_rejects_bad_points():
    phi = QuadraticPolynomial.zero(2)
    with pytest.raises(ValueError):
        poisson_identity_check(phi, (1.0, 0.0), 2)
    with pytest.raises(ValueError):
        poisson_identity_check(phi, (0.1, 0.0, 0.0), 3)


def test_disc_regular_part_on_diagonal():
    assert disc_regular_part((0.3, 0.0), (0.3, 0.0)) == pytest.approx(math.log(0.91) / (2.0 * math.pi), abs=1e-12)
    assert disc_regular_part((0.3, 0.0), (0.3, 0.0)) == pytest.approx(-0.0150100, abs=1e-7)
    assert disc_regular_part((0.0, 0.0), (0.0, 0.0)) == 0.0


def test_disc_green_properties():
    x, y = np.array([0.2, -0.4]), np.array([-0.1, 0.5])
    assert disc_green(x, y) == pytest.approx(disc_green(y, x), rel=1e-12)
    assert disc_green(x, polar(1.0, 1.1)) == pytest.approx(0.0, abs=1e-14)
    split = KernelContext(2).fundamental(np.linalg.norm(x - y)) + disc_regular_part(x, y)
    assert disc_green(x, y) == pytest.approx(float(split), rel=1e-12)
    assert disc_green(x, y) > 0.0
    with pytest.raises(DomainViolation):
        disc_green(x, x)
    with pytest.raises(DomainViolation):
        disc_regular_part((1.2, 0.0), y)


@pytest.mark.slow
def test_capacity_potential_approaches_expansion():
    records = [psi_eps_verify((0.3, 0.0), eps, h=eps / 4.0) for eps in (0.08, 0.04)]
    assert records[1].deviation < records[0].deviation
    assert records[1].deviation < 0.05
    assert all(r.probes == 64 for r in records)


@pytest.mark.slow
def test_capacity_potential_deviation_shrinks_down_to_small_holes():
    records = [psi_eps_verify((0.3, 0.0), eps, h=eps / 4.0) for eps in (0.04, 0.02, 0.01)]
    deviations = [r.deviation for r in records]
    assert all(b < a for a, b in zip(deviations, deviations[1:]))


def test_capacity_potential_sample_phase():
    aligned = psi_eps_verify((0.3, 0.0), 0.08, h=0.02, probes=16)
    rotated = psi_eps_verify((0.3, 0.0), 0.08, h=0.02, probes=16, phase=0.1)
    assert aligned.sample_phase == 0.0
    assert rotated.sample_phase == 0.1
    assert rotated.deviation == pytest.approx(aligned.deviation, rel=0.5)
