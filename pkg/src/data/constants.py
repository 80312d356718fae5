"""Numerical constants and closed-form reference values"""
import math

# Volume of the unit ball in R^N, omega_N = pi^(N/2) / Gamma(N/2 + 1)
UNIT_BALL_VOLUME = {
    2: math.pi,
    3: 4.0 * math.pi / 3.0,
    4: math.pi ** 2 / 2.0,
    5: 8.0 * math.pi ** 2 / 15.0,
    6: math.pi ** 3 / 6.0,
}

# First zero of the Bessel function J_0; the first Dirichlet eigenvalue of the unit disc is its square
BESSEL_J0_FIRST_ZERO = 2.404825557695773


def unit_ball_volume(dimension: int) -> float:
    """omega_N for any N >= 1 (tabulated for 2..6)"""
    if dimension in UNIT_BALL_VOLUME:
        return UNIT_BALL_VOLUME[dimension]
    return math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0 + 1.0)
