"""Closed-form Green kernels: exterior of the unit ball, the unit disc, and the fundamental solution."""
import math
from dataclasses import dataclass

import numpy as np

from ..data.constants import unit_ball_volume
from ..errors import DomainViolation

# Points are accepted as on the unit sphere within this tolerance
SPHERE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class KernelContext:
    """Dimension-dependent normalisation shared by every kernel."""
    N: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"dimension must be >= 2, got {self.N}")

    @property
    def omega(self) -> float:
        return unit_ball_volume(self.N)

    @property
    def surface_factor(self) -> float:
        """N * omega_N, the area of the unit sphere"""
        return self.N * self.omega

    def fundamental(self, r):
        """S as a function of r = |x - y|, normalised so that -Δ S = delta."""
        r = np.asarray(r, dtype=np.float64)
        if self.N == 2:
            return -np.log(r) / (2.0 * math.pi)
        return 1.0 / (self.N * (self.N - 2) * self.omega) * r ** (2 - self.N)


def _vec(p) -> np.ndarray:
    return np.asarray(p, dtype=np.float64)


def _reflected_distance(w: np.ndarray, z: np.ndarray) -> float:
    """| |w| z - w/|w| |, written without dividing so it stays finite at w = 0."""
    value = float(w @ w) * float(z @ z) - 2.0 * float(w @ z) + 1.0
    return math.sqrt(max(value, 0.0))


def g0(w, z, N: int) -> float:
    """Green function of R^N minus the closed unit ball.

    Raises:
        DomainViolation: |w| < 1, |z| < 1 or w == z
    """
    w, z = _vec(w), _vec(z)
    if w.shape != (N,) or z.shape != (N,):
        raise ValueError(f"points must have {N} coordinates")
    if np.linalg.norm(w) < 1.0 - SPHERE_TOLERANCE or np.linalg.norm(z) < 1.0 - SPHERE_TOLERANCE:
        raise DomainViolation("g0 is defined outside the unit ball only", context={"w": w.tolist(), "z": z.tolist()})
    d = float(np.linalg.norm(w - z))
    if d == 0.0:
        raise DomainViolation("g0 is singular at w == z", context={"w": w.tolist()})
    image = _reflected_distance(w, z)
    ctx = KernelContext(N)
    if N == 2:
        return float(np.log(image / d) / (2.0 * math.pi))
    return float(ctx.fundamental(d) - ctx.fundamental(image))


def g0_normal_derivative(w, z, N: int) -> float:
    """Derivative of g0(w, .) at z on the unit sphere along nu_z = -z.

    Raises:
        DomainViolation: |w| <= 1 or |z| != 1
    """
    w, z = _vec(w), _vec(z)
    if np.linalg.norm(w) <= 1.0 or abs(np.linalg.norm(z) - 1.0) > 1e-9:
        raise DomainViolation("need |w| > 1 and |z| = 1", context={"w": w.tolist(), "z": z.tolist()})
    ctx = KernelContext(N)
    return float((1.0 - float(w @ w)) / (ctx.surface_factor * np.linalg.norm(w - z) ** N))


def poisson_kernel(s, z, N: int):
    """Poisson kernel of the unit ball, (1 - |s|^2) / (N omega_N |s - z|^N), vectorised over z rows."""
    s, z = _vec(s), np.atleast_2d(_vec(z))
    ctx = KernelContext(N)
    return (1.0 - float(s @ s)) / (ctx.surface_factor * np.linalg.norm(z - s, axis=1) ** N)


def ball_green(s, y, N: int):
    """Green function of the unit ball with pole s, vectorised over y rows.

    The reflected-distance form also covers s = 0.
    """
    s, y = _vec(s), np.atleast_2d(_vec(y))
    ctx = KernelContext(N)
    d = np.linalg.norm(y - s, axis=1)
    image = np.sqrt(np.maximum(float(s @ s) * np.sum(y * y, axis=1) - 2.0 * (y @ s) + 1.0, 0.0))
    if N == 2:
        return np.log(image / d) / (2.0 * math.pi)
    return ctx.fundamental(d) - ctx.fundamental(image)


def _check_disc(*points) -> None:
    for p in points:
        if float(p @ p) >= 1.0:
            raise DomainViolation("point outside the open unit disc", context={"point": p.tolist()})


def disc_regular_part(x, y) -> float:
    """H(x, y) = (1/2π) log| |y| x - y/|y| |, harmonic in each variable; H(P, P) = (1/2π) log(1 - |P|^2)."""
    x, y = _vec(x), _vec(y)
    _check_disc(x, y)
    return math.log(_reflected_distance(y, x)) / (2.0 * math.pi)


def disc_green(x, y) -> float:
    """G = S + H for the unit disc, zero when |y| = 1.

    Raises:
        DomainViolation: a point outside the open disc or x == y
    """
    x, y = _vec(x), _vec(y)
    if float(x @ x) >= 1.0 or float(y @ y) > 1.0 + SPHERE_TOLERANCE:
        raise DomainViolation("disc_green needs x in the open disc and y in the closed disc",
                              context={"x": x.tolist(), "y": y.tolist()})
    d = float(np.linalg.norm(x - y))
    if d == 0.0:
        raise DomainViolation("disc_green is singular at x == y", context={"x": x.tolist()})
    return float(KernelContext(2).fundamental(d)) + math.log(_reflected_distance(y, x)) / (2.0 * math.pi)
