"""Radial reduction -u'' - (N-1)/r u' = f(u) on [eps, 1] and on the ball [0, 1]."""
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from ..errors import NewtonStalled, NoConvergence, NoSignChange
from ..models.problem import Nonlinearity, NonlinearityKind
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

MIN_MESH = 256
DEFAULT_BALL_MESH = 4096
# mesh intervals per unit of 1/eps used when no mesh size is given
POINTS_PER_EPS = 20
NEWTON_TOLERANCE = 1e-11
NEWTON_MAX_STEPS = 60
DAMPING_FLOOR = 2.0 ** -15


class RadialProblem(BaseModel):
    """Annulus B(0,1) minus B(0,eps) in dimension N, uniform mesh of n intervals"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    N: int = Field(..., ge=2, examples=[2, 3, 4])
    eps: float = Field(..., gt=0.0, lt=1.0, examples=[1e-3])
    nonlinearity: Nonlinearity = Field(default_factory=Nonlinearity.torsion)
    n: int = Field(MIN_MESH, ge=MIN_MESH, description="Number of mesh intervals on [eps, 1]")

    @field_validator("nonlinearity")
    @classmethod
    def _check_kind(cls, nl: Nonlinearity) -> Nonlinearity:
        if nl.kind == NonlinearityKind.LINEAR_EIGEN:
            raise ValueError("the radial solver needs an explicit f; linear-eigen is not supported")
        return nl


@dataclass(frozen=True, eq=False)
class RadialSolution:
    r: np.ndarray
    u: np.ndarray
    du: np.ndarray
    r_eps: Optional[float]
    sign_changes: int
    newton_iterations: int
    residual: float

    @property
    def u_center(self) -> float:
        """u at the inner end of the mesh; u0(0) for a ball solution"""
        return float(self.u[0])


def resolve_mesh(eps: float, n: Optional[int] = None) -> int:
    """Explicit n when given, otherwise enough intervals to put POINTS_PER_EPS nodes inside a hole radius."""
    if n is not None:
        return max(MIN_MESH, n)
    return max(MIN_MESH, math.ceil(POINTS_PER_EPS / eps))


def _bands(r: np.ndarray, d: float, N: int, regular_center: bool):
    """Lower, main and upper diagonals of the discrete -u'' - (N-1)/r u', Dirichlet rows as identity."""
    m = r.size
    lower = np.zeros(m)
    diag = np.ones(m)
    upper = np.zeros(m)
    inner = slice(1, m - 1)
    drift = (N - 1) / (2.0 * d * r[inner])
    lower[inner] = -1.0 / d ** 2 + drift
    diag[inner] = 2.0 / d ** 2
    upper[inner] = -1.0 / d ** 2 - drift
    free = np.zeros(m, dtype=bool)
    free[inner] = True
    if regular_center:
        # -Δu(0) = -N u''(0) with the symmetric ghost node u(-d) = u(d)
        diag[0] = 2.0 * N / d ** 2
        upper[0] = -2.0 * N / d ** 2
        free[0] = True
    return lower, diag, upper, free


def _apply(lower, diag, upper, u):
    out = diag * u
    out[1:] += lower[1:] * u[:-1]
    out[:-1] += upper[:-1] * u[1:]
    return out


def _newton(r: np.ndarray, d: float, N: int, nl: Nonlinearity, regular_center: bool, label: str
            ) -> Tuple[np.ndarray, int, float]:
    """Damped Newton with tridiagonal Jacobians.

    Convergence is measured on the Jacobi-scaled residual relative to
    sup |u|, so the target does not depend on the mesh size.
    """
    lower, diag, upper, free = _bands(r, d, N, regular_center)
    u = np.zeros(r.size)

    def residual(v: np.ndarray) -> np.ndarray:
        F = _apply(lower, diag, upper, v)
        F[free] -= nl.f(v[free])
        return F

    def measure(F: np.ndarray, v: np.ndarray) -> float:
        scaled = float(np.max(np.abs(F / diag)))
        reference = max(float(np.max(np.abs(v))), float(np.max(np.abs(nl.f(v[free])))) / float(np.max(diag)))
        return scaled / reference if reference > 0.0 else scaled

    F = residual(u)
    norm = measure(F, u)
    floor_hits = 0
    steps = 0
    while norm > NEWTON_TOLERANCE:
        if steps >= NEWTON_MAX_STEPS:
            raise NoConvergence(f"{label}: Newton did not converge in {NEWTON_MAX_STEPS} steps",
                                context={"iter_cap": NEWTON_MAX_STEPS, "residual": norm})
        steps += 1
        jac_diag = diag.copy()
        jac_diag[free] -= nl.fprime(u[free])
        ab = np.zeros((3, r.size))
        ab[0, 1:] = upper[:-1]
        ab[1] = jac_diag
        ab[2, :-1] = lower[1:]
        delta = solve_banded((1, 1), ab, -F)

        t = 1.0
        while True:
            trial = u + t * delta
            F_trial = residual(trial)
            trial_norm = measure(F_trial, trial)
            if trial_norm <= norm or t <= DAMPING_FLOOR:
                break
            t *= 0.5

        floor_hits = floor_hits + 1 if trial_norm > norm else 0
        if floor_hits >= 2:
            raise NewtonStalled(f"{label}: damping floor {DAMPING_FLOOR} reached on two consecutive steps",
                                context={"step": steps, "residual": norm})
        u, F, norm = trial, F_trial, trial_norm
        logger.debug(f"{label} Newton step {steps}: damping {t:g}, scaled residual {norm:.3e}")

    return u, steps, norm


def derivative(u: np.ndarray, d: float) -> np.ndarray:
    """Fourth-order finite-difference u' on a uniform mesh, one-sided at both ends."""
    du = np.empty_like(u)
    du[2:-2] = (-u[4:] + 8.0 * u[3:-1] - 8.0 * u[1:-3] + u[:-4]) / (12.0 * d)
    du[0] = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * d)
    du[1] = (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]) / (12.0 * d)
    du[-1] = (25.0 * u[-1] - 48.0 * u[-2] + 36.0 * u[-3] - 16.0 * u[-4] + 3.0 * u[-5]) / (12.0 * d)
    du[-2] = (3.0 * u[-1] + 10.0 * u[-2] - 18.0 * u[-3] + 6.0 * u[-4] - u[-5]) / (12.0 * d)
    return du


def critical_radius(r: np.ndarray, du: np.ndarray) -> Tuple[float, int]:
    """Root of u' where it turns from positive to non-positive, plus how many such turns exist.

    Raises:
        NoSignChange: u' never turns from positive to non-positive
    """
    turns = np.flatnonzero((du[:-1] > 0.0) & (du[1:] <= 0.0))
    if turns.size == 0:
        raise NoSignChange("u' has no maximum-type sign change; f(u) > 0 is required",
                           context={"du_first": float(du[0]), "du_last": float(du[-1])})
    if turns.size > 1:
        logger.warning(f"u' changes sign {turns.size} times; using the innermost change")
    k = int(turns[0])
    lo = max(0, k - 3)
    hi = min(r.size, k + 5)
    spline = CubicSpline(r[lo:hi], du[lo:hi])
    root = brentq(lambda s: float(spline(s)), r[k], r[k + 1], xtol=1e-15)
    return float(root), int(turns.size)


def solve_radial(rp: RadialProblem) -> RadialSolution:
    """Radial solution on the annulus with u(eps) = u(1) = 0 and its critical radius.

    Raises:
        NewtonStalled: damping floor hit on two consecutive steps
        NoConvergence: Newton step cap exceeded
        NoSignChange: u' has no interior maximum (f <= 0)
    """
    r = np.linspace(rp.eps, 1.0, rp.n + 1)
    d = (1.0 - rp.eps) / rp.n
    label = f"radial N={rp.N} eps={rp.eps:g}"
    u, steps, norm = _newton(r, d, rp.N, rp.nonlinearity, regular_center=False, label=label)
    u[0] = 0.0
    u[-1] = 0.0
    du = derivative(u, d)
    r_eps, changes = critical_radius(r, du)
    logger.info(f"{label}: r_eps = {r_eps:.12g} after {steps} Newton steps (n={rp.n})")
    return RadialSolution(r=r, u=u, du=du, r_eps=r_eps, sign_changes=changes,
                          newton_iterations=steps, residual=norm)


def solve_radial_ball(N: int, nl: Nonlinearity, n: int = DEFAULT_BALL_MESH) -> RadialSolution:
    """Unpunctured radial solution on [0, 1] with a regular centre; u_center is u0(0)."""
    if N < 2:
        raise ValueError("N must be at least 2")
    if nl.kind == NonlinearityKind.LINEAR_EIGEN:
        raise ValueError("the radial solver needs an explicit f; linear-eigen is not supported")
    n = max(MIN_MESH, n)
    r = np.linspace(0.0, 1.0, n + 1)
    d = 1.0 / n
    label = f"radial ball N={N}"
    u, steps, norm = _newton(r, d, N, nl, regular_center=True, label=label)
    u[-1] = 0.0
    logger.info(f"{label}: u0(0) = {u[0]:.12g} after {steps} Newton steps")
    return RadialSolution(r=r, u=u, du=derivative(u, d), r_eps=None, sign_changes=0,
                          newton_iterations=steps, residual=norm)
