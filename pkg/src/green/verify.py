import math
from typing import Tuple

import numpy as np
from scipy.integrate import quad_vec

from .kernels import ball_green, disc_green, poisson_kernel
from ..elliptic.field import Field, sample_values
from ..elliptic.solvers import EllipticSolver
from ..errors import QuadratureFailure
from ..geometry.grid import classify
from ..geometry.laplacian import dirichlet_rhs
from ..models.domain import LevelSetDomain, PuncturedDomain
from ..models.problem import QuadraticPolynomial
from ..models.results import PsiEpsRecord
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

SURFACE_TOLERANCE = 1e-12
VOLUME_TOLERANCE = 1e-10
RADIAL_EPSABS = 1e-13
RADIAL_EPSREL = 1e-12
# Upper bound on sphere-rule nodes before the surface integral is declared unconverged
MAX_SPHERE_NODES = 2 ** 18
PSI_PROBE_RADIUS = 0.2
PSI_PROBES = 64


def sphere_rule(N: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes (M, N) and weights (M,) on the unit sphere S^{N-1}.

    Trapezoid with 2n points on the circle; for N >= 3 a Gauss-Legendre rule
    of order n in the polar angle times the rule on S^{N-2}.
    """
    if N == 2:
        t = 2.0 * math.pi * np.arange(2 * n) / (2 * n)
        return np.column_stack([np.cos(t), np.sin(t)]), np.full(2 * n, math.pi / n)
    sub_nodes, sub_weights = sphere_rule(N - 1, n)
    x, w = np.polynomial.legendre.leggauss(n)
    theta = 0.5 * math.pi * (x + 1.0)
    w_theta = 0.5 * math.pi * w * np.sin(theta) ** (N - 2)
    nodes = np.concatenate(
        [np.column_stack([np.full(len(sub_nodes), np.cos(th)), np.sin(th) * sub_nodes]) for th in theta]
    )
    weights = np.concatenate([wt * sub_weights for wt in w_theta])
    return nodes, weights


def _rule_orders(N: int):
    n = 8
    while (2 * n) * n ** (N - 2) <= MAX_SPHERE_NODES:
        yield n
        n *= 2


def _converged_sphere_integral(N: int, integrand, label: str, tolerance: float = SURFACE_TOLERANCE) -> float:
    previous = None
    for n in _rule_orders(N):
        nodes, weights = sphere_rule(N, n)
        value = float(np.sum(weights * integrand(nodes)))
        if previous is not None and abs(value - previous) <= tolerance * max(1.0, abs(value)):
            logger.debug(f"{label} converged at order {n}: {value:.16g}")
            return value
        previous = value
    raise QuadratureFailure(f"{label} did not settle below {tolerance} within {MAX_SPHERE_NODES} nodes",
                            context={"N": N, "last": previous})


def poisson_surface_term(phi: QuadraticPolynomial, s: np.ndarray) -> float:
    N = phi.dimension
    return _converged_sphere_integral(N, lambda z: poisson_kernel(s, z, N) * phi.value(z), "surface term")


def green_volume_term(phi: QuadraticPolynomial, s: np.ndarray) -> float:
    """∫_B Δφ(y) G(s, y) dy in polar coordinates centred at s.

    Along each direction ω the ball ends at r = ρ(ω); the radial integral
    runs through adaptive Gauss-Kronrod over t = r / ρ(ω) for all
    directions at once.
    """
    N = phi.dimension
    laplacian = phi.laplacian()
    if laplacian == 0.0:
        return 0.0

    def integrand(omega: np.ndarray) -> np.ndarray:
        s_dot = omega @ s
        rho = -s_dot + np.sqrt(s_dot ** 2 + 1.0 - float(s @ s))

        def radial(t: float) -> np.ndarray:
            r = t * rho
            y = s + r[:, None] * omega
            return ball_green(s, y, N) * r ** (N - 1) * rho

        value, error, info = quad_vec(radial, 0.0, 1.0, epsabs=RADIAL_EPSABS, epsrel=RADIAL_EPSREL,
                                      norm="max", full_output=True)
        if not info.success:
            raise QuadratureFailure(f"radial quadrature failed: {info.message}", context={"error": float(error)})
        return laplacian * np.asarray(value)

    return _converged_sphere_integral(N, integrand, "volume term", VOLUME_TOLERANCE)


def poisson_identity_check(phi: QuadraticPolynomial, s, N: int) -> float:
    """|φ(s) - (surface Poisson integral - ∫_B Δφ G(s, .))| for |s| < 1.

    Raises:
        QuadratureFailure: a quadrature rule missed its internal tolerance
    """
    s = np.asarray(s, dtype=np.float64)
    if phi.dimension != N or s.shape != (N,):
        raise ValueError(f"polynomial and point must live in R^{N}")
    if float(s @ s) >= 1.0:
        raise ValueError("s must lie in the open unit ball")
    lhs = float(phi.value(s))
    rhs = poisson_surface_term(phi, s) - green_volume_term(phi, s)
    residual = abs(lhs - rhs)
    logger.info(f"Poisson identity at s={s.tolist()} (N={N}): residual {residual:.3e}")
    return residual


def solve_capacity_potential(domain: PuncturedDomain, h: float) -> Field:
    """Harmonic function equal to 1 on the outer boundary and 0 on the hole."""
    grid = classify(domain, h)
    solver = EllipticSolver(grid)
    return solver.solve_poisson(0.0, boundary_rhs=dirichlet_rhs(grid, outer_value=1.0, hole_value=0.0))


def psi_expansion(points: np.ndarray, P, eps: float, R: float = 1.0) -> np.ndarray:
    """Leading-order prediction 1 + (2π / log ε) G(x, P) for the disc of radius R."""
    P = np.asarray(P, dtype=np.float64)
    green = np.array([disc_green(p / R, P / R) for p in np.atleast_2d(points)])
    return 1.0 + 2.0 * math.pi / math.log(eps / R) * green


def psi_eps_verify(P, eps: float, h: float, R: float = 1.0, probes: int = PSI_PROBES,
                   phase: float = 0.0) -> PsiEpsRecord:
    """Max deviation between the computed capacity potential and its expansion on |x - P| = 0.2.

    Sample points are equally spaced in angle, rotated by ``phase`` radians.
    """
    domain = PuncturedDomain(outer=LevelSetDomain.disc(R), P=tuple(P), eps=eps)
    field = solve_capacity_potential(domain, h)

    t = phase + 2.0 * math.pi * np.arange(probes) / probes
    points = np.column_stack([P[0] + PSI_PROBE_RADIUS * np.cos(t), P[1] + PSI_PROBE_RADIUS * np.sin(t)])
    measured = sample_values(field, points)
    predicted = psi_expansion(points, P, eps, R)
    deviation = float(np.max(np.abs(measured - predicted)))
    logger.info(f"psi_eps at eps={eps}, h={h}: max deviation {deviation:.6g} on {probes} probes")
    return PsiEpsRecord(eps=eps, h=h, deviation=deviation, probes=probes, sample_phase=phase)
