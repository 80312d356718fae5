from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from .field import Field
from .linear import DEFAULT_RTOL, OperatorFactors, solve_linear
from ..errors import NewtonStalled, NoConvergence
from ..geometry.grid import Grid2D
from ..geometry.laplacian import build_laplacian
from ..models.problem import Nonlinearity, NonlinearityKind
from ..models.results import SolveMetadata
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

NEWTON_TOLERANCE = 1e-9
NEWTON_MAX_STEPS = 60
DAMPING_FLOOR = 2.0 ** -15
EIGEN_TOLERANCE = 1e-8
EIGEN_MAX_ITERATIONS = 200
INNER_RTOL = DEFAULT_RTOL

RhsLike = Union[float, np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


class EllipticSolver:
    """Solves -Δu = f(u), u = 0 on the boundary, on one classified grid.

    The operator is assembled once per instance and shared by every solve;
    instances are not shared between threads.
    """

    def __init__(self, grid: Grid2D):
        self.grid = grid
        self.operator = build_laplacian(grid)
        self.factors = OperatorFactors(self.operator)
        # Cut rows carry diagonals up to 1/theta larger; residuals are measured relative to the 5-point diagonal
        self._row_scale = (4.0 / grid.h ** 2) / self.operator.diagonal()
        logger.info(f"EllipticSolver ready: {grid.n_unknowns} unknowns at h={grid.h}")

    def _sup(self, residual: np.ndarray) -> float:
        return float(np.max(np.abs(residual * self._row_scale), initial=0.0))

    def _vector(self, data: Optional[RhsLike], default: float = 0.0) -> np.ndarray:
        n = self.grid.n_unknowns
        if data is None:
            return np.full(n, default)
        if isinstance(data, Field):
            return np.array(data.values, dtype=np.float64)
        if callable(data):
            return self.grid.evaluate(data)
        values = np.asarray(data, dtype=np.float64)
        if values.ndim == 0:
            return np.full(n, float(values))
        if values.shape != (n,):
            raise ValueError(f"expected {n} values, one per unknown node, got shape {values.shape}")
        return values.copy()

    def _newton(
            self,
            residual: Callable[[np.ndarray], np.ndarray],
            jacobian_shift: Callable[[np.ndarray], np.ndarray],
            u: np.ndarray,
            label: str,
    ) -> Field:
        """Damped Newton on F(u) = 0 with Jacobian A - diag(jacobian_shift(u)).

        A linear F converges in one undamped step, so a Poisson solve and a
        semilinear solve with f' = 0 follow the same arithmetic.
        """
        metadata = SolveMetadata(nonlinearity=label)
        F = residual(u)
        norm = self._sup(F)
        metadata.residual_trace.append(norm)
        floor_hits = 0

        for step in range(1, NEWTON_MAX_STEPS + 1):
            if norm <= NEWTON_TOLERANCE:
                break
            shift = jacobian_shift(u)
            if shift.any():
                delta, info = solve_linear(self.operator - sparse.diags(shift), -F, rtol=INNER_RTOL)
            else:
                delta, info = solve_linear(self.operator, -F, rtol=INNER_RTOL, factors=self.factors)
            metadata.linear_iterations.append(info.iterations)
            metadata.linear_methods.append(info.method)

            t = 1.0
            while True:
                trial = u + t * delta
                F_trial = residual(trial)
                trial_norm = self._sup(F_trial)
                if trial_norm <= norm or t <= DAMPING_FLOOR:
                    break
                t *= 0.5

            floor_hits = floor_hits + 1 if trial_norm > norm else 0
            if floor_hits >= 2:
                raise NewtonStalled(
                    f"{label}: damping floor {DAMPING_FLOOR} reached on two consecutive steps",
                    context={"step": step, "residual": norm},
                )
            u, F, norm = trial, F_trial, trial_norm
            metadata.newton_iterations = step
            metadata.residual_trace.append(norm)
            metadata.damping_trace.append(t)
            logger.debug(f"{label} Newton step {step}: damping {t:g}, sup residual {norm:.3e}")
        else:
            if norm > NEWTON_TOLERANCE:
                raise NoConvergence(
                    f"{label}: Newton did not converge in {NEWTON_MAX_STEPS} steps (residual {norm:.3e})",
                    context={"iter_cap": NEWTON_MAX_STEPS, "residual": norm},
                )

        metadata.residual = norm
        logger.info(f"{label} solve converged: {metadata.newton_iterations} Newton steps, residual {norm:.3e}")
        return Field(grid=self.grid, values=u, metadata=metadata)

    def solve_poisson(self, rhs: RhsLike, boundary_rhs: Optional[np.ndarray] = None) -> Field:
        """-Δu = rhs with homogeneous Dirichlet data; ``boundary_rhs`` adds a Dirichlet lift.

        Raises:
            NoConvergence: the Krylov solve exceeded 20 * sqrt(n) iterations
        """
        b = self._vector(rhs)
        if boundary_rhs is not None:
            b = b + boundary_rhs
        if not np.all(np.isfinite(b)):
            raise ValueError("right-hand side must be finite")
        zero_shift = np.zeros_like(b)
        return self._newton(
            residual=lambda u: self.operator @ u - b,
            jacobian_shift=lambda u: zero_shift,
            u=np.zeros_like(b),
            label="poisson",
        )

    def solve_semilinear(self, nl: Nonlinearity, u_init: Optional[RhsLike] = None) -> Field:
        """-Δu = f(u) by damped Newton from u_init (zero when omitted).

        Raises:
            NewtonStalled: damping floor hit on two consecutive steps
            NoConvergence: more than 60 Newton steps
        """
        if nl.kind == NonlinearityKind.LINEAR_EIGEN:
            _, eigenfunction = self.solve_eigen()
            return eigenfunction

        u = self._vector(u_init)
        if not np.all(np.isfinite(u)):
            raise ValueError("initial guess must be finite")
        return self._newton(
            residual=lambda v: self.operator @ v - nl.f(v),
            jacobian_shift=nl.fprime,
            u=u,
            label=nl.kind.value,
        )

    def solve_eigen(self) -> Tuple[float, Field]:
        """First Dirichlet eigenpair by inverse power iteration, eigenfunction scaled to max 1.

        Raises:
            NoConvergence: residual above 1e-8 * lambda * |phi| after 200 iterations
        """
        A = self.operator
        phi = np.ones(self.grid.n_unknowns)
        lam = float(phi @ (A @ phi)) / float(phi @ phi)
        metadata = SolveMetadata(nonlinearity=NonlinearityKind.LINEAR_EIGEN.value)

        for iteration in range(1, EIGEN_MAX_ITERATIONS + 1):
            y, info = solve_linear(A, phi, x0=phi / lam, rtol=INNER_RTOL, factors=self.factors)
            metadata.linear_iterations.append(info.iterations)
            metadata.linear_methods.append(info.method)
            phi = y / np.max(y)
            A_phi = A @ phi
            lam = float(phi @ A_phi) / float(phi @ phi)
            residual = float(np.linalg.norm(A_phi - lam * phi))
            metadata.residual_trace.append(residual)
            if residual <= EIGEN_TOLERANCE * lam * float(np.linalg.norm(phi)):
                metadata.newton_iterations = iteration
                metadata.residual = residual
                metadata.eigenvalue = lam
                logger.info(f"Eigen solve converged in {iteration} iterations: lambda_1 = {lam:.10g}")
                return lam, Field(grid=self.grid, values=phi, metadata=metadata)

        raise NoConvergence(
            f"inverse iteration did not converge in {EIGEN_MAX_ITERATIONS} iterations",
            context={"iter_cap": EIGEN_MAX_ITERATIONS, "eigenvalue": lam},
        )


def solve_poisson(grid: Grid2D, rhs: RhsLike) -> Field:
    return EllipticSolver(grid).solve_poisson(rhs)


def solve_semilinear(grid: Grid2D, nl: Nonlinearity, u_init: Optional[RhsLike] = None) -> Field:
    return EllipticSolver(grid).solve_semilinear(nl, u_init)


def solve_eigen(grid: Grid2D) -> Tuple[float, Field]:
    return EllipticSolver(grid).solve_eigen()


def solve_weak_limit(grid: Grid2D, nl: Nonlinearity) -> Tuple[Field, Optional[float]]:
    """u0 for nl on an unpunctured grid; the eigenvalue is returned for linear-eigen, else None."""
    solver = EllipticSolver(grid)
    if nl.kind == NonlinearityKind.LINEAR_EIGEN:
        lam, phi = solver.solve_eigen()
        return phi, lam
    return solver.solve_semilinear(nl), None
