import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, bicgstab, spilu, splu

from ..errors import NoConvergence
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

DEFAULT_RTOL = 1e-10
# Iterations without a new smallest CG residual before CG is considered stalled
STALL_FRACTION = 0.05
MIN_STALL_WINDOW = 50
ILU_DROP_TOL = 1e-5
ILU_FILL_FACTOR = 10.0
# Acceptance bound for the direct solve, after one refinement step
DIRECT_RTOL = 1e-8


@dataclass
class LinearSolveInfo:
    """Outcome of one sparse solve"""
    method: str
    iterations: int
    relative_residual: float


def iteration_cap(n_unknowns: int) -> int:
    return int(20 * math.sqrt(max(n_unknowns, 1)))


class OperatorFactors:
    """Preconditioners and factors of one operator, built on first use and kept for later solves.

    Once CG stalls on an operator, later solves with the same factors go
    straight to the ILU-preconditioned BiCGStab; once that fails too, they
    go straight to the sparse LU.
    """

    def __init__(self, operator: sparse.csr_matrix):
        self.operator = operator
        self.cg_stalled = False
        self._ilu = None
        self._lu = None

    @property
    def has_lu(self) -> bool:
        return self._lu is not None

    def ilu_preconditioner(self) -> LinearOperator:
        if self._ilu is None:
            logger.debug(f"Building ILU preconditioner for {self.operator.shape[0]} unknowns")
            self._ilu = spilu(self.operator.tocsc(), drop_tol=ILU_DROP_TOL, fill_factor=ILU_FILL_FACTOR)
        n = self.operator.shape[0]
        return LinearOperator((n, n), matvec=self._ilu.solve, dtype=np.float64)

    def lu_solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._lu is None:
            logger.info(f"Factorizing {self.operator.shape[0]} unknowns with sparse LU")
            # structurally symmetric M-matrix: diagonal pivots with a symmetric ordering
            self._lu = splu(self.operator.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                            options={"SymmetricMode": True})
        x = self._lu.solve(rhs)
        return x + self._lu.solve(rhs - self.operator @ x)


def _pcg(operator: sparse.csr_matrix, rhs: np.ndarray, x: np.ndarray, rtol: float, norm_b: float,
         cap: int) -> Tuple[np.ndarray, float, int, bool]:
    """Jacobi-preconditioned CG from x; returns the best iterate, its residual norm, iterations, converged."""
    inv_diag = 1.0 / operator.diagonal()
    r = rhs - operator @ x
    z = inv_diag * r
    p = z.copy()
    gamma = float(r @ z)
    best_x, best_norm = x.copy(), float(np.linalg.norm(r))
    if best_norm <= rtol * norm_b:
        return best_x, best_norm, 0, True

    window = max(MIN_STALL_WINDOW, int(STALL_FRACTION * cap))
    best_at = 0
    iterations = 0
    while iterations < cap:
        iterations += 1
        Ap = operator @ p
        curvature = float(p @ Ap)
        if curvature <= 0.0:
            logger.warning(f"CG lost positive curvature at iteration {iterations}")
            break
        alpha = gamma / curvature
        x += alpha * p
        r -= alpha * Ap
        norm_r = float(np.linalg.norm(r))
        if norm_r < best_norm:
            best_x, best_norm, best_at = x.copy(), norm_r, iterations
            if norm_r <= rtol * norm_b:
                return best_x, best_norm, iterations, True
        elif iterations - best_at >= window:
            logger.warning(f"CG stalled at relres {best_norm / norm_b:.3e} "
                           f"({window} iterations without progress)")
            break
        z = inv_diag * r
        gamma_next = float(r @ z)
        p = z + (gamma_next / gamma) * p
        gamma = gamma_next
    return best_x, best_norm, iterations, False


def solve_linear(
        operator: sparse.csr_matrix,
        rhs: np.ndarray,
        x0: Optional[np.ndarray] = None,
        rtol: float = DEFAULT_RTOL,
        factors: Optional[OperatorFactors] = None,
) -> Tuple[np.ndarray, LinearSolveInfo]:
    """Jacobi-preconditioned conjugate gradients with a BiCGStab fallback.

    The Shortley-Weller operator is not symmetric at cut rows, so CG can
    stall. CG keeps its best iterate and hands it to BiCGStab with an ILU
    preconditioner when it loses positive curvature, makes no progress for
    5% of the iteration cap, or reaches the cap. A sparse LU solve is the
    last resort. Passing the same ``factors`` for repeated solves with one
    operator reuses the preconditioner and factorization.

    Raises:
        NoConvergence: every stage failed to reach the tolerance
    """
    n = rhs.size
    cap = iteration_cap(n)
    norm_b = float(np.linalg.norm(rhs))
    if norm_b == 0.0:
        return np.zeros(n), LinearSolveInfo(method="trivial", iterations=0, relative_residual=0.0)
    if factors is None:
        factors = OperatorFactors(operator)

    if factors.has_lu:
        return _direct(factors, rhs, norm_b, 0)

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=np.float64)
    iterations = 0
    if not factors.cg_stalled:
        x, norm_r, iterations, converged = _pcg(operator, rhs, x, rtol, norm_b, cap)
        if converged:
            logger.debug(f"CG converged in {iterations} iterations (relres {norm_r / norm_b:.3e})")
            return x, LinearSolveInfo(method="cg", iterations=iterations, relative_residual=norm_r / norm_b)
        factors.cg_stalled = True
        logger.warning(f"CG did not converge after {iterations} iterations, switching to BiCGStab")

    counter = {"iterations": 0}

    def _count(_):
        counter["iterations"] += 1

    x_bicg, info = bicgstab(operator, rhs, x0=x, rtol=rtol, atol=0.0, maxiter=cap,
                            M=factors.ilu_preconditioner(), callback=_count)
    total = iterations + counter["iterations"]
    relative = float(np.linalg.norm(rhs - operator @ x_bicg)) / norm_b
    if info == 0 and relative <= rtol:
        logger.debug(f"BiCGStab finished after {total} total iterations (relres {relative:.3e})")
        return x_bicg, LinearSolveInfo(method="bicgstab", iterations=total, relative_residual=relative)

    logger.warning(f"BiCGStab stopped at relres {relative:.3e} after {counter['iterations']} iterations, "
                   f"falling back to sparse LU")
    return _direct(factors, rhs, norm_b, total)


def _direct(factors: OperatorFactors, rhs: np.ndarray, norm_b: float, iterations: int):
    x = factors.lu_solve(rhs)
    relative = float(np.linalg.norm(rhs - factors.operator @ x)) / norm_b
    if not np.all(np.isfinite(x)) or relative > DIRECT_RTOL:
        raise NoConvergence(
            f"linear solve failed: sparse LU left relres {relative:.3e}",
            context={"iter_cap": iteration_cap(rhs.size), "relative_residual": relative},
        )
    return x, LinearSolveInfo(method="lu", iterations=iterations, relative_residual=relative)
