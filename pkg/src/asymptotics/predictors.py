"""Closed-form predictions for the critical points a small hole creates."""
import math
from typing import List, Optional, Sequence

import numpy as np

from .jacobi import jacobi_eigh
from ..elliptic.field import Field, sample_gradient, sample_hessian, sample_value
from ..errors import DegenerateHessian, NonpositiveF, ZeroGradient, ZeroVector
from ..green.kernels import disc_regular_part
from ..models.domain import DomainKind
from ..models.problem import Nonlinearity, NonlinearityKind
from ..models.results import LocalData, LocationVerdict, Prediction, PredictionKind, ScalingLaw
from ..utils.logging_config import get_logger

logger = get_logger(__name__)

MULTIPLE_EIGENVALUE_GAP = 1e-6
DEGENERATE_EIGENVALUE = 1e-8
DEFAULT_LOCATION_TOLERANCE = 0.2
# |grad u0(P)| below this fraction of the Hessian scale counts as a critical hole centre
CRITICAL_CENTER_RATIO = 1e-6


def local_data_from_field(u0: Field, P: Sequence[float], nl: Optional[Nonlinearity] = None,
                          eigenvalue: Optional[float] = None) -> LocalData:
    """Samples u0, its gradient and Hessian at P from the numerical weak limit."""
    P = np.asarray(P, dtype=np.float64)
    u0P = sample_value(u0, P)
    hessian = sample_hessian(u0, P)
    hessian = 0.5 * (hessian + hessian.T)

    fu0P = None
    if nl is not None:
        if nl.kind == NonlinearityKind.LINEAR_EIGEN:
            fu0P = None if eigenvalue is None else eigenvalue * u0P
        else:
            fu0P = float(nl.f(u0P))

    HPP = None
    outer = u0.grid.outer
    if outer.kind == DomainKind.DISC:
        HPP = disc_regular_part(P / outer.R, P / outer.R) + math.log(outer.R) / (2.0 * math.pi)

    return LocalData(N=2, P=P.tolist(), u0P=u0P, grad0P=sample_gradient(u0, P).tolist(),
                     hess0P=hessian.tolist(), fu0P=fu0P, HPP=HPP)


def c_constant(N: int, u0P: float, grad0P) -> float:
    """C_N = -[(N-2) u0(P) / |grad u0(P)|^N]^(1/(N-1)), and C_2 = -u0(P) / |grad u0(P)|^2.

    Raises:
        ZeroGradient: grad u0(P) = 0
    """
    g = float(np.linalg.norm(np.asarray(grad0P, dtype=np.float64)))
    if g == 0.0:
        raise ZeroGradient("the constant needs a non-critical hole centre", context={"grad0P": list(grad0P)})
    if u0P <= 0.0:
        raise ValueError(f"u0(P) must be positive, got {u0P}")
    if N == 2:
        return -u0P / g ** 2
    return -((N - 2) * u0P / g ** N) ** (1.0 / (N - 1))


def _law(N: int, eps: float, degenerate: bool):
    """(law, exponent, scale factor) for the offset magnitude at eps."""
    if N == 2:
        p = 0.5 if degenerate else 1.0
        return ScalingLaw.LOG, p, abs(math.log(eps)) ** (-p)
    p = (N - 2) / N if degenerate else (N - 2) / (N - 1)
    return ScalingLaw.POWER, p, eps ** p


def predict_nondegenerate(ld: LocalData, eps: float) -> Prediction:
    """Location of the single extra saddle for a hole centred at a non-critical point of u0.

    Raises:
        ZeroGradient: grad u0(P) = 0
    """
    grad = np.asarray(ld.grad0P, dtype=np.float64)
    C = c_constant(ld.N, ld.u0P, grad)
    law, p, factor = _law(ld.N, eps, degenerate=False)
    c = C * grad
    P = np.asarray(ld.P, dtype=np.float64)
    return Prediction(
        kind=PredictionKind.NONDEG_SADDLE,
        law=law,
        exponent=p,
        eps=eps,
        c=[c.tolist()],
        points=[(P + factor * c).tolist()],
        count_delta=1,
        expected_index=-1,
        expected_value=ld.u0P,
        constant=C,
    )


def predict_degenerate(ld: LocalData, eps: float) -> Prediction:
    """The 2m points P +- r_i v_i for a hole centred at a nondegenerate critical point of u0.

    For a nondegenerate minimum (m = 0) the family is empty and one critical
    point is lost. A negative eigenvalue closer than 1e-6 of the spectral
    radius to another eigenvalue sets the MULTIPLE_EIGENVALUE flag, and the
    count becomes a lower bound.

    Raises:
        DegenerateHessian: an eigenvalue of the Hessian vanishes
    """
    N = ld.N
    eigenvalues, vectors = jacobi_eigh(ld.hess0P)
    radius = float(np.max(np.abs(eigenvalues)))
    if radius == 0.0 or float(np.min(np.abs(eigenvalues))) <= DEGENERATE_EIGENVALUE * radius:
        raise DegenerateHessian(f"Hessian eigenvalues {eigenvalues.tolist()} include zero",
                                context={"eigenvalues": eigenvalues.tolist()})

    law, p, factor = _law(N, eps, degenerate=True)
    P = np.asarray(ld.P, dtype=np.float64)
    flags: List[str] = []
    c_rows: List[List[float]] = []
    points: List[List[float]] = []
    negative = [k for k, lam in enumerate(eigenvalues) if lam < 0.0]
    multiple = False
    for k in negative:
        others = np.delete(eigenvalues, k)
        if others.size and float(np.min(np.abs(others - eigenvalues[k]))) <= MULTIPLE_EIGENVALUE_GAP * radius:
            multiple = True
        lam = float(eigenvalues[k])
        if N == 2:
            coefficient = math.sqrt(-ld.u0P / lam)
        else:
            coefficient = ((2 - N) * ld.u0P / lam) ** (1.0 / N)
        for sign in (1.0, -1.0):
            row = sign * coefficient * vectors[:, k]
            c_rows.append(row.tolist())
            points.append((P + factor * row).tolist())

    m = len(negative)
    if m == 0:
        flags.append("MINIMUM")
    if multiple:
        flags.append("MULTIPLE_EIGENVALUE")
    return Prediction(
        kind=PredictionKind.DEGEN_FAMILY,
        law=law,
        exponent=p,
        eps=eps,
        c=c_rows,
        points=points,
        count_delta=2 * m - 1,
        count_is_lower_bound=multiple,
        expected_value=ld.u0P,
        flags=flags,
    )


def predict_radial(N: int, eps: float, u0_at_0: float, f_at_u0_0: float) -> Prediction:
    """Critical radius of a radial solution in the annulus B(0,1) minus B(0,eps).

    For N = 2 both the printed coefficient sqrt(u0/(2f)) and the coefficient
    sqrt(2 u0 / f), which follows from the degenerate-case law with
    lambda = -f/2, are returned.

    Raises:
        NonpositiveF: f(u0(0)) <= 0
    """
    if f_at_u0_0 <= 0.0:
        raise NonpositiveF(f"f(u0(0)) = {f_at_u0_0} is not positive", context={"f": f_at_u0_0})
    if N == 2:
        printed = math.sqrt(u0_at_0 / (2.0 * f_at_u0_0))
        cross = math.sqrt(2.0 * u0_at_0 / f_at_u0_0)
        factor = abs(math.log(eps)) ** -0.5
        return Prediction(kind=PredictionKind.RADIAL, law=ScalingLaw.LOG, exponent=0.5, eps=eps,
                          radius=printed * factor, radius_cross=cross * factor,
                          coefficient=printed, coefficient_cross=cross, flags=["PRINTED", "CROSS"])
    coefficient = (N * (N - 2) * u0_at_0 / f_at_u0_0) ** (1.0 / N)
    p = (N - 2) / N
    return Prediction(kind=PredictionKind.RADIAL, law=ScalingLaw.POWER, exponent=p, eps=eps,
                      radius=coefficient * eps ** p, coefficient=coefficient)


def radial_local_data(N: int, u0_at_0: float, f_at_u0_0: float) -> LocalData:
    """LocalData of a radial u0 at the origin, whose Hessian is -f/N times the identity."""
    return LocalData(N=N, P=[0.0] * N, u0P=u0_at_0, grad0P=[0.0] * N,
                     hess0P=(-f_at_u0_0 / N * np.eye(N)).tolist(), fu0P=f_at_u0_0)


def center_is_critical(ld: LocalData) -> bool:
    grad = float(np.linalg.norm(ld.grad0P))
    scale = max(1.0, float(np.linalg.norm(ld.hess0P)))
    return grad <= CRITICAL_CENTER_RATIO * scale


def predict(ld: LocalData, eps: float) -> Prediction:
    """predict_degenerate when the hole centre is critical for u0, predict_nondegenerate otherwise."""
    if center_is_critical(ld):
        return predict_degenerate(ld, eps)
    return predict_nondegenerate(ld, eps)


def necessary_location_check(x_candidate, ld: LocalData, eps: float,
                             tolerance: float = DEFAULT_LOCATION_TOLERANCE) -> LocationVerdict:
    """Whether x_candidate is within a relative tolerance of an admissible predicted location.

    Branches are NONDEG for a non-critical hole centre, or EIG<k>+ / EIG<k>-
    for the eigendirections of the Hessian at a critical centre.
    """
    x = np.asarray(x_candidate, dtype=np.float64)
    P = np.asarray(ld.P, dtype=np.float64)
    if center_is_critical(ld):
        prediction = predict_degenerate(ld, eps)
        eigen_count = len(prediction.points) // 2
        branches = [f"EIG{k}{sign}" for k in range(eigen_count) for sign in ("+", "-")]
    else:
        prediction = predict_nondegenerate(ld, eps)
        branches = ["NONDEG"]

    best = LocationVerdict(verdict="NO_MATCH", branch=None, residual=math.inf)
    for branch, point in zip(branches, prediction.points):
        target = np.asarray(point)
        scale = float(np.linalg.norm(target - P))
        residual = float(np.linalg.norm(x - target)) / scale if scale > 0.0 else math.inf
        if residual < best.residual:
            best = LocationVerdict(verdict="MATCH" if residual <= tolerance else "NO_MATCH",
                                   branch=branch, residual=residual)
    return best


def b_matrix_spectrum(xi, N: int) -> np.ndarray:
    """Eigenvalues of B = I - N xi xi^T / |xi|^2, ascending; equal to {1 - N, 1, ..., 1}.

    Raises:
        ZeroVector: xi = 0
    """
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != (N,):
        raise ValueError(f"xi must have {N} components")
    norm2 = float(xi @ xi)
    if norm2 == 0.0:
        raise ZeroVector("B is undefined for xi = 0")
    B = np.eye(N) - N * np.outer(xi, xi) / norm2
    eigenvalues, _ = jacobi_eigh(B)
    return eigenvalues


def offset_alignment_deg(measured_offset, predicted_offset) -> float:
    """Angle in degrees between two offset vectors"""
    a = np.asarray(measured_offset, dtype=np.float64)
    b = np.asarray(predicted_offset, dtype=np.float64)
    cosine = float(a @ b) / (float(np.linalg.norm(a)) * float(np.linalg.norm(b)))
    return math.degrees(math.acos(max(-1.0, min(1.0, cosine))))
