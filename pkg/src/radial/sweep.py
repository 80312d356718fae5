import csv
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .solver import DEFAULT_BALL_MESH, RadialProblem, resolve_mesh, solve_radial, solve_radial_ball
from ..asymptotics.predictors import predict_radial
from ..errors import HolepointError, IoError
from ..models.problem import Nonlinearity
from ..models.results import ErrorRecord, RadialSweepEntry
from ..utils.logging_config import get_logger
from ..utils.utils import format_float

logger = get_logger(__name__)

RADIAL_CSV_COLUMNS = ["eps", "r_eps", "ratio_to_law", "pred_printed", "pred_cross", "newton_iters"]


def scaling_law(N: int, eps: float) -> float:
    """|log eps|^(-1/2) for N = 2, eps^((N-2)/N) otherwise"""
    if N == 2:
        return abs(math.log(eps)) ** -0.5
    return eps ** ((N - 2) / N)


def radial_weak_limit(N: int, nl: Nonlinearity, n: int = DEFAULT_BALL_MESH) -> Tuple[float, float]:
    """u0(0) and f(u0(0)) from the unpunctured ball solution"""
    ball = solve_radial_ball(N, nl, n)
    u0_at_0 = ball.u_center
    return u0_at_0, float(nl.f(u0_at_0))


def radial_entry(N: int, eps: float, nl: Nonlinearity, u0_at_0: float, f_at_u0_0: float,
                 n: Optional[int] = None) -> RadialSweepEntry:
    """One sweep row; solver failures become an ErrorRecord instead of propagating."""
    mesh = resolve_mesh(eps, n)
    try:
        solution = solve_radial(RadialProblem(N=N, eps=eps, nonlinearity=nl, n=mesh))
        prediction = predict_radial(N, eps, u0_at_0, f_at_u0_0)
    except HolepointError as e:
        logger.error(f"Radial entry N={N} eps={eps:g} failed: {e}", exc_info=True)
        return RadialSweepEntry(eps=eps, n=mesh, error=ErrorRecord(
            error_message=str(e), error_code=e.code, request_params={"N": N, "eps": eps, "n": mesh}))

    cross = prediction.radius_cross if prediction.radius_cross is not None else prediction.radius
    return RadialSweepEntry(
        eps=eps,
        n=mesh,
        r_eps=solution.r_eps,
        ratio_to_law=solution.r_eps / scaling_law(N, eps),
        pred_printed=prediction.radius,
        pred_cross=cross,
        newton_iters=solution.newton_iterations,
    )


def radial_sweep(N: int, eps_list: Sequence[float], nl: Nonlinearity, n: Optional[int] = None,
                 ball_mesh: int = DEFAULT_BALL_MESH) -> List[RadialSweepEntry]:
    """Critical radius against the radial prediction for each eps, in the given decreasing order.

    A failed entry carries its error and the sweep continues.
    """
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    u0_at_0, f_at_u0_0 = radial_weak_limit(N, nl, ball_mesh)
    entries = [radial_entry(N, eps, nl, u0_at_0, f_at_u0_0, n) for eps in eps_list]
    logger.info(f"Radial sweep N={N}: {len(entries)} entries, "
                f"{sum(e.error is not None for e in entries)} failed")
    return entries


def write_radial_csv(entries: Sequence[RadialSweepEntry], path: Path) -> None:
    """Raises: IoError"""
    try:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(RADIAL_CSV_COLUMNS)
            for e in entries:
                writer.writerow([format_float(e.eps), format_float(e.r_eps), format_float(e.ratio_to_law),
                                 format_float(e.pred_printed), format_float(e.pred_cross),
                                 str(e.newton_iters)])
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}", context={"path": str(path)}) from e
