import math
from typing import Callable, Sequence, Union

import numpy as np

from ..elliptic.field import Field, sample_value, sample_values
from ..errors import TooCloseToHole

U0Like = Union[Field, Callable[[np.ndarray], float]]


def _u0_at(u0: U0Like, x: np.ndarray) -> float:
    if isinstance(u0, Field):
        return sample_value(u0, x)
    return float(u0(x))


def expansion_field(x, u0: U0Like, P: Sequence[float], eps: float, N: int, HPP: float = 0.0) -> float:
    """Leading-order profile of u_eps near the hole.

    N >= 3: u0(x) - u0(P) eps^(N-2) / |x-P|^(N-2).
    N = 2:  u0(x) - u0(P) (log|x-P| + 2π H(P,P)) / log eps.

    ``u0`` is a numerical weak limit (N = 2) or any callable of the point.

    Raises:
        TooCloseToHole: x inside the hole
    """
    x = np.asarray(x, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    r = float(np.linalg.norm(x - P))
    if r < eps * (1.0 - 1e-12):
        raise TooCloseToHole(f"|x - P| = {r:.6g} is inside the hole of radius {eps}",
                             context={"x": x.tolist(), "eps": eps})
    u0x = _u0_at(u0, x)
    u0P = _u0_at(u0, P)
    if N == 2:
        return u0x - u0P * (math.log(r) + 2.0 * math.pi * HPP) / math.log(eps)
    return u0x - u0P * eps ** (N - 2) / r ** (N - 2)


def expansion_ring_error(u_eps: Field, u0: Field, P: Sequence[float], eps: float, HPP: float,
                         ring_factor: float = 3.0, probes: int = 64) -> float:
    """sup |u_eps - expansion| over the circle |x - P| = ring_factor * eps."""
    P = np.asarray(P, dtype=np.float64)
    t = 2.0 * math.pi * np.arange(probes) / probes
    ring = P + ring_factor * eps * np.column_stack([np.cos(t), np.sin(t)])
    measured = sample_values(u_eps, ring)
    predicted = np.array([expansion_field(x, u0, P, eps, 2, HPP) for x in ring])
    return float(np.max(np.abs(measured - predicted)))
