import numpy as np

from ..errors import PairingAmbiguous
from ..models.results import CriticalClass, CritSet, PairedPoint, Pairing
from ..utils.logging_config import get_logger

logger = get_logger(__name__)


def persistence_match(cs_eps: CritSet, cs_0: CritSet, d: float) -> Pairing:
    """Pairs each critical point of u0 with the unique critical point of u_eps within distance d.

    Points of cs_eps left unpaired are the extras created by the hole.

    Raises:
        ValueError: cs_0 contains a degenerate point
        PairingAmbiguous: two points of cs_eps lie within d of one point of cs_0
    """
    if any(p.critical_class == CriticalClass.DEGENERATE for p in cs_0.points):
        raise ValueError("persistence matching needs nondegenerate base points")

    pairing = Pairing()
    used = set()
    for base in cs_0.points:
        distances = [float(np.linalg.norm(p.location - base.location)) for p in cs_eps.points]
        close = [k for k, dist in enumerate(distances) if dist < d]
        if len(close) > 1:
            raise PairingAmbiguous(
                f"{len(close)} critical points within {d:g} of ({base.x:.6g}, {base.y:.6g})",
                context={"base": [base.x, base.y], "d": d},
            )
        if not close:
            pairing.unmatched_base.append(base)
            continue
        k = close[0]
        used.add(k)
        pairing.pairs.append(PairedPoint(base=base, perturbed=cs_eps.points[k], distance=distances[k]))

    pairing.extras = [p for k, p in enumerate(cs_eps.points) if k not in used]
    logger.info(f"Persistence: {len(pairing.pairs)} paired, {len(pairing.extras)} extra, "
                f"{len(pairing.unmatched_base)} unmatched")
    return pairing
