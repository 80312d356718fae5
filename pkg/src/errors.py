"""Exception hierarchy shared by every holepoint module.

Each error carries a stable ``code`` used in reports and an optional
``context`` dict with the parameters that triggered it.
"""
from typing import Any, Dict, Optional


class HolepointError(Exception):
    """Base class for all holepoint failures"""

    code = "HOLEPOINT_ERROR"

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}


class HoleUnresolved(HolepointError):
    code = "HOLE_UNRESOLVED"


class EmptyInterior(HolepointError):
    code = "EMPTY_INTERIOR"


class NoConvergence(HolepointError):
    code = "NO_CONVERGENCE"


class NewtonStalled(HolepointError):
    code = "NEWTON_STALLED"


class TooCloseToBoundary(HolepointError):
    code = "TOO_CLOSE_TO_BOUNDARY"


class DomainViolation(HolepointError):
    code = "DOMAIN_VIOLATION"


class QuadratureFailure(HolepointError):
    code = "QUADRATURE_FAILURE"


class GradientTooSmallOnCircle(HolepointError):
    code = "GRADIENT_TOO_SMALL_ON_CIRCLE"


class UnderSampled(HolepointError):
    code = "UNDER_SAMPLED"


class BoundaryConditionViolated(HolepointError):
    code = "BOUNDARY_CONDITION_VIOLATED"


class PairingAmbiguous(HolepointError):
    code = "PAIRING_AMBIGUOUS"


class ZeroGradient(HolepointError):
    code = "ZERO_GRADIENT"


class DegenerateHessian(HolepointError):
    code = "DEGENERATE_HESSIAN"


class NonpositiveF(HolepointError):
    code = "NONPOSITIVE_F"


class TooCloseToHole(HolepointError):
    code = "TOO_CLOSE_TO_HOLE"


class ZeroVector(HolepointError):
    code = "ZERO_VECTOR"


class InsufficientData(HolepointError):
    code = "INSUFFICIENT_DATA"


class NoSignChange(HolepointError):
    code = "NO_SIGN_CHANGE"


class ConfigInvalid(HolepointError):
    code = "CONFIG_INVALID"


class IoError(HolepointError):
    code = "IO_ERROR"
