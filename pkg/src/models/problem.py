from enum import Enum
from typing import Callable, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class NonlinearityKind(str, Enum):
    TORSION = "torsion"
    LINEAR_EIGEN = "linear-eigen"
    CONSTANT = "constant"
    AFFINE = "affine"
    GELFAND = "gelfand"
    CUSTOM = "custom"


class Nonlinearity(BaseModel):
    """Right-hand side f of -Δu = f(u)"""
    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)

    kind: NonlinearityKind = Field(..., examples=["torsion", "linear-eigen", "affine", "gelfand"])
    c: float = Field(1.0, description="Value of f for kind=constant")
    a: float = Field(0.0, description="f = a + b s for kind=affine")
    b: float = Field(0.0, description="f = a + b s for kind=affine")
    lam: float = Field(1.0, description="f = lam * exp(s) for kind=gelfand")
    smooth: bool = True
    f_callable: Optional[Callable] = Field(None, exclude=True)
    fprime_callable: Optional[Callable] = Field(None, exclude=True)

    @model_validator(mode="after")
    def _check_custom(self) -> "Nonlinearity":
        if self.kind == NonlinearityKind.CUSTOM and (self.f_callable is None or self.fprime_callable is None):
            raise ValueError("custom nonlinearity needs both f and f'")
        return self

    @classmethod
    def torsion(cls) -> "Nonlinearity":
        return cls(kind=NonlinearityKind.TORSION)

    @classmethod
    def linear_eigen(cls) -> "Nonlinearity":
        return cls(kind=NonlinearityKind.LINEAR_EIGEN)

    @classmethod
    def constant(cls, c: float) -> "Nonlinearity":
        return cls(kind=NonlinearityKind.CONSTANT, c=c)

    @classmethod
    def affine(cls, a: float, b: float) -> "Nonlinearity":
        return cls(kind=NonlinearityKind.AFFINE, a=a, b=b)

    @classmethod
    def gelfand(cls, lam: float = 1.0) -> "Nonlinearity":
        return cls(kind=NonlinearityKind.GELFAND, lam=lam)

    @classmethod
    def custom(cls, f: Callable, fprime: Callable, smooth: bool = True) -> "Nonlinearity":
        return cls(kind=NonlinearityKind.CUSTOM, f_callable=f, fprime_callable=fprime, smooth=smooth)

    @property
    def is_linear(self) -> bool:
        return self.kind in (NonlinearityKind.TORSION, NonlinearityKind.CONSTANT, NonlinearityKind.AFFINE)

    def f(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        if self.kind == NonlinearityKind.TORSION:
            return np.ones_like(s)
        if self.kind == NonlinearityKind.CONSTANT:
            return np.full_like(s, self.c)
        if self.kind == NonlinearityKind.AFFINE:
            return self.a + self.b * s
        if self.kind == NonlinearityKind.GELFAND:
            return self.lam * np.exp(s)
        if self.kind == NonlinearityKind.CUSTOM:
            return np.asarray(self.f_callable(s), dtype=np.float64) * np.ones_like(s)
        raise ValueError("linear-eigen has no closed f; its eigenvalue comes from the eigen solve")

    def fprime(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=np.float64)
        if self.kind in (NonlinearityKind.TORSION, NonlinearityKind.CONSTANT):
            return np.zeros_like(s)
        if self.kind == NonlinearityKind.AFFINE:
            return np.full_like(s, self.b)
        if self.kind == NonlinearityKind.GELFAND:
            return self.lam * np.exp(s)
        if self.kind == NonlinearityKind.CUSTOM:
            return np.asarray(self.fprime_callable(s), dtype=np.float64) * np.ones_like(s)
        raise ValueError("linear-eigen has no closed f'")


class QuadraticPolynomial(BaseModel):
    """phi(x) = constant + linear . x + x^T quadratic x, any dimension"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    constant: float = 0.0
    linear: List[float]
    quadratic: List[List[float]]

    @model_validator(mode="after")
    def _check_shapes(self) -> "QuadraticPolynomial":
        n = len(self.linear)
        if len(self.quadratic) != n or any(len(row) != n for row in self.quadratic):
            raise ValueError("quadratic must be an N x N matrix matching linear")
        return self

    @classmethod
    def zero(cls, dimension: int) -> "QuadraticPolynomial":
        return cls(linear=[0.0] * dimension, quadratic=[[0.0] * dimension for _ in range(dimension)])

    @property
    def dimension(self) -> int:
        return len(self.linear)

    def value(self, x) -> np.ndarray:
        """Evaluate at points of shape (..., N)"""
        x = np.asarray(x, dtype=np.float64)
        A = np.asarray(self.quadratic)
        return self.constant + x @ np.asarray(self.linear) + np.einsum("...i,ij,...j->...", x, A, x)

    def laplacian(self) -> float:
        return 2.0 * float(np.trace(np.asarray(self.quadratic)))
