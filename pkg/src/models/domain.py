from enum import Enum
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator


class DomainKind(str, Enum):
    DISC = "disc"
    ELLIPSE = "ellipse"
    ANNULUS_OUTER = "annulus-outer"


class LevelSetDomain(BaseModel):
    """Smooth bounded domain described by a signed indicator phi (negative inside)"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: DomainKind = Field(..., examples=["disc", "ellipse", "annulus-outer"])
    R: Optional[float] = Field(None, gt=0, description="Radius for disc and annulus-outer")
    a: Optional[float] = Field(None, gt=0, description="Ellipse semi-axis along x")
    b: Optional[float] = Field(None, gt=0, description="Ellipse semi-axis along y")

    @model_validator(mode="after")
    def _check_parameters(self) -> "LevelSetDomain":
        if self.kind == DomainKind.ELLIPSE:
            if self.a is None or self.b is None:
                raise ValueError("ellipse needs both semi-axes a and b")
        elif self.R is None:
            raise ValueError(f"{self.kind.value} needs a radius R")
        return self

    @classmethod
    def disc(cls, R: float = 1.0) -> "LevelSetDomain":
        return cls(kind=DomainKind.DISC, R=R)

    @classmethod
    def ellipse(cls, a: float, b: float) -> "LevelSetDomain":
        return cls(kind=DomainKind.ELLIPSE, a=a, b=b)

    @classmethod
    def annulus_outer(cls, R: float = 1.0) -> "LevelSetDomain":
        return cls(kind=DomainKind.ANNULUS_OUTER, R=R)

    @property
    def semi_axes(self) -> Tuple[float, float]:
        if self.kind == DomainKind.ELLIPSE:
            return self.a, self.b
        return self.R, self.R

    @property
    def bounding_box(self) -> Tuple[float, float, float, float]:
        ax, ay = self.semi_axes
        return -ax, ax, -ay, ay

    @property
    def euler_characteristic(self) -> int:
        return 1

    def phi(self, x, y) -> np.ndarray:
        """Signed indicator; the ellipse form reduces bit-for-bit to |x| - 1 when a = b = 1."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.kind == DomainKind.ELLIPSE:
            return np.hypot(x / self.a, y / self.b) - 1.0
        return np.hypot(x, y) - self.R

    def distance_estimate(self, x, y) -> np.ndarray:
        """Lower bound on the distance to the boundary for interior points (exact for discs)."""
        ax, ay = self.semi_axes
        return -self.phi(x, y) * min(ax, ay)

    def boundary_points(self, n: int) -> np.ndarray:
        ax, ay = self.semi_axes
        t = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack([ax * np.cos(t), ay * np.sin(t)])

    def outward_normals(self, points: np.ndarray) -> np.ndarray:
        ax, ay = self.semi_axes
        normals = np.column_stack([points[:, 0] / ax ** 2, points[:, 1] / ay ** 2])
        return normals / np.linalg.norm(normals, axis=1, keepdims=True)


class PuncturedDomain(BaseModel):
    """Outer domain with the closed ball B(P, eps) removed"""
    model_config = ConfigDict(frozen=True, extra="forbid")

    outer: LevelSetDomain
    P: Tuple[float, float] = Field(..., description="Hole center", examples=[(0.3, 0.0)])
    eps: float = Field(..., gt=0, description="Hole radius")

    @model_validator(mode="after")
    def _check_hole_inside(self) -> "PuncturedDomain":
        t = 2.0 * np.pi * np.arange(256) / 256
        ring_x = self.P[0] + 3.0 * self.eps * np.cos(t)
        ring_y = self.P[1] + 3.0 * self.eps * np.sin(t)
        if np.any(self.outer.phi(ring_x, ring_y) >= 0.0):
            raise ValueError(f"hole B({self.P}, {self.eps}) with margin 2*eps is not inside the outer domain")
        return self

    @property
    def bounding_box(self) -> Tuple[float, float, float, float]:
        return self.outer.bounding_box

    @property
    def euler_characteristic(self) -> int:
        return self.outer.euler_characteristic - 1

    def hole_distance(self, x, y) -> np.ndarray:
        return np.hypot(np.asarray(x) - self.P[0], np.asarray(y) - self.P[1]) - self.eps

    def phi(self, x, y) -> np.ndarray:
        return np.maximum(self.outer.phi(x, y), -self.hole_distance(x, y))

    def distance_estimate(self, x, y) -> np.ndarray:
        return np.minimum(self.outer.distance_estimate(x, y), self.hole_distance(x, y))
