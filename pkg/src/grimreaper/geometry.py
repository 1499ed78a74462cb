"""Metric, orthonormal frame and translation groups of H^2 x R.

Everything lives in the upper half-space model {(x, y, z) : y > 0} with
metric (dx^2 + dy^2) / y^2 + dz^2. The global orthonormal frame is

    E1 = y d/dx,   E2 = y d/dy,   E3 = d/dz

so frame coefficients of a coordinate vector u are (u_x / y, u_y / y, u_z)
and the metric becomes the Euclidean dot product of frame coefficients.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError

#: Points with y below this are treated as having reached the ideal boundary.
Y_GUARD = 1e-12


class FieldKind(enum.Enum):
    """Vector fields that can drive the translator equation H = <N, X>."""

    VZ = "vz"  # Killing, d/dz
    PX = "px"  # Killing, d/dx
    HXY = "hxy"  # Killing, x d/dx + y d/dy
    CPLUS = "c+"  # conformal, +d/dy
    CMINUS = "c-"  # conformal, -d/dy

    @property
    def is_killing(self) -> bool:
        return self in (FieldKind.VZ, FieldKind.PX, FieldKind.HXY)

    @property
    def label(self) -> str:
        return _FIELD_LABELS[self]


_FIELD_LABELS = {
    FieldKind.VZ: "d/dz",
    FieldKind.PX: "d/dx",
    FieldKind.HXY: "x d/dx + y d/dy",
    FieldKind.CPLUS: "+d/dy",
    FieldKind.CMINUS: "-d/dy",
}


class TranslationKind(enum.Enum):
    VERTICAL = "vertical"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"

    @property
    def generator(self) -> FieldKind:
        """Killing field whose flow is this translation group."""
        return {
            TranslationKind.VERTICAL: FieldKind.VZ,
            TranslationKind.PARABOLIC: FieldKind.PX,
            TranslationKind.HYPERBOLIC: FieldKind.HXY,
        }[self]


@dataclass(frozen=True)
class PointHxR:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not self.y >= Y_GUARD:
            raise DomainError(f"point ({self.x}, {self.y}, {self.z}) has y < {Y_GUARD}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)


class FrameVector(NamedTuple):
    """Coefficients of a tangent vector along (E1, E2, E3)."""

    a1: float
    a2: float
    a3: float

    def dot(self, other: "FrameVector") -> float:
        return self.a1 * other.a1 + self.a2 * other.a2 + self.a3 * other.a3

    def norm(self) -> float:
        return math.sqrt(self.dot(self))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


def _check_y(y) -> None:
    if np.any(np.asarray(y) < Y_GUARD):
        raise DomainError(f"y below domain guard {Y_GUARD}")


def metric_inner(p: PointHxR, u: Sequence[float], v: Sequence[float]) -> float:
    """Riemannian inner product of coordinate vectors u, v at p."""
    _check_y(p.y)
    return (u[0] * v[0] + u[1] * v[1]) / p.y**2 + u[2] * v[2]


def metric_inner_arr(y, u, v):
    """Vectorised metric_inner; u, v have shape (..., 3), y shape (...)."""
    u = np.asarray(u)
    v = np.asarray(v)
    return (u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]) / y**2 + u[..., 2] * v[..., 2]


def to_frame(y, u):
    """Coordinate components (..., 3) -> frame coefficients (..., 3)."""
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.stack([u[..., 0] / y, u[..., 1] / y, u[..., 2]], axis=-1)


def from_frame(y, a):
    a = np.asarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.stack([a[..., 0] * y, a[..., 1] * y, a[..., 2]], axis=-1)


def field_frame_coords(kind: FieldKind, x, y):
    """Frame coefficients of the field at (x, y, .); broadcasts over arrays."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    zero = np.zeros(np.broadcast(x, y).shape)
    one = zero + 1.0
    if kind is FieldKind.VZ:
        comps = (zero, zero, one)
    elif kind is FieldKind.PX:
        comps = (one / y, zero, zero)
    elif kind is FieldKind.HXY:
        comps = (x / y, one, zero)
    elif kind is FieldKind.CPLUS:
        comps = (zero, one / y, zero)
    elif kind is FieldKind.CMINUS:
        comps = (zero, -one / y, zero)
    else:  # pragma: no cover
        raise ValueError(kind)
    return np.stack(comps, axis=-1)


def field_coords(kind: FieldKind, points):
    """Coordinate components of the field at points of shape (..., 3)."""
    points = np.asarray(points, dtype=float)
    x, y = points[..., 0], points[..., 1]
    return from_frame(y, field_frame_coords(kind, x, y))


def field_in_frame(kind: FieldKind, p: PointHxR) -> FrameVector:
    _check_y(p.y)
    return FrameVector(*(float(c) for c in field_frame_coords(kind, p.x, p.y)))


_CONNECTION = {(1, 1): FrameVector(0.0, 1.0, 0.0), (1, 2): FrameVector(-1.0, 0.0, 0.0)}


def connection_frame(i: int, j: int) -> FrameVector:
    """Levi-Civita connection nabla_{E_i} E_j in frame coefficients."""
    if i not in (1, 2, 3) or j not in (1, 2, 3):
        raise ValueError(f"frame indices must be in 1..3, got ({i}, {j})")
    return _CONNECTION.get((i, j), FrameVector(0.0, 0.0, 0.0))


def christoffel(y) -> np.ndarray:
    """Coordinate Christoffel symbols Gamma[k, i, j] at height y.

    Only the hyperbolic factor contributes: Gamma^x_xy = Gamma^x_yx = -1/y,
    Gamma^y_xx = 1/y, Gamma^y_yy = -1/y.
    """
    _check_y(y)
    g = np.zeros((3, 3, 3))
    g[0, 0, 1] = g[0, 1, 0] = -1.0 / y
    g[1, 0, 0] = 1.0 / y
    g[1, 1, 1] = -1.0 / y
    return g


def christoffel_term(y, u, v):
    """Gamma(u, v) for coordinate vectors of shape (..., 3), vectorised."""
    u = np.asarray(u)
    v = np.asarray(v)
    gx = -(u[..., 0] * v[..., 1] + u[..., 1] * v[..., 0]) / y
    gy = (u[..., 0] * v[..., 0] - u[..., 1] * v[..., 1]) / y
    return np.stack([gx, gy, np.zeros_like(gx)], axis=-1)


def translate_coords(kind: TranslationKind, t, points):
    """Apply the translation of parameter t to points of shape (..., 3)."""
    points = np.asarray(points, dtype=float)
    t = np.asarray(t, dtype=float)
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    if kind is TranslationKind.VERTICAL:
        out = (x + 0 * t, y + 0 * t, z + t)
    elif kind is TranslationKind.PARABOLIC:
        out = (x + t, y + 0 * t, z + 0 * t)
    elif kind is TranslationKind.HYPERBOLIC:
        e = np.exp(t)
        out = (e * x, e * y, z + 0 * t)
    else:  # pragma: no cover
        raise ValueError(kind)
    return np.stack(np.broadcast_arrays(*out), axis=-1)


def translate(kind: TranslationKind, t: float, p: PointHxR) -> PointHxR:
    x, y, z = translate_coords(kind, t, p.as_array())
    return PointHxR(float(x), float(y), float(z))


def translation_differential(kind: TranslationKind, t: float) -> np.ndarray:
    """Jacobian of translate(kind, t, .); constant in the point."""
    if kind is TranslationKind.HYPERBOLIC:
        e = math.exp(t)
        return np.diag([e, e, 1.0])
    return np.eye(3)
