"""Translation-invariant surfaces and their closed-form normals and curvatures.

Profile states by kind (last axis of a state array):

    VERTICAL     (x, y, theta)   curve in the xy-plane, Psi = (x, y, t)
    PARABOLIC    (y, z, theta)   curve in the yz-plane, Psi = (t, y, z)
    TILTED_RULED (y, z, theta)   Psi = (t, y, z + v3 t)
    HYPERBOLIC   (r, z, rho)     Psi = (e^t cos r, e^t sin r, z)
    ROTATIONAL   (y, z)          surface of revolution about the vertical
                                 geodesic through (0, 1, 0); y in (0, 1)

Curves are parametrised by arc length, so the angle alone fixes the unit
tangent. The closed forms here cover the first three kinds; tilted and
rotational surfaces are only handled by the finite-difference oracle.
"""

from __future__ import annotations

import enum
from typing import NamedTuple

import numpy as np

from .errors import DomainError, UnsupportedKindError
from .geometry import Y_GUARD, FieldKind, FrameVector, PointHxR, field_frame_coords


class SurfaceKind(enum.Enum):
    VERTICAL = "vertical"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"
    TILTED_RULED = "tilted"
    ROTATIONAL = "rotational"


CLOSED_FORM_KINDS = (SurfaceKind.VERTICAL, SurfaceKind.PARABOLIC, SurfaceKind.HYPERBOLIC)

STATE_NAMES = {
    SurfaceKind.VERTICAL: ("x", "y", "theta"),
    SurfaceKind.PARABOLIC: ("y", "z", "theta"),
    SurfaceKind.TILTED_RULED: ("y", "z", "theta"),
    SurfaceKind.HYPERBOLIC: ("r", "z", "rho"),
    SurfaceKind.ROTATIONAL: ("y", "z"),
}


class ResidualValue(NamedTuple):
    value: float
    t_dependent: bool


def _components(state):
    st = np.asarray(state, dtype=float)
    return tuple(np.moveaxis(st, -1, 0))


def check_state(kind: SurfaceKind, state) -> None:
    comps = _components(state)
    if kind is SurfaceKind.VERTICAL:
        bad = comps[1] < Y_GUARD
    elif kind in (SurfaceKind.PARABOLIC, SurfaceKind.TILTED_RULED):
        bad = comps[0] < Y_GUARD
    elif kind is SurfaceKind.HYPERBOLIC:
        bad = ~((comps[0] > 0.0) & (comps[0] < np.pi))
    elif kind is SurfaceKind.ROTATIONAL:
        bad = ~((comps[0] > 0.0) & (comps[0] < 1.0))
    else:  # pragma: no cover
        raise ValueError(kind)
    if np.any(bad):
        raise DomainError(f"{kind.value} profile state outside its domain: {state!r}")


def immersion_coords(kind: SurfaceKind, state, t, v3: float | None = None) -> np.ndarray:
    """Vectorised Psi(s, t) given profile states; returns (..., 3) coordinates."""
    check_state(kind, state)
    t = np.asarray(t, dtype=float)
    c = _components(state)
    if kind is SurfaceKind.VERTICAL:
        x, y, _ = c
        out = (x + 0 * t, y + 0 * t, t + 0 * x)
    elif kind is SurfaceKind.PARABOLIC:
        y, z, _ = c
        out = (t + 0 * y, y + 0 * t, z + 0 * t)
    elif kind is SurfaceKind.TILTED_RULED:
        if v3 is None:
            raise ValueError("tilted surfaces need the slope v3")
        y, z, _ = c
        out = (t + 0 * y, y + 0 * t, z + v3 * t)
    elif kind is SurfaceKind.HYPERBOLIC:
        r, z, _ = c
        e = np.exp(t)
        out = (e * np.cos(r), e * np.sin(r), z + 0 * t)
    elif kind is SurfaceKind.ROTATIONAL:
        y, z = c
        d = y**2 + 1 - (y**2 - 1) * np.cos(t)
        out = (-2 * (y**2 - 1) * np.sin(t) / (2 * d), 2 * y / d, z + 0 * t)
    else:  # pragma: no cover
        raise ValueError(kind)
    return np.stack(np.broadcast_arrays(*out), axis=-1)


def immersion(kind: SurfaceKind, state, t: float, v3: float | None = None) -> PointHxR:
    x, y, z = immersion_coords(kind, state, t, v3)
    return PointHxR(float(x), float(y), float(z))


def _require_closed(kind: SurfaceKind) -> None:
    if kind not in CLOSED_FORM_KINDS:
        raise UnsupportedKindError(
            f"no closed form for {kind.value} surfaces; use the numeric oracle"
        )


def tangent_frame(kind: SurfaceKind, state) -> FrameVector:
    """Unit tangent Psi_s of the generating curve, in frame coefficients."""
    _require_closed(kind)
    a, b, ang = _components(state)
    if kind is SurfaceKind.VERTICAL:
        return FrameVector(np.cos(ang), np.sin(ang), 0 * ang)
    if kind is SurfaceKind.PARABOLIC:
        return FrameVector(0 * ang, np.cos(ang), np.sin(ang))
    r = a
    return FrameVector(-np.sin(r) * np.cos(ang), np.cos(r) * np.cos(ang), np.sin(ang))


def unit_normal(kind: SurfaceKind, state) -> FrameVector:
    _require_closed(kind)
    a, b, ang = _components(state)
    if kind is SurfaceKind.VERTICAL:
        return FrameVector(np.sin(ang), -np.cos(ang), 0 * ang)
    if kind is SurfaceKind.PARABOLIC:
        return FrameVector(0 * ang, np.sin(ang), -np.cos(ang))
    r = a
    return FrameVector(-np.sin(r) * np.sin(ang), np.cos(r) * np.sin(ang), -np.cos(ang))


def mean_curvature(kind: SurfaceKind, state, angle_rate):
    """H from the profile angle and its arc-length derivative."""
    _require_closed(kind)
    a, b, ang = _components(state)
    if kind is SurfaceKind.VERTICAL:
        return -(angle_rate + np.cos(ang)) / 2
    if kind is SurfaceKind.PARABOLIC:
        return -(angle_rate - np.sin(ang)) / 2
    return -(angle_rate - np.cos(a) * np.sin(ang)) / 2


def pairing(kind: SurfaceKind, field: FieldKind, state, t=0.0):
    """<N, X> at Psi(s, t) using the closed-form normal."""
    _require_closed(kind)
    pts = immersion_coords(kind, state, t)
    X = field_frame_coords(field, pts[..., 0], pts[..., 1])
    N = unit_normal(kind, state)
    return N.a1 * X[..., 0] + N.a2 * X[..., 1] + N.a3 * X[..., 2]


def closed_form_residual(
    kind: SurfaceKind, field: FieldKind, state, angle_rate, sign: int = 1
) -> ResidualValue:
    """H - sign * <N, X> evaluated at t = 0.

    ``t_dependent`` is set when <N, X> changes along the rulings, in which case
    no profile ODE can make the residual vanish for all t.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    p0 = pairing(kind, field, state, 0.0)
    p1 = pairing(kind, field, state, 1.0)
    t_dep = bool(np.any(np.abs(p1 - p0) > 1e-12 * (1 + np.abs(p0))))
    value = mean_curvature(kind, state, angle_rate) - sign * p0
    return ResidualValue(float(value) if np.ndim(value) == 0 else value, t_dep)
