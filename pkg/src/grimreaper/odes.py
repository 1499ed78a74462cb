"""Catalog of grim-reaper families and their profile ODEs.

A family is a translation group (the invariance) paired with the vector
field of the translator equation H = <N, X>. Parabolic grim reapers driven by
d/dz also come in a tilted variant whose rulings have slope v3.

Angle equations are transcribed as printed in the source classification.
Where the printed equation turns out not to satisfy the translator identity
(the audit in :mod:`grimreaper.oracle` decides), the equation derived directly
from the closed-form H and N is available as ``variant="consistent"``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import (
    DomainError,
    NoClosedFormError,
    RigidFamilyError,
    UnsupportedFamilyError,
)
from .geometry import Y_GUARD, FieldKind, TranslationKind
from .surfaces import SurfaceKind, closed_form_residual, mean_curvature, pairing

V, P, H = TranslationKind.VERTICAL, TranslationKind.PARABOLIC, TranslationKind.HYPERBOLIC


class FamilyClass(enum.Enum):
    EXPLICIT = "explicit"
    ODE_ONLY = "ode"
    MINIMAL = "minimal"
    RIGID_SLICES = "rigid-slices"
    RIGID_PLANE_AND_SLICES = "rigid-plane-and-slices"

    @property
    def is_rigid(self) -> bool:
        return self in (FamilyClass.RIGID_SLICES, FamilyClass.RIGID_PLANE_AND_SLICES)


_CLASS_TABLE = {
    (V, FieldKind.VZ): FamilyClass.MINIMAL,
    (P, FieldKind.VZ): FamilyClass.EXPLICIT,
    (H, FieldKind.VZ): FamilyClass.ODE_ONLY,
    (V, FieldKind.PX): FamilyClass.ODE_ONLY,
    (P, FieldKind.PX): FamilyClass.MINIMAL,
    (H, FieldKind.PX): FamilyClass.RIGID_SLICES,
    (V, FieldKind.HXY): FamilyClass.ODE_ONLY,
    (P, FieldKind.HXY): FamilyClass.EXPLICIT,
    (H, FieldKind.HXY): FamilyClass.MINIMAL,
    (V, FieldKind.CPLUS): FamilyClass.ODE_ONLY,
    (V, FieldKind.CMINUS): FamilyClass.ODE_ONLY,
    (P, FieldKind.CPLUS): FamilyClass.ODE_ONLY,
    (P, FieldKind.CMINUS): FamilyClass.ODE_ONLY,
    (H, FieldKind.CPLUS): FamilyClass.RIGID_PLANE_AND_SLICES,
    (H, FieldKind.CMINUS): FamilyClass.RIGID_PLANE_AND_SLICES,
}

_SURFACE_OF = {V: SurfaceKind.VERTICAL, P: SurfaceKind.PARABOLIC, H: SurfaceKind.HYPERBOLIC}


@dataclass(frozen=True)
class FamilySpec:
    translation: TranslationKind
    field: FieldKind
    tilt: float | None = None

    def __post_init__(self):
        if self.tilt is not None:
            if (self.translation, self.field) != (P, FieldKind.VZ):
                raise ValueError("only parabolic d/dz grim reapers have a tilted variant")
            object.__setattr__(self, "tilt", float(self.tilt))

    @property
    def family_class(self) -> FamilyClass:
        return _CLASS_TABLE[(self.translation, self.field)]

    @property
    def surface_kind(self) -> SurfaceKind:
        # v3 = 0 is the untilted parabolic surface
        if self.tilt:
            return SurfaceKind.TILTED_RULED
        return _SURFACE_OF[self.translation]

    @property
    def id(self) -> str:
        base = f"{self.translation.value}-{self.field.value}"
        if self.tilt is not None:
            return f"{base}-tilted:{self.tilt!r}"
        return base

    @classmethod
    def from_id(cls, text: str) -> "FamilySpec":
        tilt = None
        body = text.strip().lower()
        if "-tilted:" in body:
            body, _, v = body.partition("-tilted:")
            tilt = float(v)
        try:
            trans, field = body.split("-", 1)
            return cls(TranslationKind(trans), FieldKind(field), tilt)
        except ValueError as exc:
            raise ValueError(f"unknown family id {text!r}") from exc

    def __str__(self) -> str:
        return self.id


def family(translation: str, field: str, tilt: float | None = None) -> FamilySpec:
    return FamilySpec(TranslationKind(translation), FieldKind(field), tilt)


ALL_FAMILIES = tuple(FamilySpec(t, f) for (t, f) in _CLASS_TABLE)
TILTED_SLOPES = (0.5, 1.0, 2.0)


def non_rigid_families(include_tilted: bool = True) -> list[FamilySpec]:
    fams = [f for f in ALL_FAMILIES if not f.family_class.is_rigid]
    if include_tilted:
        fams += [FamilySpec(P, FieldKind.VZ, v3) for v3 in TILTED_SLOPES]
    return fams


# Printed angle equations, kept verbatim for reports.
PRINTED_FORMS = {
    (V, FieldKind.VZ): "theta' = -cos(theta)",
    (P, FieldKind.VZ): "theta' = 2 cos(theta) + sin(theta)",
    "tilted": "theta' = 2 cos(theta) + sin(theta) (1 + 2 v3^2 cos^2(theta) y^2) / (1 + v3^2 y^2)",
    (H, FieldKind.VZ): "rho' = 2 cos(rho) + sin(rho) cos(r)",
    (V, FieldKind.PX): "theta' = -cos(theta) - 2 sin(theta) / y",
    (P, FieldKind.PX): "theta' = sin(theta)",
    (V, FieldKind.HXY): "theta' = cos(theta) - 2 x sin(theta) / y",
    (P, FieldKind.HXY): "theta' = -sin(theta)",
    (H, FieldKind.HXY): "rho' = cos(r) sin(rho)",
    (V, FieldKind.CPLUS): "theta' = cos(theta) (2 - y) / y",
    (V, FieldKind.CMINUS): "theta' = cos(theta) (y - 2) / y",
    (P, FieldKind.CPLUS): "theta' = -sin(theta) (y + 2) / y",
    (P, FieldKind.CMINUS): "theta' = -sin(theta) (y - 2) / y",
}

CONSISTENT_FORMS = {
    (V, FieldKind.CMINUS): "theta' = -cos(theta) (y + 2) / y",
    (P, FieldKind.CPLUS): "theta' = sin(theta) (y - 2) / y",
    (P, FieldKind.CMINUS): "theta' = sin(theta) (y + 2) / y",
    "tilted": "theta' = (2 cos(theta) + sin(theta) + 2 v3^2 y^2 cos^2(theta) (sin(theta) + cos(theta)))"
    " / (1 + v3^2 y^2)",
}


def printed_form(fam: FamilySpec) -> str:
    return PRINTED_FORMS["tilted" if fam.tilt is not None else (fam.translation, fam.field)]


def consistent_form(fam: FamilySpec) -> str | None:
    key = "tilted" if fam.tilt is not None else (fam.translation, fam.field)
    return CONSISTENT_FORMS.get(key)


# exponent k of cos(theta) e^{-2/y} / y^k for vertical c+, fixed by the drift
# comparison in tests/test_odes.py::test_first_integral_exponent_selection
FIRST_INTEGRAL_EXPONENT = 1
FIRST_INTEGRAL_PRINTED = "cos(theta) = c y^2 e^(2/y)"


def _angle_rate(fam: FamilySpec, a, b, ang, variant: str):
    key = (fam.translation, fam.field)
    c, s = np.cos(ang), np.sin(ang)
    if fam.tilt is not None:
        k = fam.tilt**2 * a**2
        if variant == "consistent":
            return (2 * c + s + 2 * k * c**2 * (s + c)) / (1 + k)
        return 2 * c + s * (1 + 2 * k * c**2) / (1 + k)
    if variant == "consistent" and key in CONSISTENT_FORMS:
        y = b if fam.translation is V else a
        if key == (V, FieldKind.CMINUS):
            return -c * (y + 2) / y
        if key == (P, FieldKind.CPLUS):
            return s * (y - 2) / y
        if key == (P, FieldKind.CMINUS):
            return s * (y + 2) / y
    if fam.translation is V:
        x, y = a, b
        if fam.field is FieldKind.VZ:
            return -c
        if fam.field is FieldKind.PX:
            return -c - 2 * s / y
        if fam.field is FieldKind.HXY:
            return c - 2 * x * s / y
        if fam.field is FieldKind.CPLUS:
            return c * (2 - y) / y
        if fam.field is FieldKind.CMINUS:
            return c * (y - 2) / y
    elif fam.translation is P:
        y = a
        if fam.field is FieldKind.VZ:
            return 2 * c + s
        if fam.field is FieldKind.PX:
            return s
        if fam.field is FieldKind.HXY:
            return -s
        if fam.field is FieldKind.CPLUS:
            return -s * (y + 2) / y
        if fam.field is FieldKind.CMINUS:
            return -s * (y - 2) / y
    else:
        r = a
        if fam.field is FieldKind.VZ:
            return 2 * c + s * np.cos(r)
        if fam.field is FieldKind.HXY:
            return np.cos(r) * s
    raise RigidFamilyError(f"{fam.id} is rigid; it has no profile ODE")  # pragma: no cover


def _guard(fam: FamilySpec, a, b) -> None:
    if fam.translation is H:
        if np.any((a <= 0) | (a >= np.pi)):
            raise DomainError(f"r left (0, pi) for {fam.id}")
    else:
        y = b if fam.translation is V else a
        if np.any(y < Y_GUARD):
            raise DomainError(f"y below {Y_GUARD} for {fam.id}")


def rhs(fam: FamilySpec, state, variant: str = "printed") -> np.ndarray:
    """Arc-length derivative of the full profile state.

    Works on a single state (3,) or a stack (..., 3).
    """
    if fam.family_class.is_rigid:
        raise RigidFamilyError(f"{fam.id} admits only rigid solutions: {rigid_names(fam)}")
    st = np.asarray(state, dtype=float)
    a, b, ang = st[..., 0], st[..., 1], st[..., 2]
    _guard(fam, a, b)
    c, s = np.cos(ang), np.sin(ang)
    if fam.translation is V:
        d0, d1 = b * c, b * s
    elif fam.translation is P:
        d0, d1 = a * c, s
    else:
        d0, d1 = np.sin(a) * c, s
    d2 = _angle_rate(fam, a, b, ang, variant)
    return np.stack(np.broadcast_arrays(d0, d1, d2), axis=-1)


def scalar_rhs(fam: FamilySpec, variant: str = "printed") -> Callable[[float, list], list]:
    """Float-only right-hand side for the stepper; skips the domain checks."""
    if fam.family_class.is_rigid:
        raise RigidFamilyError(f"{fam.id} admits only rigid solutions: {rigid_names(fam)}")
    trans = fam.translation
    cos, sin = math.cos, math.sin

    def f(s, u):
        a, b, ang = u
        c, sn = cos(ang), sin(ang)
        if trans is V:
            d0, d1 = b * c, b * sn
        elif trans is P:
            d0, d1 = a * c, sn
        else:
            d0, d1 = sin(a) * c, sn
        return [d0, d1, float(_angle_rate(fam, a, b, ang, variant))]

    return f


def angle_rate(fam: FamilySpec, state, variant: str = "printed"):
    return rhs(fam, state, variant)[..., 2]


def vertical_h_graph_rhs(x: float, u) -> np.ndarray:
    """Vertical h-grim reaper written as a graph y(x): u = (y, y')."""
    y, yp = u
    return np.array([yp, (y - 2 * x * yp) * (1 + yp**2) / y**2])


def diagnostics(fam: FamilySpec, states, variant: str = "printed"):
    """(angle_rate, H, <N,X>) along a stack of states from closed forms.

    Tilted families have no closed-form H or N; those columns are NaN.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    w = angle_rate(fam, states, variant)
    kind = fam.surface_kind
    if kind is SurfaceKind.TILTED_RULED:
        nan = np.full(len(states), np.nan)
        return w, nan, nan.copy()
    Hv = mean_curvature(kind, states, w)
    pv = pairing(kind, fam.field, states, 0.0)
    return w, np.asarray(Hv, dtype=float), np.asarray(pv, dtype=float)


# -- closed forms -----------------------------------------------------------

SQRT5 = math.sqrt(5.0)

_BRANCHES = {
    (P, FieldKind.VZ): ("bigraph", "trivial"),
    (P, FieldKind.HXY): ("bigraph", "slice"),
    (V, FieldKind.VZ): ("half-circle",),
    (P, FieldKind.PX): ("arc", "slice"),
    (H, FieldKind.HXY): ("slice", "plane"),
    (V, FieldKind.CPLUS): ("plane-y2", "plane-x0"),
    (V, FieldKind.CMINUS): ("plane-y2", "plane-x0"),
}


def closed_form_branches(fam: FamilySpec) -> tuple[str, ...]:
    if fam.tilt is not None:
        return ()
    return _BRANCHES.get((fam.translation, fam.field), ())


def parabolic_v_angle(s):
    """Non-constant solution of theta' = 2 cos theta + sin theta."""
    return 2 * np.arctan(0.5 * (1 + SQRT5 * np.tanh(SQRT5 * s / 2)))


def closed_form(fam: FamilySpec, s, branch: str | None = None, c1: float = 1.0, c2: float = 0.0):
    """Explicit profile state at arc length s (scalar or array).

    ``c1``/``c2`` are the integration constants of the printed solutions; for
    slices and planes ``c2`` is the constant coordinate.
    """
    branches = closed_form_branches(fam)
    if not branches:
        raise NoClosedFormError(f"{fam.id} has no closed-form profile")
    branch = branch or branches[0]
    if branch not in branches:
        raise NoClosedFormError(f"{fam.id} has no closed form named {branch!r}; try {branches}")
    s = np.asarray(s, dtype=float)
    key = (fam.translation, fam.field)
    one = np.ones_like(s)
    if key == (P, FieldKind.VZ):
        if branch == "trivial":
            state = (np.exp(s / SQRT5), -2 * s / SQRT5, -math.atan(2.0) * one)
        else:
            at = np.arctan(0.5 * (1 + SQRT5 * np.tanh(SQRT5 * s / 2)))
            a5 = SQRT5 * s
            y = (10 / (SQRT5 * np.sinh(a5) + 5 * np.cosh(a5))) ** 0.2 * np.exp(0.8 * at)
            z = 0.4 * (at + np.log((5 * np.cosh(a5) + SQRT5 * np.sinh(a5)) / 10))
            state = (y, z, parabolic_v_angle(s))
    elif key == (P, FieldKind.HXY):
        if branch == "slice":
            state = (c1 * np.exp(s), c2 * one, 0 * s)
        else:
            state = (2 * c1 * np.cosh(s), 2 * (c2 + np.arctan(np.exp(s))), 2 * np.arctan(np.exp(-s)))
    elif key == (V, FieldKind.VZ):
        state = (c1 * np.tanh(s) + c2, c1 / np.cosh(s), -np.arctan(np.sinh(s)))
    elif key == (P, FieldKind.PX):
        if branch == "slice":
            state = (c1 * np.exp(s), c2 * one, 0 * s)
        else:
            state = (c1 / np.cosh(s), c2 + 2 * np.arctan(np.exp(s)), np.pi / 2 + np.arctan(np.sinh(s)))
    elif key == (H, FieldKind.HXY):
        if branch == "plane":
            state = (np.pi / 2 * one, s + c2, np.pi / 2 * one)
        else:
            state = (2 * np.arctan(np.exp(s)), c2 * one, 0 * s)
    else:  # vertical c+/c-
        if branch == "plane-y2":
            state = (2 * s + c2, 2 * one, 0 * s)
        else:
            state = (c2 * one, c1 * np.exp(s), np.pi / 2 * one)
    return np.stack(np.broadcast_arrays(*state), axis=-1)


# -- first integrals --------------------------------------------------------


def has_first_integral(fam: FamilySpec) -> bool:
    return fam.tilt is None and (fam.translation, fam.field) in (
        (H, FieldKind.HXY),
        (V, FieldKind.CPLUS),
    )


def first_integral(fam: FamilySpec, state, exponent: int | None = None):
    """Conserved quantity along profile curves of the family.

    Hyperbolic minimal: sin r / sin rho. Vertical c+: cos(theta) e^{-2/y} / y^k.
    Array input returns NaN on the singular leaf sin rho = 0.
    """
    if not has_first_integral(fam):
        raise UnsupportedFamilyError(f"no first integral known for {fam.id}")
    st = np.asarray(state, dtype=float)
    a, b, ang = st[..., 0], st[..., 1], st[..., 2]
    if fam.translation is H:
        srho = np.sin(ang)
        singular = np.abs(srho) < 1e-14
        if st.ndim == 1 and singular:
            raise DomainError("first integral singular on the leaf sin(rho) = 0")
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(singular, np.nan, np.sin(a) / srho)
    k = FIRST_INTEGRAL_EXPONENT if exponent is None else exponent
    y = b
    return np.cos(ang) * np.exp(-2.0 / y) / y**k


# -- rigid families ---------------------------------------------------------


class RigidSolution(NamedTuple):
    name: str
    kind: SurfaceKind
    profile: Callable[[np.ndarray], np.ndarray]
    angle_rate: float
    max_residual: float


def _slice_profile(s, z0=0.0):
    s = np.asarray(s, dtype=float)
    return np.stack(np.broadcast_arrays(2 * np.arctan(np.exp(s)), z0 + 0 * s, 0 * s), axis=-1)


def _plane_profile(s):
    s = np.asarray(s, dtype=float)
    return np.stack(np.broadcast_arrays(np.pi / 2 + 0 * s, s, np.pi / 2 + 0 * s), axis=-1)


def rigid_names(fam: FamilySpec) -> list[str]:
    cls = fam.family_class
    if cls is FamilyClass.RIGID_SLICES:
        return ["slices z=z0"]
    if cls is FamilyClass.RIGID_PLANE_AND_SLICES:
        return ["vertical plane x=0", "slices z=z0"]
    return []


def rigid_solutions(fam: FamilySpec, n_samples: int = 100) -> list[RigidSolution]:
    """Explicit solution set of a rigid family, each with a residual check.

    The residual is evaluated from the closed-form H and N over a grid of
    (s, t); rigidity means <N, X> depends on t unless it vanishes.
    """
    if not fam.family_class.is_rigid:
        raise UnsupportedFamilyError(f"{fam.id} is not rigid")
    s = np.linspace(-3, 3, n_samples)
    ts = np.linspace(-2, 2, 5)
    candidates = []
    if fam.family_class is FamilyClass.RIGID_PLANE_AND_SLICES:
        candidates.append(("vertical plane x=0", _plane_profile))
    candidates.append(("slices z=z0", _slice_profile))
    out = []
    for name, prof in candidates:
        states = prof(s)
        worst = 0.0
        for t in ts:
            Hv = mean_curvature(SurfaceKind.HYPERBOLIC, states, 0.0)
            pv = pairing(SurfaceKind.HYPERBOLIC, fam.field, states, t)
            worst = max(worst, float(np.max(np.abs(Hv - pv))))
        out.append(RigidSolution(name, SurfaceKind.HYPERBOLIC, prof, 0.0, worst))
    return out


def residual_is_t_dependent(fam: FamilySpec, state, angle_rate_value: float = 0.0) -> bool:
    return closed_form_residual(fam.surface_kind, fam.field, state, angle_rate_value).t_dependent


# -- default initial conditions --------------------------------------------

_AT2 = math.atan(2.0)

DEFAULT_INITIAL_CONDITIONS = {
    (V, FieldKind.VZ): [(0, 1, 0), (0, 0.5, 0.3), (1, 2, -0.5), (0, 1, 1.0), (-1, 0.8, -1.2)],
    (V, FieldKind.PX): [(0, 0.5, 0), (0, 1, 0), (0, 2, 0), (0, 1, 0.5), (0, 1, 2.0)],
    (V, FieldKind.HXY): [(0, 1, 0), (0, 0.5, 0), (0.5, 1, 0.3), (-0.3, 2, -0.4), (1, 1, 1.0)],
    (V, FieldKind.CPLUS): [(0, 0.5, 0), (0, 1, 0), (0, 1.5, 0), (0, 3, 0), (0, 1, 0.7)],
    (V, FieldKind.CMINUS): [(0, 1, 0), (0, 0.5, 0.5), (0, 3, 0), (0, 2, 0.3), (0, 1, -0.8)],
    (P, FieldKind.VZ): [(1, 0, -_AT2), (1, 0, 2 * math.atan(0.5)), (1, 0, 0), (0.5, 0, 1), (2, 0, -1)],
    (P, FieldKind.PX): [(1, 0, math.pi / 2), (1, 0, 0.5), (0.5, 0, 2), (2, 0, 1), (1, 0, 0)],
    (P, FieldKind.HXY): [(2, math.pi / 2, math.pi / 2), (1, 0, 0), (1, 0, 1), (0.5, 0, 2), (3, 0, -0.5)],
    (P, FieldKind.CPLUS): [(1, 0, 0.5), (1, 0, math.pi / 2), (3, 0, 1), (0.5, 0, -0.5), (2, 0, 2)],
    (P, FieldKind.CMINUS): [(1, 0, 0.5), (1, 0, math.pi / 2), (3, 0, 1), (0.5, 0, -0.5), (2, 0, 2)],
    (H, FieldKind.VZ): [(math.pi / 2, 0, 0), (1.0, 0, 0), (0.5, 0, 0), (math.pi / 2, 0, math.pi / 2), (2, 0, 0.3)],
    (H, FieldKind.HXY): [(1, 0, 0.8), (math.pi / 2, 0, 0.5), (0.5, 0, -1), (2, 0, 1.2), (1.2, 0, 2.5)],
}
_TILTED_ICS = [(1, 0, 0), (1, 0, -1), (0.5, 0, 0.5), (2, 0, 1), (1, 0, 2)]


def default_initial_conditions(fam: FamilySpec) -> list[tuple[float, float, float]]:
    if fam.family_class.is_rigid:
        raise RigidFamilyError(f"{fam.id} admits only rigid solutions: {rigid_names(fam)}")
    if fam.tilt is not None:
        return [tuple(map(float, ic)) for ic in _TILTED_ICS]
    return [tuple(map(float, ic)) for ic in DEFAULT_INITIAL_CONDITIONS[(fam.translation, fam.field)]]


# -- planar reductions -------------------------------------------------------


def planar_indices(fam: FamilySpec) -> tuple[int, int] | None:
    """State indices (u, w) of the autonomous planar reduction, if one exists."""
    if fam.family_class.is_rigid:
        return None
    if fam.translation is V:
        return None if fam.field is FieldKind.HXY else (1, 2)
    return (0, 2)


def planar_rhs(fam: FamilySpec, u, w, variant: str = "printed"):
    """(u', w') of the planar reduction at phase point (u, w)."""
    idx = planar_indices(fam)
    if idx is None:
        raise UnsupportedFamilyError(f"{fam.id} has no planar reduction")
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    full = np.zeros(np.broadcast(u, w).shape + (3,))
    full[..., idx[0]] = u
    full[..., idx[1]] = w
    if fam.translation is V:
        full[..., 0] = 0.0
    d = rhs(fam, full, variant)
    return d[..., idx[0]], d[..., idx[1]]
