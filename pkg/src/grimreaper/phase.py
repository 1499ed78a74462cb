"""Phase planes of the autonomous profile systems.

The main object is the (r, rho) system of hyperbolic grim reapers driven by
d/dz, whose orbits launched at (r0, 0) split into graphs and non-graphs at a
separatrix r*. The other planar systems get a generic endpoint
classification for batch portraits.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize
from scipy.integrate import solve_ivp

from .errors import AmbiguousDichotomyError, DomainError, IntegrationError, UnsupportedFamilyError
from .geometry import FieldKind, TranslationKind
from .integrator import (
    DEFAULT_ATOL,
    DEFAULT_RTOL,
    Event,
    EventSpec,
    Trajectory,
    default_events,
    guard_value,
    integrate,
)
from .odes import FamilySpec, planar_indices, planar_rhs, scalar_rhs

HALF_PI = math.pi / 2
AT2 = math.atan(2.0)

HYPERBOLIC_VZ = FamilySpec(TranslationKind.HYPERBOLIC, FieldKind.VZ)
VERTICAL_CPLUS = FamilySpec(TranslationKind.VERTICAL, FieldKind.CPLUS)

SEPARATRIX_BRACKET = (1e-3, HALF_PI - 1e-3)
MAX_SHOT_LENGTH = 1e3
CORNER_BOX = 1e-4
ESCAPE_Y = 1e6
BOUNDARY_Y = 1e-4  # close enough to the ideal boundary; c- orbits stiffen below this
PORTRAIT_MAX_STEPS = 20000


class PhasePoint(NamedTuple):
    u: float  # r or y
    w: float  # rho or theta

    def distance(self, other) -> float:
        return math.hypot(self.u - other[0], self.w - other[1])


class OrbitTag(enum.Enum):
    SYMMETRIC_GRAPH = "symmetric-graph"
    GRAPH = "graph"
    SEPARATRIX = "separatrix"
    NON_GRAPH = "non-graph"


# Limit points of orbits launched at (r0, 0); the last one is where non-graphs go.
CORNERS = {
    "(pi, arctan 2)": PhasePoint(math.pi, AT2),
    "(0, -arctan 2)": PhasePoint(0.0, -AT2),
    "(pi/2, pi/2)": PhasePoint(HALF_PI, HALF_PI),
    "(0, pi - arctan 2)": PhasePoint(0.0, math.pi - AT2),
}


@dataclass
class OrbitClass:
    tag: OrbitTag
    r0: float
    limits: tuple[str | None, str | None]  # (backward, forward) corner names
    end_points: tuple[PhasePoint, PhasePoint]
    events: list[Event] = field(default_factory=list)
    z_min: float = 0.0
    s_at_z_min: float = 0.0
    lambda_crossing: float | None = None  # r at the forward crossing of the nullcline
    trajectory: Trajectory | None = None

    def limit_point(self, which: str) -> PhasePoint | None:
        name = self.limits[0 if which == "backward" else 1]
        return CORNERS.get(name) if name else None


# -- nullcline, equilibria, symmetries ---------------------------------------


def nullcline_lambda(r):
    """Lambda(r) = -arctan(2 / cos r), where rho' vanishes for r != pi/2."""
    r_arr = np.asarray(r, dtype=float)
    if np.any((r_arr <= 0) | (r_arr >= math.pi)):
        raise DomainError("nullcline defined for r in (0, pi)")
    if np.any(np.abs(r_arr - HALF_PI) < 1e-12):
        raise DomainError("nullcline has a pole at r = pi/2")
    out = -np.arctan(2.0 / np.cos(r_arr))
    return float(out) if out.ndim == 0 else out


def _phase_window(fam: FamilySpec):
    if fam.translation is TranslationKind.HYPERBOLIC:
        return (1e-3, math.pi - 1e-3), (-math.pi, math.pi)
    return (1e-3, 10.0), (-math.pi, math.pi)


def equilibria(fam: FamilySpec, variant: str = "printed", grid: int = 16,
               window=None) -> list[PhasePoint]:
    """Zeros of the planar vector field, found by root polishing from a grid.

    The window defaults to the open phase strip, with y capped at 10 for the
    half-plane systems and angles in (-pi, pi].
    """
    if planar_indices(fam) is None:
        raise UnsupportedFamilyError(f"{fam.id} has no planar reduction")
    (u_lo, u_hi), (w_lo, w_hi) = window or _phase_window(fam)

    def F(p):
        try:
            du, dw = planar_rhs(fam, p[0], p[1], variant)
        except DomainError:
            return [1e3, 1e3]
        return [float(du), float(dw)]

    found: list[PhasePoint] = []
    for u0 in np.linspace(u_lo, u_hi, grid):
        for w0 in np.linspace(w_lo, w_hi, grid):
            sol = optimize.root(F, [u0, w0], method="hybr", tol=1e-14)
            if not sol.success:
                continue
            u, w = sol.x
            w = math.remainder(w, 2 * math.pi)
            if w <= -math.pi + 1e-12:
                w += 2 * math.pi
            if not (u_lo < u < u_hi and w_lo - 1e-12 <= w <= w_hi + 1e-12):
                continue
            if max(abs(v) for v in F([u, w])) > 1e-10:
                continue
            if all(math.hypot(u - p.u, w - p.w) > 1e-7 for p in found):
                found.append(PhasePoint(float(u), float(w)))
    return sorted(found)


def orbit_symmetry(s, uw, which: str, shift: int = 1):
    """Image of a sampled (r, rho) orbit under a symmetry of the system.

    ``rho-shift``: (r, rho)(s) -> (r(-s), rho(-s) + shift * pi).
    ``anti-diagonal``: (r, rho)(s) -> (pi - r(-s), -rho(-s)).
    Returns (s', uw') with s' increasing.
    """
    s = np.asarray(s, dtype=float)
    uw = np.asarray(uw, dtype=float)
    r, rho = uw[..., 0], uw[..., 1]
    if which == "rho-shift":
        if shift not in (1, -1):
            raise ValueError("shift must be +1 or -1")
        img = np.stack([r, rho + shift * math.pi], axis=-1)
    elif which == "anti-diagonal":
        img = np.stack([math.pi - r, -rho], axis=-1)
    else:
        raise ValueError(f"unknown symmetry {which!r}")
    return -s[::-1], img[::-1]


def symmetry_residual(s, uw, which: str, shift: int = 1, rtol=1e-12, atol=1e-14) -> float:
    """Max distance between a transformed orbit and the orbit re-integrated from its first point."""
    s2, uw2 = orbit_symmetry(s, uw, which, shift)
    start = [uw2[0, 0], 0.0, uw2[0, 1]]
    sol = solve_ivp(scalar_rhs(HYPERBOLIC_VZ), (s2[0], s2[-1]), start, method="DOP853",
                    rtol=rtol, atol=atol, t_eval=s2)
    r, rho = sol.y[0], sol.y[2]
    return float(np.max(np.hypot(r - uw2[:, 0], rho - uw2[:, 1])))


def r_prime_positive_on_grid(n: int = 200) -> bool:
    """r' > 0 on the open strip away from rho = +-pi/2 (checked on a grid)."""
    r = np.linspace(1e-3, math.pi - 1e-3, n)
    rho = np.linspace(-HALF_PI + 1e-3, HALF_PI - 1e-3, n)
    R, P = np.meshgrid(r, rho)
    du, _ = planar_rhs(HYPERBOLIC_VZ, R, P)
    return bool(np.all(du > 0))


# -- separatrix shooting ------------------------------------------------------


def _rho_rate(u) -> float:
    return 2 * math.cos(u[2]) + math.sin(u[2]) * math.cos(u[0])


def _shot_events() -> list[EventSpec]:
    guard = EventSpec("domain-guard", lambda s, u: guard_value(HYPERBOLIC_VZ, u), True, -1)
    hit_top = EventSpec("rho=pi/2", lambda s, u: u[2] - HALF_PI, True, 1)

    # rho' changes sign on Lambda; only the crossing with r > pi/2 ends the shot
    def lam(s, u):
        return _rho_rate(u) if u[0] > HALF_PI else 1.0

    cross = EventSpec("lambda-crossing", lam, True, -1)
    return [guard, hit_top, cross]


class ShotResult(NamedTuple):
    outcome: str  # "below" (r0 < r*) or "above" (r0 > r*)
    event: Event
    events: list[Event]


def shoot(r0: float, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, max_length=MAX_SHOT_LENGTH) -> ShotResult:
    """Forward orbit from (r0, 0): which side of the separatrix it falls on."""
    tr = integrate(HYPERBOLIC_VZ, (r0, 0.0, 0.0), (0.0, max_length), rtol, atol, events=_shot_events(),
                   raise_on_failure=False)
    for ev in tr.events:
        if ev.kind == "rho=pi/2" and ev.state[0] < HALF_PI:
            return ShotResult("below", ev, tr.events)
        if ev.kind == "lambda-crossing":
            return ShotResult("above", ev, tr.events)
    raise AmbiguousDichotomyError(
        f"orbit from r0={r0!r} neither reached rho=pi/2 with r<pi/2 nor crossed Lambda with r>pi/2 "
        f"within s<={max_length:g} (status {tr.status})",
        tr.events,
    )


@dataclass
class SeparatrixResult:
    r_star: float
    bracket: tuple[float, float]
    iterations: int
    approach_distance: float
    history: list[tuple[float, float]]
    rtol: float
    atol: float

    @property
    def width(self) -> float:
        return self.bracket[1] - self.bracket[0]


def find_separatrix(tol: float = 1e-8, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                    bracket=SEPARATRIX_BRACKET, max_length=MAX_SHOT_LENGTH) -> SeparatrixResult:
    """Bisection on r0 between orbits that end below and above the saddle (pi/2, pi/2)."""
    if tol < 1e-12:
        raise ValueError("tol must be at least 1e-12")
    lo, hi = map(float, bracket)
    if shoot(lo, rtol, atol, max_length).outcome != "below":
        raise AmbiguousDichotomyError(f"lower seed {lo} does not fall below the separatrix")
    if shoot(hi, rtol, atol, max_length).outcome != "above":
        raise AmbiguousDichotomyError(f"upper seed {hi} does not fall above the separatrix")
    history = [(lo, hi)]
    it = 0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if shoot(mid, rtol, atol, max_length).outcome == "below":
            lo = mid
        else:
            hi = mid
        history.append((lo, hi))
        it += 1
    r_star = 0.5 * (lo + hi)
    dist = separatrix_approach(r_star, rtol, atol, max_length)
    return SeparatrixResult(r_star, (lo, hi), it, dist, history, rtol, atol)


def separatrix_approach(r0: float, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, max_length=MAX_SHOT_LENGTH) -> float:
    """Closest distance of the forward orbit from (r0, 0) to the saddle (pi/2, pi/2)."""
    tr = integrate(HYPERBOLIC_VZ, (r0, 0.0, 0.0), (0.0, max_length), rtol, atol, events=_shot_events(),
                   raise_on_failure=False)
    d = np.hypot(tr.states[:, 0] - HALF_PI, tr.states[:, 2] - HALF_PI)
    return float(np.min(d))


@functools.lru_cache(maxsize=8)
def separatrix(tol: float = 1e-8, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> SeparatrixResult:
    """Cached :func:`find_separatrix`; the computation is deterministic."""
    return find_separatrix(tol, rtol, atol)


# -- orbit classification ----------------------------------------------------


def _corner_events() -> list[EventSpec]:
    evs = []
    for name, c in CORNERS.items():
        def box(s, u, c=c):
            return max(abs(u[0] - c.u), abs(u[2] - c.w)) - CORNER_BOX

        evs.append(EventSpec(f"corner {name}", box, True, -1))
    return evs


def _classification_events() -> list[EventSpec]:
    guard = EventSpec("domain-guard", lambda s, u: guard_value(HYPERBOLIC_VZ, u), True, -1)
    lam = EventSpec("lambda-crossing", lambda s, u: _rho_rate(u))
    top = EventSpec("rho=pi/2", lambda s, u: u[2] - HALF_PI)
    return [guard, lam, top] + _corner_events()


def _limit_name(events: list[Event], side: str) -> str | None:
    hits = [e for e in events if e.kind.startswith("corner ")]
    if not hits:
        return None
    ev = hits[-1] if side == "forward" else hits[0]
    return ev.kind[len("corner "):]


def classify_orbit(r0: float, r_star: float | None = None, max_length: float = 200.0,
                   rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL, separatrix_tol: float = 1e-8) -> OrbitClass:
    """Tag the orbit through (r0, 0) and find where both of its ends go."""
    if not 0 < r0 <= HALF_PI:
        raise DomainError(f"r0 must lie in (0, pi/2], got {r0!r}")
    if r_star is None:
        r_star = separatrix().r_star
    tr = integrate(HYPERBOLIC_VZ, (r0, 0.0, 0.0), (-max_length, max_length), rtol, atol,
                   events=_classification_events(), raise_on_failure=False)
    if abs(r0 - HALF_PI) <= 1e-12:
        tag = OrbitTag.SYMMETRIC_GRAPH
    elif abs(r0 - r_star) <= separatrix_tol:
        tag = OrbitTag.SEPARATRIX
    elif r0 > r_star:
        tag = OrbitTag.GRAPH
    else:
        tag = OrbitTag.NON_GRAPH
    back = [e for e in tr.events if e.s < 0]
    fwd = [e for e in tr.events if e.s > 0]
    ends = (PhasePoint(tr.states[0, 0], tr.states[0, 2]), PhasePoint(tr.states[-1, 0], tr.states[-1, 2]))
    lam = [e for e in fwd if e.kind == "lambda-crossing"]
    z = tr.states[:, 1]
    i = int(np.argmin(z))
    return OrbitClass(
        tag=tag,
        r0=float(r0),
        limits=(_limit_name(back, "backward"), _limit_name(fwd, "forward")),
        end_points=ends,
        events=tr.events,
        z_min=float(z[i]),
        s_at_z_min=float(tr.s[i]),
        lambda_crossing=lam[0].state[0] if lam else None,
        trajectory=tr,
    )


# -- periodic orbits ---------------------------------------------------------


@dataclass
class ClosedOrbit:
    initial: PhasePoint
    period: float
    return_distance: float
    trajectory: Trajectory


def closed_orbit(fam: FamilySpec, u0: float, w0: float = 0.0, rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL,
                 max_length: float = 200.0) -> ClosedOrbit:
    """First return of the planar orbit through (u0, w0) to the line w = w0.

    The return is counted in the direction the orbit leaves with, so the
    event ends one full loop. Raises IntegrationError if no return happens.
    """
    idx = planar_indices(fam)
    if idx is None:
        raise UnsupportedFamilyError(f"{fam.id} has no planar reduction")
    i, j = idx
    state = [0.0, 0.0, 0.0]
    state[i], state[j] = u0, w0
    d = scalar_rhs(fam)(0.0, state)
    direction = 1 if d[j] > 0 else -1
    if d[j] == 0:
        raise IntegrationError(f"({u0}, {w0}) is stationary in the angle; no loop to close")
    guard = EventSpec("domain-guard", lambda s, u: guard_value(fam, u), True, -1)
    ret = EventSpec("return", lambda s, u: u[j] - w0, True, direction)
    evs = [guard, ret]
    if fam.translation is not TranslationKind.HYPERBOLIC:
        evs += [EventSpec("boundary", lambda s, u: u[i] - BOUNDARY_Y, True, -1),
                EventSpec("escape", lambda s, u: u[i] - ESCAPE_Y, True, 1)]
    tr = integrate(fam, state, (0.0, max_length), rtol, atol, events=evs, raise_on_failure=False,
                   max_steps=PORTRAIT_MAX_STEPS)
    hits = tr.events_named("return")
    if not hits:
        raise IntegrationError(f"orbit through ({u0}, {w0}) did not return within s <= {max_length}", tr)
    end = hits[0].state
    dist = math.hypot(end[i] - u0, end[j] - w0)
    return ClosedOrbit(PhasePoint(u0, w0), hits[0].s, dist, tr)


# -- batch portraits ---------------------------------------------------------


@dataclass
class PortraitOrbit:
    initial: PhasePoint
    tag: str
    ends: tuple[str, str]  # (backward, forward) endpoint labels
    s: np.ndarray
    uw: np.ndarray
    events: list[Event]
    period: float | None = None
    return_distance: float | None = None


@dataclass
class PortraitDataset:
    family_id: str
    orbits: list[PortraitOrbit]
    equilibria: list[PhasePoint]


def _end_label(fam: FamilySpec, tr: Trajectory, at_start: bool) -> str:
    i, j = planar_indices(fam)
    st = tr.states[0] if at_start else tr.states[-1]
    name = [e.kind for e in tr.events if (e.s < 0) == at_start and e.kind in
            ("domain-guard", "escape", "boundary", "equilibrium")]
    if fam.translation is TranslationKind.HYPERBOLIC:
        for cname, c in CORNERS.items():
            if max(abs(st[0] - c.u), abs(st[2] - c.w)) <= 10 * CORNER_BOX:
                return f"corner {cname}"
    if name:
        n = name[0] if at_start else name[-1]
        if n in ("domain-guard", "boundary"):
            return "y->0" if fam.translation is not TranslationKind.HYPERBOLIC else "r->boundary"
        if n == "escape":
            return "y->inf"
        return "equilibrium"
    if fam.translation is not TranslationKind.HYPERBOLIC and len(tr.s) > 1:
        # no event fired: report the drift of y over the last stretch
        k = -1 if not at_start else 0
        y_end, y_in = tr.states[k, i], tr.states[-2 if k == -1 else 1, i]
        if y_end < y_in and y_end < 0.1:
            return "y->0 (slow)"
    return "open"


def _portrait_events(fam: FamilySpec) -> list[EventSpec]:
    evs = [e for e in default_events(fam) if e.name in ("domain-guard", "equilibrium")]
    if fam.translation is not TranslationKind.HYPERBOLIC:
        ui = planar_indices(fam)[0]
        evs.append(EventSpec("boundary", lambda s, u: u[ui] - BOUNDARY_Y, True, -1))
        evs.append(EventSpec("escape", lambda s, u: u[ui] - ESCAPE_Y, True, 1))
    else:
        evs += _corner_events()
    return evs


def planar_portrait(fam: FamilySpec, grid: Sequence[tuple[float, float]], span=(-40.0, 40.0),
                    variant: str = "printed", rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> PortraitDataset:
    """Integrate an orbit through each grid point and label its two ends.

    Orbits that come back to their launch point are tagged ``closed`` with
    their period. Deterministic for a fixed grid.
    """
    idx = planar_indices(fam)
    if idx is None or (fam.translation is TranslationKind.VERTICAL and fam.field is FieldKind.VZ):
        raise UnsupportedFamilyError(f"{fam.id} is not one of the planar phase systems")
    if fam.translation is TranslationKind.PARABOLIC and fam.field not in (FieldKind.CPLUS, FieldKind.CMINUS):
        raise UnsupportedFamilyError(f"{fam.id} is not one of the planar phase systems")
    i, j = idx
    orbits = []
    for u0, w0 in grid:
        state = [0.0, 0.0, 0.0]
        state[i], state[j] = float(u0), float(w0)
        period = dist = None
        tag = None
        try:
            co = closed_orbit(fam, u0, w0, rtol, atol, max_length=span[1])
            if co.return_distance <= 1e-6:
                tag, period, dist = "closed", co.period, co.return_distance
        except IntegrationError:
            pass
        tr = integrate(fam, state, span, rtol, atol, events=_portrait_events(fam), variant=variant,
                       raise_on_failure=False, max_steps=PORTRAIT_MAX_STEPS)
        ends = (_end_label(fam, tr, True), _end_label(fam, tr, False))
        if tag is None:
            tag = "arc" if "open" not in ends else "open"
        orbits.append(PortraitOrbit(PhasePoint(float(u0), float(w0)), tag, ends, tr.s,
                                    tr.states[:, [i, j]], tr.events, period, dist))
    return PortraitDataset(fam.id, orbits, equilibria(fam, variant))
