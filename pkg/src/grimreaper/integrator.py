"""Adaptive integration of profile ODEs into sampled trajectories.

The stepper is scipy's embedded Runge-Kutta 5(4) pair driven one accepted
step at a time, so that every accepted step becomes a sample, events are
located on the step's dense output, and a failure still leaves the samples
computed so far.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from scipy import integrate as sp_integrate
from scipy.optimize import bisect

from .errors import DomainError, IntegrationError
from .geometry import Y_GUARD, TranslationKind
from .odes import (
    FamilySpec,
    diagnostics,
    first_integral,
    has_first_integral,
    planar_indices,
    scalar_rhs,
)
from .surfaces import check_state

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
EVENT_XTOL = 1e-12
EQUILIBRIUM_SPEED = 1e-10

_METHODS = {"RK45": sp_integrate.RK45, "DOP853": sp_integrate.DOP853}


class EventSpec(NamedTuple):
    """A scalar function of (s, state) whose zero crossings are events."""

    name: str
    function: Callable[[float, np.ndarray], float]
    terminal: bool = False
    direction: int = 0  # +1 only rising, -1 only falling, along the direction of travel


class Event(NamedTuple):
    kind: str
    s: float
    state: tuple


@dataclass
class Trajectory:
    """Sampled profile curve with per-sample translator diagnostics.

    Arrays are aligned with ``s`` (strictly increasing). ``residual`` is
    H - sign * <N, X> with the orientation sign that minimises its maximum.
    """

    family: FamilySpec
    s: np.ndarray
    states: np.ndarray
    angle_rate: np.ndarray
    H: np.ndarray
    pairing: np.ndarray
    residual: np.ndarray
    first_integral: np.ndarray | None
    events: list[Event] = field(default_factory=list)
    status: str = "completed"
    orientation_sign: int = 1
    variant: str = "printed"
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL

    def __len__(self) -> int:
        return len(self.s)

    def event_names(self) -> list[str]:
        return [e.kind for e in self.events]

    def events_named(self, name: str) -> list[Event]:
        return [e for e in self.events if e.kind == name]

    def max_residual(self) -> float:
        r = self.residual[np.isfinite(self.residual)]
        return float(np.max(np.abs(r))) if r.size else float("nan")

    def samples(self) -> Iterable[tuple]:
        fi = self.first_integral
        for i in range(len(self.s)):
            yield (
                self.s[i],
                tuple(self.states[i]),
                self.angle_rate[i],
                self.H[i],
                self.pairing[i],
                self.residual[i],
                None if fi is None else fi[i],
            )


def guard_value(fam: FamilySpec, state) -> float:
    """Signed distance to the domain guard; negative means outside."""
    if fam.translation is TranslationKind.HYPERBOLIC:
        r = state[0]
        return min(r, math.pi - r) - Y_GUARD
    y = state[1] if fam.translation is TranslationKind.VERTICAL else state[0]
    return y - Y_GUARD


def default_events(fam: FamilySpec, variant: str = "printed") -> list[EventSpec]:
    """Guard (terminal), angle = +-pi/2 crossings and equilibrium approach."""
    evs = [
        EventSpec("domain-guard", lambda s, u: guard_value(fam, u), True, -1),
        EventSpec("angle=+pi/2", lambda s, u: u[2] - math.pi / 2),
        EventSpec("angle=-pi/2", lambda s, u: u[2] + math.pi / 2),
    ]
    idx = planar_indices(fam)
    if idx is not None:
        f = scalar_rhs(fam, variant)
        i, j = idx

        def speed(s, u):
            d = f(s, u)
            return math.hypot(d[i], d[j]) - EQUILIBRIUM_SPEED

        evs.append(EventSpec("equilibrium", speed, True, -1))
    return evs


def _integrate_one_way(f, s0, y0, s_end, rtol, atol, events, method, max_steps, max_step):
    """Step from s0 towards s_end. Returns (s list, states list, events, status)."""
    solver_cls = _METHODS[method]
    solver = solver_cls(f, s0, np.asarray(y0, dtype=float), s_end, rtol=rtol, atol=atol,
                        max_step=max_step)
    ss = [s0]
    ys = [np.array(y0, dtype=float)]
    found: list[Event] = []
    gvals = [ev.function(s0, ys[0]) for ev in events]
    status = "completed"
    steps = 0
    # a terminal "falling" event already satisfied at launch (e.g. starting on an equilibrium)
    for ev, g in zip(events, gvals):
        if ev.terminal and ev.direction == -1 and np.isfinite(g) and g < 0:
            found.append(Event(ev.name, float(s0), tuple(float(v) for v in ys[0])))
            return ss, ys, found, "terminated"
    while solver.status == "running":
        msg = solver.step()
        if solver.status == "failed":
            status = f"failed: {msg}"
            break
        steps += 1
        s_new, y_new = solver.t, solver.y.copy()
        dense = None
        hits = []
        new_g = []
        for k, ev in enumerate(events):
            try:
                g1 = ev.function(s_new, y_new)
            except (ValueError, ZeroDivisionError):
                g1 = float("nan")
            g0 = gvals[k]
            new_g.append(g1)
            if not (np.isfinite(g0) and np.isfinite(g1)) or g0 == 0.0:
                continue
            crossed = (g0 < 0 <= g1) or (g0 > 0 >= g1)
            if not crossed:
                continue
            up = g1 > g0
            if ev.direction == 1 and not up:
                continue
            if ev.direction == -1 and up:
                continue
            if dense is None:
                dense = solver.dense_output()
            s_prev = ss[-1]
            if g1 == 0.0:
                s_root = s_new
            else:
                s_root = bisect(lambda q: ev.function(q, dense(q)), s_prev, s_new, xtol=EVENT_XTOL,
                                maxiter=200)
            hits.append((abs(s_root - s_prev), s_root, ev))
        gvals = new_g
        if hits:
            hits.sort(key=lambda h: h[0])
            stop_at = None
            for _, s_root, ev in hits:
                if stop_at is not None and abs(s_root - s_prev) > abs(stop_at - s_prev):
                    break
                st = dense(s_root) if dense is not None else y_new
                found.append(Event(ev.name, float(s_root), tuple(float(v) for v in st)))
                if ev.terminal and stop_at is None:
                    stop_at = s_root
            if stop_at is not None:
                ss.append(float(stop_at))
                ys.append(np.asarray(dense(stop_at) if dense is not None else y_new, dtype=float))
                status = "terminated"
                break
        ss.append(float(s_new))
        ys.append(y_new)
        if steps >= max_steps:
            status = "failed: maximum number of steps exceeded"
            break
    return ss, ys, found, status


def integrate(
    fam: FamilySpec,
    initial: Sequence[float],
    span: tuple[float, float],
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    *,
    s_initial: float = 0.0,
    events: Sequence[EventSpec] | None = None,
    extra_events: Sequence[EventSpec] = (),
    variant: str = "printed",
    method: str = "RK45",
    max_steps: int = 200_000,
    max_step: float = np.inf,
    raise_on_failure: bool = True,
) -> Trajectory:
    """Integrate the family's profile ODE from ``initial`` given at ``s_initial``.

    ``span`` may straddle ``s_initial``; the curve is then integrated in both
    directions and stitched. Terminal events stop the affected direction.
    """
    s0, s1 = map(float, span)
    if not (math.isfinite(s0) and math.isfinite(s1)) or s0 > s1:
        raise ValueError(f"span must be finite and ordered, got {span}")
    if not s0 <= s_initial <= s1:
        raise ValueError("s_initial must lie inside span")
    y0 = np.asarray(initial, dtype=float)
    if y0.shape != (3,):
        raise ValueError("profile states have three components")
    check_state(fam.surface_kind if fam.tilt is None else fam.surface_kind, y0)
    f = scalar_rhs(fam, variant)
    evs = list(default_events(fam, variant) if events is None else events) + list(extra_events)

    def f_checked(s, u):
        if guard_value(fam, u) < 0:
            raise DomainError("domain guard breached during a trial step")
        return f(s, u)

    parts = []
    statuses = []
    all_events: list[Event] = []
    failure = None
    for s_end in (s0, s1):
        if s_end == s_initial:
            continue
        try:
            ss, ys, found, status = _integrate_one_way(
                f_checked, s_initial, y0, s_end, rtol, atol, evs, method, max_steps, max_step
            )
        except DomainError as exc:
            ss, ys, found, status = [s_initial], [y0], [], f"failed: {exc}"
        parts.append((ss, ys))
        statuses.append(status)
        all_events.extend(found)
        if status.startswith("failed"):
            failure = status
    if not parts:
        parts.append(([s_initial], [y0]))
    s_list: list[float] = []
    y_list: list[np.ndarray] = []
    for ss, ys in parts:
        if ss[-1] < ss[0]:
            ss, ys = ss[::-1], ys[::-1]
        for sv, yv in zip(ss, ys):
            if s_list and sv <= s_list[-1]:
                continue
            s_list.append(sv)
            y_list.append(yv)
    order = np.argsort(s_list, kind="stable")
    s_arr = np.asarray(s_list)[order]
    states = np.asarray(y_list)[order]
    all_events.sort(key=lambda e: e.s)
    status = failure or ("terminated" if "terminated" in statuses else "completed")
    traj = build_trajectory(fam, s_arr, states, all_events, status, variant, rtol, atol)
    if failure and raise_on_failure:
        raise IntegrationError(f"{fam.id}: {failure}", traj)
    return traj


def build_trajectory(fam, s, states, events=(), status="completed", variant="printed",
                     rtol=DEFAULT_RTOL, atol=DEFAULT_ATOL) -> Trajectory:
    """Attach closed-form diagnostics to sampled states."""
    s = np.asarray(s, dtype=float)
    states = np.atleast_2d(np.asarray(states, dtype=float))
    w, Hv, pv = diagnostics(fam, states, variant)
    sign = best_sign(Hv, pv)
    residual = Hv - sign * pv
    fi = first_integral(fam, states) if has_first_integral(fam) else None
    return Trajectory(
        family=fam,
        s=s,
        states=states,
        angle_rate=np.asarray(w, dtype=float),
        H=Hv,
        pairing=pv,
        residual=residual,
        first_integral=fi,
        events=list(events),
        status=status,
        orientation_sign=sign,
        variant=variant,
        rtol=rtol,
        atol=atol,
    )


def best_sign(Hv, pv) -> int:
    """Orientation sign minimising max |H - sign <N,X>|; +1 on ties."""
    Hv = np.asarray(Hv)
    pv = np.asarray(pv)
    ok = np.isfinite(Hv) & np.isfinite(pv)
    if not np.any(ok):
        return 1
    plus = np.max(np.abs(Hv[ok] - pv[ok]))
    minus = np.max(np.abs(Hv[ok] + pv[ok]))
    return -1 if minus < plus else 1
