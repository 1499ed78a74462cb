"""Independent finite-difference verification of the translator identity.

Nothing here uses the closed-form normals or mean curvatures of
:mod:`grimreaper.surfaces`. A surface is handed over as a plain map
(s, t) -> (x, y, z); derivatives come from central differences, covariant
derivatives from the coordinate Christoffel symbols, and N from the frame
cross product of the two tangents.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegenerateSurfaceError, DomainError, IntegrationError, UnsupportedFamilyError
from .geometry import FieldKind, TranslationKind, christoffel_term, field_coords, from_frame, metric_inner_arr, to_frame
from .integrator import Trajectory, integrate
from .odes import (
    FIRST_INTEGRAL_PRINTED,
    FamilyClass,
    FamilySpec,
    _plane_profile,
    _slice_profile,
    consistent_form,
    default_initial_conditions,
    first_integral,
    non_rigid_families,
    printed_form,
    scalar_rhs,
    ALL_FAMILIES,
)
from .surfaces import SurfaceKind, immersion_coords, pairing

Immersion = Callable[[np.ndarray, np.ndarray], np.ndarray]

#: Base finite-difference step; scaled by max(1, y) at the evaluation point.
FD_STEP = 1e-3
DEGENERATE_DET = 1e-14
RESIDUAL_TOL = 1e-5
DEFAULT_T_SAMPLES = (0.0, 0.7, -1.3)
ROTATIONAL_T = (0.0, math.pi / 6, math.pi / 2, 2.0)


class FundamentalForms(NamedTuple):
    g11: float
    g12: float
    g22: float
    b11: float
    b12: float
    b22: float
    N: np.ndarray  # coordinate components
    point: np.ndarray
    Psi_s: np.ndarray
    Psi_t: np.ndarray

    @property
    def det(self) -> float:
        return self.g11 * self.g22 - self.g12**2

    @property
    def H(self) -> float:
        return (self.b11 * self.g22 - 2 * self.b12 * self.g12 + self.b22 * self.g11) / (2 * self.det)


def _stencil_derivatives(immersion: Immersion, s: float, t: float, h: float):
    """Central differences (Psi, Psi_s, Psi_t, Psi_ss, Psi_st, Psi_tt) at one step."""
    ds = np.array([0, 1, -1, 0, 0, 1, 1, -1, -1], dtype=float) * h
    dt = np.array([0, 0, 0, 1, -1, 1, -1, 1, -1], dtype=float) * h
    P = np.asarray(immersion(s + ds, t + dt), dtype=float)
    c, sp, sm, tp, tm, pp, pm, mp, mm = P
    Ps = (sp - sm) / (2 * h)
    Pt = (tp - tm) / (2 * h)
    Pss = (sp - 2 * c + sm) / h**2
    Ptt = (tp - 2 * c + tm) / h**2
    Pst = (pp - pm - mp + mm) / (4 * h * h)
    return c, Ps, Pt, Pss, Pst, Ptt


def numeric_fundamental_forms(
    immersion: Immersion, s: float, t: float, h: float | None = None, richardson: bool = True
) -> FundamentalForms:
    """First and second fundamental forms of the immersion at (s, t).

    ``h`` defaults to FD_STEP * max(1, y). With ``richardson`` the derivatives
    at steps h and h/2 are combined into a fourth-order estimate.
    """
    if h is None:
        y0 = float(np.asarray(immersion(np.array([s]), np.array([t])))[0, 1])
        h = FD_STEP * max(1.0, y0)
    d = _stencil_derivatives(immersion, s, t, h)
    if richardson:
        d2 = _stencil_derivatives(immersion, s, t, h / 2)
        d = tuple((4 * b - a) / 3 for a, b in zip(d, d2))
        d = (d2[0],) + d[1:]
    point, Ps, Pt, Pss, Pst, Ptt = d
    y = point[1]
    if not y > 0:
        raise DomainError(f"immersion left the half-space at (s, t) = ({s}, {t})")
    a_s = to_frame(y, Ps)
    a_t = to_frame(y, Pt)
    g11, g12, g22 = a_s @ a_s, a_s @ a_t, a_t @ a_t
    if g11 * g22 - g12**2 < DEGENERATE_DET:
        raise DegenerateSurfaceError(f"degenerate tangent plane at (s, t) = ({s}, {t})")
    n = np.cross(a_s, a_t)
    n /= np.linalg.norm(n)
    N = from_frame(y, n)
    cov = [P2 + christoffel_term(y, U, V) for P2, U, V in ((Pss, Ps, Ps), (Pst, Ps, Pt), (Ptt, Pt, Pt))]
    b11, b12, b22 = (float(metric_inner_arr(y, N, c)) for c in cov)
    return FundamentalForms(float(g11), float(g12), float(g22), b11, b12, b22, N, point, Ps, Pt)


def numeric_mean_curvature(immersion: Immersion, s: float, t: float, h: float | None = None,
                           richardson: bool = True) -> float:
    return numeric_fundamental_forms(immersion, s, t, h, richardson).H


def numeric_pairing(ff: FundamentalForms, field: FieldKind) -> float:
    """<N, X> at the point of ``ff`` with the oracle normal."""
    X = field_coords(field, ff.point)
    return float(metric_inner_arr(ff.point[1], ff.N, X))


def step_halving_ratio(immersion: Immersion, s: float, t: float, h: float = 1e-2) -> float:
    """(H(h) - H(h/2)) / (H(h/2) - H(h/4)) for plain central differences; ~4."""
    Hs = [numeric_mean_curvature(immersion, s, t, h / k, richardson=False) for k in (1, 2, 4)]
    return (Hs[0] - Hs[1]) / (Hs[1] - Hs[2])


# -- immersions -------------------------------------------------------------


def closed_kind_immersion(kind: SurfaceKind, profile: Callable, v3: float | None = None) -> Immersion:
    """Immersion from a profile function s -> state stack."""

    def imm(s, t):
        return immersion_coords(kind, profile(np.asarray(s, dtype=float)), t, v3)

    return imm


def profile_immersion(fam: FamilySpec, s0: float, state0, variant: str = "printed",
                      reach: float = 4 * FD_STEP) -> Immersion:
    """Immersion near s0 obtained by re-integrating the profile ODE from state0.

    The local solve uses an 8th-order method at tolerances well below the
    finite-difference noise floor.
    """
    f = scalar_rhs(fam, variant)
    sols = []
    for end in (s0 + reach, s0 - reach):
        sol = solve_ivp(f, (s0, end), np.asarray(state0, dtype=float), method="DOP853",
                        rtol=1e-13, atol=1e-15, dense_output=True)
        if sol.status < 0:
            raise IntegrationError(f"local re-integration failed for {fam.id}: {sol.message}")
        sols.append(sol.sol)
    fwd, bwd = sols
    kind = fam.surface_kind
    v3 = fam.tilt if kind is SurfaceKind.TILTED_RULED else None

    def prof(s):
        s = np.atleast_1d(s)
        out = np.empty((len(s), 3))
        ahead = s >= s0
        if np.any(ahead):
            out[ahead] = fwd(s[ahead]).T
        if np.any(~ahead):
            out[~ahead] = bwd(s[~ahead]).T
        return out

    def imm(s, t):
        return immersion_coords(kind, prof(s), t, v3)

    return imm


def rotational_coords(y, z, t):
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    d = y**2 + 1 - (y**2 - 1) * np.cos(t)
    return np.stack(np.broadcast_arrays(-2 * (y**2 - 1) * np.sin(t) / (2 * d), 2 * y / d, z + 0 * t),
                    axis=-1)


# -- reports ----------------------------------------------------------------


@dataclass
class OracleReport:
    family_id: str
    n_samples: int
    max_residual_plus: float
    max_residual_minus: float
    orientation: int
    first_integral_drift: float | None = None
    flags: list[str] = field(default_factory=list)
    variant: str = "printed"
    skipped: int = 0
    t_variation: float = 0.0
    printed_form: str | None = None
    consistent_form: str | None = None
    consistent_passes: bool | None = None
    runtime: float = 0.0

    @property
    def max_residual(self) -> float:
        return min(self.max_residual_plus, self.max_residual_minus)

    @property
    def flagged(self) -> bool:
        return bool(self.flags)

    def as_dict(self, include_runtime: bool = False) -> dict:
        d = asdict(self)
        d["max_residual"] = self.max_residual
        if not include_runtime:
            d.pop("runtime")
        return d


def _sample_indices(n: int, max_samples: int) -> np.ndarray:
    if n <= max_samples:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, max_samples).round().astype(int))


def residual_scan(
    fam: FamilySpec,
    trajectory: Trajectory,
    t_samples: Sequence[float] = DEFAULT_T_SAMPLES,
    max_samples: int = 25,
    tol: float = RESIDUAL_TOL,
) -> OracleReport:
    """Max |H - sign <N, X>| over samples and rulings, purely from finite differences."""
    if not len(t_samples):
        raise ValueError("t_samples must be nonempty")
    start = time.perf_counter()
    res = {1: 0.0, -1: 0.0}
    skipped = 0
    n = 0
    t_var = 0.0
    for i in _sample_indices(len(trajectory), max_samples):
        try:
            imm = profile_immersion(fam, trajectory.s[i], trajectory.states[i], trajectory.variant)
        except (IntegrationError, DomainError):
            skipped += 1
            continue
        pvals = []
        for t in t_samples:
            try:
                ff = numeric_fundamental_forms(imm, trajectory.s[i], t)
            except (DegenerateSurfaceError, DomainError):
                skipped += 1
                continue
            Hn = ff.H
            pn = numeric_pairing(ff, fam.field)
            pvals.append(pn)
            for sg in res:
                res[sg] = max(res[sg], abs(Hn - sg * pn))
            n += 1
        if len(pvals) > 1:
            t_var = max(t_var, max(pvals) - min(pvals))
    orient = 1 if res[1] <= res[-1] else -1
    flags = []
    if n == 0:
        flags.append("no usable samples")
    elif min(res.values()) > tol:
        flags.append(f"translator identity fails for both orientations (tol {tol:g})")
    drift = None
    if trajectory.first_integral is not None:
        fi = trajectory.first_integral[np.isfinite(trajectory.first_integral)]
        drift = float(np.ptp(fi)) if fi.size else None
    return OracleReport(
        family_id=fam.id,
        n_samples=n,
        max_residual_plus=res[1],
        max_residual_minus=res[-1],
        orientation=orient,
        first_integral_drift=drift,
        flags=flags,
        variant=trajectory.variant,
        skipped=skipped,
        t_variation=t_var,
        printed_form=printed_form(fam),
        consistent_form=consistent_form(fam),
        runtime=time.perf_counter() - start,
    )


def family_scan(fam: FamilySpec, variant: str = "printed", span=(-4.0, 4.0),
                t_samples=DEFAULT_T_SAMPLES, max_samples: int = 25,
                initial_conditions=None) -> OracleReport:
    """residual_scan over the family's default initial conditions, merged."""
    start = time.perf_counter()
    ics = initial_conditions or default_initial_conditions(fam)
    merged = None
    for ic in ics:
        try:
            tr = integrate(fam, ic, span, variant=variant)
        except IntegrationError as exc:
            tr = exc.trajectory
        rep = residual_scan(fam, tr, t_samples, max_samples)
        if merged is None:
            merged = rep
            continue
        merged.n_samples += rep.n_samples
        merged.skipped += rep.skipped
        merged.max_residual_plus = max(merged.max_residual_plus, rep.max_residual_plus)
        merged.max_residual_minus = max(merged.max_residual_minus, rep.max_residual_minus)
        merged.t_variation = max(merged.t_variation, rep.t_variation)
        if rep.first_integral_drift is not None:
            merged.first_integral_drift = max(merged.first_integral_drift or 0.0, rep.first_integral_drift)
    merged.orientation = 1 if merged.max_residual_plus <= merged.max_residual_minus else -1
    merged.flags = []
    if min(merged.max_residual_plus, merged.max_residual_minus) > RESIDUAL_TOL:
        merged.flags.append(f"translator identity fails for both orientations (tol {RESIDUAL_TOL:g})")
    merged.runtime = time.perf_counter() - start
    return merged


def rigid_scan(fam: FamilySpec, n_samples: int = 20, t_samples=DEFAULT_T_SAMPLES,
               z0: float = 0.3) -> dict[str, OracleReport]:
    """Numeric residual of each rigid solution of a rigid family."""
    if not fam.family_class.is_rigid:
        raise UnsupportedFamilyError(f"{fam.id} is not rigid")
    out = {}
    surfaces = [("slices z=z0", lambda s: _slice_profile(s, z0))]
    if fam.family_class is FamilyClass.RIGID_PLANE_AND_SLICES:
        surfaces.insert(0, ("vertical plane x=0", _plane_profile))
    for name, prof in surfaces:
        imm = closed_kind_immersion(SurfaceKind.HYPERBOLIC, prof)
        res = {1: 0.0, -1: 0.0}
        n = 0
        for s in np.linspace(-2.5, 2.5, n_samples):
            for t in t_samples:
                ff = numeric_fundamental_forms(imm, float(s), float(t))
                Hn, pn = ff.H, numeric_pairing(ff, fam.field)
                for sg in res:
                    res[sg] = max(res[sg], abs(Hn - sg * pn))
                n += 1
        orient = 1 if res[1] <= res[-1] else -1
        flags = [] if min(res.values()) <= 1e-12 else ["rigid solution residual above 1e-12"]
        out[name] = OracleReport(f"{fam.id}:{name}", n, res[1], res[-1], orient, flags=flags)
    return out


# -- rotational rigidity ----------------------------------------------------


@dataclass(frozen=True)
class RotationalProfile:
    """Generating curve (y(s), z(s)) of a rotational surface, y in (0, 1).

    ``cylinder``: y = y0, z = s. ``graph``: y = s, z = z(s).
    """

    kind: str
    y0: float = 0.5
    z: Callable | None = None
    dz: Callable | None = None
    label: str = ""

    def coords(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "cylinder":
            return self.y0 + 0 * s, s
        return s, self.z(s)

    def expected_pairing(self, field: FieldKind, s: float, t: float) -> float:
        """The pairing formulas stated for the two profile types."""
        if self.kind == "cylinder":
            y = self.y0
            return math.sin(t) / y if field is FieldKind.PX else y * math.cos(t)
        zp = float(self.dz(s))
        root = math.sqrt(s * s * zp * zp + 1)
        if field is FieldKind.PX:
            return -s * math.sin(t) * zp / root
        return s * math.cos(t) * zp / root


def cylinder(y0: float = 0.5) -> RotationalProfile:
    if not 0 < y0 < 1:
        raise DomainError("rotational profiles need y in (0, 1)")
    return RotationalProfile("cylinder", y0=y0, label=f"cylinder y0={y0:g}")


def graph(z: Callable, dz: Callable, label: str = "graph") -> RotationalProfile:
    return RotationalProfile("graph", z=z, dz=dz, label=label)


@dataclass
class RotationalReport:
    profile: str
    field: str
    s: float
    t_values: list[float]
    pairings: list[float]
    expected: list[float]
    mean_curvatures: list[float]
    t_variation: float
    max_formula_deviation: float  # up to a global orientation sign
    max_residual: float  # min over sign of max |H - sign <N,X>|


def rotational_rigidity_check(profile: RotationalProfile, field: FieldKind, s: float | None = None,
                              t_values: Sequence[float] = ROTATIONAL_T) -> RotationalReport:
    """<N, X> on a rotational surface at fixed s and several t.

    A translator needs <N, X> independent of t, because H is; any t-variation
    witnesses that the profile cannot be a p- or h-translator.
    """
    if field not in (FieldKind.PX, FieldKind.HXY):
        raise UnsupportedFamilyError("rotational check covers d/dx and x d/dx + y d/dy only")
    if s is None:
        s = 0.0 if profile.kind == "cylinder" else 0.5
    y_s = profile.coords(np.array([s]))[0]
    if not np.all((y_s > 0) & (y_s < 1)):
        raise DomainError("rotational profile outside y in (0, 1)")

    def imm(ss, tt):
        yy, zz = profile.coords(ss)
        return rotational_coords(yy, zz, tt)

    ps, Hs, ex = [], [], []
    for t in t_values:
        ff = numeric_fundamental_forms(imm, s, float(t))
        ps.append(numeric_pairing(ff, field))
        Hs.append(ff.H)
        ex.append(profile.expected_pairing(field, s, float(t)))
    ps_a, Hs_a = np.array(ps), np.array(Hs)
    resid = min(float(np.max(np.abs(Hs_a - sg * ps_a))) for sg in (1, -1))
    return RotationalReport(
        profile=profile.label or profile.kind,
        field=field.value,
        s=float(s),
        t_values=[float(t) for t in t_values],
        pairings=ps,
        expected=ex,
        mean_curvatures=Hs,
        t_variation=float(np.ptp(ps_a)),
        max_formula_deviation=min(float(np.max(np.abs(ps_a - sg * np.array(ex)))) for sg in (1, -1)),
        max_residual=resid,
    )


# -- first integral exponent -------------------------------------------------


def first_integral_drifts(y0: float = 1.0, exponents=(1, 2), rtol=1e-10, atol=1e-12) -> dict[int, float]:
    """Drift of cos(theta) e^{-2/y} / y^k over one period of a vertical c+ orbit."""
    from .phase import closed_orbit

    orbit = closed_orbit(FamilySpec(TranslationKind.VERTICAL, FieldKind.CPLUS), y0, rtol=rtol, atol=atol)
    fam = orbit.trajectory.family
    return {k: float(np.ptp(first_integral(fam, orbit.trajectory.states, exponent=k))) for k in exponents}


def select_first_integral_exponent(y0: float = 1.0, keep: float = 1e-8, reject: float = 1e-3):
    """The unique k whose drift is <= keep while every other drifts >= reject, else None."""
    drifts = first_integral_drifts(y0)
    good = [k for k, d in drifts.items() if d <= keep]
    if len(good) != 1 or any(d < reject for k, d in drifts.items() if k != good[0]):
        return None, drifts
    return good[0], drifts


# -- audit ------------------------------------------------------------------


@dataclass
class AuditReport:
    families: list[OracleReport]
    rigid: dict[str, dict[str, OracleReport]]
    trivial_pairing: dict[str, float]
    first_integral: dict
    rotational: list[RotationalReport]

    @property
    def flagged(self) -> list[OracleReport]:
        return [r for r in self.families if r.flagged]

    def as_dict(self) -> dict:
        return {
            "families": [r.as_dict() for r in self.families],
            "rigid": {k: {n: r.as_dict() for n, r in v.items()} for k, v in self.rigid.items()},
            "trivial_pairing": self.trivial_pairing,
            "first_integral": self.first_integral,
            "rotational": [asdict(r) for r in self.rotational],
        }

    def table(self) -> str:
        lines = [f"{'family':30s} {'class':24s} {'sign':>4s} {'max residual':>13s}  status"]
        for r in self.families:
            fam = FamilySpec.from_id(r.family_id)
            status = "FLAG" if r.flagged else "pass"
            if r.flagged and r.consistent_form:
                status += f" (consistent variant {'passes' if r.consistent_passes else 'fails'}:"
                status += f" {r.consistent_form})"
            lines.append(f"{r.family_id:30s} {fam.family_class.value:24s} {r.orientation:>+4d} "
                         f"{r.max_residual:13.3e}  {status}")
        for fid, sols in self.rigid.items():
            for name, r in sols.items():
                lines.append(f"{fid:30s} {'rigid: ' + name:24s} {r.orientation:>+4d} "
                             f"{r.max_residual:13.3e}  {'FLAG' if r.flagged else 'pass'}")
        for fid, v in self.trivial_pairing.items():
            lines.append(f"trivial {fid}: max |<N,X>| = {v:.3e}")
        fi = self.first_integral
        lines.append(f"first integral cos(theta) e^(-2/y) / y^k: selected k = {fi['selected_k']}"
                     f" (printed form: {fi['printed']}); drifts {fi['drifts']}")
        for rr in self.rotational:
            lines.append(f"rotational {rr.profile} {rr.field}: t-variation {rr.t_variation:.3e},"
                         f" deviation from stated formula {rr.max_formula_deviation:.3e}")
        return "\n".join(lines)


def trivial_pairing_max(fam: FamilySpec, n: int = 10_000) -> float:
    """max |<N, X>| over n closed-form states for a trivial (minimal) family."""
    rng = np.random.default_rng(12345)
    kind = fam.surface_kind
    if kind is SurfaceKind.VERTICAL:
        a, b = rng.uniform(-5, 5, n), rng.uniform(0.05, 5, n)
    elif kind is SurfaceKind.PARABOLIC:
        a, b = rng.uniform(0.05, 5, n), rng.uniform(-5, 5, n)
    else:
        a, b = rng.uniform(0.05, math.pi - 0.05, n), rng.uniform(-5, 5, n)
    ang = rng.uniform(-math.pi, math.pi, n)
    t = rng.uniform(-3, 3, n)
    states = np.stack([a, b, ang], axis=-1)
    return float(np.max(np.abs(pairing(kind, fam.field, states, t))))


def consistency_audit(max_samples: int = 25) -> AuditReport:
    reports = []
    for fam in non_rigid_families():
        rep = family_scan(fam, "printed", max_samples=max_samples)
        if rep.flagged and rep.consistent_form:
            alt = family_scan(fam, "consistent", max_samples=max_samples)
            rep.consistent_passes = not alt.flagged
        reports.append(rep)
    rigid = {f.id: rigid_scan(f) for f in ALL_FAMILIES if f.family_class.is_rigid}
    trivial = {f.id: trivial_pairing_max(f) for f in ALL_FAMILIES if f.family_class is FamilyClass.MINIMAL}
    k, drifts = select_first_integral_exponent()
    fi = {"selected_k": k, "drifts": {str(kk): v for kk, v in drifts.items()}, "printed": FIRST_INTEGRAL_PRINTED}
    rot = [
        rotational_rigidity_check(cylinder(0.5), FieldKind.PX),
        rotational_rigidity_check(cylinder(0.5), FieldKind.HXY),
        rotational_rigidity_check(graph(lambda s: s**2, lambda s: 2 * s, "graph z=s^2"), FieldKind.PX),
        rotational_rigidity_check(graph(lambda s: 0.3 + 0 * s, lambda s: 0 * s, "graph z=0.3"), FieldKind.PX),
    ]
    return AuditReport(reports, rigid, trivial, fi, rot)
