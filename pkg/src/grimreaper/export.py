"""Run configuration and deterministic file output (CSV curves, OBJ meshes, JSON)."""

from __future__ import annotations

import configparser
import json
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, NoClosedFormError
from .integrator import DEFAULT_ATOL, DEFAULT_RTOL, Event, Trajectory, best_sign, build_trajectory
from .odes import FamilySpec, closed_form, closed_form_branches, default_initial_conditions, rigid_names
from .surfaces import SurfaceKind, check_state, immersion_coords

OUT_ENV = "GRIMREAPER_OUT"
CSV_COLUMNS = ("s", "x", "y", "z", "theta_or_rho", "H", "pairing", "residual")


class ConfigError(ValueError):
    pass


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "out"))


@dataclass(frozen=True)
class RunConfig:
    family: FamilySpec
    ic: tuple[float, float, float] | None = None
    closed: str | None = None  # closed-form branch to sample instead of integrating
    c1: float = 1.0
    c2: float = 0.0
    span: tuple[float, float] = (-4.0, 4.0)
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    variant: str = "printed"
    t_range: tuple[float, float] = (-1.0, 1.0)
    rulings: int = 21
    samples: int = 401  # closed-form sampling density
    out: Path | None = None

    def initial(self) -> tuple[float, float, float]:
        return self.ic if self.ic is not None else default_initial_conditions(self.family)[0]

    def validate(self) -> "RunConfig":
        fam = self.family
        if fam.family_class.is_rigid:
            raise ConfigError(f"{fam.id} admits only rigid solutions: {', '.join(rigid_names(fam))}")
        s0, s1 = self.span
        if not (math.isfinite(s0) and math.isfinite(s1) and s0 < s1):
            raise ConfigError(f"span must be finite with s0 < s1, got {self.span}")
        if not (s0 <= 0.0 <= s1):
            raise ConfigError("span must contain s = 0, where the initial condition sits")
        if not (self.rtol > 0 and self.atol > 0):
            raise ConfigError("tolerances must be positive")
        if self.variant not in ("printed", "consistent"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        t0, t1 = self.t_range
        if not (math.isfinite(t0) and math.isfinite(t1) and t0 < t1):
            raise ConfigError(f"t-range must be finite and increasing, got {self.t_range}")
        if self.rulings < 2 or self.samples < 2:
            raise ConfigError("need at least two rulings and two samples")
        if self.closed is not None:
            branches = closed_form_branches(fam)
            if self.closed not in branches:
                raise ConfigError(f"{fam.id} has no closed form {self.closed!r}; available: {branches}")
        else:
            try:
                check_state(fam.surface_kind, np.asarray(self.initial(), dtype=float))
            except DomainError as exc:
                raise ConfigError(str(exc)) from exc
        return self


def _floats(text: str, n: int, what: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.replace(" ", "").split(","))
    except ValueError as exc:
        raise ConfigError(f"{what}: expected {n} comma-separated numbers, got {text!r}") from exc
    if len(vals) != n:
        raise ConfigError(f"{what}: expected {n} comma-separated numbers, got {text!r}")
    return vals


def config_from_mapping(values: dict, base: RunConfig | None = None) -> RunConfig:
    """Build a RunConfig from string values (config file or CLI flags)."""
    kw = {}
    fam_text = values.get("family")
    if fam_text is None and base is None:
        raise ConfigError("a family is required (e.g. --family parabolic-vz)")
    if fam_text is not None:
        try:
            kw["family"] = FamilySpec.from_id(fam_text)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    conv = {
        "ic": lambda v: _floats(v, 3, "ic"),
        "span": lambda v: _floats(v, 2, "span"),
        "t_range": lambda v: _floats(v, 2, "t-range"),
        "rtol": float,
        "atol": float,
        "c1": float,
        "c2": float,
        "rulings": int,
        "samples": int,
        "variant": str,
        "closed": str,
        "out": Path,
    }
    for key, fn in conv.items():
        v = values.get(key)
        if v is None:
            continue
        try:
            kw[key] = fn(v)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {v!r}") from exc
    if base is None:
        return RunConfig(**kw)
    return replace(base, **kw)


def read_config_file(path: str | Path) -> dict:
    """Flatten an INI file with [run], [surface] and [output] sections into a dict."""
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            out[key.replace("-", "_")] = value
    return out


# -- atomic writes ------------------------------------------------------------


def atomic_write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def fmt(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else repr(v))


# -- curves -------------------------------------------------------------------


def closed_form_trajectory(cfg: RunConfig) -> Trajectory:
    s = np.linspace(cfg.span[0], cfg.span[1], cfg.samples)
    try:
        states = closed_form(cfg.family, s, cfg.closed, cfg.c1, cfg.c2)
    except NoClosedFormError as exc:
        raise ConfigError(str(exc)) from exc
    return build_trajectory(cfg.family, s, states, variant=cfg.variant, rtol=cfg.rtol, atol=cfg.atol)


def fill_tilted_diagnostics(tr: Trajectory) -> Trajectory:
    """Tilted surfaces have no closed-form H or N; take both from the oracle."""
    from .oracle import numeric_fundamental_forms, numeric_pairing, profile_immersion

    if tr.family.surface_kind is not SurfaceKind.TILTED_RULED:
        return tr
    Hs, ps = [], []
    for s, st in zip(tr.s, tr.states):
        ff = numeric_fundamental_forms(profile_immersion(tr.family, s, st, tr.variant), s, 0.0)
        Hs.append(ff.H)
        ps.append(numeric_pairing(ff, tr.family.field))
    tr.H = np.array(Hs)
    tr.pairing = np.array(ps)
    tr.orientation_sign = best_sign(tr.H, tr.pairing)
    tr.residual = tr.H - tr.orientation_sign * tr.pairing
    return tr


def curve_rows(tr: Trajectory) -> list[list[str]]:
    kind = tr.family.surface_kind
    v3 = tr.family.tilt if kind is SurfaceKind.TILTED_RULED else None
    pts = immersion_coords(kind, tr.states, 0.0, v3)
    fi = tr.first_integral
    rows = []
    for i in range(len(tr)):
        row = [tr.s[i], *pts[i], tr.states[i, 2], tr.H[i], tr.pairing[i], tr.residual[i]]
        out = [fmt(v) for v in row]
        if fi is not None:
            out.append(fmt(fi[i]))
        rows.append(out)
    return rows


def curve_csv(tr: Trajectory) -> str:
    header = list(CSV_COLUMNS) + (["first_integral"] if tr.first_integral is not None else [])
    lines = [",".join(header)]
    lines += [",".join(r) for r in curve_rows(tr)]
    lines.append(f"# family,{tr.family.id}")
    lines.append(f"# variant,{tr.variant}")
    lines.append(f"# orientation_sign,{tr.orientation_sign}")
    lines.append(f"# status,{tr.status}")
    for ev in tr.events:
        lines.append("# event," + ",".join([ev.kind, fmt(ev.s)] + [fmt(v) for v in ev.state]))
    return "\n".join(lines) + "\n"


def write_curve_csv(path, tr: Trajectory) -> Path:
    return atomic_write_text(path, curve_csv(tr))


@dataclass
class CurveTable:
    columns: list[str]
    data: np.ndarray
    meta: dict = field(default_factory=dict)
    events: list[Event] = field(default_factory=list)


def read_curve_csv(path) -> CurveTable:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    header = lines[0].split(",")
    rows, meta, events = [], {}, []
    for line in lines[1:]:
        if line.startswith("#"):
            parts = line[1:].strip().split(",")
            if parts[0] == "event":
                events.append(Event(parts[1], float(parts[2]), tuple(float(v) for v in parts[3:])))
            else:
                meta[parts[0]] = ",".join(parts[1:])
            continue
        rows.append([float(v) if v else math.nan for v in line.split(",")])
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return CurveTable(header, data, meta, events)


def states_from_table(table: CurveTable, fam: FamilySpec) -> np.ndarray:
    """Recover profile states from the position and angle columns."""
    col = {c: i for i, c in enumerate(table.columns)}
    x, y, z = (table.data[:, col[c]] for c in ("x", "y", "z"))
    ang = table.data[:, col["theta_or_rho"]]
    kind = fam.surface_kind
    if kind is SurfaceKind.VERTICAL:
        return np.stack([x, y, ang], axis=-1)
    if kind is SurfaceKind.HYPERBOLIC:
        return np.stack([np.arctan2(y, x), z, ang], axis=-1)
    return np.stack([y, z, ang], axis=-1)


# -- meshes ----------------------------------------------------------------------


@dataclass
class SurfaceMesh:
    vertices: np.ndarray  # (n, 3)
    faces: np.ndarray  # (m, 4), zero-based vertex indices

    def __post_init__(self):
        if np.any(self.vertices[:, 1] <= 0):
            raise DomainError("mesh vertex with y <= 0")
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValueError("face references a missing vertex")


def sweep_mesh(tr: Trajectory, t_range: Sequence[float], rulings: int, max_profile: int = 400) -> SurfaceMesh:
    """Sweep the profile curve along its translation group over t_range."""
    idx = np.unique(np.linspace(0, len(tr) - 1, min(len(tr), max_profile)).round().astype(int))
    states = tr.states[idx]
    kind = tr.family.surface_kind
    v3 = tr.family.tilt if kind is SurfaceKind.TILTED_RULED else None
    ts = np.linspace(t_range[0], t_range[1], rulings)
    ts[0], ts[-1] = t_range  # exact end rulings
    verts = immersion_coords(kind, states[:, None, :], ts[None, :], v3).reshape(-1, 3)
    n, m = len(states), rulings
    i, j = np.meshgrid(np.arange(n - 1), np.arange(m - 1), indexing="ij")
    a = (i * m + j).ravel()
    faces = np.stack([a, a + m, a + m + 1, a + 1], axis=-1)
    return SurfaceMesh(verts, faces)


def mesh_obj(mesh: SurfaceMesh, comment: str = "") -> str:
    lines = [f"# {comment}"] if comment else []
    lines += ["v " + " ".join(fmt(c) for c in v) for v in mesh.vertices]
    lines += ["f " + " ".join(str(k + 1) for k in f) for f in mesh.faces]
    return "\n".join(lines) + "\n"


def write_mesh_obj(path, mesh: SurfaceMesh, comment: str = "") -> Path:
    return atomic_write_text(path, mesh_obj(mesh, comment))


def read_mesh_obj(path) -> SurfaceMesh:
    verts, faces = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("v "):
                verts.append([float(v) for v in line.split()[1:]])
            elif line.startswith("f "):
                faces.append([int(v) - 1 for v in line.split()[1:]])
    return SurfaceMesh(np.array(verts), np.array(faces, dtype=int).reshape(-1, 4))


# -- JSON -------------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, Path):
        return str(obj)
    if hasattr(obj, "value") and hasattr(obj, "name"):  # enums
        return obj.value
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, dumps_json(obj))


def portrait_dict(ds, max_points: int = 400) -> dict:
    orbits = []
    for o in ds.orbits:
        idx = np.unique(np.linspace(0, len(o.s) - 1, min(len(o.s), max_points)).round().astype(int))
        orbits.append({
            "initial": list(o.initial),
            "tag": o.tag,
            "ends": list(o.ends),
            "period": o.period,
            "return_distance": o.return_distance,
            "events": [[e.kind, e.s] for e in o.events],
            "s": o.s[idx],
            "u": o.uw[idx, 0],
            "w": o.uw[idx, 1],
        })
    return {"family": ds.family_id, "equilibria": [list(p) for p in ds.equilibria], "orbits": orbits}


def events_summary(events: Iterable[Event]) -> list[list]:
    return [[e.kind, e.s, list(e.state)] for e in events]
