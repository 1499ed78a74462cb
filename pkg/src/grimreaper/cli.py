"""Command-line front end: ``grimreaper <subcommand> [flags]``.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 the audit
found printed equations that fail the oracle.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import export as ex
from .errors import AmbiguousDichotomyError, GrimReaperError, IntegrationError
from .geometry import FieldKind, TranslationKind
from .integrator import integrate
from .odes import (
    ALL_FAMILIES,
    TILTED_SLOPES,
    FamilyClass,
    FamilySpec,
    closed_form_branches,
    non_rigid_families,
    printed_form,
    rigid_names,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_FLAGS = 0, 2, 3, 4

PLANAR_FAMILIES = (
    FamilySpec(TranslationKind.VERTICAL, FieldKind.PX),
    FamilySpec(TranslationKind.VERTICAL, FieldKind.CPLUS),
    FamilySpec(TranslationKind.VERTICAL, FieldKind.CMINUS),
    FamilySpec(TranslationKind.PARABOLIC, FieldKind.CPLUS),
    FamilySpec(TranslationKind.PARABOLIC, FieldKind.CMINUS),
    FamilySpec(TranslationKind.HYPERBOLIC, FieldKind.VZ),
)


def _say(msg: str, stream=None) -> None:
    print(msg, file=stream or sys.stdout)


def _config(args) -> ex.RunConfig:
    values = ex.read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in ("family", "ic", "span", "rtol", "atol", "t_range", "rulings", "out", "variant", "closed"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = str(v)
    return ex.config_from_mapping(values).validate()


def _curve(cfg: ex.RunConfig):
    if cfg.closed is not None:
        return ex.fill_tilted_diagnostics(ex.closed_form_trajectory(cfg))
    tr = integrate(cfg.family, cfg.initial(), cfg.span, cfg.rtol, cfg.atol, variant=cfg.variant)
    return ex.fill_tilted_diagnostics(tr)


# -- subcommands ------------------------------------------------------------


def cmd_list_families(args) -> int:
    _say(f"{'family':26s} {'class':24s} notes")
    for fam in ALL_FAMILIES:
        cls = fam.family_class
        if cls.is_rigid:
            note = "rigid: " + ", ".join(rigid_names(fam))
        else:
            note = printed_form(fam)
            if cls is FamilyClass.MINIMAL:
                note += "  [minimal: <N,X> = 0]"
            branches = closed_form_branches(fam)
            if branches:
                note += f"  closed forms: {', '.join(branches)}"
        _say(f"{fam.id:26s} {cls.value:24s} {note}")
    for v3 in TILTED_SLOPES:
        fam = FamilySpec(TranslationKind.PARABOLIC, FieldKind.VZ, v3)
        _say(f"{fam.id:26s} {'ode (tilted)':24s} {printed_form(fam)}")
    return EXIT_OK


def cmd_curve(args) -> int:
    cfg = _config(args)
    out = cfg.out or ex.default_out_dir() / f"curve-{cfg.family.id}.csv"
    try:
        tr = _curve(cfg)
    except IntegrationError as exc:
        if exc.trajectory is not None:
            ex.write_curve_csv(out, exc.trajectory)
        _say(f"integration failed: {exc}; partial curve written to {out}", sys.stderr)
        return EXIT_NUMERIC
    ex.write_curve_csv(out, tr)
    _say(f"{out}: {len(tr)} samples, max residual {tr.max_residual():.3e}, status {tr.status}")
    return EXIT_OK


def cmd_surface(args) -> int:
    cfg = _config(args)
    out = cfg.out or ex.default_out_dir() / f"surface-{cfg.family.id}.obj"
    try:
        tr = _curve(cfg)
    except IntegrationError as exc:
        _say(f"integration failed: {exc}", sys.stderr)
        return EXIT_NUMERIC
    mesh = ex.sweep_mesh(tr, cfg.t_range, cfg.rulings)
    ex.write_mesh_obj(out, mesh, f"{cfg.family.id} swept over t in [{cfg.t_range[0]!r}, {cfg.t_range[1]!r}]")
    _say(f"{out}: {len(mesh.vertices)} vertices, {len(mesh.faces)} quads")
    return EXIT_OK


def default_grid(fam: FamilySpec) -> list[tuple[float, float]]:
    if fam.translation is TranslationKind.HYPERBOLIC:
        return [(float(r), 0.0) for r in np.linspace(0.1, math.pi / 2, 9)]
    if fam.field is FieldKind.CPLUS and fam.translation is TranslationKind.VERTICAL:
        return [(float(y), 0.0) for y in np.linspace(0.25, 1.75, 7)]
    return [(float(y), float(w)) for y in (0.5, 1.0, 3.0) for w in (-1.0, 0.0, 1.0)]


def cmd_phase(args) -> int:
    from .phase import planar_portrait

    if args.family is None:
        raise ex.ConfigError("phase needs --family")
    fam = FamilySpec.from_id(args.family)
    if fam not in PLANAR_FAMILIES:
        raise ex.ConfigError(f"{fam.id} is not a planar phase system; choose from "
                             + ", ".join(f.id for f in PLANAR_FAMILIES))
    ds = planar_portrait(fam, default_grid(fam))
    out = Path(args.out) if args.out else ex.default_out_dir() / f"phase-{fam.id}.json"
    ex.write_json(out, ex.portrait_dict(ds))
    for o in ds.orbits:
        extra = f" period {o.period:.10f}" if o.period is not None else ""
        _say(f"({o.initial.u:.4f}, {o.initial.w:.4f}) {o.tag:7s} ends {o.ends[0]} / {o.ends[1]}{extra}")
    _say(f"wrote {out}")
    return EXIT_OK


def cmd_separatrix(args) -> int:
    from .phase import find_separatrix

    kw = {}
    if args.rtol is not None:
        kw["rtol"] = float(args.rtol)
    if args.atol is not None:
        kw["atol"] = float(args.atol)
    try:
        res = find_separatrix(float(args.tol), **kw)
    except AmbiguousDichotomyError as exc:
        _say(f"separatrix search failed: {exc}", sys.stderr)
        return EXIT_NUMERIC
    _say(f"r* = {res.r_star!r}")
    _say(f"bracket = [{res.bracket[0]!r}, {res.bracket[1]!r}] (width {res.width:.3e}, {res.iterations} bisections)")
    _say(f"closest approach to (pi/2, pi/2) = {res.approach_distance:.3e}")
    if args.out:
        ex.write_json(args.out, {"r_star": res.r_star, "bracket": list(res.bracket), "iterations": res.iterations,
                                 "approach_distance": res.approach_distance, "rtol": res.rtol, "atol": res.atol})
    return EXIT_OK


def cmd_verify(args) -> int:
    from .oracle import consistency_audit

    audit = consistency_audit()
    _say(audit.table())
    out = Path(args.out) if args.out else ex.default_out_dir() / "audit.json"
    ex.write_json(out, audit.as_dict())
    _say(f"wrote {out}")
    return EXIT_FLAGS if audit.flagged else EXIT_OK


def cmd_export_all(args) -> int:
    root = Path(args.out) if args.out else ex.default_out_dir()
    code = EXIT_OK
    for fam in non_rigid_families():
        cfg = ex.RunConfig(fam).validate()
        try:
            tr = _curve(cfg)
        except IntegrationError as exc:
            _say(f"{fam.id}: {exc}", sys.stderr)
            code = EXIT_NUMERIC
            continue
        ex.write_curve_csv(root / f"curve-{fam.id}.csv", tr)
        ex.write_mesh_obj(root / f"surface-{fam.id}.obj", ex.sweep_mesh(tr, cfg.t_range, cfg.rulings), fam.id)
    ns = argparse.Namespace
    for fam in PLANAR_FAMILIES:
        cmd_phase(ns(family=fam.id, out=str(root / f"phase-{fam.id}.json")))
    cmd_separatrix(ns(tol="1e-8", rtol=None, atol=None, out=str(root / "separatrix.json")))
    flags = cmd_verify(ns(out=str(root / "audit.json")))
    return max(code, flags) if code != EXIT_OK else flags


# -- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="grimreaper", description="Grim reapers in H^2 x R")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp, mesh=False):
        sp.add_argument("--family", help="family id, e.g. parabolic-vz or parabolic-vz-tilted:1.0")
        sp.add_argument("--ic", help="initial profile state a,b,angle at s=0")
        sp.add_argument("--span", help="arc-length range s0,s1")
        sp.add_argument("--rtol")
        sp.add_argument("--atol")
        sp.add_argument("--variant", choices=("printed", "consistent"))
        sp.add_argument("--closed", help="sample this closed-form branch instead of integrating")
        sp.add_argument("--config", help="INI file; flags override its values")
        sp.add_argument("--out")
        if mesh:
            sp.add_argument("--t-range", dest="t_range", help="ruling parameter range t0,t1")
            sp.add_argument("--rulings", type=int)

    sub.add_parser("list-families", help="print the family catalog").set_defaults(func=cmd_list_families)
    sp = sub.add_parser("curve", help="integrate a profile curve to CSV")
    run_flags(sp)
    sp.set_defaults(func=cmd_curve)
    sp = sub.add_parser("surface", help="sweep a profile curve into an OBJ mesh")
    run_flags(sp, mesh=True)
    sp.set_defaults(func=cmd_surface)
    sp = sub.add_parser("phase", help="phase-portrait data for a planar family")
    sp.add_argument("--family")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_phase)
    sp = sub.add_parser("separatrix", help="locate r* by shooting")
    sp.add_argument("--tol", default="1e-8")
    sp.add_argument("--rtol")
    sp.add_argument("--atol")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_separatrix)
    sp = sub.add_parser("verify", help="run the consistency audit")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_verify)
    sp = sub.add_parser("export-all", help="write every dataset into one directory")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_export_all)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ex.ConfigError as exc:
        _say(f"config error: {exc}", sys.stderr)
        return EXIT_CONFIG
    except (ValueError, GrimReaperError) as exc:
        if isinstance(exc, (IntegrationError, AmbiguousDichotomyError)):
            _say(f"numerical failure: {exc}", sys.stderr)
            return EXIT_NUMERIC
        _say(f"config error: {exc}", sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
