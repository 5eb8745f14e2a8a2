"""Command line entry point: ``isowill <command> [flags]``.

Every flag can also be given in a ``--config`` file as ``key = value``;
flags on the command line win. Exit codes: 0 success, 2 invalid input,
3 numerical failure (diagnostics are still written), 64 unknown command.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import glue, surfaces
from .analytic import Ellipsoid, Torus
from .errors import (
    BisectionNoBracket,
    IoError,
    IsowillError,
    NoNegativeExcess,
    NumericalFailure,
    ValidationError,
)
from .formats import read_config, read_obj, write_obj, write_report
from .mesh import measure
from .mobius import invert, match_iso_by_inversion, normalized_inversion

COMMANDS = ("gen", "measure", "invert", "vary", "glue", "sweep", "theorem", "constants")
USAGE = "usage: isowill {" + ",".join(COMMANDS) + "} [--config PATH] [--out DIR] [flags]"

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_USAGE = 0, 2, 3, 64


# ---------------------------------------------------------------------------
# surfaces from flags


def _parse_kv(text: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise ValidationError(f"expected key=value in {text!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def make_surface(name: str, kw: dict):
    """Build a generated surface from a generator name and string/float parameters."""
    f = {k: float(v) for k, v in kw.items() if v is not None}
    name = name.lower()
    if name == "torus":
        R = f.get("R", 1.0)
        r = f["r"] if "r" in f else f.get("c", 0.5) * R
        n = int(f.get("n", 128))
        return surfaces.gen_torus(surfaces.TorusSpec(R, r, int(f.get("nu", n)), int(f.get("nv", n))))
    if name in ("icosphere", "sphere"):
        return surfaces.gen_icosphere(f.get("radius", 1.0), int(f.get("subdiv", 4)))
    if name == "ellipsoid":
        return surfaces.gen_ellipsoid(f.get("a", 1.0), f.get("b", 1.0), f.get("c", 2.0), int(f.get("subdiv", 5)))
    if name in ("necked", "necked_spheres"):
        return surfaces.gen_necked_spheres(int(f.get("g", 1)), f.get("eps", 0.05), f.get("delta", 0.005))
    raise ValidationError(f"unknown generator {name!r}")


def surface_from_spec(spec: str):
    """``torus:c=0.4``, ``ellipsoid:a=1,b=1,c=2`` or a path to an OBJ file."""
    if spec.lower().endswith(".obj"):
        return read_obj(spec)
    name, _, rest = spec.partition(":")
    return make_surface(name, _parse_kv(rest))


def default_gluing_vertex(mesh, role: str) -> int:
    """Outer equator for a first torus, inner equator for a second; equator of an ellipsoid."""
    src = mesh.source
    shape = getattr(src, "shape", None)
    if isinstance(shape, Torus):
        target = shape.point(0.0, 0.0 if role == "f1" else np.pi)
    elif isinstance(shape, Ellipsoid):
        target = np.array([shape.a, 0.0, 0.0])
    else:
        return 0
    target = src.to_world(np.asarray(target, dtype=float))
    return int(np.argmin(np.linalg.norm(mesh.vertices - target, axis=1)))


def _cli_surface(args):
    if args.input:
        return read_obj(args.input)
    if not args.gen:
        raise ValidationError("give --gen NAME or --in FILE.obj")
    keys = ("R", "r", "c", "a", "b", "n", "nu", "nv", "subdiv", "radius", "g", "eps", "delta")
    return make_surface(args.gen, {k: getattr(args, k) for k in keys if getattr(args, k) is not None})


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="isowill", description="Willmore energy and isoperimetric ratio toolkit.", allow_abbrev=False
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key=value file; command-line flags override it")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--tol", action="append", default=[], metavar="KEY=VALUE", help="tolerance override")
    p.add_argument("--name", default=None, help="row name in measures reports")
    # surfaces
    p.add_argument("--gen")
    p.add_argument("--in", dest="input")
    for k in ("R", "r", "c", "a", "b", "radius", "eps", "delta"):
        p.add_argument(f"--{k}", type=float)
    for k in ("n", "nu", "nv", "subdiv", "g"):
        p.add_argument(f"--{k}", type=int)
    # inversion
    p.add_argument("--center", help="x,y,z of an inversion center")
    p.add_argument("--vertex", type=int, help="invert at this vertex after normalizing there")
    p.add_argument("--target", type=float, help="target isoperimetric ratio for the inverted surface")
    # variation
    p.add_argument("--forbidden", type=int)
    p.add_argument("--radius-edges", type=float, default=5.0, help="bump radius in mean edge lengths")
    p.add_argument("--step", type=float, help="write the mesh moved by STEP * xi")
    # gluing
    p.add_argument("--f1", default="torus:c=0.4")
    p.add_argument("--f2", default="torus:c=0.6")
    p.add_argument("--p1", type=int)
    p.add_argument("--p2", type=int)
    p.add_argument("--alpha", type=float, default=0.02)
    p.add_argument("--alphas", default="0.08,0.04,0.02,0.01")
    p.add_argument("--alpha-floor", type=float, default=0.005)
    p.add_argument("--t", type=float)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--m", type=float, default=2.25)
    p.add_argument("--band-scale", type=float, default=0.15)
    p.add_argument("--p-norm", type=float, default=0.03)
    p.add_argument("--n-theta", type=int, default=128)
    return p


def parse_args(argv):
    parser = build_parser()
    # a first pass only to find --config
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        cfg = read_config(known.config)
        dests = {a.dest for a in parser._actions}
        unknown = sorted(set(cfg) - dests)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        # string defaults are converted by each option's type
        parser.set_defaults(**cfg)
    return parser.parse_args(argv)


def _tolerances(args) -> dict:
    out = {}
    for item in args.tol:
        out.update({k: float(v) for k, v in _parse_kv(item).items()})
    return out


# ---------------------------------------------------------------------------
# commands


def _measure_row(name, mesh) -> dict:
    row = measure(mesh).as_row()
    row["name"] = name
    return row


def cmd_gen(args, out: Path):
    mesh = _cli_surface(args)
    name = args.name or args.gen
    write_obj(mesh, out / f"{name}.obj")
    write_report([_measure_row(name, mesh)], "measures", out / "measures.csv")


def cmd_measure(args, out: Path):
    mesh = _cli_surface(args)
    name = args.name or (Path(args.input).stem if args.input else args.gen)
    row = _measure_row(name, mesh)
    write_report([row], "measures", out / "measures.csv")
    print(f"{name}: W={row['willmore']:.10g} iso={row['iso']}")


def cmd_invert(args, out: Path):
    mesh = _cli_surface(args)
    tol = _tolerances(args)
    if args.target is not None:
        center, inv = match_iso_by_inversion(mesh, args.target, rtol=tol.get("match_rtol", 1e-3))
    elif args.vertex is not None:
        moved, _ = glue.normalize_at_point(mesh, args.vertex, +1)
        inv = normalized_inversion(moved, args.vertex).mesh
    elif args.center:
        inv = invert(mesh, np.array([float(x) for x in args.center.split(",")]))
    else:
        raise ValidationError("invert needs --center, --vertex or --target")
    write_obj(inv, out / "inverted.obj")
    write_report([_measure_row("input", mesh), _measure_row("inverted", inv)], "measures", out / "measures.csv")


def cmd_vary(args, out: Path):
    from .variation import build_variation, first_variation_rates, mean_edge_length, select_variation_point

    mesh = _cli_surface(args)
    p = select_variation_point(mesh, forbidden=args.forbidden)
    spec = build_variation(mesh, p, args.radius_edges * mean_edge_length(mesh), forbidden=args.forbidden)
    rates = first_variation_rates(spec)
    row = {"vertex": p, "radius": spec.radius, "h": spec.h, "volume_residual": spec.volume_residual, **rates.as_row()}
    write_report([row], "variation", out / "variation.csv")
    if args.step is not None:
        write_obj(spec.apply(args.step), out / "varied.obj")


def _pair_inputs(args):
    f1, f2 = surface_from_spec(args.f1), surface_from_spec(args.f2)
    p1 = args.p1 if args.p1 is not None else default_gluing_vertex(f1, "f1")
    p2 = args.p2 if args.p2 is not None else default_gluing_vertex(f2, "f2")
    return f1, p1, f2, p2


def _alphas(args):
    return [float(a) for a in str(args.alphas).split(",") if a.strip()]


def cmd_glue(args, out: Path):
    f1, p1, f2, p2 = _pair_inputs(args)
    params = glue.GluingParams(
        args.alpha, t=args.t, gamma=args.gamma, band_scale=args.band_scale, m=args.m, p_norm=args.p_norm
    )
    glued = glue.connected_sum(f1, p1, f2, p2, params, n_theta=args.n_theta)
    rep = glue.energy_iso_excess(glued)
    row = {
        "alpha": glued.alpha,
        "t": glued.t,
        "beta": glued.beta,
        "gamma": params.gamma,
        "dW_excess": rep.dW,
        "predicted": rep.predicted,
        "dIso": rep.dIso,
        "dArea": rep.dArea,
        "dVolume": rep.dVolume,
    }
    write_obj(glued.mesh, out / "glued.obj")
    write_report([row], "excess", out / "excess.csv")
    write_report([_measure_row("glued", glued.mesh)], "measures", out / "measures.csv")


def cmd_sweep(args, out: Path):
    f1, p1, f2, p2 = _pair_inputs(args)
    rep = glue.sweep_alpha(
        f1, p1, f2, p2, _alphas(args), t=args.t, gamma=args.gamma, band_scale=args.band_scale, p_norm=args.p_norm
    )
    summary = [
        ("slope_dW_excess", rep.slope_dW, rep.slope_dW_halfwidth),
        ("slope_dIso", rep.slope_dIso, rep.slope_dIso_halfwidth),
    ]
    write_report(rep.rows, "sweep", out / "sweep.csv", summary=summary)
    print(f"slope(-dW) = {rep.slope_dW:.4f} +- {rep.slope_dW_halfwidth:.2g}, slope(|dIso|) = {rep.slope_dIso:.4f}")


def cmd_theorem(args, out: Path):
    f1, p1, f2, p2 = _pair_inputs(args)
    tol = _tolerances(args)
    try:
        res = glue.theorem_harness(
            f1,
            p1,
            f2,
            p2,
            alphas=_alphas(args),
            alpha_floor=args.alpha_floor,
            gamma=args.gamma,
            m=args.m,
            band_scale=args.band_scale,
            p_norm=args.p_norm,
            iso_rtol=tol.get("iso_rtol", 1e-12),
            n_theta=args.n_theta,
        )
    except NoNegativeExcess as exc:
        write_report(exc.rows, "trials", out / "trials.csv")
        raise
    except BisectionNoBracket as exc:
        rows = [{"s": s, "iso_gap": g} for s, g in exc.endpoints]
        write_report(rows, "trials", out / "trials.csv")
        raise
    write_obj(res.glued.mesh, out / "glued.obj")
    write_report([res.as_row()], "harness", out / "harness.csv")
    write_report(res.trials, "trials", out / "trials.csv")
    print(
        f"alpha={res.alpha:g} s={res.s:.6g} iso gap={res.iso_gap:.3g} "
        f"W margin={res.W_margin:.6g} genus={res.mesh_measures.genus}"
    )


def cmd_constants(args, out: Path):
    write_report([surfaces.solution_interval_constants().as_row()], "constants", out / "constants.csv")


HANDLERS = {
    "gen": cmd_gen,
    "measure": cmd_measure,
    "invert": cmd_invert,
    "vary": cmd_vary,
    "glue": cmd_glue,
    "sweep": cmd_sweep,
    "theorem": cmd_theorem,
    "constants": cmd_constants,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in COMMANDS:
        print(USAGE, file=sys.stderr)
        return EXIT_USAGE
    try:
        args = parse_args(argv)
    except SystemExit as exc:  # argparse reports bad flags itself
        return EXIT_INVALID if exc.code else EXIT_OK
    except (ValidationError, IoError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = Path(args.out)
    try:
        HANDLERS[args.command](args, out)
    except (ValidationError, IoError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except IsowillError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
