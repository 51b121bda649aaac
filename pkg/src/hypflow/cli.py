"""Command-line interface.

One subcommand per capability: `split` certifies the spectral splitting of
the linearization, `local` computes a certified local manifold chart,
`global` streams flow-image layers, `horseshoe` builds exact rational
rectangle covers, `counterexample` runs the discontinuity experiment, and
`flow` integrates a trajectory.  Structured outputs are schema-versioned
JSON with sorted keys; repeated runs with identical arguments produce
byte-identical files.  There is no randomness and hence no seed option; the
HYPFLOW_THREADS environment variable caps BLAS threads without affecting
results.  On any library error the process exits nonzero after writing a
machine-readable error document to stderr.
"""
from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import serialization as ser
from .errors import HypflowError
from .exactmath import format_rational, parse_rational
from .globalmanifold import (branch_trace, enumerate_layers,
                             hausdorff_distance, limit_target_set, _WINDOW)
from .horseshoe import (LinearHorseshoeMap, cover_distance, cover_distance_sq,
                        level_cover, level_distance, level_distance_sq)
from .localmanifold import PicardEngine, local_chart, radius_certificate
from .rk import default_box, flow_path
from .semigroup import spectral_split
from .vectorfield import split_linear

DEFAULT_MUS = ("-1/5", "-1/10", "-1/20", "-1/100", "0")


def _rational(s: str) -> Fraction:
    return parse_rational(s) if "/" in s else Fraction(s)


def _positive_rational(s: str) -> Fraction:
    v = _rational(s)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _write_text(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="ascii")


def _emit_document(doc: dict, path: str | None) -> None:
    _write_text(ser.dump_document(doc), path)


def _load_system(args):
    return ser.load_system(args.system)


# Contour-quadrature tolerance for the projection integrals.  Both settings are
# certified; "fast" accepts wider enclosures in exchange for fewer refinement
# rounds, and the emitted radii always report what was actually achieved.
QUAD_TOL_RIGOROUS = Fraction(1, 2 ** 36)
QUAD_TOL_FAST = Fraction(1, 2 ** 20)


def _analysis(field, equilibrium, precision: int, fast: bool = False):
    """Shift to the origin, split off the linear part, certify the spectrum."""
    g = field.shift_to_origin(equilibrium)
    A, rem = split_linear(g)
    tol = QUAD_TOL_FAST if fast else QUAD_TOL_RIGOROUS
    split = spectral_split(A, precision=precision, tol=tol)
    return g, A, rem, split


# -- subcommand handlers -------------------------------------------------------------

def cmd_split(args) -> int:
    field, eq = _load_system(args)
    _, _, rem, split = _analysis(field, eq, args.precision, fast=args.fast)
    doc = ser.split_document(split)
    cert = radius_certificate(split, rem)
    doc["certificate"] = ser.certificate_block(split.data, cert)
    if args.check:
        for name, value in sorted(split.residuals().items()):
            sys.stdout.write(f"{name} {value!r}\n")
        sys.stdout.write(f"ball_identities_enclosed {split.verify()}\n")
        if args.output not in (None, "-"):
            _emit_document(doc, args.output)
    else:
        _emit_document(doc, args.output)
    return 0


def cmd_local(args) -> int:
    field, eq = _load_system(args)
    chart = local_chart(field, eq, kind=args.mode, grid_resolution=args.grid,
                        tol=args.tol, precision=args.precision)
    doc = ser.chart_document(chart)
    _emit_document(doc, args.output)
    if args.csv:
        _write_text(ser.chart_csv(chart), args.csv)
    return 0


def cmd_global(args) -> int:
    field, eq = _load_system(args)
    chart = local_chart(field, eq, kind=args.mode, grid_resolution=args.grid,
                        tol=args.tol, precision=args.precision)
    box = default_box(field.dim, args.box)
    layers = list(enumerate_layers(field, chart, max_layers=args.layers,
                                   step=args.step, box=box,
                                   tol=args.flow_tol))
    _write_text(ser.layers_csv(layers), args.output)
    if args.summary:
        doc = ser.make_document("layers", {
            "kind": chart.kind,
            "step": repr(args.step),
            "layerSizes": [len(layer.points) for layer in layers],
            "dropped": [layer.dropped for layer in layers],
            "certificate": ser.certificate_block(chart.data,
                                                 chart.certificate),
        })
        _emit_document(doc, args.summary)
    return 0


def cmd_horseshoe(args) -> int:
    hmap = LinearHorseshoeMap(args.ratio)
    cover = level_cover(hmap, args.level, max_rects=args.budget)
    doc = ser.cover_document(cover)
    m = args.certify_level if args.certify_level is not None else args.level + 2
    if m < args.level:
        raise ValueError("certificate level must not be below the cover level")
    dsq = level_distance_sq(hmap, args.level, m)
    d = level_distance(hmap, args.level, m)
    doc["certificate"] = {
        "levelFine": m,
        "distance": format_rational(d),
        "distanceSq": format_rational(dsq),
        "distanceFloat": float(d),
        "bound": format_rational(cover.hausdorff_bound),
        "withinBound": bool(d <= cover.hausdorff_bound),
    }
    _emit_document(doc, args.output)
    if args.svg:
        _write_text(ser.svg_cover(cover), args.svg)
    return 0


def cmd_counterexample(args) -> int:
    window = _WINDOW
    if args.window:
        x0, x1, y0, y1 = (float(v) for v in args.window.split(","))
        window = ((x0, x1), (y0, y1))
        if not (x0 < x1 and y0 < y1):
            raise ValueError("degenerate window")
    mus = args.mu if args.mu else list(DEFAULT_MUS)
    target = limit_target_set()
    traces = [branch_trace(_rational(m), pitch=args.pitch, window=window)
              for m in mus]
    rows = [(t.mu, hausdorff_distance(t.points, target)) for t in traces]
    win_frac = tuple((Fraction(repr(a)), Fraction(repr(b))) for a, b in window)
    doc = ser.counterexample_document(rows, Fraction(repr(args.pitch)),
                                      win_frac)
    _emit_document(doc, args.output)
    if args.csv:
        lines = ["mu,x1,x2"]
        for t in traces:
            mu_str = format_rational(t.mu)
            for p in t.points:
                lines.append(f"{mu_str},{float(p[0])!r},{float(p[1])!r}")
        _write_text("\n".join(lines) + "\n", args.csv)
    if args.svg:
        _write_text(ser.svg_traces([t.points for t in traces], window),
                    args.svg)
    return 0


def cmd_flow(args) -> int:
    field, _ = _load_system(args)
    start = [float(_rational(v)) for v in args.start.split(",")]
    box = default_box(field.dim, args.box)
    times, points = flow_path(field.eval_float, start, args.time,
                              tol=args.flow_tol, box=box,
                              max_step=args.max_step)
    _write_text(ser.path_csv(times, points), args.output)
    return 0


# -- parser --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypflow",
        description="Certified invariant-manifold computations for "
                    "hyperbolic equilibria of polynomial vector fields.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_system(p):
        p.add_argument("--system", required=True,
                       help="system document (JSON: dim, components, "
                            "equilibrium; rationals as 'p/q')")
        p.add_argument("--precision", type=int, default=32,
                       help="starting bit precision for spectral enclosures")

    def add_output(p, what="structured document"):
        p.add_argument("-o", "--output", default="-",
                       help=f"{what} path ('-' for stdout)")

    def add_chart_knobs(p):
        p.add_argument("--mode", choices=("stable", "unstable"),
                       default="stable", help="which manifold to compute")
        p.add_argument("--grid", type=int, default=9,
                       help="lattice resolution per axis (>= 2)")
        p.add_argument("--tol", type=_positive_rational, default=Fraction(1, 10 ** 6),
                       help="uniform chart tolerance (rational or decimal)")

    p = sub.add_parser("split", help="certify the spectral splitting")
    add_system(p)
    add_output(p)
    p.add_argument("--check", action="store_true",
                   help="print projection-algebra residuals instead of the "
                        "document (the document still goes to -o if given)")
    p.add_argument("--fast", action="store_true",
                   help="coarser contour quadrature: still certified, but "
                        "wider enclosures in exchange for speed")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("local", help="certified local manifold chart")
    add_system(p)
    add_chart_knobs(p)
    add_output(p, "chart document")
    p.add_argument("--csv", help="also write the point cloud as CSV "
                                 "(header b1..bk,x1..xn,err)")
    p.set_defaults(func=cmd_local)

    p = sub.add_parser("global", help="enumerate global manifold layers")
    add_system(p)
    add_chart_knobs(p)
    add_output(p, "layer CSV (header j,x1..xn)")
    p.add_argument("--layers", type=int, default=10,
                   help="number of flow-image layers beyond the chart")
    p.add_argument("--step", type=float, default=1.0,
                   help="flow time per layer")
    p.add_argument("--box", type=float, default=10.0,
                   help="half-width of the clipping box")
    p.add_argument("--flow-tol", type=float, default=1e-9,
                   help="integrator tolerance per unit time")
    p.add_argument("--summary", help="also write a summary document")
    p.set_defaults(func=cmd_global)

    p = sub.add_parser("horseshoe", help="exact rectangle covers of the "
                                         "horseshoe invariant set")
    p.add_argument("--level", type=int, default=3, help="cover level n")
    p.add_argument("--ratio", type=_rational, default=Fraction(1, 4),
                   help="contraction ratio lambda (0 < lambda < 1/2)")
    p.add_argument("--certify-level", type=int,
                   help="finer level for the distance certificate "
                        "(default: level + 2)")
    p.add_argument("--budget", type=int, default=4 ** 9,
                   help="maximum number of closed rectangles")
    add_output(p, "cover document")
    p.add_argument("--svg", help="also draw the closed squares as SVG")
    p.set_defaults(func=cmd_horseshoe)

    p = sub.add_parser("counterexample",
                       help="trace the discontinuity experiment")
    p.add_argument("--mu", action="append",
                   help="parameter value 'p/q' (repeatable; default "
                        + " ".join(DEFAULT_MUS) + ")")
    p.add_argument("--pitch", type=float, default=5e-4,
                   help="arc-length resampling pitch")
    p.add_argument("--window",
                   help="clip window 'x0,x1,y0,y1' (default "
                        "-1.1,1,-0.1,2; distances are certified against "
                        "the fixed limit target set)")
    add_output(p, "summary document")
    p.add_argument("--csv", help="also write the polylines (header mu,x1,x2)")
    p.add_argument("--svg", help="also draw the traces as SVG")
    p.set_defaults(func=cmd_counterexample)

    p = sub.add_parser("flow", help="integrate one trajectory")
    add_system(p)
    p.add_argument("--start", required=True,
                   help="initial point 'p/q,p/q,...'")
    p.add_argument("--time", type=float, required=True,
                   help="signed integration time")
    p.add_argument("--flow-tol", type=float, default=1e-9,
                   help="integrator tolerance per unit time")
    p.add_argument("--box", type=float, default=10.0,
                   help="half-width of the clipping box")
    p.add_argument("--max-step", type=float, default=None)
    add_output(p, "path CSV (header t,x1..xn)")
    p.set_defaults(func=cmd_flow)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "grid", 2) < 2:
        parser.error("grid resolution must be at least 2")
    try:
        return args.func(args)
    except (HypflowError, ValueError, OSError) as exc:
        sys.stderr.write(ser.dump_document(ser.error_document(exc)))
        return 2


if __name__ == "__main__":
    sys.exit(main())
