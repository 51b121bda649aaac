"""Schema-versioned JSON documents, CSV tables, and SVG drawings.

Structured artifacts are JSON objects carrying a "schema" field of the form
"hypflow/<kind>/v1", serialized with sorted keys and a fixed indent so two
runs with identical inputs produce byte-identical files.  Exact rationals
travel as "p/q" strings; floating-point values rely on JSON's shortest
round-trip float formatting.  SVG output is presentation-only.
"""
from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import SchemaError
from .exactmath import format_rational, parse_rational
from .horseshoe import Rect, RectangleCover

SCHEMA_ROOT = "hypflow"
SCHEMA_VERSION = "v1"


def schema_id(kind: str) -> str:
    return f"{SCHEMA_ROOT}/{kind}/{SCHEMA_VERSION}"


def make_document(kind: str, payload: dict) -> dict:
    doc = {"schema": schema_id(kind)}
    doc.update(payload)
    return doc


def dump_document(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def write_document(doc: dict, path) -> None:
    Path(path).write_text(dump_document(doc), encoding="ascii")


def load_document(path, kind: str | None = None) -> dict:
    try:
        doc = json.loads(Path(path).read_text(encoding="ascii"))
    except (OSError, ValueError) as exc:
        raise SchemaError(f"cannot read document {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("document root must be an object")
    schema = doc.get("schema")
    if not isinstance(schema, str) or not schema.startswith(SCHEMA_ROOT + "/"):
        raise SchemaError(f"missing or foreign schema field: {schema!r}")
    if not schema.endswith("/" + SCHEMA_VERSION):
        raise SchemaError(f"unsupported schema version: {schema!r}")
    if kind is not None and schema != schema_id(kind):
        raise SchemaError(f"expected {schema_id(kind)}, found {schema!r}")
    return doc


def error_document(exc: BaseException) -> dict:
    return make_document("error", {"error": type(exc).__name__,
                                   "message": str(exc)})


# -- rationals and matrices ----------------------------------------------------------

def _fr(x) -> str:
    return format_rational(Fraction(x))


def _rational_vector(v) -> list[str]:
    return [_fr(x) for x in v]


def _float_matrix(M) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(M)]


def ball_matrix_document(M) -> dict:
    """Entrywise complex enclosure: value within rad of re + i*im."""
    return {"re": _float_matrix(M.mid.real), "im": _float_matrix(M.mid.imag),
            "rad": _float_matrix(M.rad)}


# -- system files --------------------------------------------------------------------

def system_document(field, equilibrium: Sequence) -> dict:
    payload = field.to_document()
    payload["equilibrium"] = _rational_vector(equilibrium)
    return make_document("system", payload)


def load_system(path):
    """Read a system document; returns (field, equilibrium)."""
    from .vectorfield import PolyVectorField
    doc = load_document(path, "system")
    field = PolyVectorField.from_document(doc)
    eq_doc = doc.get("equilibrium")
    if eq_doc is None:
        raise SchemaError("system document lacks an equilibrium")
    if len(eq_doc) != field.dim:
        raise SchemaError("equilibrium dimension differs from the field")
    return field, tuple(parse_rational(str(v)) for v in eq_doc)


# -- certificate constants -----------------------------------------------------------

def certificate_block(data, cert) -> dict:
    """Constants every manifold document embeds: gap constants sigma, alpha,
    M, the resolvent bound K1, decay constant K, and the contraction-region
    certificate (m0, r, eta, dRadius, ...)."""
    g = data.gap
    block = {"sigma": _fr(g.sigma), "alpha": _fr(g.alpha), "M": _fr(g.M),
             "K1": _fr(data.K1), "K": _fr(data.K)}
    block.update(cert.as_dict())
    return block


# -- splitting documents -------------------------------------------------------------

def split_document(split) -> dict:
    """Eigenvalue enclosures, gap constants, contour vertices, resolvent and
    decay bounds, and both projections as entrywise ball enclosures."""
    data = split.data
    g = data.gap

    def contour_doc(c):
        return {"reMin": _fr(c.re_min), "reMax": _fr(c.re_max),
                "imMin": _fr(c.im_min), "imMax": _fr(c.im_max),
                "vertices": [[_fr(a), _fr(b)] for a, b in c.vertices()]}

    payload = {
        "dim": data.n,
        "matrix": [_rational_vector(row) for row in data.A],
        "eigenvalues": [{"re": _fr(e.re), "im": _fr(e.im), "rad": _fr(e.rad),
                         "multiplicity": e.multiplicity}
                        for e in data.enclosures],
        "gap": {"betaMinus": _fr(g.beta_minus), "betaPlus": _fr(g.beta_plus),
                "sigma": _fr(g.sigma), "alpha": _fr(g.alpha),
                "alpha1": _fr(g.alpha1), "alpha2": _fr(g.alpha2),
                "M": _fr(g.M), "stableCount": g.stable_count,
                "unstableCount": g.unstable_count},
        "contours": {"stable": contour_doc(data.gamma1),
                     "unstable": contour_doc(data.gamma2)},
        "K1": _fr(data.K1),
        "K": _fr(data.K),
        "P1": ball_matrix_document(split.P1),
        "P2": ball_matrix_document(split.P2),
        "residuals": split.residuals(),
    }
    return make_document("split", payload)


# -- chart documents and CSV ---------------------------------------------------------

def chart_document(chart) -> dict:
    origin = np.array([float(v) for v in chart.origin])
    samples = []
    for s in chart.samples:
        samples.append({
            "coords": _rational_vector(s.coords),
            "point": [float(v) for v in origin + np.asarray(s.point)],
            "error": float(s.error),
            "identityResidual": float(s.identity_residual),
        })
    payload = {
        "kind": chart.kind,
        "dim": chart.data.n,
        "origin": _rational_vector(chart.origin),
        "basis": _float_matrix(chart.basis),
        "tol": _fr(chart.tol),
        "mesh": _fr(chart.mesh),
        "lipschitz": _fr(chart.lipschitz),
        "certificate": certificate_block(chart.data, chart.certificate),
        "samples": samples,
    }
    return make_document("chart", payload)


def chart_csv(chart) -> str:
    """Point cloud rows: lattice coordinates, ambient point, certified error."""
    k = len(chart.samples[0].coords) if chart.samples else 0
    n = chart.data.n
    header = ",".join([f"b{i + 1}" for i in range(k)]
                      + [f"x{i + 1}" for i in range(n)] + ["err"])
    origin = np.array([float(v) for v in chart.origin])
    lines = [header]
    for s in chart.samples:
        amb = origin + np.asarray(s.point)
        row = ([repr(float(c)) for c in s.coords]
               + [repr(float(v)) for v in amb] + [repr(float(s.error))])
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def layers_csv(layers) -> str:
    """Global-manifold stream: one row per point, labelled by layer index."""
    lines = []
    n = None
    for layer in layers:
        for p in layer.points:
            if n is None:
                n = len(p)
                lines.append(",".join(["j"] + [f"x{i + 1}" for i in range(n)]))
            lines.append(",".join([str(layer.index)]
                                  + [repr(float(v)) for v in p]))
    if not lines:
        lines.append("j")
    return "\n".join(lines) + "\n"


def path_csv(times, points) -> str:
    pts = np.asarray(points)
    header = ",".join(["t"] + [f"x{i + 1}" for i in range(pts.shape[1])])
    lines = [header]
    for t, p in zip(times, pts):
        lines.append(",".join([repr(float(t))] + [repr(float(v)) for v in p]))
    return "\n".join(lines) + "\n"


# -- horseshoe documents -------------------------------------------------------------

def _rect_doc(r: Rect) -> list[str]:
    return [_fr(r.x0), _fr(r.x1), _fr(r.y0), _fr(r.y1)]


def _rect_from_doc(v) -> Rect:
    return Rect(*(parse_rational(str(x)) for x in v))


def cover_document(cover: RectangleCover) -> dict:
    payload = {
        "level": cover.level,
        "ratio": _fr(cover.lam),
        "complementPieces": cover.complement_piece_count,
        "hausdorffBound": _fr(cover.hausdorff_bound),
        "intervals": [[_fr(a), _fr(b)] for a, b in cover.intervals],
        "closedRects": [_rect_doc(r) for r in cover.closed_rects],
        "openComplement": [_rect_doc(r) for r in cover.open_complement],
    }
    return make_document("cover", payload)


def cover_from_document(doc: dict) -> RectangleCover:
    if doc.get("schema") != schema_id("cover"):
        raise SchemaError("not a cover document")
    intervals = [(parse_rational(str(a)), parse_rational(str(b)))
                 for a, b in doc["intervals"]]
    cover = RectangleCover(
        int(doc["level"]), parse_rational(str(doc["ratio"])), intervals,
        [_rect_from_doc(v) for v in doc["closedRects"]],
        [_rect_from_doc(v) for v in doc["openComplement"]])
    if cover.complement_piece_count != int(doc["complementPieces"]):
        raise SchemaError("complement count disagrees with the rectangle list")
    return cover


def certificate_document(cover_a: RectangleCover, cover_b: RectangleCover,
                         distance: Fraction, distance_sq: Fraction) -> dict:
    return make_document("hausdorff-certificate", {
        "levelCoarse": cover_a.level,
        "levelFine": cover_b.level,
        "ratio": _fr(cover_a.lam),
        "distance": _fr(distance),
        "distanceSq": _fr(distance_sq),
        "distanceFloat": float(distance),
        "bound": _fr(cover_a.hausdorff_bound),
        "withinBound": bool(distance <= cover_a.hausdorff_bound),
    })


# -- counterexample documents --------------------------------------------------------

def counterexample_document(rows, pitch: Fraction, window) -> dict:
    return make_document("counterexample", {
        "window": [[_fr(a), _fr(b)] for a, b in window],
        "pitch": _fr(pitch),
        "results": [{"mu": _fr(mu), "hausdorff": _fr(d),
                     "hausdorffFloat": float(d)} for mu, d in rows],
    })


# -- SVG (presentation only) ---------------------------------------------------------

def _svg_open(width: int, height: int) -> list[str]:
    return [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">',
            f'<rect width="{width}" height="{height}" fill="white"/>']


def svg_cover(cover: RectangleCover, size: int = 640) -> str:
    """Draw the closed squares of a cover on the unit square."""
    out = _svg_open(size, size)
    for r in cover.closed_rects:
        x = float(r.x0) * size
        y = (1.0 - float(r.y1)) * size
        w = float(r.x1 - r.x0) * size
        h = float(r.y1 - r.y0) * size
        out.append(f'<rect x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" '
                   f'height="{h:.3f}" fill="#36454f"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def svg_traces(traces, window, size: int = 640) -> str:
    """Draw planar point sequences inside the given window."""
    (x0, x1), (y0, y1) = ((float(a), float(b)) for a, b in window)
    w = size
    h = int(round(size * (y1 - y0) / (x1 - x0)))
    out = _svg_open(w, h)
    palette = ["#b22222", "#1f6fb2", "#2e8b57", "#8b008b", "#d2691e"]
    for i, pts in enumerate(traces):
        arr = np.asarray(pts, dtype=float)
        coords = " ".join(
            f"{(p[0] - x0) / (x1 - x0) * w:.2f},{(y1 - p[1]) / (y1 - y0) * h:.2f}"
            for p in arr)
        out.append(f'<polyline points="{coords}" fill="none" '
                   f'stroke="{palette[i % len(palette)]}" stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
