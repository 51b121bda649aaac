"""Global invariant manifolds as flow images of local charts.

The global stable manifold is the increasing union of backward-time flow
images of the local chart (forward-time for the unstable one), so it is
enumerated layer by layer: layer 0 is the chart's sample cloud, layer j+1
flows every point of layer j one unit in the characteristic direction.
Points whose trajectory leaves the bounding window are dropped (with a log
message) - the enumeration is of the manifold's trace inside the window.

Hausdorff distances between finite rational point clouds are computed
exactly: a float sweep locates the candidate extremal pairs, then the small
candidate set is re-evaluated in exact arithmetic.  The float phase only
selects candidates (with a band that dominates its rounding error), never
decides the value.

The discontinuity experiment: a one-parameter family whose traced unstable
branch converges, as the parameter tends to zero, to a strict subset of the
limit system's branch - the distance to the limit set stays bounded away
from zero while the parameter distance vanishes.
"""
from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import EmptySet, LeftBoundingBox, StepUnderflow
from .exactmath import sqrt_upper
from .localmanifold import ManifoldChart
from .rk import flow, flow_until
from .vectorfield import PolyVectorField

logger = logging.getLogger("hypflow.global")


# -- layered enumeration -------------------------------------------------------------

class PointCloudLayer(NamedTuple):
    """One enumeration layer: flow images after `index` characteristic units."""
    index: int
    points: np.ndarray        # (m, n)
    dropped: int              # points lost to the window at this step


def enumerate_layers(field: PolyVectorField, chart: ManifoldChart,
                     max_layers: int | None = None, step: float = 1.0,
                     box=None, tol: float = 1e-9) -> Iterator[PointCloudLayer]:
    """Yield successive flow-image layers of a local chart.

    Stable charts flow backward, unstable ones forward, `step` time units
    per layer.  The generator is infinite unless max_layers is given or all
    points leave the window; consume it lazily.
    """
    if step <= 0:
        raise ValueError("layer step must be positive")
    tau = -step if chart.kind == "stable" else step
    pts = chart.ambient_points()
    j = 0
    yield PointCloudLayer(0, pts, 0)
    while max_layers is None or j < max_layers:
        j += 1
        nxt = []
        dropped = 0
        for p in pts:
            try:
                nxt.append(flow(field.eval_float, p, tau, tol=tol, box=box))
            except (LeftBoundingBox, StepUnderflow) as exc:
                dropped += 1
                logger.info("layer %d: dropped point %s (%s)", j, p, exc)
        pts = (np.array(nxt) if nxt
               else np.empty((0, pts.shape[1] if pts.ndim == 2 else 0)))
        yield PointCloudLayer(j, pts, dropped)
        if not len(pts):
            return


# -- exact Hausdorff distance --------------------------------------------------------

def _as_points(P) -> np.ndarray:
    arr = np.asarray(P, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    if arr.size == 0:
        raise EmptySet("hausdorff distance of an empty point set")
    return arr

def _exact_sq(p: np.ndarray, q: np.ndarray) -> Fraction:
    return sum((Fraction(a) - Fraction(b)) ** 2
               for a, b in zip(p.tolist(), q.tolist()))


def _directed_sq(P: np.ndarray, Q: np.ndarray) -> Fraction:
    """Exact max over P of min over Q of squared distance.

    Float phase: per-row minima of the full distance matrix, chunked to keep
    memory flat.  Band: float64 squared distances here err by well under
    1e-10 absolute (coordinates are bounded by the enumeration window), so a
    1e-9 * (1 + value) band safely covers every pair the exact phase needs.
    """
    mins = np.empty(len(P))
    chunk = max(1, int(2 ** 22 // max(len(Q), 1)))
    for lo in range(0, len(P), chunk):
        block = P[lo:lo + chunk]
        d2 = np.sum((block[:, None, :] - Q[None, :, :]) ** 2, axis=2)
        mins[lo:lo + len(block)] = np.min(d2, axis=1)
    df = float(np.max(mins))
    band = 1e-9 * (1.0 + df)
    best = Fraction(0)
    for i in np.nonzero(mins >= df - band)[0]:
        row = np.sum((P[i] - Q) ** 2, axis=1)
        cand = np.nonzero(row <= row.min() + band)[0]
        exact_min = min(_exact_sq(P[i], Q[j]) for j in cand)
        if exact_min > best:
            best = exact_min
    return best


def hausdorff_distance(P, Q) -> Fraction:
    """Certified Hausdorff distance between finite point clouds.

    The squared distance is computed exactly over the rational values the
    float64 coordinates denote; the returned root is an upper bound within
    2^-48 (exact when the square is perfect).
    """
    P, Q = _as_points(P), _as_points(Q)
    if P.shape[1] != Q.shape[1]:
        raise ValueError("point clouds of different dimensions")
    d_sq = max(_directed_sq(P, Q), _directed_sq(Q, P))
    return sqrt_upper(d_sq)


# -- the discontinuity experiment ----------------------------------------------------

class BranchTrace(NamedTuple):
    """Unstable-branch trace of the experiment family at one parameter."""
    mu: Fraction
    points: np.ndarray        # resampled polyline, arc-length pitch spacing
    duration: float           # trajectory time until the stopping event
    reason: str               # "event" (reached the window edge) or "time"


# window of the experiment, matching the margin components below
_WINDOW = ((-1.1, 1.0), (-0.1, 2.0))


def experiment_field(mu: Fraction) -> PolyVectorField:
    """x' = x^2 - 1, y' = -x y + mu (x^2 - 1): heteroclinic family whose
    traced branch limit is discontinuous at mu = 0."""
    mu = Fraction(mu)
    return PolyVectorField(2, [
        {(2, 0): Fraction(1), (0, 0): Fraction(-1)},
        {(1, 1): Fraction(-1), (2, 0): mu, (0, 0): -mu}])


def _resample(points: np.ndarray, pitch: float) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total == 0.0:
        return points[-1:].copy()
    grid = np.arange(0.0, total, pitch)
    out = np.empty((len(grid) + 1, points.shape[1]))
    for c in range(points.shape[1]):
        out[:-1, c] = np.interp(grid, s, points[:, c])
    out[-1] = points[-1]
    return out


def branch_trace(mu, pitch: float = 5e-4, t_max: float = 80.0,
                 tol: float = 1e-8, window=None) -> BranchTrace:
    """Trace the unstable branch of the equilibrium (1, 0) into the window.

    The seed steps 1e-6 along the unstable direction (-1, -2 mu / 3)
    (normalised); integration stops at the window edge or within 1e-6 of the
    invariant line x = -1.  The polyline is resampled to `pitch` arc-length
    spacing, keeping the exact final point, and clipped to the window.
    """
    mu = Fraction(mu)
    field = experiment_field(mu)
    muf = float(mu)
    v = np.array([-1.0, -2.0 * muf / 3.0])
    v /= np.linalg.norm(v)
    seed = np.array([1.0, 0.0]) + 1e-6 * v
    (x0, x1), (y0, y1) = window if window is not None else _WINDOW
    if not (x0 < x1 and y0 < y1):
        raise ValueError("degenerate window")

    def margin(z):
        x, y = z
        return min(x - x0, x1 - x, y - y0, y1 - y, x + 1.0 - 1e-6)

    stop = flow_until(field.eval_float, seed, margin, t_max, tol=tol,
                      box=(np.array([-50.0, -50.0]), np.array([50.0, 50.0])),
                      max_step=0.01)
    pts = _resample(stop.path_points, pitch)
    pts[:, 0] = np.clip(pts[:, 0], x0, x1)
    pts[:, 1] = np.clip(pts[:, 1], y0, y1)
    return BranchTrace(mu, pts, stop.time, stop.reason)


def limit_target_set(pitch: float = 1e-3) -> np.ndarray:
    """The limit system's traced branch closure: the segment [-1,1] x {0}
    together with the wall {-1} x [0,2]."""
    xs = np.arange(-1.0, 1.0 + pitch / 2, pitch)
    seg = np.column_stack([xs, np.zeros_like(xs)])
    ys = np.arange(0.0, 2.0 + pitch / 2, pitch)
    wall = np.column_stack([np.full_like(ys, -1.0), ys])
    return np.vstack([seg, wall])


def discontinuity_gap(mus: Sequence, pitch: float = 5e-4) -> list[tuple[Fraction, Fraction]]:
    """Hausdorff distance from each parameter's trace to the limit target.

    As mu -> 0- the distances decrease toward the value carried by the wall
    alone, yet the mu = 0 trace omits the wall entirely, so its distance
    jumps to the wall height: the map mu -> branch closure is discontinuous.
    """
    target = limit_target_set()
    out = []
    for mu in mus:
        trace = branch_trace(mu, pitch=pitch)
        out.append((Fraction(mu), hausdorff_distance(trace.points, target)))
    return out
