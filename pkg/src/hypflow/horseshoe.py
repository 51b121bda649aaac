"""Level-n rectangle covers of the linear Smale horseshoe.

The map stretches vertically by mu = 1/lambda and contracts horizontally by
lambda on two outer vertical strips of the unit square, folding the second
strip over (180-degree rotation).  The maximal invariant set is the product
of two ratio-lambda Cantor sets; its level-n approximation is an explicit
union of 4^n closed rational squares, the complement decomposes into
4^n - 1 open rational rectangles by guillotine cuts, and every distance and
membership question about these covers is decided in exact rational
arithmetic.  No floating point anywhere in this module.
"""
from __future__ import annotations

from bisect import bisect_right
from fractions import Fraction
from typing import NamedTuple, Sequence

from .errors import EmptySet, LevelTooLarge, OutsideUnitSquare
from .exactmath import sqrt_upper

Interval = tuple[Fraction, Fraction]


class Rect(NamedTuple):
    """Axis-aligned rational rectangle [x0,x1] x [y0,y1] (or its interior)."""
    x0: Fraction
    x1: Fraction
    y0: Fraction
    y1: Fraction

    def area(self) -> Fraction:
        return (self.x1 - self.x0) * (self.y1 - self.y0)

    def contains_rect(self, other: "Rect") -> bool:
        return (self.x0 <= other.x0 and other.x1 <= self.x1
                and self.y0 <= other.y0 and other.y1 <= self.y1)

    def contains_point(self, x: Fraction, y: Fraction) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


class LinearHorseshoeMap:
    """Two-strip linear horseshoe on I = [0,1]^2.

    Vertical strips V0 = [0,L]xI, V1 = [1-L,1]xI map onto horizontal strips
    H0 = Ix[0,L], H1 = Ix[1-L,1]; the V0 branch preserves orientation, the
    V1 branch is the fold (both coordinates reversed).  Requires 0 < L < 1/2
    so the strips are disjoint; the expansion is mu = 1/L.
    """

    __slots__ = ("lam", "mu", "V0", "V1", "H0", "H1", "orientations")

    def __init__(self, lam: Fraction = Fraction(1, 4)):
        lam = Fraction(lam)
        if not (0 < lam < Fraction(1, 2)):
            raise ValueError("contraction ratio must satisfy 0 < lambda < 1/2")
        self.lam = lam
        self.mu = 1 / lam
        one = Fraction(1)
        self.V0 = Rect(Fraction(0), lam, Fraction(0), one)
        self.V1 = Rect(one - lam, one, Fraction(0), one)
        self.H0 = Rect(Fraction(0), one, Fraction(0), lam)
        self.H1 = Rect(Fraction(0), one, one - lam, one)
        self.orientations = ("preserving", "reversing")

    def _check_unit(self, x: Fraction, y: Fraction):
        if not (0 <= x <= 1 and 0 <= y <= 1):
            raise OutsideUnitSquare(f"({x}, {y}) is outside the unit square")

    def apply(self, point: Sequence) -> tuple[Fraction, Fraction]:
        """Exact image of a point in V0 or V1 (the map is linear there)."""
        x, y = (Fraction(v) for v in point)
        self._check_unit(x, y)
        if x <= self.lam:
            return x / self.lam, self.lam * y
        if x >= 1 - self.lam:
            return (1 - x) / self.lam, 1 - self.lam * y
        raise ValueError("point lies in the fold region between the strips")

    def apply_inverse(self, point: Sequence) -> tuple[Fraction, Fraction]:
        """Exact preimage of a point in H0 or H1."""
        x, y = (Fraction(v) for v in point)
        self._check_unit(x, y)
        if y <= self.lam:
            return self.lam * x, y / self.lam
        if y >= 1 - self.lam:
            return 1 - self.lam * x, (1 - y) / self.lam
        raise ValueError("point lies outside the image strips")

    def map_rect(self, r: Rect, branch: int) -> Rect:
        """Affine image of a rectangle contained in V0 (branch 0) or V1."""
        L = self.lam
        if branch == 0:
            return Rect(r.x0 / L, r.x1 / L, L * r.y0, L * r.y1)
        return Rect((1 - r.x1) / L, (1 - r.x0) / L, 1 - L * r.y1, 1 - L * r.y0)

    def unmap_rect(self, r: Rect, branch: int) -> Rect:
        """Affine preimage of a rectangle contained in H0 (branch 0) or H1."""
        L = self.lam
        if branch == 0:
            return Rect(L * r.x0, L * r.x1, r.y0 / L, r.y1 / L)
        return Rect(1 - L * r.x1, 1 - L * r.x0, (1 - r.y1) / L, (1 - r.y0) / L)


# -- Cantor interval families --------------------------------------------------------

def cantor_intervals(lam: Fraction, n: int) -> list[Interval]:
    """Sorted level-n intervals of the ratio-lambda Cantor construction:
    level 0 is [0,1]; each interval spawns its two outer sub-intervals."""
    iv: list[Interval] = [(Fraction(0), Fraction(1))]
    for _ in range(n):
        left = [(lam * a, lam * b) for a, b in iv]
        right = [(1 - lam * b, 1 - lam * a) for a, b in reversed(iv)]
        iv = left + right
    return iv


def _gaps(intervals: Sequence[Interval]) -> list[Interval]:
    return [(intervals[i][1], intervals[i + 1][0])
            for i in range(len(intervals) - 1)]


def _point_interval_distance(x: Fraction, intervals: Sequence[Interval],
                             starts: Sequence[Fraction]) -> Fraction:
    """Exact distance from x to a sorted union of closed intervals."""
    i = bisect_right(starts, x) - 1
    best = None
    if i >= 0:
        a, b = intervals[i]
        if x <= b:
            return Fraction(0)
        best = x - b
    if i + 1 < len(intervals):
        d = intervals[i + 1][0] - x
        best = d if best is None else min(best, d)
    if best is None:
        raise EmptySet("distance to an empty interval family")
    return best


def _directed_interval_sup(A: Sequence[Interval],
                           B: Sequence[Interval]) -> Fraction:
    """Exact sup over the union of A of the distance to the union of B."""
    starts = [b[0] for b in B]
    gaps = _gaps(B)
    sup = Fraction(0)
    for a, b in A:
        sup = max(sup, _point_interval_distance(a, B, starts),
                  _point_interval_distance(b, B, starts))
        # interior maxima sit at midpoints of B-gaps clipped to [a, b]
        for g0, g1 in gaps:
            if g1 <= a or g0 >= b:
                continue
            m = min(max((g0 + g1) / 2, a), b)
            sup = max(sup, min(m - g0, g1 - m))
    return sup


# -- covers --------------------------------------------------------------------------

class RectangleCover:
    """Level-n cover: 4^n closed squares housing the invariant set, the open
    complement rectangles, their count, and the level's Hausdorff bound
    (lambda^n; 4^-n for the default map)."""

    __slots__ = ("level", "lam", "intervals", "closed_rects",
                 "open_complement", "complement_piece_count", "hausdorff_bound")

    def __init__(self, level, lam, intervals, closed_rects, open_complement):
        self.level = level
        self.lam = lam
        self.intervals = intervals
        self.closed_rects = closed_rects
        self.open_complement = open_complement
        self.complement_piece_count = len(open_complement)
        self.hausdorff_bound = lam ** level

    def closed_area(self) -> Fraction:
        return sum(r.area() for r in self.closed_rects)

    def complement_area(self) -> Fraction:
        return sum(r.area() for r in self.open_complement)

    def __repr__(self):
        return (f"RectangleCover(level={self.level}, "
                f"squares={len(self.closed_rects)}, complement={self.complement_piece_count})")


def level_cover(hmap: LinearHorseshoeMap, n: int,
                max_rects: int = 4 ** 9) -> RectangleCover:
    """The level-n cover: (Cantor intervals)^2 squares plus the guillotine
    decomposition of the complement (vertical gap slabs first, then the
    horizontal gaps within each surviving column)."""
    if n < 0:
        raise ValueError("cover level must be nonnegative")
    if 4 ** n > max_rects:
        raise LevelTooLarge(
            f"4^{n} rectangles exceed the budget of {max_rects}")
    iv = cantor_intervals(hmap.lam, n)
    closed = [Rect(a, b, c, d) for a, b in iv for c, d in iv]
    zero, one = Fraction(0), Fraction(1)
    gaps = _gaps(iv)
    open_complement = [Rect(g0, g1, zero, one) for g0, g1 in gaps]
    open_complement.extend(Rect(a, b, g0, g1)
                           for a, b in iv for g0, g1 in gaps)
    return RectangleCover(n, hmap.lam, iv, closed, open_complement)


def contains_point(hmap: LinearHorseshoeMap, point: Sequence, n: int) -> bool:
    """Exact membership of a rational point in the level-n closed cover.

    Digit-wise in O(n) per coordinate: a coordinate survives level k+1 iff
    it lies in an outer strip and its rescaled image survives level k.
    False means the point lies in the open complement (up to its boundary).
    """
    x, y = (Fraction(v) for v in point)
    if not (0 <= x <= 1 and 0 <= y <= 1):
        raise OutsideUnitSquare(f"({x}, {y}) is outside the unit square")
    lam = hmap.lam
    for c in (x, y):
        for _ in range(n):
            if c <= lam:
                c = c / lam
            elif c >= 1 - lam:
                c = (1 - c) / lam
            else:
                return False
    return True


def cover_distance(cover_a: RectangleCover,
                   cover_b: RectangleCover) -> Fraction:
    """Certified Hausdorff distance between two covers of the same map.

    Exact via the product structure: each directed sup over C x C splits
    into identical per-axis sups, so d = sqrt(2) * max of the two exact 1-D
    directed sups.  The returned rational is an upper root within 2^-48 of
    the true distance (exact when the squared distance is a perfect square).
    """
    return sqrt_upper(cover_distance_sq(cover_a, cover_b))


def cover_distance_sq(cover_a: RectangleCover,
                      cover_b: RectangleCover) -> Fraction:
    """Exact squared Hausdorff distance between two covers."""
    if cover_a.lam != cover_b.lam:
        raise ValueError("covers belong to different horseshoe geometries")
    if cover_a.level > cover_b.level:
        raise ValueError("pass the coarser cover first")
    h = max(_directed_interval_sup(cover_a.intervals, cover_b.intervals),
            _directed_interval_sup(cover_b.intervals, cover_a.intervals))
    return 2 * h * h


def level_distance_sq(hmap: LinearHorseshoeMap, n: int, m: int) -> Fraction:
    """Exact squared Hausdorff distance between the level-n and level-m
    invariant-set approximations, computed from the 1-D interval families
    alone (no rectangle lists, so deep levels stay cheap)."""
    if m < n:
        raise ValueError("pass the coarser level first")
    A = cantor_intervals(hmap.lam, n)
    B = cantor_intervals(hmap.lam, m)
    h = max(_directed_interval_sup(A, B), _directed_interval_sup(B, A))
    return 2 * h * h


def level_distance(hmap: LinearHorseshoeMap, n: int, m: int) -> Fraction:
    """Upper root of level_distance_sq within 2^-48."""
    return sqrt_upper(level_distance_sq(hmap, n, m))


class InvarianceReport(NamedTuple):
    level: int
    forward_ok: bool      # f(Lambda_n) covers Lambda_{n+1}
    backward_ok: bool     # f^-1(Lambda_n) covers Lambda_{n+1}
    targets: int          # level-(n+1) squares checked
    uncovered: int        # targets missed in either direction


def invariance_check(hmap: LinearHorseshoeMap, n: int,
                     max_rects: int = 4 ** 9) -> InvarianceReport:
    """Verify f(Lambda_n) and f^-1(Lambda_n) both cover Lambda_{n+1} exactly.

    The images are computed by exact affine rectangle mapping of the strip
    intersections; every target square must be contained in some image.
    """
    if n < 1:
        raise ValueError("invariance is checked from level 1")
    cov = level_cover(hmap, n, max_rects)
    tgt = level_cover(hmap, n + 1, max_rects)
    L = hmap.lam

    fwd = []
    bwd = []
    for r in cov.closed_rects:
        if r.x1 <= L:
            fwd.append(hmap.map_rect(r, 0))
        elif r.x0 >= 1 - L:
            fwd.append(hmap.map_rect(r, 1))
        else:
            for branch, strip in ((0, hmap.V0), (1, hmap.V1)):
                part = Rect(max(r.x0, strip.x0), min(r.x1, strip.x1),
                            r.y0, r.y1)
                if part.x0 < part.x1:
                    fwd.append(hmap.map_rect(part, branch))
        if r.y1 <= L:
            bwd.append(hmap.unmap_rect(r, 0))
        elif r.y0 >= 1 - L:
            bwd.append(hmap.unmap_rect(r, 1))
        else:
            for branch, strip in ((0, hmap.H0), (1, hmap.H1)):
                part = Rect(r.x0, r.x1, max(r.y0, strip.y0),
                            min(r.y1, strip.y1))
                if part.y0 < part.y1:
                    bwd.append(hmap.unmap_rect(part, branch))

    missed = 0
    fwd_ok = bwd_ok = True
    for t in tgt.closed_rects:
        if not any(img.contains_rect(t) for img in fwd):
            fwd_ok = False
            missed += 1
        if not any(img.contains_rect(t) for img in bwd):
            bwd_ok = False
            missed += 1
    return InvarianceReport(n, fwd_ok, bwd_ok, len(tgt.closed_rects), missed)
