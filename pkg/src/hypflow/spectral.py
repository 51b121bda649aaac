"""Certified spectral data for rational matrices.

Pipeline: exact characteristic polynomial (Faddeev-LeVerrier over Q),
squarefree factorization (Yun) for exact multiplicities, per-factor root
disks (rational snapping where exact, otherwise Newton-refined disks of
radius deg * |q(z)/q'(z)| which provably contain a root), then the
hyperbolic gap constants, the two rectangular contours separating stable
from unstable spectrum, and a rigorous sup bound on the resolvent norm
along each contour via certified ball-matrix inversion.

All derived constants (sigma, alpha, M, K) are exact rationals produced by
a deterministic rule, so repeated runs give identical certificates.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (NotCertifiablyInvertible, NotHyperbolic,
                     PrecisionUnreachable, ResolventUncertifiable)
from .exactmath import sqrt_upper
from .linalg import FloatBallMatrix

Polynomial = list[Fraction]  # ascending coefficients, exact


# -- exact polynomial helpers ----------------------------------------------------

def _trim(p: Polynomial) -> Polynomial:
    while p and p[-1] == 0:
        p.pop()
    return p


def _deriv(p: Polynomial) -> Polynomial:
    return [c * i for i, c in enumerate(p)][1:]


def _divmod(a: Polynomial, b: Polynomial) -> tuple[Polynomial, Polynomial]:
    a = list(a)
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    inv = 1 / b[-1]
    for i in range(len(a) - len(b), -1, -1):
        f = a[i + len(b) - 1] * inv
        if f:
            q[i] = f
            for j, c in enumerate(b):
                a[i + j] -= f * c
    return _trim(q), _trim(a)


def _monic(p: Polynomial) -> Polynomial:
    lead = p[-1]
    return [c / lead for c in p]


def _gcd(a: Polynomial, b: Polynomial) -> Polynomial:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _divmod(a, b)[1]
    return _monic(a) if a else a


def characteristic_polynomial(A: Sequence[Sequence[Fraction]]) -> Polynomial:
    """det(xI - A) as exact ascending coefficients (monic)."""
    n = len(A)
    A = [[Fraction(v) for v in row] for row in A]
    c = [Fraction(0)] * (n + 1)
    c[n] = Fraction(1)
    M = [row[:] for row in A]
    c[n - 1] = -sum(M[i][i] for i in range(n))
    for k in range(2, n + 1):
        for i in range(n):
            M[i][i] += c[n - k + 1]
        M = [[sum(A[i][l] * M[l][j] for l in range(n)) for j in range(n)]
             for i in range(n)]
        c[n - k] = -sum(M[i][i] for i in range(n)) / k
    return c


def squarefree_factors(p: Polynomial) -> list[tuple[Polynomial, int]]:
    """Yun's algorithm: [(monic squarefree factor, multiplicity)], exact."""
    p = _monic(_trim(list(p)))
    dp = _deriv(p)
    g = _gcd(p, dp)
    if not g or len(g) == 1:
        return [(p, 1)]
    b = _divmod(p, g)[0]
    c = _divmod(dp, g)[0]
    d = _trim([x - y for x, y in
               zip(c + [Fraction(0)] * len(b), _deriv(b) + [Fraction(0)] * len(c))])
    out = []
    i = 1
    while len(b) > 1:
        f = _gcd(b, d) if d else _monic(list(b))
        if len(f) > 1:
            out.append((f, i))
        b = _divmod(b, f)[0]
        c = _divmod(d, f)[0] if d else []
        d = _trim([x - y for x, y in
                   zip(c + [Fraction(0)] * len(b), _deriv(b) + [Fraction(0)] * len(c))])
        i += 1
    return out


def _eval_real(p: Polynomial, x: Fraction) -> Fraction:
    v = Fraction(0)
    for c in reversed(p):
        v = v * x + c
    return v


def _eval_complex(p: Polynomial, zr: Fraction, zi: Fraction) -> tuple[Fraction, Fraction]:
    vr, vi = Fraction(0), Fraction(0)
    for c in reversed(p):
        vr, vi = vr * zr - vi * zi + c, vr * zi + vi * zr
    return vr, vi


def _round_dyadic(x: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(round(x * scale), scale)


# -- eigenvalue enclosures --------------------------------------------------------

class EigenvalueEnclosure:
    """Closed disk |z - (re + i im)| <= rad certified to contain an eigenvalue
    of the stated algebraic multiplicity.  Centers and radius are exact."""

    __slots__ = ("re", "im", "rad", "multiplicity")

    def __init__(self, re, im, rad, multiplicity: int):
        self.re = Fraction(re)
        self.im = Fraction(im)
        self.rad = Fraction(rad)
        self.multiplicity = int(multiplicity)

    def __repr__(self):
        return (f"EigenvalueEnclosure({self.re}+{self.im}j, rad={self.rad}, "
                f"mult={self.multiplicity})")

    @property
    def re_lower(self) -> Fraction:
        return self.re - self.rad

    @property
    def re_upper(self) -> Fraction:
        return self.re + self.rad

    def abs_upper(self) -> Fraction:
        return sqrt_upper(self.re * self.re + self.im * self.im) + self.rad

    def is_stable(self) -> bool:
        return self.re_upper < 0

    def is_unstable(self) -> bool:
        return self.re_lower > 0

    def straddles_axis(self) -> bool:
        return self.re_lower <= 0 <= self.re_upper


def _snap_rational(q: Polynomial, zr: float, zi: float):
    """Try to identify an exact rational (or Gaussian rational) root."""
    cr = Fraction(zr).limit_denominator(10 ** 6)
    if abs(zi) < 1e-9:
        if _eval_real(q, cr) == 0:
            return cr, Fraction(0)
        return None
    ci = Fraction(zi).limit_denominator(10 ** 6)
    vr, vi = _eval_complex(q, cr, ci)
    if vr == 0 and vi == 0:
        return cr, ci
    return None


def _newton_disk(q: Polynomial, dq: Polynomial, zr: Fraction, zi: Fraction,
                 target: Fraction, bits: int, max_steps: int = 80):
    """Newton-refine a seed until the containment disk has radius <= target.

    The disk |z - z0| <= deg * |q(z0)/q'(z0)| always contains a root of the
    squarefree q; radius is an exact rational upper bound.  Returns
    (zr, zi, radius) or None if the budget runs out.
    """
    deg = len(q) - 1
    real_only = zi == 0
    for _ in range(max_steps):
        if real_only:
            qv = _eval_real(q, zr)
            dv = _eval_real(dq, zr)
            if dv == 0:
                return None
            step = qv / dv
            rad = deg * abs(step)
            if rad <= target:
                return zr, Fraction(0), rad
            zr = _round_dyadic(zr - step, bits)
        else:
            qr, qi = _eval_complex(q, zr, zi)
            dr, di = _eval_complex(dq, zr, zi)
            den = dr * dr + di * di
            if den == 0:
                return None
            sr = (qr * dr + qi * di) / den
            si = (qi * dr - qr * di) / den
            rad = deg * sqrt_upper(sr * sr + si * si)
            if rad <= target:
                return zr, zi, rad
            zr = _round_dyadic(zr - sr, bits)
            zi = _round_dyadic(zi - si, bits)
    return None


def _factor_disks(q: Polynomial, target: Fraction, bits: int):
    """Disks for all roots of a squarefree monic factor, or None to escalate."""
    deg = len(q) - 1
    if deg == 1:
        return [(-q[0] / q[1], Fraction(0), Fraction(0))]
    roots = np.roots([float(c) for c in reversed(q)])
    scale = max(1.0, max(abs(r) for r in roots))
    tau = 1e-7 * scale
    reals = sorted(float(r.real) for r in roots if abs(r.imag) <= tau)
    upper = sorted((float(r.real), float(r.imag)) for r in roots if r.imag > tau)
    lower = [r for r in roots if r.imag < -tau]
    if len(reals) + len(upper) + len(lower) != deg or len(upper) != len(lower):
        raise PrecisionUnreachable(
            "could not classify approximate roots into real/conjugate sets")
    dq = _deriv(q)
    disks = []
    taken = set()
    for seeds, conj in ((reals, False), (upper, True)):
        for seed in seeds:
            zr, zi = (seed, 0.0) if not conj else seed
            snap = _snap_rational(q, zr, zi)
            if snap is not None and snap not in taken:
                taken.add(snap)
                disks.append((snap[0], snap[1], Fraction(0)))
                if conj and snap[1] != 0:
                    disks.append((snap[0], -snap[1], Fraction(0)))
                continue
            got = _newton_disk(q, dq, Fraction(zr), Fraction(zi), target, bits)
            if got is None:
                return None
            disks.append(got)
            if conj:
                disks.append((got[0], -got[1], got[2]))
    if len(disks) != deg:
        return None
    return disks


def _pairwise_disjoint(disks) -> bool:
    for i in range(len(disks)):
        for j in range(i + 1, len(disks)):
            dr = disks[i].re - disks[j].re
            di = disks[i].im - disks[j].im
            rr = disks[i].rad + disks[j].rad
            if dr * dr + di * di <= rr * rr:
                return False
    return True


def eigenvalue_enclosures(A: Sequence[Sequence[Fraction]],
                          precision: int = 32) -> list[EigenvalueEnclosure]:
    """Pairwise-disjoint disks of radius <= 2^-precision enclosing the
    spectrum of a rational matrix, with exact algebraic multiplicities.
    Rational eigenvalues come back with radius 0."""
    p = characteristic_polynomial(A)
    factors = squarefree_factors(p)
    assert sum((len(q) - 1) * m for q, m in factors) == len(A)
    prec = precision
    bits = max(128, 2 * precision + 64)
    while prec <= 4096:
        target = Fraction(1, 2 ** prec)
        enclosures = []
        failed = False
        for q, mult in factors:
            disks = _factor_disks(q, target, bits)
            if disks is None:
                failed = True
                break
            enclosures.extend(
                EigenvalueEnclosure(zr, zi, rad, mult) for zr, zi, rad in disks)
        if not failed and _pairwise_disjoint(enclosures):
            enclosures.sort(key=lambda e: (e.re, e.im))
            return enclosures
        prec *= 2
        bits *= 2
    raise PrecisionUnreachable(
        f"eigenvalue disks not separable at radius 2^-{precision}")


# -- gap constants and contours ---------------------------------------------------

class GapData:
    """Deterministic hyperbolic-gap certificate constants (all exact)."""

    __slots__ = ("beta_minus", "beta_plus", "sigma", "alpha", "alpha1",
                 "alpha2", "M", "stable_count", "unstable_count")

    def __init__(self, beta_minus, beta_plus, sigma, alpha, alpha1, alpha2,
                 M, stable_count, unstable_count):
        self.beta_minus = beta_minus
        self.beta_plus = beta_plus
        self.sigma = sigma
        self.alpha = alpha
        self.alpha1 = alpha1
        self.alpha2 = alpha2
        self.M = M
        self.stable_count = stable_count
        self.unstable_count = unstable_count

    def as_dict(self):
        from .exactmath import format_rational as fr
        return {"betaMinus": fr(self.beta_minus), "betaPlus": fr(self.beta_plus),
                "sigma": fr(self.sigma), "alpha": fr(self.alpha),
                "alpha1": fr(self.alpha1), "alpha2": fr(self.alpha2),
                "M": self.M, "stableCount": self.stable_count,
                "unstableCount": self.unstable_count}


def spectral_gap(enclosures: Sequence[EigenvalueEnclosure]) -> GapData:
    """Gap constants from disjoint enclosures.

    beta- / beta+ are lower bounds on |Re| over the stable / unstable part
    (each defaulting to the other when one side is empty), sigma =
    min(beta-, beta+)/2, alpha = beta-/4, alpha1 = alpha2 = alpha/2, and M
    is the smallest natural exceeding max(alpha+sigma, 1) with every
    eigenvalue modulus <= M - 1.
    """
    stable = [e for e in enclosures if e.is_stable()]
    unstable = [e for e in enclosures if e.is_unstable()]
    if len(stable) + len(unstable) != len(enclosures):
        raise NotHyperbolic("an eigenvalue enclosure meets the imaginary axis")
    if not enclosures:
        raise NotHyperbolic("empty spectrum")
    beta_minus = min((-e.re_upper for e in stable), default=None)
    beta_plus = min((e.re_lower for e in unstable), default=None)
    if beta_minus is None:
        beta_minus = beta_plus
    if beta_plus is None:
        beta_plus = beta_minus
    sigma = min(beta_minus, beta_plus) / 2
    alpha = beta_minus / 4
    alpha1 = alpha / 2
    alpha2 = alpha / 2
    mod_bound = max(e.abs_upper() for e in enclosures)
    threshold = max(alpha + sigma, Fraction(1))
    M = 1
    while not (M > threshold and mod_bound <= M - 1):
        M += 1
    return GapData(beta_minus, beta_plus, sigma, alpha, alpha1, alpha2, M,
                   sum(e.multiplicity for e in stable),
                   sum(e.multiplicity for e in unstable))


class RectContour:
    """Axis-aligned rectangle traversed counterclockwise; exact corners."""

    __slots__ = ("re_min", "re_max", "im_min", "im_max")

    def __init__(self, re_min, re_max, im_min, im_max):
        self.re_min = Fraction(re_min)
        self.re_max = Fraction(re_max)
        self.im_min = Fraction(im_min)
        self.im_max = Fraction(im_max)
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("degenerate contour rectangle")

    def vertices(self):
        return [(self.re_min, self.im_min), (self.re_max, self.im_min),
                (self.re_max, self.im_max), (self.re_min, self.im_max)]

    def edges(self):
        v = self.vertices()
        return [(v[i], v[(i + 1) % 4]) for i in range(4)]

    def __repr__(self):
        return (f"RectContour(Re [{self.re_min}, {self.re_max}], "
                f"Im [{self.im_min}, {self.im_max}])")


def gap_contours(gap: GapData) -> tuple[RectContour, RectContour]:
    """Counterclockwise rectangles around the stable / unstable spectrum."""
    M = Fraction(gap.M)
    gamma1 = RectContour(-M, -(gap.alpha + gap.sigma), -M, M)
    gamma2 = RectContour(gap.sigma, M, -M, M)
    return gamma1, gamma2


# -- resolvent bounds ------------------------------------------------------------

def _segment_resolvent(A_frac, n, p0, p1):
    """Certified sup of ||(xi I - A)^-1||_HS over a straight segment, or None."""
    re_c = (p0[0] + p1[0]) / 2
    im_c = (p0[1] + p1[1]) / 2
    half = abs(p1[0] - p0[0]) / 2 + abs(p1[1] - p0[1]) / 2
    mid = np.empty((n, n), dtype=np.complex128)
    rad = np.empty((n, n))
    hw = float(half) * (1.0 + 2.0 ** -40)
    for i in range(n):
        for j in range(n):
            re = re_c - A_frac[i][j] if i == j else -A_frac[i][j]
            im = im_c if i == j else 0
            z = complex(float(re), float(im))
            mid[i, j] = z
            rad[i, j] = ((abs(z.real) + abs(z.imag)) * 2.0 ** -52
                         + (hw if i == j else 0.0) + 1e-300)
    try:
        inv = FloatBallMatrix(mid, rad).certified_inverse()
    except NotCertifiablyInvertible:
        return None
    return inv.hs_norm_upper_fraction()


def resolvent_supremum(A: Sequence[Sequence[Fraction]], contour: RectContour,
                       max_length: Fraction = Fraction(1, 8),
                       min_length: Fraction = Fraction(1, 2 ** 20)) -> Fraction:
    """Adaptive certified bound on sup_{xi on contour} ||(xi I - A)^-1||_HS."""
    n = len(A)
    A_frac = [[Fraction(v) for v in row] for row in A]
    best = Fraction(0)
    stack = list(contour.edges())
    while stack:
        p0, p1 = stack.pop()
        length = abs(p1[0] - p0[0]) + abs(p1[1] - p0[1])
        bound = None
        if length <= max_length:
            bound = _segment_resolvent(A_frac, n, p0, p1)
        if bound is None:
            if length <= min_length:
                raise ResolventUncertifiable(
                    f"cannot certify resolvent near {p0}; contour may touch spectrum")
            mid = ((p0[0] + p1[0]) / 2, (p0[1] + p1[1]) / 2)
            stack.append((p0, mid))
            stack.append((mid, p1))
        else:
            best = max(best, bound)
    return best


def resolvent_bound(A, contour: RectContour) -> int:
    """Natural-number resolvent bound K1 (ceiling of the certified sup)."""
    return max(1, math.ceil(resolvent_supremum(A, contour)))


# -- assembled certificate --------------------------------------------------------

class SpectralData:
    """Everything downstream consumers need: exact matrix, enclosures, gap
    constants, the two contours, and the decay constant K = 4*M*K1."""

    __slots__ = ("A", "n", "enclosures", "gap", "gamma1", "gamma2",
                 "K1_gamma1", "K1_gamma2", "K1", "K")

    def __init__(self, A, enclosures, gap, gamma1, gamma2, K1_gamma1, K1_gamma2):
        self.A = [[Fraction(v) for v in row] for row in A]
        self.n = len(self.A)
        self.enclosures = list(enclosures)
        self.gap = gap
        self.gamma1 = gamma1
        self.gamma2 = gamma2
        self.K1_gamma1 = K1_gamma1
        self.K1_gamma2 = K1_gamma2
        self.K1 = max(K1_gamma1, K1_gamma2)
        self.K = 4 * gap.M * self.K1

    def a_matrix_balls(self) -> BallMatrix:
        return BallMatrix.from_rational(self.A)


def analyze(A: Sequence[Sequence[Fraction]], precision: int = 32) -> SpectralData:
    """Full spectral certificate for a hyperbolic rational matrix."""
    enclosures = eigenvalue_enclosures(A, precision)
    prec = precision
    while True:
        try:
            gap = spectral_gap(enclosures)
            break
        except NotHyperbolic:
            # refine once more unless an exact enclosure sits on the axis
            if any(e.rad == 0 and e.re == 0 for e in enclosures) or prec >= 4096:
                raise
            prec *= 2
            enclosures = eigenvalue_enclosures(A, prec)
    gamma1, gamma2 = gap_contours(gap)
    k1 = resolvent_bound(A, gamma1)
    k2 = resolvent_bound(A, gamma2)
    return SpectralData(A, enclosures, gap, gamma1, gamma2, k1, k2)
