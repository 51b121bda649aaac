"""Semigroup components via resolvent contour integrals.

For a hyperbolic rational matrix A with spectral certificate (contours
Gamma_1 around the stable spectrum, Gamma_2 around the unstable one) this
module evaluates

    I_Gamma(t) = (1/2 pi i) oint_Gamma e^{xi t} (xi I - A)^{-1} d xi

as a rigorous float64 ball matrix.  I_Gamma1(0), I_Gamma2(0) are the
spectral projections; I_Gamma1(t) for t >= 0 is e^{At} P1 (decaying like
K e^{-(alpha+sigma)t}), I_Gamma2(t) for t <= 0 is e^{At} P2 (decaying like
K e^{sigma t}), and their sum at any t is e^{At}.

Quadrature: each contour edge is split until the Neumann parameter
q = |u| * ||R0|| is at most max_q (R0 the certified resolvent at the exact
segment midpoint, u the half-length direction).  On a segment the resolvent
is the Taylor model sum_l s^l (-u)^l R0^{l+1} and the exponential factor is
e^{mt} sum_j (ut)^j s^j / j!; the polynomial product integrates exactly
(int s^k ds over [-1,1] is 2/(k+1) for even k, 0 otherwise) and both tails
are bounded in closed form.  Since A is real and the contours are symmetric
about the real axis, only the upper half is integrated and the result is
twice its real part.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .balls import Ball, EffectiveReal, pi_ball
from .errors import (MonitorViolation, NotCertifiablyInvertible,
                     QuadratureBudgetExceeded, RegimeViolation,
                     ResolventUncertifiable)
from .linalg import FloatBallMatrix, _inflate
from .spectral import RectContour, SpectralData, analyze

_U = 2.0 ** -53
_HALF = Fraction(1, 2)


# -- scalar float balls (mid complex, rad float) -----------------------------------

def _s_abs(c: complex) -> float:
    return (abs(c.real) + abs(c.imag)) * (1.0 + 2.0 ** -50)


def _s_mul(a, b):
    (am, ar), (bm, br) = a, b
    aa, ba = _s_abs(am), _s_abs(bm)
    return am * bm, _inflate(aa * br + ar * ba + ar * br + 6.0 * _U * (aa * ba))


def _s_from_fraction(q: Fraction):
    m = float(q)
    return m, abs(m) * 2.0 ** -52 + 1e-300


def _s_from_ball(b: Ball):
    m = float(b.mid)
    r = float(b.rad) * (1.0 + 2.0 ** -50) + abs(m) * 2.0 ** -52 + 1e-300
    return m, r


def _exp_scalar(x: Fraction, y: Fraction):
    """Float ball for e^{x + i y} with exact rational x, y."""
    ex = Ball(x).exp()
    if y == 0:
        m, r = _s_from_ball(ex)
        return complex(m, 0.0), r
    cy, sy = Ball(y).cos(), Ball(y).sin()
    re_m, re_r = _s_from_ball(ex * cy)
    im_m, im_r = _s_from_ball(ex * sy)
    return complex(re_m, im_m), _inflate(re_r + im_r)


def _inv_two_pi():
    p = pi_ball()
    lo, hi = p.lower_fraction(), p.upper_fraction()
    a, b = 1 / (2 * hi), 1 / (2 * lo)
    m = float((a + b) / 2)
    r = float((b - a) / 2) * 1.01 + abs(m) * 2.0 ** -52 + 1e-300
    return m + 0j, r


_INV_2PI = _inv_two_pi()


# -- segment machinery --------------------------------------------------------------

def _upper_segments(contour: RectContour):
    if contour.im_min != -contour.im_max:
        raise ValueError("contour must be symmetric about the real axis")
    M = contour.im_max
    a, b = contour.re_min, contour.re_max
    zero = Fraction(0)
    return [((b, zero), (b, M)), ((b, M), (a, M)), ((a, M), (a, zero))]


def _resolvent_at(A, n, m_re: Fraction, m_im: Fraction) -> FloatBallMatrix:
    re_rows = [[(m_re - A[i][j]) if i == j else -A[i][j] for j in range(n)]
               for i in range(n)]
    im_rows = [[m_im if i == j else Fraction(0) for j in range(n)]
               for i in range(n)]
    return FloatBallMatrix.from_rational(re_rows, im_rows).certified_inverse()


def _accept_segments(A, n, contour: RectContour, max_q: Fraction):
    """Subdivide edges until q = |u| ||R0|| <= max_q; returns segment records."""
    min_len = Fraction(1, 2 ** 22)
    queue = list(_upper_segments(contour))
    accepted = []
    while queue:
        (r0, i0), (r1, i1) = queue.pop()
        m_re, m_im = (r0 + r1) / 2, (i0 + i1) / 2
        u_re, u_im = (r1 - r0) / 2, (i1 - i0) / 2
        ulen = abs(u_re) + abs(u_im)
        if ulen < min_len:
            raise ResolventUncertifiable(
                f"contour segment near {float(m_re)}+{float(m_im)}j cannot be certified")
        try:
            R0 = _resolvent_at(A, n, m_re, m_im)
        except NotCertifiablyInvertible:
            R0 = None
        if R0 is not None:
            rho = Fraction(R0.hs_norm_upper())
            if ulen * rho <= max_q:
                accepted.append((m_re, m_im, u_re, u_im, R0, rho, ulen * rho))
                continue
        mid = ((r0 + r1) / 2, (i0 + i1) / 2)
        queue.append(((r0, i0), mid))
        queue.append((mid, (r1, i1)))
    return accepted


def _dyadic_upper(q: Fraction, bits: int = 20) -> Fraction:
    return Fraction(math.ceil(q * (1 << bits)), 1 << bits)


def _segment_contribution(seg, t: Fraction, n: int, budget: float, eye_cache):
    """One upper-half segment: (ball matrix C, tail error bound scaled by the
    prefactor).  The true contribution of this segment plus its conjugate
    twin is 2*Re(C_true) with ||C_true - C|| within the returned error."""
    m_re, m_im, u_re, u_im, R0, rho, q = seg
    q_d = _dyadic_upper(q)
    if q_d >= 1:
        raise QuadratureBudgetExceeded("Neumann parameter reached 1")
    ut_re, ut_im = u_re * t, u_im * t
    zt = abs(ut_re) + abs(ut_im)

    # prefactor u * e^{mt} / (2 pi i) = (u * -i) * e^{mt} * (1/2pi)
    emt = _exp_scalar(m_re * t, m_im * t)
    u_mid = complex(float(u_im), -float(u_re))
    u_ball = (u_mid, _s_abs(u_mid) * 2.0 ** -52 + 1e-300)
    pref = _s_mul(_s_mul(u_ball, emt), _INV_2PI)
    pref_ub = _s_abs(pref[0]) + pref[1]

    target = Fraction(budget) / Fraction(max(pref_ub, 1e-280))
    P_R = rho / (1 - q_d)
    P_e = Fraction(math.exp(float(zt)) * 1.0001)

    # exponential series order
    T_e = Fraction(0)
    J = 1
    if zt != 0:
        pw = zt  # zt^J / J!
        while pw * P_e > target / (4 * P_R) and J < 120:
            J += 1
            pw = pw * zt / J
        if J >= 120:
            raise QuadratureBudgetExceeded("exponential series order exceeded 120")
        T_e = pw * P_e
    # resolvent series order
    tr_target = target / (4 * (P_e + T_e))
    need = tr_target * (1 - q_d) / rho if rho else Fraction(1)
    p = 1
    q_pow = q_d
    while q_pow > need and p < 600:
        q_pow *= q_d
        p += 1
    if p >= 600:
        raise QuadratureBudgetExceeded("resolvent series order exceeded 600")
    T_R = rho * q_pow / (1 - q_d)
    tail = float(2 * (T_e * P_R + (P_e + T_e) * T_R)) * 1.0001

    # scalar series c_j = (ut)^j / j!
    ztc = (complex(float(ut_re), float(ut_im)),
           (abs(float(ut_re)) + abs(float(ut_im))) * 2.0 ** -52 + 1e-300)
    cm = np.empty(J, dtype=np.complex128)
    cr = np.empty(J)
    cm[0], cr[0] = 1.0 + 0j, 0.0
    cur = (1.0 + 0j, 0.0)
    for j in range(1, J):
        step = (ztc[0] / j, ztc[1] / j * 1.01 + abs(ztc[0] / j) * _U + 1e-300)
        cur = _s_mul(cur, step)
        cm[j], cr[j] = cur
    cabs = np.abs(cm.real) + np.abs(cm.imag)

    # w_l = sum_{j: j+l even} 2/(j+l+1) c_j
    jidx = np.arange(J, dtype=np.float64)
    wm = np.empty(p, dtype=np.complex128)
    wr = np.empty(p)
    for l in range(p):
        coefs = np.where((np.arange(J) + l) % 2 == 0, 2.0 / (jidx + l + 1.0), 0.0)
        wm[l] = np.dot(coefs, cm)
        wr[l] = _inflate(float(np.dot(coefs, cr)
                               + (J + 6) * _U * np.dot(coefs, cabs)))

    # Horner: V = sum_l w_l S^l with S = -u R0, then C = pref * (R0 @ V)
    nu_mid = complex(-float(u_re), -float(u_im))
    S = R0.scale_scalar(nu_mid, _s_abs(nu_mid) * 2.0 ** -52 + 1e-300)
    if n not in eye_cache:
        eye_cache[n] = np.eye(n)
    eye = eye_cache[n]
    V = FloatBallMatrix(eye * wm[p - 1], eye * wr[p - 1])
    for l in range(p - 2, -1, -1):
        V = (V @ S) + FloatBallMatrix(eye * wm[l], eye * wr[l])
    C = (R0 @ V).scale_scalar(pref[0], pref[1])
    return C, pref_ub * tail * 1.0001 + 1e-290


def contour_integral(A: Sequence[Sequence[Fraction]], contour: RectContour,
                     t, tol: Fraction = Fraction(1, 2 ** 36),
                     max_q: Fraction = _HALF) -> FloatBallMatrix:
    """Rigorous enclosure of I_Gamma(t) for |t| <= 1/2 (real result).

    Larger |t| belongs to SemigroupEvaluator, which squares half-time values.
    """
    t = Fraction(t)
    if abs(t) > _HALF:
        raise ValueError("base quadrature handles |t| <= 1/2 only")
    A = [[Fraction(v) for v in row] for row in A]
    n = len(A)
    segs = _accept_segments(A, n, contour, max_q)
    budget = float(tol) / (4 * len(segs))
    eye_cache = {}
    acc = None
    err = 0.0
    for seg in segs:
        C, e = _segment_contribution(seg, t, n, budget, eye_cache)
        acc = C if acc is None else acc + C
        err += 2.0 * e
    out = acc.real_part()
    mid = out.mid
    rad = _inflate(2.0 * out.rad + err)
    return FloatBallMatrix(2.0 * mid.real.astype(np.complex128), rad)


# -- evaluator with caching, halving, and decay monitors ---------------------------

def _exp_upper(x: Fraction) -> Fraction:
    return Ball(x).exp().upper_fraction()


class SemigroupEvaluator:
    """Cached evaluation of I_Gamma1(t) ('stable', t >= 0) and I_Gamma2(t)
    ('unstable', t <= 0) with the semigroup-halving identity
    I(t) = I(t/2)^2 above the base window |t| <= 1/2.

    Every cached in-regime value is checked against its decay certificate
    ||I_Gamma1(t)|| <= K e^{-(alpha+sigma) t},
    ||I_Gamma2(t)|| <= K e^{sigma t};
    a violation raises MonitorViolation (it would indicate a broken bound).
    """

    def __init__(self, data: SpectralData, tol: Fraction = Fraction(1, 2 ** 36),
                 max_q: Fraction = _HALF):
        self.data = data
        self.tol = Fraction(tol)
        self.max_q = Fraction(max_q)
        self._cache: dict[tuple[str, Fraction], FloatBallMatrix] = {}

    def _contour(self, side: str) -> RectContour:
        if side == "stable":
            return self.data.gamma1
        if side == "unstable":
            return self.data.gamma2
        raise ValueError(f"side must be 'stable' or 'unstable', got {side!r}")

    def in_regime(self, side: str, t: Fraction) -> bool:
        return t >= 0 if side == "stable" else t <= 0

    def decay_bound(self, side: str, t) -> Fraction:
        """Exact upper bound K e^{...} from the certificate, in-regime only."""
        t = Fraction(t)
        if not self.in_regime(side, t):
            raise RegimeViolation(f"decay bound for {side} needs t on its side of 0")
        gap = self.data.gap
        expo = -(gap.alpha + gap.sigma) * t if side == "stable" else gap.sigma * t
        return self.data.K * _exp_upper(expo)

    def _monitor(self, side: str, t: Fraction, val: FloatBallMatrix):
        bound = self.decay_bound(side, t)
        rad_hs = math.sqrt(float(np.sum(val.rad ** 2))) * 1.01 + 1e-200
        if val.hs_norm_upper_fraction() > bound + 2 * Fraction(rad_hs):
            raise MonitorViolation(
                f"||I_{side}({t})|| exceeds certified decay bound {float(bound)}")

    def _eval(self, side: str, t: Fraction, tol: Fraction, memo) -> FloatBallMatrix:
        key = (side, t)
        if key in memo:
            return memo[key]
        if abs(t) <= _HALF:
            val = contour_integral(self.data.A, self._contour(side), t, tol,
                                   self.max_q)
        else:
            half = self._eval(side, t / 2, tol, memo)
            val = half @ half
        if self.in_regime(side, t):
            self._monitor(side, t, val)
        memo[key] = val
        return val

    def component(self, side: str, t) -> FloatBallMatrix:
        """I_Gamma(t) on the admissible side of 0 (RegimeViolation otherwise)."""
        t = Fraction(t)
        self._contour(side)
        if not self.in_regime(side, t):
            raise RegimeViolation(
                f"{side} component is certified for "
                f"{'t >= 0' if side == 'stable' else 't <= 0'}, got t = {t}")
        return self._eval(side, t, self.tol, self._cache)

    def projection(self, side: str) -> FloatBallMatrix:
        return self.component(side, 0)

    def splitting(self, t) -> FloatBallMatrix:
        """I_Gamma1(t) + I_Gamma2(t), an enclosure of e^{At} for any rational t.

        This intentionally evaluates both components at the same t, one of
        them outside its decay regime; no decay monitor applies there.
        """
        t = Fraction(t)
        a = self._eval("stable", t, self.tol, self._cache)
        b = self._eval("unstable", t, self.tol, self._cache)
        return a + b

    def cached(self):
        """Snapshot of the cache: {(side, t): ball matrix} (insertion order)."""
        return dict(self._cache)

    def component_entry(self, side: str, t, i: int, j: int) -> EffectiveReal:
        """Entry (i, j) as a refinable real; precision saturates at the
        float64 floor, after which refine() reports PrecisionUnreachable."""
        t = Fraction(t)
        self._contour(side)

        def compute(prec: int) -> Ball:
            tol = Fraction(1, 2 ** min(prec + 4, 60))
            val = self._eval(side, t, tol, {})
            z = val.mid[i, j]
            r = Fraction(val.rad[i, j])
            return Ball.from_endpoints(Fraction(z.real) - r, Fraction(z.real) + r)

        return EffectiveReal(compute, name=f"semigroup[{side}]({t})[{i},{j}]")


# -- projections and invariant bases -----------------------------------------------

def _pivoted_orthobasis(mat: np.ndarray, k: int) -> np.ndarray:
    """Deterministic column-pivoted Gram-Schmidt basis of the column space."""
    work = np.array(mat, dtype=float)
    n = work.shape[0]
    basis = np.zeros((n, k))
    for step in range(k):
        norms = np.sqrt(np.sum(work * work, axis=0))
        jmax = int(np.argmax(norms))
        if norms[jmax] < 1e-9:
            raise MonitorViolation(
                "projection column space is numerically rank deficient")
        q = work[:, jmax] / norms[jmax]
        basis[:, step] = q
        work = work - np.outer(q, q @ work)
    return basis


class ProjectionSplit:
    """Certified spectral projections P1 (stable) and P2 (unstable) with
    orthonormal float bases of their ranges and the shared evaluator."""

    __slots__ = ("data", "evaluator", "P1", "P2", "stable_basis", "unstable_basis")

    def __init__(self, data, evaluator, P1, P2, stable_basis, unstable_basis):
        self.data = data
        self.evaluator = evaluator
        self.P1 = P1
        self.P2 = P2
        self.stable_basis = stable_basis
        self.unstable_basis = unstable_basis

    def residuals(self) -> dict:
        """Midpoint HS residuals of the projection algebra."""
        n = self.data.n
        eye = np.eye(n)
        p1, p2 = self.P1.mid, self.P2.mid

        def hs(x):
            return float(np.sqrt(np.sum(np.abs(x) ** 2)))

        return {
            "completeness": hs(p1 + p2 - eye),
            "idempotent_stable": hs(p1 @ p1 - p1),
            "idempotent_unstable": hs(p2 @ p2 - p2),
            "annihilation_su": hs(p1 @ p2),
            "annihilation_us": hs(p2 @ p1),
        }

    def verify(self) -> bool:
        """Ball-level algebra: identities must be enclosed, not just close."""
        ok = (self.P1 + self.P2).contains_identity()
        ok = ok and (self.P1 @ self.P1 - self.P1).contains_zero_matrix()
        ok = ok and (self.P2 @ self.P2 - self.P2).contains_zero_matrix()
        ok = ok and (self.P1 @ self.P2).contains_zero_matrix()
        ok = ok and (self.P2 @ self.P1).contains_zero_matrix()
        return ok


def annihilation_check(split: ProjectionSplit) -> bool:
    """P1 P2 = P2 P1 = 0 at ball level."""
    return ((split.P1 @ split.P2).contains_zero_matrix()
            and (split.P2 @ split.P1).contains_zero_matrix())


def spectral_split(A, precision: int = 32, tol: Fraction = Fraction(1, 2 ** 36),
                   data: SpectralData | None = None) -> ProjectionSplit:
    """Analyze A (or reuse a certificate) and build certified projections."""
    if data is None:
        data = analyze(A, precision)
    ev = SemigroupEvaluator(data, tol)
    P1 = ev.projection("stable")
    P2 = ev.projection("unstable")
    split = ProjectionSplit(data, ev, P1, P2, None, None)
    if not split.verify():
        raise MonitorViolation("projection algebra identities not enclosed")
    k = data.gap.stable_count
    stable_basis = (_pivoted_orthobasis(P1.mid.real, k)
                    if k else np.zeros((data.n, 0)))
    unstable_basis = (_pivoted_orthobasis(P2.mid.real, data.n - k)
                      if data.n - k else np.zeros((data.n, 0)))
    return ProjectionSplit(data, ev, P1, P2, stable_basis, unstable_basis)
