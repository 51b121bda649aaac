"""Ball matrices: enclosures of complex matrices with certified operations.

The norm used throughout is Hilbert-Schmidt (Frobenius), which dominates the
operator 2-norm and every entry magnitude; all certificates are stated in it.
Inverses are certified a posteriori: an approximate floating inverse Y of the
midpoint is promoted to an enclosure of the true inverse of EVERY member
matrix via the Neumann residual bound ||I - Y*M|| < 1.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np

from .balls import Ball, ComplexBall, _RU, _ZERO, _ctx, _prec_stack, mpfr_to_fraction
from .errors import DimensionMismatch, NotCertifiablyInvertible

_ONE = gmpy2.mpfr(1)


class BallMatrix:
    """Dense matrix of ComplexBall entries (small n; plain lists inside)."""

    __slots__ = ("rows", "n", "m")

    def __init__(self, rows: Sequence[Sequence[ComplexBall]]):
        self.rows = [list(r) for r in rows]
        self.n = len(self.rows)
        self.m = len(self.rows[0]) if self.rows else 0
        for r in self.rows:
            if len(r) != self.m:
                raise DimensionMismatch("ragged ball matrix")

    # -- constructors ---------------------------------------------------------

    @staticmethod
    def from_rational(rows: Sequence[Sequence[Fraction]]) -> "BallMatrix":
        return BallMatrix([[ComplexBall(Ball(Fraction(x)), Ball(0)) for x in r]
                           for r in rows])

    @staticmethod
    def identity(n: int) -> "BallMatrix":
        one, zero = Ball(1), Ball(0)
        return BallMatrix([[ComplexBall(one if i == j else zero, zero)
                            for j in range(n)] for i in range(n)])

    @staticmethod
    def zeros(n: int, m: int | None = None) -> "BallMatrix":
        zero = Ball(0)
        m = n if m is None else m
        return BallMatrix([[ComplexBall(zero, zero) for _ in range(m)]
                           for _ in range(n)])

    @staticmethod
    def from_numpy(a: np.ndarray) -> "BallMatrix":
        """Exact embedding of a float/complex array (floats are dyadic)."""
        out = []
        for i in range(a.shape[0]):
            row = []
            for j in range(a.shape[1]):
                z = complex(a[i, j])
                row.append(ComplexBall(Ball(z.real), Ball(z.imag)))
            out.append(row)
        return BallMatrix(out)

    # -- shape / access --------------------------------------------------------

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def entries(self):
        for r in self.rows:
            yield from r

    # -- arithmetic -------------------------------------------------------------

    def __add__(self, other: "BallMatrix") -> "BallMatrix":
        if (self.n, self.m) != (other.n, other.m):
            raise DimensionMismatch("matrix add shapes differ")
        return BallMatrix([[a + b for a, b in zip(ra, rb)]
                           for ra, rb in zip(self.rows, other.rows)])

    def __sub__(self, other: "BallMatrix") -> "BallMatrix":
        if (self.n, self.m) != (other.n, other.m):
            raise DimensionMismatch("matrix sub shapes differ")
        return BallMatrix([[a - b for a, b in zip(ra, rb)]
                           for ra, rb in zip(self.rows, other.rows)])

    def __neg__(self) -> "BallMatrix":
        return BallMatrix([[-a for a in r] for r in self.rows])

    def scale(self, c) -> "BallMatrix":
        """Multiply by a scalar (ComplexBall/Ball/number)."""
        if not isinstance(c, ComplexBall):
            c = ComplexBall(c)
        return BallMatrix([[c * a for a in r] for r in self.rows])

    def __matmul__(self, other: "BallMatrix") -> "BallMatrix":
        if self.m != other.n:
            raise DimensionMismatch("matmul inner dimensions differ")
        bcols = [[other.rows[k][j] for k in range(other.n)]
                 for j in range(other.m)]
        out = []
        for ra in self.rows:
            row = []
            for col in bcols:
                acc = ra[0] * col[0]
                for k in range(1, self.m):
                    acc = acc + ra[k] * col[k]
                row.append(acc)
            out.append(row)
        return BallMatrix(out)

    def matvec(self, v: Sequence[ComplexBall]):
        if self.m != len(v):
            raise DimensionMismatch("matvec length differs")
        out = []
        for ra in self.rows:
            acc = ra[0] * v[0]
            for k in range(1, self.m):
                acc = acc + ra[k] * v[k]
            out.append(acc)
        return out

    # -- norms and certificates ---------------------------------------------------

    def hs_norm_upper(self):
        """mpfr upper bound on the Hilbert-Schmidt norm over all members."""
        prec = _prec_stack[-1]
        _, _, up, _ = _ctx(prec)
        acc = _ZERO
        for z in self.entries():
            a = _RU.add(_RU.abs(z.re.mid), z.re.rad)
            b = _RU.add(_RU.abs(z.im.mid), z.im.rad)
            acc = _RU.add(acc, _RU.add(_RU.mul(a, a), _RU.mul(b, b)))
        return up.sqrt(acc)

    def hs_norm_upper_fraction(self) -> Fraction:
        return mpfr_to_fraction(self.hs_norm_upper())

    def mid_numpy(self) -> np.ndarray:
        out = np.empty((self.n, self.m), dtype=complex)
        for i, r in enumerate(self.rows):
            for j, z in enumerate(r):
                out[i, j] = complex(float(z.re.mid), float(z.im.mid))
        return out

    def rad_max_fraction(self) -> Fraction:
        worst = Fraction(0)
        for z in self.entries():
            worst = max(worst, mpfr_to_fraction(z.re.rad), mpfr_to_fraction(z.im.rad))
        return worst

    def contains_zero_matrix(self) -> bool:
        return all(z.contains_zero() for z in self.entries())

    def contains_identity(self) -> bool:
        ok = True
        for i in range(self.n):
            for j in range(self.m):
                z = self.rows[i][j]
                want = 1 if i == j else 0
                ok = ok and z.re.contains(Fraction(want)) and z.im.contains(Fraction(0))
        return ok

    def real_parts(self, check_imag: bool = True):
        """List-of-lists of the real-part balls; imag must contain zero."""
        if check_imag and not all(z.im.contains_zero() for z in self.entries()):
            raise NotCertifiablyInvertible(
                "matrix expected to be real but an imaginary part excludes 0")
        return [[z.re for z in r] for r in self.rows]

    def certified_inverse(self, residual_limit: Fraction = Fraction(3, 4)) -> "BallMatrix":
        """Enclosure of M^{-1} valid for every member M of this ball matrix.

        Uses a floating approximate inverse Y of the midpoint and the bound
        ||I - Y*M||_HS =: e < 1, giving M^{-1} = (I - E)^{-1} Y enclosed by
        (I + E*C) Y with C the all-entries ball of radius 1/(1-e).
        """
        if self.n != self.m:
            raise DimensionMismatch("inverse of a non-square matrix")
        mid = self.mid_numpy()
        try:
            y = np.linalg.inv(mid)
        except np.linalg.LinAlgError as exc:
            raise NotCertifiablyInvertible(f"midpoint inverse failed: {exc}") from exc
        if not np.isfinite(y).all():
            raise NotCertifiablyInvertible("midpoint inverse not finite")
        Y = BallMatrix.from_numpy(y)
        E = BallMatrix.identity(self.n) - (Y @ self)
        e = E.hs_norm_upper()
        if not (e < _ONE) or mpfr_to_fraction(e) > residual_limit:
            raise NotCertifiablyInvertible(
                f"residual HS bound {mpfr_to_fraction(e)} not below {residual_limit}")
        s = _RU.div(_ONE, gmpy2.context(precision=24, round=gmpy2.RoundDown).sub(_ONE, e))
        c_ball = Ball._raw(gmpy2.mpfr(0), s)
        C = BallMatrix([[ComplexBall(c_ball, c_ball) for _ in range(self.n)]
                        for _ in range(self.n)])
        return (BallMatrix.identity(self.n) + (E @ C)) @ Y


# -- float64 ball matrices ---------------------------------------------------------

# Rigorous enclosures built on double precision with a-priori forward error
# bounds (no directed rounding needed): every radius formula is evaluated in
# ordinary float arithmetic and then inflated multiplicatively to dominate
# the rounding of the radius computation itself, plus an absolute pad that
# swallows underflow.  Constants are generous; validity needs only that
# dimensions stay below ~1000 and magnitudes below ~1e280.

_U = 2.0 ** -53
_REL = 1.0 + 2.0 ** -42
_ABS = 1e-290


def _inflate(r):
    return r * _REL + _ABS


def _cabs_ub(z):
    """Entrywise upper bound of the complex modulus (1-norm of parts)."""
    return (np.abs(np.real(z)) + np.abs(np.imag(z))) * (1.0 + 2.0 ** -50)


class FloatBallMatrix:
    """Complex matrix enclosure mid +/- rad in double precision.

    Invariant: each represented matrix M satisfies |M_ij - mid_ij| <= rad_ij
    (complex modulus).  All operations return enclosures valid for every
    member of their operands, accounting for double rounding errors.
    """

    __slots__ = ("mid", "rad")

    def __init__(self, mid, rad):
        self.mid = np.ascontiguousarray(mid, dtype=np.complex128)
        self.rad = np.ascontiguousarray(rad, dtype=np.float64)
        if self.mid.shape != self.rad.shape:
            raise DimensionMismatch("mid and rad shapes differ")

    # -- constructors

    @staticmethod
    def exact(mid) -> "FloatBallMatrix":
        """A float matrix taken as exact (radius zero)."""
        mid = np.asarray(mid, dtype=np.complex128)
        return FloatBallMatrix(mid, np.zeros(mid.shape))

    @staticmethod
    def identity(n: int) -> "FloatBallMatrix":
        return FloatBallMatrix.exact(np.eye(n))

    @staticmethod
    def from_rational(rows, imag_rows=None) -> "FloatBallMatrix":
        """Enclose an exact rational (optionally complex) matrix."""
        n, m = len(rows), len(rows[0])
        mid = np.empty((n, m), dtype=np.complex128)
        for i in range(n):
            for j in range(m):
                re = float(Fraction(rows[i][j]))
                im = float(Fraction(imag_rows[i][j])) if imag_rows is not None else 0.0
                mid[i, j] = complex(re, im)
        rad = _inflate(_cabs_ub(mid) * (2.0 ** -52))
        return FloatBallMatrix(mid, rad)

    @property
    def shape(self):
        return self.mid.shape

    # -- arithmetic

    def __add__(self, other: "FloatBallMatrix") -> "FloatBallMatrix":
        mid = self.mid + other.mid
        rad = _inflate(self.rad + other.rad + _cabs_ub(mid) * (2.0 * _U))
        return FloatBallMatrix(mid, rad)

    def __sub__(self, other: "FloatBallMatrix") -> "FloatBallMatrix":
        mid = self.mid - other.mid
        rad = _inflate(self.rad + other.rad + _cabs_ub(mid) * (2.0 * _U))
        return FloatBallMatrix(mid, rad)

    def __neg__(self) -> "FloatBallMatrix":
        return FloatBallMatrix(-self.mid, self.rad.copy())

    def __matmul__(self, other: "FloatBallMatrix") -> "FloatBallMatrix":
        k = self.mid.shape[1]
        if other.mid.shape[0] != k:
            raise DimensionMismatch("matmul shapes incompatible")
        am = _cabs_ub(self.mid)
        bm = _cabs_ub(other.mid)
        mid = self.mid @ other.mid
        cn = 16.0 * (k + 2) * _U
        rad = _inflate(am @ other.rad + self.rad @ bm + self.rad @ other.rad
                       + cn * (am @ bm))
        return FloatBallMatrix(mid, rad)

    def scale_scalar(self, c: complex, crad: float = 0.0) -> "FloatBallMatrix":
        """Multiply by a scalar ball c +/- crad."""
        am = _cabs_ub(self.mid)
        ca = (abs(c.real) + abs(c.imag)) * (1.0 + 2.0 ** -50)
        mid = self.mid * c
        rad = _inflate(am * crad + self.rad * ca + self.rad * crad
                       + (6.0 * _U) * (am * ca))
        return FloatBallMatrix(mid, rad)

    def real_part(self) -> "FloatBallMatrix":
        """Projection onto real mids; valid when the true matrix is real."""
        return FloatBallMatrix(self.mid.real.astype(np.complex128), self.rad.copy())

    # -- norms and membership

    def hs_norm_upper(self) -> float:
        s = float(np.sum((_cabs_ub(self.mid) + self.rad) ** 2))
        return math.sqrt(s) * (1.0 + 2.0 ** -36) + _ABS

    def hs_norm_upper_fraction(self) -> Fraction:
        from .exactmath import sqrt_upper
        s = Fraction(0)
        for i in range(self.mid.shape[0]):
            for j in range(self.mid.shape[1]):
                z = self.mid[i, j]
                a = abs(Fraction(z.real)) + abs(Fraction(z.imag)) + Fraction(self.rad[i, j])
                s += a * a
        return sqrt_upper(s)

    def max_rad(self) -> float:
        return float(self.rad.max()) if self.rad.size else 0.0

    def contains_rational(self, rows, imag_rows=None) -> bool:
        """Exact membership test for a rational (optionally complex) matrix."""
        n, m = self.mid.shape
        for i in range(n):
            for j in range(m):
                z = self.mid[i, j]
                dr = Fraction(z.real) - Fraction(rows[i][j])
                di = Fraction(z.imag) - (Fraction(imag_rows[i][j])
                                         if imag_rows is not None else 0)
                r = Fraction(self.rad[i, j])
                if dr * dr + di * di > r * r:
                    return False
        return True

    def contains_zero_matrix(self) -> bool:
        n, m = self.mid.shape
        return self.contains_rational([[0] * m for _ in range(n)])

    def contains_identity(self) -> bool:
        n, m = self.mid.shape
        return self.contains_rational([[int(i == j) for j in range(m)]
                                       for i in range(n)])

    def certified_inverse(self, residual_limit: float = 0.75) -> "FloatBallMatrix":
        """Enclosure of M^-1 valid for every member M, or raises."""
        n, m = self.mid.shape
        if n != m:
            raise DimensionMismatch("inverse of a non-square matrix")
        if not (np.isfinite(self.mid).all() and np.isfinite(self.rad).all()):
            raise NotCertifiablyInvertible("matrix contains non-finite entries")
        try:
            y = np.linalg.inv(self.mid)
        except np.linalg.LinAlgError as exc:
            raise NotCertifiablyInvertible(f"midpoint inverse failed: {exc}") from exc
        if not np.isfinite(y).all():
            raise NotCertifiablyInvertible("midpoint inverse not finite")
        Y = FloatBallMatrix.exact(y)
        E = FloatBallMatrix.identity(n) - (Y @ self)
        e = E.hs_norm_upper()
        if not e < residual_limit:
            raise NotCertifiablyInvertible(
                f"residual HS bound {e} not below {residual_limit}")
        c_ub = (1.0 / (1.0 - e)) * (1.0 + 2.0 ** -48)
        # every entry of E_true (I - E_true)^-1 is bounded by e * c_ub
        Z = FloatBallMatrix(np.zeros((n, n)), np.full((n, n), _inflate(e * c_ub)))
        return (FloatBallMatrix.identity(n) + Z) @ Y
