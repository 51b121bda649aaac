"""Midpoint-radius ball arithmetic over MPFR dyadics.

A Ball is (mid, rad) with mid a binary float at the current working
precision and rad a short (24-bit) upward-rounded nonnegative dyadic; the
ball denotes the set [mid - rad, mid + rad] and every operation returns a
ball containing the exact image of its operand sets.  Complex balls are
rectangles re + i*im.  Working precision is a module-level setting,
adjustable with the `precision` context manager; raising it never grows
radii beyond a single low-precision quantum (ties in the 24-bit up-rounding).

Midpoints convert to Fraction exactly (binary floats are dyadic rationals),
which is what the "p/q" serialization relies on.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Union

import gmpy2

from .errors import DivisorContainsZero, PrecisionUnreachable

# ---------------------------------------------------------------------------
# precision plumbing

_DEFAULT_PREC = 64
_prec_stack = [_DEFAULT_PREC]

_RAD_PREC = 24
_RU = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundUp)
_RD = gmpy2.context(precision=_RAD_PREC, round=gmpy2.RoundDown)

_ZERO = gmpy2.mpfr(0)
_HALF = gmpy2.mpfr("0.5")

_ctx_cache: dict = {}


def _ctx(prec: int):
    c = _ctx_cache.get(prec)
    if c is None:
        c = (gmpy2.context(precision=prec),
             gmpy2.context(precision=prec, round=gmpy2.RoundDown),
             gmpy2.context(precision=prec, round=gmpy2.RoundUp),
             gmpy2.mpfr(2) ** (1 - prec))
        _ctx_cache[prec] = c
    return c


def working_precision() -> int:
    return _prec_stack[-1]


class precision:
    """Context manager: `with precision(128): ...` raises working precision."""

    def __init__(self, bits: int):
        if bits < 8:
            raise ValueError("working precision below 8 bits")
        self.bits = int(bits)

    def __enter__(self):
        _prec_stack.append(self.bits)
        return self

    def __exit__(self, *exc):
        _prec_stack.pop()
        return False


def mpfr_to_fraction(x) -> Fraction:
    """Exact conversion; every finite mpfr is a dyadic rational."""
    num, den = x.as_integer_ratio()
    return Fraction(int(num), int(den))


def _to_mpq(x):
    if isinstance(x, Fraction):
        return gmpy2.mpq(x.numerator, x.denominator)
    return gmpy2.mpq(x)


# ---------------------------------------------------------------------------
# real balls

Number = Union[int, float, Fraction]


class Ball:
    __slots__ = ("mid", "rad")

    def __init__(self, mid, rad=None):
        """Enclose a number (int, Fraction, float, mpfr) at working precision."""
        nearest, _, _, eps = _ctx(_prec_stack[-1])
        if isinstance(mid, (int, float)):
            m = gmpy2.mpfr(mid, _prec_stack[-1])
            slop = _ZERO if m == mid else _RU.mul(_RU.abs(m), eps)
        elif isinstance(mid, Fraction):
            q = _to_mpq(mid)
            m = nearest.add(gmpy2.mpfr(0), q)
            slop = _ZERO if m == q else _RU.mul(_RU.abs(m), eps)
        else:  # mpfr
            m = mid
            slop = _ZERO
        if rad is None:
            r = slop
        else:
            if isinstance(rad, Fraction):
                r = _RU.add(gmpy2.mpfr(0), _to_mpq(rad))
            else:
                r = _RU.add(gmpy2.mpfr(0), rad)
            if slop:
                r = _RU.add(r, slop)
        if r < 0:
            raise ValueError("negative radius")
        self.mid = m
        self.rad = r

    # fast internal constructor: trusted mpfr mid, up-rounded mpfr rad
    @staticmethod
    def _raw(m, r) -> "Ball":
        b = object.__new__(Ball)
        b.mid = m
        b.rad = r
        return b

    @staticmethod
    def from_endpoints(lo, hi) -> "Ball":
        """Ball covering [lo, hi]; endpoints int/Fraction/mpfr."""
        lo_b, hi_b = Ball(lo), Ball(hi)
        nearest, _, _, eps = _ctx(_prec_stack[-1])
        m = nearest.mul(nearest.add(lo_b.mid, hi_b.mid), _HALF)
        half = _RU.mul(_RU.sub(hi_b.mid, lo_b.mid), _HALF)
        r = _RU.add(_RU.add(half, _RU.mul(_RU.abs(m), eps)),
                    _RU.add(lo_b.rad, hi_b.rad))
        return Ball._raw(m, r)

    # -- queries ------------------------------------------------------------

    def mid_fraction(self) -> Fraction:
        return mpfr_to_fraction(self.mid)

    def rad_fraction(self) -> Fraction:
        return mpfr_to_fraction(self.rad)

    def contains(self, x) -> bool:
        """Exact test x in [mid - rad, mid + rad] for rational/dyadic x."""
        xq = mpfr_to_fraction(x) if isinstance(x, type(_ZERO)) else Fraction(x)
        m, r = mpfr_to_fraction(self.mid), mpfr_to_fraction(self.rad)
        return m - r <= xq <= m + r

    def contains_zero(self) -> bool:
        return -self.rad <= self.mid <= self.rad

    def mag_upper(self):
        """mpfr upper bound of sup |x| over the ball."""
        return _RU.add(_RU.abs(self.mid), self.rad)

    def mag_lower(self):
        """mpfr lower bound of inf |x| over the ball (0 if it straddles)."""
        lo = _RD.sub(_RD.abs(self.mid), self.rad)
        return lo if lo > 0 else _ZERO

    def upper_fraction(self) -> Fraction:
        return mpfr_to_fraction(self.mid) + mpfr_to_fraction(self.rad)

    def lower_fraction(self) -> Fraction:
        return mpfr_to_fraction(self.mid) - mpfr_to_fraction(self.rad)

    def is_exact(self) -> bool:
        return self.rad == 0

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, Ball):
            other = Ball(other)
        nearest, _, _, eps = _ctx(_prec_stack[-1])
        if not self.rad and not other.rad:
            nearest.clear_flags()
            m = nearest.add(self.mid, other.mid)
            r = _ZERO if not nearest.inexact else _RU.mul(_RU.abs(m), eps)
            return Ball._raw(m, r)
        m = nearest.add(self.mid, other.mid)
        r = _RU.add(_RU.add(self.rad, other.rad), _RU.mul(_RU.abs(m), eps))
        return Ball._raw(m, r)

    __radd__ = __add__

    def __neg__(self):
        m = self.mid
        return Ball._raw(_ctx(m.precision)[0].minus(m), self.rad)

    def __sub__(self, other):
        if not isinstance(other, Ball):
            other = Ball(other)
        nearest, _, _, eps = _ctx(_prec_stack[-1])
        if not self.rad and not other.rad:
            nearest.clear_flags()
            m = nearest.sub(self.mid, other.mid)
            r = _ZERO if not nearest.inexact else _RU.mul(_RU.abs(m), eps)
            return Ball._raw(m, r)
        m = nearest.sub(self.mid, other.mid)
        r = _RU.add(_RU.add(self.rad, other.rad), _RU.mul(_RU.abs(m), eps))
        return Ball._raw(m, r)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Ball):
            other = Ball(other)
        nearest, _, _, eps = _ctx(_prec_stack[-1])
        ma, ra, mb, rb = self.mid, self.rad, other.mid, other.rad
        if not ra and not rb:
            nearest.clear_flags()
            m = nearest.mul(ma, mb)
            r = _ZERO if not nearest.inexact else _RU.mul(_RU.abs(m), eps)
            return Ball._raw(m, r)
        m = nearest.mul(ma, mb)
        r = _RU.add(
            _RU.add(_RU.mul(ra, _RU.abs(mb)), _RU.mul(rb, _RU.abs(ma))),
            _RU.add(_RU.mul(ra, rb), _RU.mul(_RU.abs(m), eps)))
        return Ball._raw(m, r)

    __rmul__ = __mul__

    def reciprocal(self):
        mb, rb = self.mid, self.rad
        amb_lo = _RD.abs(mb)
        if amb_lo <= rb:
            raise DivisorContainsZero("reciprocal of a ball containing 0")
        nearest, _, _, eps = _ctx(_prec_stack[-1])
        if not rb:
            nearest.clear_flags()
            m = nearest.div(gmpy2.mpfr(1), mb)
            r = _ZERO if not nearest.inexact else _RU.mul(_RU.abs(m), eps)
            return Ball._raw(m, r)
        m = nearest.div(gmpy2.mpfr(1), mb)
        denom = _RD.mul(amb_lo, _RD.sub(amb_lo, rb))
        r = _RU.add(_RU.div(rb, denom), _RU.mul(_RU.abs(m), eps))
        return Ball._raw(m, r)

    def __truediv__(self, other):
        if not isinstance(other, Ball):
            other = Ball(other)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return Ball(other) * self.reciprocal()

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("ball powers take nonnegative integer exponents")
        out = Ball(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base if k > 1 else base
            k >>= 1
        return out

    def sqrt(self):
        """Enclosure of sqrt over the ball; requires the ball to be >= 0."""
        lo = self.lower_fraction()
        if lo < 0:
            raise ValueError("sqrt of a ball dipping below zero")
        prec = _prec_stack[-1]
        _, down, up, _ = _ctx(prec)
        lo_arg = down.sub(self.mid, self.rad)
        if lo_arg < 0:
            lo_arg = _ZERO
        lo_m = down.sqrt(lo_arg)
        hi_m = up.sqrt(up.add(self.mid, self.rad))
        return Ball.from_endpoints(lo_m, hi_m)

    def exp(self):
        prec = _prec_stack[-1]
        _, down, up, _ = _ctx(prec)
        lo = down.exp(down.sub(self.mid, self.rad))
        hi = up.exp(up.add(self.mid, self.rad))
        return Ball.from_endpoints(lo, hi)

    def cos(self):
        prec = _prec_stack[-1]
        _, down, up, _ = _ctx(prec)
        lo, hi = down.cos(self.mid), up.cos(self.mid)
        b = Ball.from_endpoints(lo, hi)
        return Ball._raw(b.mid, _RU.add(b.rad, self.rad))  # |cos'| <= 1

    def sin(self):
        prec = _prec_stack[-1]
        _, down, up, _ = _ctx(prec)
        lo, hi = down.sin(self.mid), up.sin(self.mid)
        b = Ball.from_endpoints(lo, hi)
        return Ball._raw(b.mid, _RU.add(b.rad, self.rad))  # |sin'| <= 1

    def __repr__(self):
        return f"Ball({self.mid!r} +/- {self.rad!r})"


def ball_union(a: Ball, b: Ball) -> Ball:
    """A ball containing both operands (hull with outward rounding)."""
    lo = _RD.sub(min(a.mid, b.mid), max(a.rad, b.rad))
    hi = _RU.add(max(a.mid, b.mid), max(a.rad, b.rad))
    return Ball.from_endpoints(lo, hi)


# ---------------------------------------------------------------------------
# complex balls (rectangles)


class ComplexBall:
    __slots__ = ("re", "im")

    def __init__(self, re, im=0):
        self.re = re if isinstance(re, Ball) else Ball(re)
        self.im = im if isinstance(im, Ball) else Ball(im)

    @staticmethod
    def _raw(re: Ball, im: Ball) -> "ComplexBall":
        z = object.__new__(ComplexBall)
        z.re = re
        z.im = im
        return z

    def __add__(self, other):
        if not isinstance(other, ComplexBall):
            other = ComplexBall(other)
        return ComplexBall._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return ComplexBall._raw(-self.re, -self.im)

    def __sub__(self, other):
        if not isinstance(other, ComplexBall):
            other = ComplexBall(other)
        return ComplexBall._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, ComplexBall):
            other = ComplexBall(other)
        a, b, c, d = self.re, self.im, other.re, other.im
        return ComplexBall._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def conjugate(self):
        return ComplexBall._raw(self.re, -self.im)

    def abs_sq(self) -> Ball:
        return self.re * self.re + self.im * self.im

    def abs_upper(self):
        """mpfr upper bound for |z| over the rectangle."""
        prec = _prec_stack[-1]
        _, _, up, _ = _ctx(prec)
        a = _RU.add(_RU.abs(self.re.mid), self.re.rad)
        b = _RU.add(_RU.abs(self.im.mid), self.im.rad)
        return up.sqrt(_RU.add(_RU.mul(a, a), _RU.mul(b, b)))

    def abs_lower(self):
        prec = _prec_stack[-1]
        _, down, _, _ = _ctx(prec)
        a, b = self.re.mag_lower(), self.im.mag_lower()
        return down.sqrt(_RD.add(_RD.mul(a, a), _RD.mul(b, b)))

    def reciprocal(self):
        den = self.abs_sq()
        if den.contains_zero():
            raise DivisorContainsZero("reciprocal of a complex ball containing 0")
        inv = den.reciprocal()
        return ComplexBall._raw(self.re * inv, -(self.im * inv))

    def __truediv__(self, other):
        if not isinstance(other, ComplexBall):
            other = ComplexBall(other)
        return self * other.reciprocal()

    def exp(self):
        """Enclosure of e^z on the rectangle."""
        er = self.re.exp()
        return ComplexBall._raw(er * self.im.cos(), er * self.im.sin())

    def contains_zero(self) -> bool:
        return self.re.contains_zero() and self.im.contains_zero()

    def mid_complex(self) -> complex:
        return complex(float(self.re.mid), float(self.im.mid))

    def __repr__(self):
        return f"ComplexBall({self.re!r}, {self.im!r})"


# ---------------------------------------------------------------------------
# refinement of effective reals



def pi_ball() -> Ball:
    """Enclosure of pi at the current working precision."""
    _, down, up, _ = _ctx(_prec_stack[-1])
    return Ball.from_endpoints(mpfr_to_fraction(down.const_pi()),
                               mpfr_to_fraction(up.const_pi()))

class EffectiveReal:
    """A real number represented by a re-evaluable enclosure procedure.

    `compute(prec)` must return a Ball whose radius tends to 0 as prec grows.
    """

    def __init__(self, compute: Callable[[int], Ball], name: str = "value"):
        self.compute = compute
        self.name = name


def refine(x, n: int, *, max_precision: int = 8192) -> Fraction:
    """Rational q with |q - x| <= 2^-n.

    Exact rationals pass through unchanged.  Balls must already be tight
    enough; EffectiveReal values are re-evaluated at growing precision until
    the target radius is met (PrecisionUnreachable at budget).
    """
    target = Fraction(1, 1 << n) if n >= 0 else Fraction(1 << (-n))
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, Ball):
        if x.rad_fraction() <= target:
            return x.mid_fraction()
        raise PrecisionUnreachable(
            f"ball radius {x.rad_fraction()} exceeds 2^-{n} and cannot be re-evaluated")
    if isinstance(x, EffectiveReal):
        prec = max(2 * max(n, 1) + 16, _DEFAULT_PREC)
        while prec <= max_precision:
            with precision(prec):
                b = x.compute(prec)
            if b.rad_fraction() <= target:
                return b.mid_fraction()
            prec *= 2
        raise PrecisionUnreachable(
            f"{x.name}: enclosure radius stuck above 2^-{n} at precision {max_precision}")
    raise TypeError(f"refine does not understand {type(x).__name__}")
