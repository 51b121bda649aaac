"""Exact rational helpers on top of fractions.Fraction.

Everything here is exact or carries an explicit rounding direction; no
floating point sneaks in.  Rationals serialize as "p/q" with q > 0 and
gcd(p, q) = 1 (Fraction maintains that canonical form by itself).
"""
from __future__ import annotations

import math
import re
from fractions import Fraction

from .errors import SchemaError

_RAT_RE = re.compile(r"^(-?\d+)(?:/(\d+))?$")


def parse_rational(text: str) -> Fraction:
    """Parse "p/q" (or a bare integer "p") into a Fraction."""
    m = _RAT_RE.match(text.strip())
    if not m:
        raise SchemaError(f"not a rational literal: {text!r}")
    p = int(m.group(1))
    q = int(m.group(2)) if m.group(2) else 1
    if q == 0:
        raise SchemaError(f"zero denominator: {text!r}")
    return Fraction(p, q)


def format_rational(x: Fraction) -> str:
    """Canonical "p/q" form, denominator always present and positive."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def sqrt_upper(x: Fraction, bits: int = 48) -> Fraction:
    """Smallest found rational r with r*r >= x, within 2^-bits of sqrt(x).

    Exact when x is a perfect rational square.
    """
    x = Fraction(x)
    if x < 0:
        raise ValueError("sqrt of a negative rational")
    if x == 0:
        return Fraction(0)
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    # scale so the integer sqrt carries `bits` fractional bits
    shift = 2 * bits
    y = (n << shift) // d
    r = math.isqrt(y)
    while r * r < y:  # isqrt floors; we need the ceiling side
        r += 1
    val = Fraction(r, 1 << bits)
    # one outward nudge guards the floor division above
    if val * val < x:
        val += Fraction(1, 1 << bits)
    return val


def sqrt_lower(x: Fraction, bits: int = 48) -> Fraction:
    """Largest found rational r >= 0 with r*r <= x, within 2^-bits of sqrt(x)."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("sqrt of a negative rational")
    if x == 0:
        return Fraction(0)
    n, d = x.numerator, x.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    shift = 2 * bits
    y = (n << shift) // d
    r = math.isqrt(y)
    val = Fraction(r, 1 << bits)
    while val * val > x:
        val -= Fraction(1, 1 << bits)
    return max(val, Fraction(0))


def ceil_log2(x: Fraction) -> int:
    """Smallest integer k with 2^k >= x (x > 0)."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log2 of a non-positive rational")
    n, d = x.numerator, x.denominator
    k = n.bit_length() - d.bit_length()
    # 2^(k-1) <= n/d < 2^(k+1); fix up to the exact ceiling
    while Fraction(2) ** k < x:
        k += 1
    while k > 0 and Fraction(2) ** (k - 1) >= x:
        k -= 1
    while Fraction(2) ** (k - 1) >= x:
        k -= 1
    return k


def floor_log2(x: Fraction) -> int:
    """Largest integer k with 2^k <= x (x > 0)."""
    k = ceil_log2(x)
    if Fraction(2) ** k == x:
        return k
    return k - 1


def two_pow(k: int) -> Fraction:
    """2^k as an exact Fraction (k may be negative)."""
    if k >= 0:
        return Fraction(1 << k)
    return Fraction(1, 1 << (-k))
