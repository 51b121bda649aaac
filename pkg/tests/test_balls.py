"""Ball arithmetic: containment, exactness, monotonicity, certificates."""
import random
from fractions import Fraction

import mpmath
import pytest

from hypflow import Ball, ComplexBall, BallMatrix, EffectiveReal, precision, refine
from hypflow.errors import DivisorContainsZero, NotCertifiablyInvertible, PrecisionUnreachable
from hypflow.exactmath import ceil_log2, floor_log2, parse_rational, format_rational, sqrt_lower, sqrt_upper


def test_exact_add_stays_exact():
    b = Ball(1) + Ball(1)
    assert b.mid_fraction() == 2 and b.rad_fraction() == 0


def test_exact_dyadic_mul_stays_exact():
    b = Ball(Fraction(1, 2)) * Ball(Fraction(1, 4))
    assert b.mid_fraction() == Fraction(1, 8) and b.rad_fraction() == 0


def test_nondyadic_input_is_enclosed():
    t = Ball(Fraction(1, 3))
    assert t.rad_fraction() > 0
    assert t.contains(Fraction(1, 3))


def test_refine_exact_rational_passthrough():
    assert refine(Fraction(1, 3), 4) == Fraction(1, 3)


def test_refine_effective_real_reaches_target():
    x = EffectiveReal(lambda prec: Ball(Fraction(1, 3)), "one-third")
    q = x.compute(64)
    got = refine(x, 100)
    assert abs(got - Fraction(1, 3)) <= Fraction(1, 2**100)


def test_refine_budget_exhaustion():
    stuck = EffectiveReal(lambda prec: Ball(Fraction(0), Fraction(1)), "fat")
    with pytest.raises(PrecisionUnreachable):
        refine(stuck, 10, max_precision=256)


def test_division_by_straddling_ball_raises():
    with pytest.raises(DivisorContainsZero):
        Ball(1) / Ball(Fraction(0), Fraction(1, 2))


def _random_chain(seed, prec_bits):
    """Run one random op chain; return (final ball, exact reference point)."""
    rng = random.Random(seed)

    def fresh():
        val = Fraction(rng.randint(-40, 40), rng.randint(1, 23))
        pad = Fraction(rng.randint(0, 5), 512)
        off = pad * Fraction(rng.randint(-8, 8), 8)
        return Ball(val, pad), val + off

    with precision(prec_bits):
        b, x = fresh()
        for _ in range(8):
            c, y = fresh()
            op = rng.choice("+-**/")
            if op == "+":
                b, x = b + c, x + y
            elif op == "-":
                b, x = b - c, x - y
            elif op == "/":
                if not c.contains_zero() and y != 0:
                    b, x = b / c, x / y
            else:
                b, x = b * c, x * y
        rad = b.rad_fraction()
        mid = b.mid_fraction()
    return mid, rad, x


def test_containment_over_random_chains():
    for seed in range(10_000):
        mid, rad, x = _random_chain(seed, 64)
        assert abs(mid - x) <= rad, f"containment lost at seed {seed}"


def test_radius_monotone_in_precision():
    for seed in range(600):
        _, lo, _ = _random_chain(seed, 64)
        _, hi, _ = _random_chain(seed, 192)
        assert hi <= lo * (1 + Fraction(1, 1 << 20)), f"radius grew at seed {seed}"
        if lo == 0:
            assert hi == 0


def test_exp_cos_sin_enclose_truth():
    mpmath.mp.dps = 60
    rng = random.Random(7)
    for _ in range(200):
        q = Fraction(rng.randint(-400, 400), rng.randint(1, 97))
        b = Ball(q)
        for fn, ref in ((Ball.exp, mpmath.exp), (Ball.cos, mpmath.cos), (Ball.sin, mpmath.sin)):
            if fn is Ball.exp and abs(q) > 40:
                continue
            got = fn(b)
            true = Fraction(str(mpmath.nstr(ref(mpmath.mpf(q.numerator) / q.denominator), 40, strip_zeros=False)))
            slack = Fraction(1, 10**30)
            assert got.lower_fraction() - slack <= true <= got.upper_fraction() + slack


def test_complex_mul_containment():
    rng = random.Random(11)
    for _ in range(2000):
        a = Fraction(rng.randint(-9, 9), rng.randint(1, 7))
        b = Fraction(rng.randint(-9, 9), rng.randint(1, 7))
        c = Fraction(rng.randint(-9, 9), rng.randint(1, 7))
        d = Fraction(rng.randint(-9, 9), rng.randint(1, 7))
        z = ComplexBall(Ball(a), Ball(b)) * ComplexBall(Ball(c), Ball(d))
        assert z.re.contains(a * c - b * d)
        assert z.im.contains(a * d + b * c)


def test_complex_reciprocal_contains_truth():
    z = ComplexBall(Ball(Fraction(3)), Ball(Fraction(4)))
    w = z.reciprocal()
    assert w.re.contains(Fraction(3, 25))
    assert w.im.contains(Fraction(-4, 25))


def _exact_inverse(rows):
    """Gauss-Jordan over Fraction, test-local oracle."""
    n = len(rows)
    aug = [list(map(Fraction, rows[i])) + [Fraction(int(i == j)) for j in range(n)]
           for i in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def test_matrix_inverse_certificate_diag():
    M = BallMatrix.from_rational([[Fraction(2), Fraction(0)], [Fraction(0), Fraction(4)]])
    Minv = M.certified_inverse()
    assert Minv[0, 0].re.contains(Fraction(1, 2))
    assert Minv[1, 1].re.contains(Fraction(1, 4))
    assert Minv[0, 1].re.contains(Fraction(0))
    assert (Minv @ M).contains_identity()


def test_matrix_inverse_contains_exact_inverse_random():
    rng = random.Random(3)
    done = 0
    while done < 60:
        n = rng.choice([2, 3, 4])
        rows = [[Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(n)]
                for _ in range(n)]
        try:
            exact = _exact_inverse(rows)
        except StopIteration:
            continue
        M = BallMatrix.from_rational(rows)
        try:
            Minv = M.certified_inverse()
        except NotCertifiablyInvertible:
            continue
        for i in range(n):
            for j in range(n):
                assert Minv[i, j].re.contains(exact[i][j])
                assert Minv[i, j].im.contains(Fraction(0))
        done += 1


def test_matrix_inverse_rejects_singular():
    M = BallMatrix.from_rational([[Fraction(1), Fraction(2)], [Fraction(2), Fraction(4)]])
    with pytest.raises(NotCertifiablyInvertible):
        M.certified_inverse()


def test_hs_norm_identity_dominates_sqrt2():
    up = BallMatrix.identity(2).hs_norm_upper_fraction()
    assert up * up >= 2


def test_hs_norm_bounds_every_member():
    rng = random.Random(5)
    for _ in range(200):
        rows = [[Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(3)]
                for _ in range(3)]
        M = BallMatrix.from_rational(rows)
        hs2 = sum(x * x for row in rows for x in row)
        up = M.hs_norm_upper_fraction()
        assert up * up >= hs2


def test_sqrt_bounds():
    assert sqrt_upper(Fraction(9, 4)) == Fraction(3, 2)
    assert sqrt_lower(Fraction(9, 4)) == Fraction(3, 2)
    x = Fraction(2)
    lo, hi = sqrt_lower(x), sqrt_upper(x)
    assert lo * lo <= 2 <= hi * hi
    assert hi - lo < Fraction(1, 1 << 40)


def test_log2_helpers():
    assert ceil_log2(Fraction(8)) == 3
    assert ceil_log2(Fraction(9)) == 4
    assert ceil_log2(Fraction(1, 8)) == -3
    assert floor_log2(Fraction(9)) == 3
    assert floor_log2(Fraction(1, 9)) == -4


def test_rational_roundtrip():
    for text in ["3/4", "-7/2", "0/1", "5"]:
        q = parse_rational(text)
        assert parse_rational(format_rational(q)) == q
