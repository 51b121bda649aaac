"""Exact-arithmetic tests for the horseshoe rectangle covers."""
import time
from fractions import Fraction

import pytest

from hypflow.errors import LevelTooLarge, OutsideUnitSquare
from hypflow.exactmath import sqrt_upper
from hypflow.horseshoe import (
    LinearHorseshoeMap,
    Rect,
    cantor_intervals,
    contains_point,
    cover_distance,
    cover_distance_sq,
    invariance_check,
    level_cover,
)

F = Fraction
HMAP = LinearHorseshoeMap()


def test_map_validation_and_geometry():
    with pytest.raises(ValueError):
        LinearHorseshoeMap(F(1, 2))
    with pytest.raises(ValueError):
        LinearHorseshoeMap(F(0))
    with pytest.raises(ValueError):
        LinearHorseshoeMap(F(-1, 3))
    m = LinearHorseshoeMap(F(1, 4))
    assert m.mu == 4
    assert m.V0 == Rect(F(0), F(1, 4), F(0), F(1))
    assert m.V1 == Rect(F(3, 4), F(1), F(0), F(1))
    assert m.H0 == Rect(F(0), F(1), F(0), F(1, 4))
    assert m.H1 == Rect(F(0), F(1), F(3, 4), F(1))
    assert m.orientations == ("preserving", "reversing")


def test_branch_maps_are_exact_and_inverse():
    # orientation-preserving branch
    assert HMAP.apply((F(1, 8), F(1, 3))) == (F(1, 2), F(1, 12))
    # folding branch reverses both coordinates
    assert HMAP.apply((F(7, 8), F(1, 3))) == (F(1, 2), F(11, 12))
    for p in [(F(1, 16), F(2, 7)), (F(1, 4), F(1)), (F(3, 4), F(0)),
              (F(31, 32), F(5, 9))]:
        q = HMAP.apply(p)
        assert HMAP.apply_inverse(q) == tuple(map(Fraction, p))
    with pytest.raises(ValueError):
        HMAP.apply((F(1, 2), F(1, 2)))  # fold region
    with pytest.raises(ValueError):
        HMAP.apply_inverse((F(1, 2), F(1, 2)))
    with pytest.raises(OutsideUnitSquare):
        HMAP.apply((F(2), F(0)))
    with pytest.raises(OutsideUnitSquare):
        HMAP.apply_inverse((F(0), F(-1, 10)))


def test_cantor_intervals_structure():
    assert cantor_intervals(F(1, 4), 0) == [(F(0), F(1))]
    assert cantor_intervals(F(1, 4), 1) == [(F(0), F(1, 4)), (F(3, 4), F(1))]
    iv = cantor_intervals(F(1, 4), 5)
    assert len(iv) == 2 ** 5
    assert all(b - a == F(1, 4) ** 5 for a, b in iv)
    # sorted, disjoint, symmetric under x -> 1 - x
    assert all(iv[i][1] < iv[i + 1][0] for i in range(len(iv) - 1))
    mirrored = sorted((1 - b, 1 - a) for a, b in iv)
    assert mirrored == iv


def test_level_zero_cover_is_unit_square():
    cov = level_cover(HMAP, 0)
    assert cov.closed_rects == [Rect(F(0), F(1), F(0), F(1))]
    assert cov.open_complement == []
    assert cov.complement_piece_count == 0
    assert cov.hausdorff_bound == 1


def test_level_one_cover_matches_known_squares():
    cov = level_cover(HMAP, 1)
    expected = {
        Rect(F(0), F(1, 4), F(0), F(1, 4)),
        Rect(F(0), F(1, 4), F(3, 4), F(1)),
        Rect(F(3, 4), F(1), F(0), F(1, 4)),
        Rect(F(3, 4), F(1), F(3, 4), F(1)),
    }
    assert set(cov.closed_rects) == expected
    assert cov.hausdorff_bound == F(1, 4)
    assert cov.complement_piece_count == 3


def test_cover_counts_and_square_sides():
    for n in range(0, 7):
        cov = level_cover(HMAP, n)
        assert len(cov.closed_rects) == 4 ** n
        side = F(1, 4) ** n
        assert all(r.x1 - r.x0 == side and r.y1 - r.y0 == side
                   for r in cov.closed_rects)
        assert cov.complement_piece_count == 4 ** n - 1
        assert cov.hausdorff_bound == F(1, 4) ** n


def test_complement_count_strictly_increases():
    counts = [level_cover(HMAP, n).complement_piece_count for n in range(6)]
    assert all(b > a for a, b in zip(counts, counts[1:]))


def test_exact_area_identity():
    # closed area (2L)^(2n); guillotine pieces tile the rest exactly
    for n in range(5):
        cov = level_cover(HMAP, n)
        closed = cov.closed_area()
        assert closed == F(1, 2) ** (2 * n)
        assert closed + cov.complement_area() == 1
    pert = LinearHorseshoeMap(F(1, 3))
    cov = level_cover(pert, 3)
    assert cov.closed_area() == F(2, 3) ** 6
    assert cov.closed_area() + cov.complement_area() == 1


def test_complement_pieces_disjoint_from_squares():
    cov = level_cover(HMAP, 2)
    for piece in cov.open_complement:
        for sq in cov.closed_rects:
            # open pieces may only touch squares along edges
            assert (piece.x1 <= sq.x0 or piece.x0 >= sq.x1
                    or piece.y1 <= sq.y0 or piece.y0 >= sq.y1)


def test_nesting_each_square_sits_inside_parent():
    for n in range(0, 4):
        outer = level_cover(HMAP, n)
        inner = level_cover(HMAP, n + 1)
        for sq in inner.closed_rects:
            assert any(big.contains_rect(sq) for big in outer.closed_rects)


def test_level_too_large():
    with pytest.raises(LevelTooLarge):
        level_cover(HMAP, 10)
    with pytest.raises(LevelTooLarge):
        level_cover(HMAP, 3, max_rects=63)
    with pytest.raises(ValueError):
        level_cover(HMAP, -1)


def test_distance_same_level_is_zero():
    for n in (0, 2, 4):
        cov = level_cover(HMAP, n)
        assert cover_distance(cov, cov) == 0


def test_distance_unit_square_to_level_one():
    # farthest point is the center, sqrt(2)/4 from the nearest square
    c0 = level_cover(HMAP, 0)
    c1 = level_cover(HMAP, 1)
    sq = cover_distance_sq(c0, c1)
    assert sq == F(1, 8)
    d = cover_distance(c0, c1)
    assert d == sqrt_upper(F(1, 8))
    assert d * d >= F(1, 8)
    assert abs(float(d) - 0.3535533905932738) < 1e-13


def test_distance_matches_closed_form_across_levels():
    # worst point of level n against level n+m is the center of a level-(n+1)
    # gap: exactly (1/2 - L) * L^n away, in both coordinates simultaneously
    for lam in (F(1, 4), F(1, 3), F(2, 5)):
        hmap = LinearHorseshoeMap(lam)
        covers = {n: level_cover(hmap, n) for n in range(6)}
        for n in range(5):
            for m in range(n + 1, 6):
                h = (F(1, 2) - lam) * lam ** n
                assert cover_distance_sq(covers[n], covers[m]) == 2 * h * h


def test_distance_certificate_below_level_bound():
    covers = {n: level_cover(HMAP, n) for n in range(7)}
    for n in range(5):
        for m in range(n + 1, min(n + 3, 7)):
            d = cover_distance(covers[n], covers[m])
            assert d <= covers[n].hausdorff_bound
    with pytest.raises(ValueError):
        cover_distance(covers[3], covers[1])
    with pytest.raises(ValueError):
        cover_distance_sq(covers[1],
                          level_cover(LinearHorseshoeMap(F(1, 3)), 2))


def test_membership_examples():
    for n in (0, 1, 5, 40):
        assert contains_point(HMAP, (F(0), F(0)), n)
    assert not contains_point(HMAP, (F(1, 2), F(1, 2)), 1)
    assert contains_point(HMAP, (F(1, 4), F(3, 4)), 3)
    # corner fixed points and boundary endpoints persist forever
    assert contains_point(HMAP, (F(1), F(1)), 30)
    assert contains_point(HMAP, (F(1, 4), F(1)), 25)
    # x = 1/2 is cut at level 1 regardless of y
    assert not contains_point(HMAP, (F(1, 2), F(0)), 1)
    with pytest.raises(OutsideUnitSquare):
        contains_point(HMAP, (F(3, 2), F(0)), 1)


def test_membership_agrees_with_explicit_cover():
    cov = level_cover(HMAP, 3)
    pts = [(F(i, 13), F(j, 11)) for i in range(14) for j in range(12)]
    for x, y in pts:
        explicit = any(r.contains_point(x, y) for r in cov.closed_rects)
        assert contains_point(HMAP, (x, y), 3) == explicit


def test_membership_scales_to_deep_levels():
    x = F(1, 4) ** 20          # left endpoint at depth 20, inside forever
    assert contains_point(HMAP, (x, x), 60)
    y = F(1, 4) ** 20 * F(1, 2)  # falls into a gap once rescaled 20 times
    assert contains_point(HMAP, (y, F(0)), 20)
    assert not contains_point(HMAP, (y, F(0)), 21)


def test_invariance_default_map():
    for n in (1, 2, 3):
        rep = invariance_check(HMAP, n)
        assert rep.forward_ok and rep.backward_ok
        assert rep.targets == 4 ** (n + 1)
        assert rep.uncovered == 0
    with pytest.raises(ValueError):
        invariance_check(HMAP, 0)


def test_invariance_perturbed_ratio():
    rep = invariance_check(LinearHorseshoeMap(F(1, 3)), 2)
    assert rep.forward_ok and rep.backward_ok and rep.uncovered == 0


def test_level_eight_cover_is_fast():
    t0 = time.monotonic()
    cov = level_cover(HMAP, 8, max_rects=4 ** 8)
    assert len(cov.closed_rects) == 4 ** 8
    assert cov.complement_piece_count == 4 ** 8 - 1
    d = cover_distance(cov, level_cover(HMAP, 8, max_rects=4 ** 8))
    assert d == 0
    assert time.monotonic() - t0 < 10.0
