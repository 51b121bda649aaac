"""End-to-end acceptance tests: pinned tolerances, frozen goldens, budgets.

Each test states its claim and tolerance up front.  Two whole-run audits at
the end re-verify every reachable semigroup cache entry against its decay
bound and every logged contraction monitor record; the same inequalities
are also enforced online inside the library (violations raise), so the
audits here are an independent second route over the accumulated evidence.
"""
import math
import random
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from hypflow.cli import main
from hypflow.globalmanifold import (branch_trace, discontinuity_gap,
                                    enumerate_layers, hausdorff_distance,
                                    limit_target_set)
from hypflow.horseshoe import (LinearHorseshoeMap, cover_distance_sq,
                               invariance_check, level_cover,
                               level_distance_sq)
from hypflow.localmanifold import (MONITOR_LOG, PicardEngine, escape_time,
                                   local_chart)
from hypflow.rk import flow_until
from hypflow.semigroup import spectral_split
from hypflow.vectorfield import PolyVectorField, split_linear

F = Fraction

# evaluators created by these tests, audited at the end of the run
EVALUATORS = []
# charts created by these tests, for the initial-value identity sweep
CHARTS = []


def _track_split(split):
    EVALUATORS.append(split.evaluator)
    return split


def _track_engine(engine):
    for ev in engine.evaluators().values():
        if ev not in EVALUATORS:
            EVALUATORS.append(ev)
    return engine


# -- shared systems -------------------------------------------------------------------

def _saddle():
    return PolyVectorField(2, [{(1, 0): F(-1)},
                               {(0, 1): F(1), (2, 0): F(1)}])


def _linear():
    return PolyVectorField(2, [{(1, 0): F(-2)}, {(0, 1): F(1)}])


@pytest.fixture(scope="module")
def saddle_field():
    return _saddle()


@pytest.fixture(scope="module")
def linear_field():
    return _linear()


@pytest.fixture(scope="module")
def saddle_engine(saddle_field):
    A, rem = split_linear(saddle_field)
    split = _track_split(spectral_split(A))
    return _track_engine(PicardEngine(split, rem))


@pytest.fixture(scope="module")
def linear_engine(linear_field):
    A, rem = split_linear(linear_field)
    split = _track_split(spectral_split(A))
    return _track_engine(PicardEngine(split, rem))


@pytest.fixture(scope="module")
def saddle_chart(saddle_field):
    chart = local_chart(saddle_field, (0, 0), grid_resolution=33,
                        tol=F(1, 10 ** 6))
    CHARTS.append(chart)
    return chart


@pytest.fixture(scope="module")
def saddle_unstable_chart(saddle_field):
    chart = local_chart(saddle_field, (0, 0), kind="unstable",
                        grid_resolution=33, tol=F(1, 10 ** 6))
    CHARTS.append(chart)
    return chart


@pytest.fixture(scope="module")
def linear_chart(linear_field):
    chart = local_chart(linear_field, (0, 0), grid_resolution=33,
                        tol=F(1, 10 ** 6))
    CHARTS.append(chart)
    return chart


# -- projection algebra on random hyperbolic matrices --------------------

def _exact_inverse(M):
    n = len(M)
    aug = [list(row) + [F(int(i == j)) for j in range(n)]
           for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def _matmul(A, B):
    return [[sum(A[i][l] * B[l][j] for l in range(len(B)))
             for j in range(len(B[0]))] for i in range(len(A))]


def _random_hyperbolic(rng, n):
    """Rational matrix with known spectrum: conjugated block diagonal of
    real eigenvalues and rotation pairs, every |Re lambda| >= 1/10."""
    while True:
        blocks, evs, dim = [], [], 0
        while dim < n:
            if n - dim >= 2 and rng.random() < 0.4:
                a = F(rng.choice([-1, 1]) * rng.randint(1, 30), 10)
                b = F(rng.randint(1, 20), 7)
                blocks.append([[a, b], [-b, a]])
                evs.append((a, b))
                dim += 2
            else:
                d = F(rng.choice([-1, 1]) * rng.randint(1, 30), 10)
                blocks.append([[d]])
                evs.append((d, F(0)))
                dim += 1
        if len(set(evs)) != len(evs):
            continue
        D = [[F(0)] * n for _ in range(n)]
        at = 0
        for blk in blocks:
            for i, row in enumerate(blk):
                for j, v in enumerate(row):
                    D[at + i][at + j] = v
            at += len(blk)
        S = [[F(rng.randint(-2, 2)) for _ in range(n)] for _ in range(n)]
        Sinv = _exact_inverse(S)
        if Sinv is None:
            continue
        return _matmul(S, _matmul(D, Sinv))


def test_projection_algebra_random_matrices():
    """200 random rational hyperbolic matrices (n <= 5, |Re lambda| >= 0.1):
    midpoint residuals of P1+P2-I, P1 P2, P1^2-P1 all <= 1e-8, ball versions
    enclose the identities, total under 120 s."""
    rng = random.Random(20260814)
    t0 = time.monotonic()
    for i in range(200):
        n = (i % 5) + 1
        A = _random_hyperbolic(rng, n)
        split = _track_split(spectral_split(A))
        res = split.residuals()
        assert max(res.values()) <= 1e-8, (i, n, res)
        assert split.verify()
    assert time.monotonic() - t0 < 120.0


# -- splitting identity against known matrix exponentials ----------------

def test_splitting_matches_known_exponentials():
    """|I_G1(t) + I_G2(t) - e^{At}| <= 1e-7 at t in {0, 1/10, 1/2, 1} for
    diagonalizable systems with closed-form exponentials."""
    def exp_diag(t):
        return np.diag([math.exp(-2 * t), math.exp(t)])

    def exp_swap(t):
        return np.array([[math.cosh(t), math.sinh(t)],
                         [math.sinh(t), math.cosh(t)]])

    def exp_focus(t):
        c, s = math.cos(2 * t), math.sin(2 * t)
        return math.exp(-t) * np.array([[c, s], [-s, c]])

    def exp_mixed(t):
        out = np.zeros((3, 3))
        out[:2, :2] = exp_focus(t)
        out[2, 2] = math.exp(1.5 * t)
        return out

    systems = [
        ([[F(-2), F(0)], [F(0), F(1)]], exp_diag),
        ([[F(0), F(1)], [F(1), F(0)]], exp_swap),
        ([[F(-1), F(2)], [F(-2), F(-1)]], exp_focus),
        ([[F(-1), F(2), F(0)], [F(-2), F(-1), F(0)],
          [F(0), F(0), F(3, 2)]], exp_mixed),
    ]
    for A, exact in systems:
        ev = _track_split(spectral_split(A)).evaluator
        for t in (F(0), F(1, 10), F(1, 2), F(1)):
            got = ev.splitting(t).mid.real
            err = float(np.sqrt(np.sum((got - exact(float(t))) ** 2)))
            assert err <= 1e-7, (A, t, err)


# -- decay certificates on every cached evaluation -----------------------

def _decay_violations(ev):
    bad = []
    for (side, t), val in ev.cached().items():
        if not ev.in_regime(side, t):
            continue  # splitting() caches off-regime entries with no claim
        bound = ev.decay_bound(side, t)
        rad_hs = math.sqrt(float(np.sum(val.rad ** 2))) * 1.01 + 1e-200
        if val.hs_norm_upper_fraction() > bound + 2 * F(rad_hs):
            bad.append((side, t))
    return bad


def test_decay_certificates(saddle_engine, linear_engine):
    """Every in-regime cached semigroup evaluation obeys K e^{-(a+s)t} /
    K e^{s t}; zero violations.  (The evaluator also enforces this online.)"""
    # exercise evaluation at many scales, both sides
    for ev in (saddle_engine.split.evaluator, linear_engine.split.evaluator):
        for t in (F(0), F(1, 64), F(1, 8), F(1, 2), F(3), F(20)):
            ev.component("stable", t)
            ev.component("unstable", -t)
    checked = 0
    for ev in EVALUATORS:
        bad = _decay_violations(ev)
        assert bad == [], bad
        checked += len(ev.cached())
    assert checked > 400


# -- contraction monitors across all solves ------------------------------

def test_monitors_hold_with_geometric_contraction(saddle_engine):
    """All logged solves keep (ine-1/2/3) excesses within 10 tol and every
    recorded gap ratio <= 0.5 + 1e-9."""
    cert = saddle_engine.cert
    r2 = float(cert.r) / 2
    a_cols = np.array([[0.0, r2 / 2, -r2 / 2, r2, -r2],
                       [0.0, 0.0, 0.0, 0.0, 0.0]])
    adjacency = [(0, 1), (1, 3), (0, 2), (2, 4)]
    for tol in (F(1, 10 ** 6), F(1, 10 ** 8)):
        saddle_engine.solve_batch(a_cols, F(2), tol, adjacency=adjacency)
    assert len(MONITOR_LOG) >= 2
    for entry in MONITOR_LOG:
        slack = 10.0 * entry["tol"]
        for rec in entry["records"]:
            assert rec.ine1_excess <= slack
            assert rec.ine2_excess <= slack
            assert rec.ine3_excess <= slack
            if rec.ratio is not None:
                assert rec.ratio <= 0.5 + 1e-9


# -- closed-form manifold on the saddle testbed --------------------------

def test_saddle_charts_match_closed_form(saddle_chart,
                                                      saddle_unstable_chart):
    """Stable chart nodes (|beta| <= r/2, grid 33) match (0, -beta^2/3)
    within max(1e-6, certified error); unstable chart within 1e-8 of the
    y-axis; both built in under 60 s."""
    t0 = time.monotonic()
    chart = saddle_chart
    assert len(chart.samples) == 33
    for s in chart.samples:
        beta = float(s.coords[0])
        assert abs(beta) <= float(chart.r) / 2
        allowed = max(1e-6, s.error)
        phi = np.asarray(s.point) - np.array([beta, 0.0])
        assert abs(phi[0]) <= allowed
        assert abs(phi[1] + beta * beta / 3) <= allowed
    for s in saddle_unstable_chart.samples:
        assert abs(s.point[0]) <= 1e-8
    assert time.monotonic() - t0 < 60.0


# -- initial-value identity ----------------------------------------------

def test_initial_value_identity(saddle_chart,
                                             saddle_unstable_chart,
                                             linear_chart):
    """Every chart sample satisfies |u(0, a) - a| <= tol."""
    assert len(CHARTS) >= 3
    for chart in CHARTS:
        basis = np.asarray(chart.basis, dtype=float)
        for s in chart.samples:
            a = basis @ np.array([float(c) for c in s.coords])
            assert np.linalg.norm(np.asarray(s.point) - a) <= float(chart.tol)


# -- divergence certificate ----------------------------------------------

def test_off_manifold_points_escape(saddle_field, linear_field,
                                                 saddle_engine, linear_engine,
                                                 saddle_chart, linear_chart):
    """50 points within the divergence radius but certifiably off the local
    manifold all leave B(0, eta) before t = 200; chart points themselves
    never leave over [0, 15] (negative control)."""
    cases = [(saddle_field, saddle_engine, saddle_chart, True),
             (linear_field, linear_engine, linear_chart, False)]
    escapes = 0
    for field, engine, chart, curved in cases:
        cert = engine.cert
        dr = float(cert.d_radius)
        probe = engine.solve_batch(np.zeros((2, 1)), F(0), F(1, 10 ** 6))
        interp = float(probe["interpolation_error"])
        lo, hi = 1.05 * interp, 0.82 * dr
        assert lo < hi  # off-manifold offsets certifiably clear the chart
        for i in range(25):
            b = (-dr / 4) + (dr / 2) * (i / 24.0)
            delta = (lo + (hi - lo) * (i / 24.0)) \
                * (1 if i % 2 == 0 else -1)
            graph = -b * b / 3 if curved else 0.0
            x_local = [b, graph + delta]
            assert abs(delta) > interp
            assert np.hypot(*x_local) < dr
            w = escape_time(field, (0, 0), chart, x_local, max_time=200.0)
            assert w.exited, (field.dim, i, w)
            assert w.time < 200.0
            assert np.linalg.norm(w.state) >= float(cert.eta) * 0.999
            escapes += 1
    assert escapes == 50

    # negative control: points on the chart stay inside B(0, eta) to t = 15
    for field, _, chart, _ in cases:
        eta = float(chart.certificate.eta)
        for pt in chart.ambient_points():
            stop = flow_until(field.eval_float, pt,
                              lambda z: eta - float(np.linalg.norm(z)),
                              15.0, tol=1e-9)
            assert stop.reason == "time", (pt, stop)


# -- global enumeration stays on the manifold ----------------------------

def test_global_layers_follow_parabola(saddle_field,
                                                    saddle_chart):
    """Layers j <= 20 of the saddle's global stable manifold: every emitted
    point with |x| <= 3 satisfies |y + x^2/3| <= 1e-5."""
    layers = list(enumerate_layers(saddle_field, saddle_chart,
                                   max_layers=20))
    assert len(layers) == 21
    widest = 0.0
    for layer in layers:
        for x, y in layer.points:
            widest = max(widest, abs(x))
            if abs(x) <= 3.0:
                assert abs(y + x * x / 3) <= 1e-5, (layer.index, x, y)
    assert widest >= 3.0  # the sweep actually reaches the checked window


# -- horseshoe covers ----------------------------------------------------

def test_horseshoe_counts_distances_invariance():
    """Level n has 4^n squares of side 4^-n (n <= 8); exact Hausdorff
    d(L_n, L_{n+2}) <= 4^-n; level-8 construction under 10 s;
    invariance_check passes exactly for n <= 4."""
    hmap = LinearHorseshoeMap()
    t0 = time.monotonic()
    cover8 = level_cover(hmap, 8)
    assert time.monotonic() - t0 < 10.0
    side8 = F(1, 4) ** 8
    assert len(cover8.closed_rects) == 4 ** 8
    assert all(r.x1 - r.x0 == side8 and r.y1 - r.y0 == side8
               for r in cover8.closed_rects)
    for n in range(0, 8):
        cover = level_cover(hmap, n)
        side = F(1, 4) ** n
        assert len(cover.closed_rects) == 4 ** n
        assert all(r.x1 - r.x0 == side and r.y1 - r.y0 == side
                   for r in cover.closed_rects)
    for n in range(0, 9):
        dsq = level_distance_sq(hmap, n, n + 2)
        assert dsq == 2 * (F(1, 4) ** (n + 1)) ** 2  # closed form
        assert dsq <= (F(1, 4) ** n) ** 2
    # rectangle-level certificate agrees with the interval-level one
    assert cover_distance_sq(level_cover(hmap, 2), level_cover(hmap, 4)) \
        == level_distance_sq(hmap, 2, 4)
    for n in range(1, 5):
        rep = invariance_check(hmap, n)
        assert rep.forward_ok and rep.backward_ok and rep.uncovered == 0


# -- discontinuity experiment -------------------------------------------

GOLDEN_GAPS = {
    F(-1, 5): 0.498825336620,
    F(-1, 10): 0.317872504343,
    F(-1, 20): 0.200951171319,
    F(-1, 100): 0.068678909845,
}


def test_counterexample_discontinuity():
    """Hausdorff gap to the limit target set is monotone decreasing over
    mu in {-1/5, -1/10, -1/20, -1/100} and matches the frozen goldens to
    2e-3, while the limit system itself sits at distance >= 1.9."""
    mus = sorted(GOLDEN_GAPS, key=float)  # -1/5 first
    rows = discontinuity_gap(mus)
    values = [float(d) for _, d in rows]
    for (mu, _), got in zip(rows, values):
        assert abs(got - GOLDEN_GAPS[mu]) <= 2e-3, (mu, got)
    assert all(a > b for a, b in zip(values, values[1:]))
    zero_trace = branch_trace(F(0))
    d0 = float(hausdorff_distance(zero_trace.points, limit_target_set()))
    assert d0 >= 1.9
    assert values[-1] < 0.1 < 1.9 <= d0  # the jump at mu = 0


# -- determinism --------------------------------------------------------

def test_byte_identical_reruns(tmp_path):
    """Identical configs produce byte-identical structured outputs."""
    data = Path(__file__).parent / "data"
    runs = {
        "split": ["split", "--system", str(data / "saddle.json")],
        "local": ["local", "--system", str(data / "saddle.json"),
                  "--grid", "5", "--tol", "1e-6"],
        "horseshoe": ["horseshoe", "--level", "4"],
        "counterexample": ["counterexample", "--mu=-1/20",
                           "--pitch", "2e-3"],
    }
    for name, argv in runs.items():
        a = tmp_path / f"{name}_a.json"
        b = tmp_path / f"{name}_b.json"
        assert main(argv + ["-o", str(a)]) == 0
        assert main(argv + ["-o", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes(), name


# -- whole-run audits (second route over everything accumulated above) ----------------

def test_whole_run_semigroup_cache_audit():
    """Re-verify the decay certificate on every cache entry accumulated by
    every evaluator this module created."""
    assert len(EVALUATORS) >= 200
    checked = 0
    for ev in EVALUATORS:
        bad = _decay_violations(ev)
        assert bad == [], bad
        checked += sum(1 for (side, t) in ev.cached()
                       if ev.in_regime(side, t))
    assert checked > 400


def test_whole_run_monitor_log_audit():
    """Every contraction record logged during this module's solves stays
    within slack and contracts geometrically."""
    assert len(MONITOR_LOG) >= 5
    ratios = []
    for entry in MONITOR_LOG:
        slack = 10.0 * entry["tol"]
        for rec in entry["records"]:
            assert max(rec.ine1_excess, rec.ine2_excess,
                       rec.ine3_excess) <= slack
            if rec.ratio is not None:
                ratios.append(rec.ratio)
    assert ratios, "no gap ratios were recorded"
    assert max(ratios) <= 0.5 + 1e-9
