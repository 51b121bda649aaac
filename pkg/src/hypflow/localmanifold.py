"""Local invariant manifolds of hyperbolic equilibria.

Pipeline: from a certified spectral splitting of the linear part and a
Lipschitz modulus for the nonlinear remainder, derive the radius constants
(m0, r, eta, ...) of the contraction region; solve the invariant-graph
integral equation

    u(t) = I1(t) a + int_0^t I1(t-s) F(u(s)) ds - int_t^inf I2(t-s) F(u(s)) ds

by successive approximation on a uniform grid; read off the graph map
phi(b) = -int_0^inf I2(-s) F(u(s, b)) ds whose graph {b + phi(b)} is the
local stable manifold (the unstable one is the same construction for the
time-reversed field).

Numerics: grid iterates are plain float64 driven by one-step recurrences
(the convolution kernels advance by a single certified semigroup factor per
step), and every error source - trapezoid quadrature, semigroup enclosure
radii, tail truncation, float rounding - carries an a-priori bound composed
into the reported uniform error.  The contraction inequalities that the
exact iterates satisfy are monitored on the computed ones with slack 10*tol
plus the local tail bound; a violation raises MonitorViolation since it
would indicate broken constants rather than noise.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .balls import Ball
from .errors import (HorizonTooShort, MonitorViolation, PrecisionUnreachable,
                     RegimeViolation)
from .exactmath import ceil_log2, sqrt_upper, two_pow
from .linalg import FloatBallMatrix
from .rk import flow_until
from .semigroup import ProjectionSplit, SemigroupEvaluator, spectral_split
from .spectral import SpectralData
from .vectorfield import NonlinearRemainder, PolyVectorField, split_linear

# rational upper bound of ln 2, used to convert base-2 and base-e rates
_LN2_UPPER = Fraction(6931471805599454, 10 ** 16)


def _exp_upper(x: Fraction) -> Fraction:
    return Ball(x).exp().upper_fraction()


# -- radius constants ---------------------------------------------------------------

class RadiusCertificate:
    """The derived contraction-region constants.

    m0: smallest natural with 2^-m0 <= sigma/(4K); depth: d(m0) from the
    remainder's Lipschitz modulus; r = delta = 2^-depth/(2K) (parameter ball
    radius); eta = gamma = 2^-depth (escape radius / decay amplitude);
    d_radius = 2^-depth/(4K^2) (divergence-test ball); epsilon_base2: a
    rational lower bound of alpha1/ln2, the decay rate in base 2.
    """

    __slots__ = ("m0", "depth", "r", "eta", "d_radius", "gamma",
                 "epsilon_base2", "delta")

    def __init__(self, m0, depth, r, eta, d_radius, gamma, epsilon_base2, delta):
        self.m0 = m0
        self.depth = depth
        self.r = r
        self.eta = eta
        self.d_radius = d_radius
        self.gamma = gamma
        self.epsilon_base2 = epsilon_base2
        self.delta = delta

    def as_dict(self):
        from .exactmath import format_rational as fr
        return {"m0": self.m0, "depth": self.depth, "r": fr(self.r),
                "eta": fr(self.eta), "dRadius": fr(self.d_radius),
                "gamma": fr(self.gamma), "epsilonBase2": fr(self.epsilon_base2),
                "delta": fr(self.delta)}

    def __repr__(self):
        return (f"RadiusCertificate(m0={self.m0}, depth={self.depth}, "
                f"r={self.r}, eta={self.eta})")


def radius_certificate(split, rem: NonlinearRemainder) -> RadiusCertificate:
    """Contraction-region constants for a certified splitting and remainder."""
    data: SpectralData = split.data if isinstance(split, ProjectionSplit) else split
    K = Fraction(data.K)
    sigma = data.gap.sigma
    m0 = max(ceil_log2(4 * K / sigma), 0)
    depth = rem.contraction_depth(m0)
    eta = two_pow(-depth)
    r = eta / (2 * K)
    return RadiusCertificate(m0=m0, depth=depth, r=r, eta=eta,
                             d_radius=eta / (4 * K * K), gamma=eta,
                             epsilon_base2=data.gap.alpha1 / _LN2_UPPER,
                             delta=r)


# -- compiled polynomial evaluation over grid batches -------------------------------

def _compile_remainder(field: PolyVectorField):
    comp = []
    for p in field.components:
        comp.append([(e, float(c)) for e, c in sorted(p.items())])
    return comp


def _eval_compiled(comp, U: np.ndarray) -> np.ndarray:
    """F(U) for U of shape (grid, n, batch), elementwise over grid and batch."""
    out = np.zeros_like(U)
    for i, mons in enumerate(comp):
        for e, c in mons:
            term = np.full(U.shape[0::2], c)
            for j, ej in enumerate(e):
                if ej == 1:
                    term = term * U[:, j, :]
                elif ej:
                    term = term * U[:, j, :] ** int(ej)
            out[:, i, :] += term
    return out


# -- engine -------------------------------------------------------------------------

class IterationRecord(NamedTuple):
    iteration: int
    ine1_excess: float      # max over grid of lhs - rhs (slack not included)
    ine2_excess: float
    ine3_excess: float
    weighted_gap: float
    ratio: float | None     # vs previous gap; None below the noise floor


# every batch solve appends one entry here so a test run can audit all
# monitor outcomes at the end; cleared with clear_monitor_log()
MONITOR_LOG: list[dict] = []


def clear_monitor_log():
    MONITOR_LOG.clear()


class PicardSolution:
    """Grid solution of the invariant-graph equation for one parameter.

    values[k] approximates u(grid_times[k], a); uniform_error bounds the
    sup-norm distance to the true solution over the exposed grid.
    """

    __slots__ = ("a", "grid_times", "values", "uniform_error", "iterations",
                 "records", "step", "extended_horizon", "error_terms",
                 "interpolation_error")

    def __init__(self, a, grid_times, values, uniform_error, iterations,
                 records, step, extended_horizon, error_terms,
                 interpolation_error):
        self.a = a
        self.grid_times = grid_times
        self.values = values
        self.uniform_error = uniform_error
        self.iterations = iterations
        self.records = records
        self.step = step
        self.extended_horizon = extended_horizon
        self.error_terms = error_terms
        self.interpolation_error = interpolation_error


class PicardEngine:
    """Successive-approximation solver bound to one splitting + remainder."""

    def __init__(self, split: ProjectionSplit, rem: NonlinearRemainder):
        self.split = split
        self.rem = rem
        self.data = split.data
        self.cert = radius_certificate(split, rem)
        self.n = self.data.n
        gap = self.data.gap
        self.K = Fraction(self.data.K)
        self.sigma = gap.sigma
        self.alpha = gap.alpha
        self.alpha1 = gap.alpha1
        self.A_norm = sqrt_upper(
            sum(Fraction(v) ** 2 for row in self.data.A for v in row))
        self._compiled = _compile_remainder(rem.field)
        self._field_is_linear = all(not mons for mons in self._compiled)
        self._evaluators: dict[Fraction, SemigroupEvaluator] = {
            split.evaluator.tol: split.evaluator}

    # ---- constants and budgets ----

    def _derivative_constants(self, a_max: Fraction):
        """Uniform bounds C1, C2 on the first two time derivatives of every
        iterate, and Theta on the second s-derivative of the convolution
        integrands (with the kernel decay factor pulled out)."""
        K, AH = self.K, self.A_norm
        CF = two_pow(-(self.cert.m0 + self.cert.depth))
        LF = two_pow(-self.cert.m0)
        L = self.rem.L
        inv = 1 / (self.alpha + self.sigma) + 1 / self.sigma
        C1 = AH * K * (a_max + CF * inv) + CF
        C2 = AH * AH * K * (a_max + CF * inv) + LF * C1 + AH * CF
        Theta = AH * AH * CF + 2 * AH * LF * C1 + L * C1 * C1 + LF * C2
        return CF, LF, C1, C2, Theta

    def _choose_step(self, Theta: Fraction, budget: Fraction) -> tuple[Fraction, Fraction]:
        """Largest power-of-two step with composite-trapezoid error within
        budget.  Per panel the integrand's second derivative is Theta times
        the kernel decay; summing the geometric panel maxima gives the
        t-uniform bound used here."""
        K = self.K
        a_s, s = self.alpha + self.sigma, self.sigma
        for p in range(2, 48):
            h = two_pow(-p)
            quad = (h ** 3 / 12) * Theta * K * (
                _exp_upper(a_s * h) * (1 + 1 / (a_s * h))
                + _exp_upper(s * h) * (1 + 1 / (s * h)))
            if quad <= budget:
                return h, quad
        raise PrecisionUnreachable("no feasible quadrature step for tolerance")

    def _extension(self, tol_piece: Fraction) -> Fraction:
        """Horizon extension Delta with the dropped-tail bound
        K 2^{-m0-depth} e^{-(alpha1+sigma) Delta} / (alpha1+sigma) <= tol_piece."""
        rate = self.alpha1 + self.sigma
        CF = two_pow(-(self.cert.m0 + self.cert.depth))
        X = self.K * CF / (rate * tol_piece)
        if X <= 1:
            return Fraction(0)
        return ceil_log2(X) * _LN2_UPPER / rate

    def _semigroup_matrices(self, h: Fraction, rho_target: Fraction):
        """Step kernels I1(h), I2(-h) and the projections, re-evaluated at a
        tighter quadrature tolerance if their radii exceed rho_target."""
        quad_tol = self.split.evaluator.tol
        for _ in range(3):
            ev = self._evaluators.get(quad_tol)
            if ev is None:
                ev = SemigroupEvaluator(self.data, tol=quad_tol)
                self._evaluators[quad_tol] = ev
            mats = (ev.component("stable", h), ev.projection("stable"),
                    ev.component("unstable", -h), ev.projection("unstable"))
            rho = max(m.max_rad() for m in mats)
            if Fraction(rho) <= rho_target:
                return mats, Fraction(rho)
            quad_tol = quad_tol / 2 ** 8
        raise PrecisionUnreachable(
            f"semigroup enclosures wider than {float(rho_target)} at step {h}")

    def evaluators(self):
        return dict(self._evaluators)

    # ---- the batched solve ----

    def solve_batch(self, a_cols: np.ndarray, horizon: Fraction,
                    tol: Fraction, adjacency: Sequence[tuple[int, int]] = (),
                    extend_horizon: bool = True):
        """Solve for every parameter column of a_cols (n x B) at once.

        Returns a dict with the exposed grid, iterate values (grid, n, B),
        the graph integral W(0) per column, and the composed error report.
        The parameters must satisfy |a| < r; columns share one grid and one
        certificate, so the batch is exactly as rigorous as B single solves.
        """
        a_cols = np.atleast_2d(np.asarray(a_cols, dtype=float))
        if a_cols.shape[0] != self.n:
            raise ValueError("parameter columns must have the state dimension")
        B = a_cols.shape[1]
        tol = Fraction(tol)
        if tol <= 0:
            raise ValueError("tolerance must be positive")
        horizon = Fraction(horizon)
        if horizon < 0:
            raise RegimeViolation("graph solutions are computed for t >= 0")

        # exact parameter norms (float64 entries are exact rationals)
        a_sq = [sum(Fraction(float(a_cols[i, b])) ** 2 for i in range(self.n))
                for b in range(B)]
        a_max = max((sqrt_upper(q) for q in a_sq), default=Fraction(0))
        if a_max >= self.cert.r:
            raise ValueError(
                f"|a| = {float(a_max)} is outside the certified ball r = "
                f"{float(self.cert.r)}")

        piece = tol / 16
        CF, LF, C1, C2, Theta = self._derivative_constants(a_max)
        h, quad_err = self._choose_step(Theta, piece)

        # grid: exposed part [0, N'h], extension to T_ext for the cut tail
        n_exp = -(-horizon // h) if horizon else 0   # ceil in exact arithmetic
        n_exp = int(n_exp)
        rate = self.alpha1 + self.sigma
        if extend_horizon:
            delta = self._extension(piece)
            n_tot = n_exp + int(-(-delta // h))
            tail_err = self.K * CF * _exp_upper(-rate * (n_tot - n_exp) * h) / rate
        else:
            n_tot = n_exp
            tail_err = self.K * CF / rate
            if tail_err > tol / 2:
                raise HorizonTooShort(
                    f"cut-tail bound {float(tail_err)} exceeds tol/2 = "
                    f"{float(tol / 2)} at the requested horizon; extend the "
                    "horizon or enable extension")
        n_tot = max(n_tot, 1)

        # semigroup kernels tight enough for the scan amplification
        inv_ash = 1 + 1 / ((self.alpha + self.sigma) * h)
        inv_sh = 1 + 1 / (self.sigma * h)
        S_V = self.K * a_max + self.K * CF / (self.alpha + self.sigma) + h * CF
        S_W = self.K * CF / self.sigma + h * CF
        bracket = Fraction(3, 2) * self.K * (inv_ash * S_V + inv_sh * S_W)
        (E1, P1, E2, P2), rho = self._semigroup_matrices(
            h, piece / bracket if bracket else Fraction(1))
        semi_err = rho * bracket
        # float rounding: <= 64n ulp-scale noise per step value, amplified by
        # the geometric sums of the two scan kernels (generous a priori)
        float_err = (Fraction(64 * self.n, 2 ** 53) * (S_V + S_W + CF)
                     * self.K * (inv_ash + inv_sh))
        eps_num = quad_err + semi_err + float_err + tail_err

        hf = float(h)
        ts = hf * np.arange(n_tot + 1)
        E1m, P1m = E1.mid.real.copy(), P1.mid.real.copy()
        E2m, P2m = E2.mid.real.copy(), P2.mid.real.copy()

        Kf = float(self.K)
        a_norm_cols = np.sqrt(np.sum(a_cols * a_cols, axis=0))
        decay = np.exp(-float(self.alpha1) * ts)
        growth = 1.0 / decay
        tail_at = (float(self.K * CF / rate)
                   * np.exp(-float(rate) * (ts[-1] - ts)))
        slack = 10.0 * float(tol) + 2.0 * tail_at
        # the quadrature/semigroup/tail perturbations define the fixed
        # discrete operator whose own iteration is being monitored, so they
        # cancel in successive gaps; only float rounding can blur the ratio
        floor = 64.0 * max(float(float_err),
                           2.0 ** -45 * Kf * max(float(a_max), 1e-30))

        U = np.zeros((n_tot + 1, self.n, B))
        W = np.zeros_like(U)
        records: list[IterationRecord] = []
        prev_wgap = None
        half_h = 0.5 * hf
        j = 0
        while True:
            j += 1
            F = _eval_compiled(self._compiled, U)
            G1 = np.matmul(E1m, F)
            PF1 = np.matmul(P1m, F)
            G2 = np.matmul(E2m, F)
            PF2 = np.matmul(P2m, F)
            S = np.empty_like(U)
            S[0] = P1m @ a_cols
            for k in range(n_tot):
                S[k + 1] = E1m @ S[k] + half_h * (G1[k] + PF1[k + 1])
            W[n_tot] = 0.0
            for k in range(n_tot - 1, -1, -1):
                W[k] = E2m @ W[k + 1] + half_h * (PF2[k] + G2[k + 1])
            U_new = S - W

            gap = np.sqrt(np.sum((U_new - U) ** 2, axis=1))       # (grid, B)
            unorm = np.sqrt(np.sum(U_new ** 2, axis=1))
            bound1 = (Kf / 2.0 ** (j - 1)) * a_norm_cols[None, :] * decay[:, None]
            bound2 = float(self.cert.eta) * decay
            exc1_arr = gap - bound1
            exc2_arr = unorm - bound2[:, None]
            exc1 = float(np.max(exc1_arr))
            exc2 = float(np.max(exc2_arr))
            exc3 = -math.inf
            for name, arr in (("ine-1", exc1_arr), ("ine-2", exc2_arr)):
                if np.any(arr > slack[:, None]):
                    k_bad = int(np.argmax(np.max(arr - slack[:, None], axis=1)))
                    raise MonitorViolation(
                        f"{name} exceeded its bound by {float(np.max(arr))} "
                        f"(slack {slack[k_bad]}) near t = {ts[k_bad]} at "
                        f"iteration {j}")
            for p, q in adjacency:
                d_pq = float(np.linalg.norm(a_cols[:, p] - a_cols[:, q]))
                pair = np.sqrt(np.sum((U_new[:, :, p] - U_new[:, :, q]) ** 2,
                                      axis=1))
                arr = pair - 3.0 * Kf * d_pq
                exc3 = max(exc3, float(np.max(arr)))
                if np.any(arr > slack):
                    raise MonitorViolation(
                        f"ine-3 exceeded its bound by {float(np.max(arr))} "
                        f"for parameter pair ({p}, {q}) at iteration {j}")
            wgap = float(np.max(gap * growth[:, None])) if B else 0.0
            ratio = None
            if prev_wgap is not None and prev_wgap > floor:
                ratio = wgap / prev_wgap
            records.append(IterationRecord(j, exc1, exc2, exc3, wgap, ratio))
            prev_wgap = wgap
            U = U_new
            if self._field_is_linear:
                break
            if self.K * a_max / two_pow(j - 1) <= tol:
                break
            if j >= 80:
                raise MonitorViolation("iteration failed to meet its budget")

        picard_term = (Fraction(0) if self._field_is_linear
                       else self.K * a_max / two_pow(j - 1))
        uniform_error = picard_term + 2 * eps_num
        report = {"picard": picard_term, "quadrature": quad_err,
                  "semigroup": semi_err, "float": float_err, "tail": tail_err,
                  "uniform": uniform_error}
        MONITOR_LOG.append({
            "tol": float(tol), "batch": B, "iterations": j,
            "slack_max": float(np.max(slack)), "records": records,
            "uniform_error": float(uniform_error)})
        return {"times": [k * h for k in range(n_exp + 1)],
                "values": U[:n_exp + 1], "W0": W[0].copy(),
                "iterations": j, "records": records, "step": h,
                "extended_horizon": n_tot * h, "errors": report,
                "interpolation_error": (h * h / 8) * C2}

    def graph_value(self, b: Sequence, tol) -> tuple[np.ndarray, Fraction]:
        """The graph map phi(b) = -W(0) with its certified error bound.

        phi is one more application of the integral operator's unstable part,
        so its error is eps_num plus a quarter of the iterate error (the
        operator contracts through the Lipschitz factor K 2^-m0 / sigma <= 1/4).
        """
        col = np.asarray([float(v) for v in b], dtype=float).reshape(-1, 1)
        out = self.solve_batch(col, Fraction(0), Fraction(tol))
        eps_num = (out["errors"]["uniform"] - out["errors"]["picard"]) / 2
        err = eps_num + out["errors"]["uniform"] / 4
        return -out["W0"][:, 0], err


def solve_invariant_graph(engine: PicardEngine, a: Sequence, horizon,
                          tol, extend_horizon: bool = True) -> PicardSolution:
    """Solve the invariant-graph equation for one parameter point.

    The iteration stops once K|a|/2^(j-1) <= tol (the geometric-convergence
    certificate); uniform_error adds the composed numerical budget on top.
    """
    col = np.asarray([float(v) for v in a], dtype=float).reshape(-1, 1)
    out = engine.solve_batch(col, Fraction(horizon), Fraction(tol),
                             extend_horizon=extend_horizon)
    return PicardSolution(
        a=tuple(Fraction(float(v)) for v in np.ravel(col)),
        grid_times=out["times"], values=out["values"][:, :, 0],
        uniform_error=out["errors"]["uniform"], iterations=out["iterations"],
        records=out["records"], step=out["step"],
        extended_horizon=out["extended_horizon"], error_terms=out["errors"],
        interpolation_error=out["interpolation_error"])


# -- charts -------------------------------------------------------------------------

class ChartSample(NamedTuple):
    coords: tuple              # lattice coordinates in the invariant basis
    point: np.ndarray          # b + phi(b), local frame at the equilibrium
    error: float               # certified bound on |point - true manifold point|
    identity_residual: float   # upper bound of |P1 b - b|


class ManifoldChart:
    """Sampled graph chart of a local invariant manifold.

    samples hold local-frame points (equilibrium at the origin); ambient
    points are origin + point.  lipschitz bounds |p - p~| / |b - b~| between
    exact graph points; together with the lattice pitch it certifies sample
    density.
    """

    __slots__ = ("kind", "origin", "basis", "r", "samples", "lipschitz",
                 "certificate", "data", "tol", "mesh")

    def __init__(self, kind, origin, basis, r, samples, lipschitz,
                 certificate, data, tol, mesh):
        self.kind = kind
        self.origin = origin
        self.basis = basis
        self.r = r
        self.samples = samples
        self.lipschitz = lipschitz
        self.certificate = certificate
        self.data = data
        self.tol = tol
        self.mesh = mesh

    def ambient_points(self) -> np.ndarray:
        base = np.array([float(v) for v in self.origin])
        return np.array([base + s.point for s in self.samples])

    def coverage_radius(self) -> float:
        """Every true chart point is within this distance of some sample."""
        k = self.basis.shape[1]
        half_diag = 0.5 * float(self.mesh) * math.sqrt(k) if k else 0.0
        err = max((s.error for s in self.samples), default=0.0)
        return float(self.lipschitz) * half_diag + err

    def decay_bound(self, t: float) -> float:
        """Certified forward decay gamma * 2^(-eps t) for points on the chart."""
        c = self.certificate
        return float(c.gamma) * 2.0 ** (-float(c.epsilon_base2) * t)


def _lattice(k: int, r_half: Fraction, resolution: int):
    """Axis-aligned lattice over the radius-r/2 ball, nodes outside dropped."""
    if k == 0:
        return [()], []
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    axis = [-r_half + 2 * r_half * Fraction(i, resolution - 1)
            for i in range(resolution)]
    nodes = []
    index = {}

    def rec(prefix):
        if len(prefix) == k:
            if sum(c * c for c in prefix) <= r_half * r_half:
                index[prefix] = len(nodes)
                nodes.append(prefix)
            return
        for c in axis:
            rec(prefix + (c,))

    rec(())
    step = 2 * r_half / (resolution - 1)
    adjacency = []
    for node, i in index.items():
        for ax in range(k):
            nb = node[:ax] + (node[ax] + step,) + node[ax + 1:]
            jdx = index.get(nb)
            if jdx is not None:
                adjacency.append((i, jdx))
    return nodes, adjacency


def local_chart(field: PolyVectorField, x0: Sequence, kind: str = "stable",
                grid_resolution: int = 9, tol=Fraction(1, 10 ** 6),
                precision: int = 32) -> ManifoldChart:
    """Compute the sampled local stable or unstable manifold chart at x0.

    The unstable chart is the stable chart of the time-reversed field.  Every
    sample is b + phi(b) for a lattice node b in the invariant subspace, with
    a certified error and the initial-value identity residual |P1 b - b|.
    """
    if kind not in ("stable", "unstable"):
        raise ValueError("kind must be 'stable' or 'unstable'")
    x0 = tuple(Fraction(v) for v in x0)
    g = field.shift_to_origin(x0)
    if kind == "unstable":
        g = g.negated()
    A, rem = split_linear(g)
    split = spectral_split(A, precision=precision)
    engine = PicardEngine(split, rem)
    cert = engine.cert
    tol = Fraction(tol)

    k = split.data.gap.stable_count
    basis = split.stable_basis
    nodes, adjacency = _lattice(k, cert.r / 2, grid_resolution)
    if k:
        coords = np.array([[float(c) for c in node] for node in nodes]).T
        b_cols = basis @ coords
    else:
        b_cols = np.zeros((split.data.n, 1))

    out = engine.solve_batch(b_cols, Fraction(0), tol, adjacency=adjacency)
    eps_num = (out["errors"]["uniform"] - out["errors"]["picard"]) / 2
    phi_err = float(eps_num + out["errors"]["uniform"] / 4)
    phi = -out["W0"]
    points = b_cols + phi

    # initial-value identity u(0, a) = a reduces to P1 b = b; bound the
    # residual with ball arithmetic per node
    P1 = split.P1
    residuals = []
    for idx in range(b_cols.shape[1]):
        col = [[Fraction(float(v))] for v in b_cols[:, idx]]
        vb = FloatBallMatrix.from_rational(col)
        diff = (P1 @ vb) - vb
        residuals.append(diff.hs_norm_upper())

    # tangency surrogate |phi(b)| <= 3 K^2 2^-m0 / sigma |b| + slack
    tang = float(3 * engine.K ** 2 * two_pow(-cert.m0) / engine.sigma)
    slack = phi_err + 10.0 * float(tol)
    for idx in range(b_cols.shape[1]):
        pb = float(np.linalg.norm(phi[:, idx]))
        bb = float(np.linalg.norm(b_cols[:, idx]))
        if pb > tang * bb + slack:
            raise MonitorViolation(
                f"graph value {pb} exceeds the tangency bound {tang * bb}")

    samples = [ChartSample(coords=nodes[i] if k else (),
                           point=points[:, i].copy(), error=phi_err,
                           identity_residual=float(residuals[i]))
               for i in range(points.shape[1])]
    mesh = (cert.r / (grid_resolution - 1)) if k else Fraction(0)
    lipschitz = 1 + 3 * engine.K ** 2 * two_pow(-cert.m0) / engine.sigma
    return ManifoldChart(kind=kind, origin=x0, basis=basis, r=cert.r,
                         samples=samples, lipschitz=lipschitz,
                         certificate=cert, data=split.data, tol=tol, mesh=mesh)


def chart_map(engine: PicardEngine, b: Sequence, tol=Fraction(1, 10 ** 6)):
    """Graph map value phi(b) with certified error, |b| <= r/2 required."""
    b_sq = sum(Fraction(float(v)) ** 2 for v in b)
    if sqrt_upper(b_sq) > engine.cert.r / 2:
        raise ValueError("base point outside the chart ball r/2")
    return engine.graph_value(b, tol)


# -- divergence witness -------------------------------------------------------------

class DivergenceWitness(NamedTuple):
    exited: bool
    time: float | None
    state: np.ndarray


def escape_time(field: PolyVectorField, x0: Sequence, chart: ManifoldChart,
                x_local: Sequence, max_time: float = 200.0,
                tol: float = 1e-9) -> DivergenceWitness:
    """Forward-integrate from x0 + x_local until leaving B(x0, eta).

    Points off the manifold must leave; points on it never do.  A "time"
    stop is inconclusive (not a refutation), reported as exited=False.
    """
    x0f = np.array([float(v) for v in x0])
    xl = np.asarray([float(v) for v in x_local], dtype=float)
    d_rad = float(chart.certificate.d_radius)
    if float(np.linalg.norm(xl)) >= d_rad:
        raise ValueError(f"|x| must be below the divergence radius {d_rad}")
    eta = float(chart.certificate.eta)

    def margin(y):
        return eta - float(np.linalg.norm(y - x0f))

    stop = flow_until(field.eval_float, x0f + xl, margin, max_time, tol)
    if stop.reason == "event":
        return DivergenceWitness(True, stop.time, stop.state)
    return DivergenceWitness(False, None, stop.state)
