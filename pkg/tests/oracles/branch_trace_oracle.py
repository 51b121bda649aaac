"""One-time high-accuracy oracle for the planar saddle-connection experiment.

Integrates x' = x^2 - 1, y' = -x*y + mu*(x^2 - 1) with DOP853 at tol 1e-10
from the seed z2 + 1e-6 * unit(-1, -2*mu/3), clips to the window
[-1.1, 1] x [-0.1, 2], and reports the Hausdorff distance between the traced
branch and the reference set

    A = {(x, 0) : -1 < x < 1}  union  {(-1, y) : 0 <= y <= 2}

sampled at pitch 1e-3.  The printed values are frozen as golden constants in
tests/test_acceptance.py.  Run: python tests/oracles/branch_trace_oracle.py
"""
import numpy as np
from scipy.integrate import solve_ivp
from scipy.spatial import cKDTree


def rhs(t, z, mu):
    x, y = z
    return [x * x - 1.0, -x * y + mu * (x * x - 1.0)]


def trace(mu, pitch=5e-4):
    v = np.array([-1.0, -2.0 * mu / 3.0])
    v /= np.hypot(*v)
    z0 = np.array([1.0, 0.0]) + 1e-6 * v

    def exit_event(t, z, mu):
        x, y = z
        return min(x + 1.1, 1.0 - x, y + 0.1, 2.0 - y)

    exit_event.terminal = True
    exit_event.direction = -1

    def near_left(t, z, mu):
        return z[0] + 1.0 - 1e-6

    near_left.terminal = True
    near_left.direction = -1

    sol = solve_ivp(rhs, (0.0, 80.0), z0, args=(mu,), method="DOP853",
                    rtol=1e-10, atol=1e-10, dense_output=True,
                    events=[exit_event, near_left], max_step=0.05)
    t_end = sol.t[-1]
    # dense sample in time, then thin to arc-length pitch
    ts = np.linspace(0.0, t_end, 400000)
    pts = sol.sol(ts).T
    seg = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    grid = np.arange(0.0, s[-1], pitch)
    xi = np.interp(grid, s, pts[:, 0])
    yi = np.interp(grid, s, pts[:, 1])
    out = np.column_stack([xi, yi])
    out = np.vstack([out, pts[-1]])
    keep = (out[:, 0] >= -1.1) & (out[:, 0] <= 1.0) & \
           (out[:, 1] >= -0.1) & (out[:, 1] <= 2.0)
    return out[keep], sol


def a_set(pitch=1e-3):
    xs = np.arange(-1.0, 1.0 + pitch / 2, pitch)
    seg = np.column_stack([xs, np.zeros_like(xs)])
    ys = np.arange(0.0, 2.0 + pitch / 2, pitch)
    wall = np.column_stack([np.full_like(ys, -1.0), ys])
    return np.vstack([seg, wall])


def hausdorff(P, Q):
    dpq = cKDTree(Q).query(P)[0].max()
    dqp = cKDTree(P).query(Q)[0].max()
    return max(float(dpq), float(dqp))


if __name__ == "__main__":
    A = a_set()
    print("A-set samples:", len(A))
    for mu in [-1/5, -1/10, -1/20, -1/100, 0.0]:
        pts, sol = trace(mu)
        d = hausdorff(pts, A)
        print(f"mu={mu!r:>8}: trace_pts={len(pts):7d} t_end={sol.t[-1]:8.3f} "
              f"events={[len(e) for e in sol.t_events]} d_H={d:.12f}")
