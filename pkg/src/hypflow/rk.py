"""Adaptive Dormand-Prince 5(4) integration for autonomous fields.

Plain float64, deterministic step acceptance (no randomness, no threading),
per-step error control targeting a global error budget spread uniformly over
the requested duration.  This is a reference integrator, not a validated one;
certified statements in this package never rest on it alone.
"""
from __future__ import annotations

import math
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import LeftBoundingBox, StepUnderflow

# Dormand-Prince coefficients (the classic 5(4) pair with FSAL).
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_ERR = _B5 - _B4

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


def _stages(f, y: np.ndarray, h: float):
    k = [np.asarray(f(y), dtype=float)]
    for row in _A[1:]:
        acc = row[0] * k[0]
        for c, ki in zip(row[1:], k[1:]):
            if c:
                acc = acc + c * ki
        k.append(np.asarray(f(y + h * acc), dtype=float))
    y5 = y + h * sum(c * ki for c, ki in zip(_A[6], k[:6]))
    k.append(np.asarray(f(y5), dtype=float))
    err = h * sum(c * ki for c, ki in zip(_ERR, k))
    return y5, float(np.max(np.abs(err)))


def _single_step(f, y: np.ndarray, h: float) -> np.ndarray:
    """One fixed fifth-order step (used for event localisation)."""
    return _stages(f, y, h)[0]


def default_box(dim: int, half_width: float = 10.0):
    return (np.full(dim, -half_width), np.full(dim, half_width))


def _in_box(y: np.ndarray, box) -> bool:
    lo, hi = box
    return bool(np.all(y >= lo) and np.all(y <= hi))


class FlowStop(NamedTuple):
    """Terminated trajectory: why it stopped, where, and the polyline so far."""
    reason: str               # "event" or "time"
    time: float               # unsigned elapsed duration
    state: np.ndarray
    path_times: np.ndarray
    path_points: np.ndarray


def _drive(f, y0, duration: float, tol: float, box, max_step,
           margin: Callable[[np.ndarray], float] | None, collect: bool):
    """Core stepper.  Integrates the autonomous field for `duration` >= 0 time
    units (the caller folds the sign into f), stopping early when `margin`
    crosses zero from above.  Returns a FlowStop."""
    y = np.asarray(y0, dtype=float)
    if box is None:
        box = default_box(len(y))
    if not _in_box(y, box):
        raise LeftBoundingBox(0.0, y)
    ts = [0.0]
    path = [y.copy()]
    t = 0.0
    hmax = max_step if max_step else duration
    h = min(duration, hmax, 1e-2) or duration
    per_unit = tol / duration if duration > 0 else tol
    while t < duration:
        h = min(h, duration - t, hmax)
        if h < 1e-13 * max(1.0, t):
            raise StepUnderflow(f"step size {h} underflowed at t = {t}")
        y_new, err = _stages(f, y, h)
        target = per_unit * h
        if err <= target or h <= 1e-12 * max(1.0, t):
            t += h
            if margin is not None and margin(y_new) <= 0.0:
                t_hit, y_hit = _localise(f, y, t - h, h, margin)
                if collect:
                    ts.append(t_hit)
                    path.append(y_hit)
                return FlowStop("event", t_hit, y_hit,
                                np.array(ts), np.array(path))
            y = y_new
            if not _in_box(y, box):
                raise LeftBoundingBox(t, y)
            if collect:
                ts.append(t)
                path.append(y.copy())
            if err > 0.0:
                h *= min(_MAX_FACTOR, max(_MIN_FACTOR,
                                          _SAFETY * (target / err) ** 0.25))
            else:
                h *= _MAX_FACTOR
        else:
            h *= max(_MIN_FACTOR, _SAFETY * (target / err) ** 0.25)
    return FlowStop("time", duration, y, np.array(ts), np.array(path))


def _localise(f, y_base: np.ndarray, t_base: float, h: float, margin):
    """Bisect the sub-step length at which the margin first reaches zero.
    All trial steps start from the same accepted base point, so the result is
    deterministic and as accurate as a single controlled step."""
    lo, hi = 0.0, h
    y_hit = _single_step(f, y_base, h)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        y_mid = _single_step(f, y_base, mid)
        if margin(y_mid) <= 0.0:
            hi, y_hit = mid, y_mid
        else:
            lo = mid
    return t_base + hi, y_hit


def flow(f, x: Sequence[float], tau: float, tol: float = 1e-9,
         box=None, max_step: float | None = None) -> np.ndarray:
    """Flow the autonomous field f for signed duration tau.

    Raises LeftBoundingBox if the trajectory leaves the box (default
    [-10, 10]^n) and StepUnderflow if the controller stalls.
    """
    if tau == 0:
        return np.asarray(x, dtype=float)
    g = f if tau > 0 else (lambda y: -np.asarray(f(y), dtype=float))
    stop = _drive(g, x, abs(tau), tol, box, max_step, None, collect=False)
    return stop.state


def flow_path(f, x: Sequence[float], tau: float, tol: float = 1e-9,
              box=None, max_step: float | None = None):
    """Like flow, but returns (times, points) at every accepted step.
    Times carry the sign of tau."""
    if tau == 0:
        y = np.asarray(x, dtype=float)
        return np.array([0.0]), y.reshape(1, -1)
    g = f if tau > 0 else (lambda y: -np.asarray(f(y), dtype=float))
    stop = _drive(g, x, abs(tau), tol, box, max_step, None, collect=True)
    sign = 1.0 if tau > 0 else -1.0
    return sign * stop.path_times, stop.path_points


def flow_until(f, x: Sequence[float], margin: Callable[[np.ndarray], float],
               t_max: float, tol: float = 1e-9, box=None,
               max_step: float | None = None) -> FlowStop:
    """Integrate forward while margin(y) > 0, at most t_max time units.

    Stops with reason "event" at the first zero crossing (localised to a
    controlled-step bisection) or "time" at t_max.
    """
    if margin(np.asarray(x, dtype=float)) <= 0.0:
        y = np.asarray(x, dtype=float)
        return FlowStop("event", 0.0, y, np.array([0.0]), y.reshape(1, -1))
    return _drive(f, x, t_max, tol, box, max_step, margin, collect=True)
