"""Deterministic fluid limit of the tip dynamics.

State per conflict type: free-tip density x_i(t) and tip density l_i(t),
coupled through the selection shares p_i = l_i^2 / sum(l_j^2) and
u_i = 2 x_i l_i / sum(l_j^2) with a fixed attach delay.  Integration uses a
fixed-step classical Runge-Kutta scheme whose step divides the delay, with
4-point cubic interpolation into the stored grid for the delayed terms.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

RateFn = Callable[[float], float]
HistoryFn = Callable[[float], Sequence[float]]

L_FLOOR = 1e-12


class FluidSingularError(ValueError):
    """Every tip density is zero: selection shares are undefined."""


class FluidIntegrationError(RuntimeError):
    """A tip density went negative far beyond the step tolerance."""


def tip_shares(l) -> np.ndarray:
    """p_i = l_i^2 / sum_j l_j^2."""
    l = np.asarray(l, dtype=float)
    sq = l * l
    denom = sq.sum()
    if denom == 0.0:
        raise FluidSingularError("all tip densities are zero")
    return sq / denom

def selection_rates(x, l) -> np.ndarray:
    """u_i = 2 x_i l_i / sum_j l_j^2 (mean free-tip consumption rate)."""
    x = np.asarray(x, dtype=float)
    l = np.asarray(l, dtype=float)
    denom = (l * l).sum()
    if denom == 0.0:
        raise FluidSingularError("all tip densities are zero")
    return (2.0 * x) * l / denom


def fluid_rhs(x_now, l_now, x_del, l_del, a_now: float, a_del: float):
    """Time derivatives (dx/dt, dl/dt) given current and delay-lagged state.

    dx_i/dt = a(t-h) p_i(t-h) - a(t) u_i(t)
    dl_i/dt = a(t-h) p_i(t-h) - a(t-h) u_i(t-h)
    """
    p_del = tip_shares(l_del)
    u_del = selection_rates(x_del, l_del)
    u_now = selection_rates(x_now, l_now)
    inflow = a_del * p_del
    return inflow - a_now * u_now, inflow - a_del * u_del


@dataclass(frozen=True)
class StaticSolution:
    """Time-independent state: l = 2x = 2w on the support, zero elsewhere."""

    support: tuple[int, ...]  # 0-based type indices
    x: np.ndarray
    l: np.ndarray
    w: np.ndarray


def static_solution(
    d: int, delay: float, support: Sequence[int] | None = None
) -> StaticSolution:
    """Static state for the given support set (0-based indices, default all)."""
    sup = tuple(range(d)) if support is None else tuple(sorted(set(int(i) for i in support)))
    if not sup:
        raise ValueError("support must be non-empty")
    if sup[0] < 0 or sup[-1] >= d:
        raise ValueError("support indices out of range")
    if not delay > 0:
        raise ValueError("delay must be positive")
    k = len(sup)
    x = np.zeros(d)
    # l = 2*x exactly in floats, so the rhs shares p and u cancel bitwise
    x[list(sup)] = delay / k
    l = 2.0 * x
    return StaticSolution(sup, x, l, l - x)


@dataclass
class FluidTrajectory:
    times: np.ndarray  # (K+1,)
    x: np.ndarray  # (K+1, d)
    l: np.ndarray  # (K+1, d)
    delay: float
    step: float

    @property
    def w(self) -> np.ndarray:
        return self.l - self.x

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def index_at(self, t: float) -> int:
        k = int(round(t / self.step))
        if k < 0 or k >= len(self.times) or abs(self.times[k] - t) > self.step / 2:
            raise ValueError(f"time {t} outside the stored grid")
        return k

    def at_time(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        k = self.index_at(t)
        return self.x[k], self.l[k]

    def row_iter(self):
        """Yield CSV rows: t, then x_i, l_i, w_i per type."""
        w = self.w
        for k, t in enumerate(self.times):
            row = [float(t)]
            for i in range(self.d):
                row.extend(
                    (float(self.x[k, i]), float(self.l[k, i]), float(w[k, i]))
                )
            yield row


def _interp_row(arr: np.ndarray, q: float, k_max: int) -> np.ndarray:
    """Cubic Lagrange interpolation of grid rows at fractional index q."""
    j = int(math.floor(q))
    if abs(q - round(q)) < 1e-9:
        return arr[int(round(q))]
    j0 = min(max(j - 1, 0), k_max - 3)
    s = q - j0
    w0 = -(s - 1) * (s - 2) * (s - 3) / 6.0
    w1 = s * (s - 2) * (s - 3) / 2.0
    w2 = -s * (s - 1) * (s - 3) / 2.0
    w3 = s * (s - 1) * (s - 2) / 6.0
    return w0 * arr[j0] + w1 * arr[j0 + 1] + w2 * arr[j0 + 2] + w3 * arr[j0 + 3]


def integrate(
    x_history: HistoryFn,
    l_history: HistoryFn,
    delay: float,
    horizon: float,
    step: float | None = None,
    rate: RateFn | None = None,
) -> FluidTrajectory:
    """Integrate the delayed system from a history given on [0, delay].

    x_history/l_history map a time in [0, delay] to the per-type state; the
    trajectory is advanced from t = delay to the horizon.  The step is
    rounded down so it divides the delay; it must not exceed delay/100.
    """
    h = float(delay)
    if not h > 0:
        raise ValueError("delay must be positive")
    if not horizon > h:
        raise ValueError("horizon must exceed the delay")
    if step is None:
        step = h / 100.0
    if step > h / 100.0 + 1e-15:
        raise ValueError("step must be at most delay/100")
    n_sub = max(int(math.ceil(h / step - 1e-9)), 100)
    dt = h / n_sub
    n_steps = int(math.ceil(horizon / dt - 1e-9))
    a = rate if rate is not None else (lambda t: 1.0)

    x0 = np.asarray(x_history(0.0), dtype=float)
    d = x0.shape[0]
    times = np.arange(n_steps + 1) * dt
    X = np.empty((n_steps + 1, d))
    L = np.empty((n_steps + 1, d))
    for k in range(n_sub + 1):
        t = times[k]
        X[k] = np.asarray(x_history(t), dtype=float)
        L[k] = np.asarray(l_history(t), dtype=float)
        if np.any(L[k] < X[k] - 1e-12) or np.any(X[k] < -1e-12):
            raise ValueError("history must satisfy 0 <= x_i <= l_i")

    alive = L[n_sub] > L_FLOOR
    warned = False
    neg_limit = -10.0 * dt

    def delayed(q: float, k_done: int) -> tuple[np.ndarray, np.ndarray]:
        return _interp_row(X, q, k_done), _interp_row(L, q, k_done)

    def rhs_masked(xv, lv, xd, ld, a_now, a_del):
        dx, dl = fluid_rhs(xv, lv, xd, ld, a_now, a_del)
        dx[~alive] = 0.0
        dl[~alive] = 0.0
        return dx, dl

    for k in range(n_sub, n_steps):
        t = times[k]
        xd0, ld0 = X[k - n_sub], L[k - n_sub]
        xdh, ldh = delayed(k - n_sub + 0.5, k)
        xd1, ld1 = X[k - n_sub + 1], L[k - n_sub + 1]
        a0, ah, a1 = a(t), a(t + dt / 2.0), a(t + dt)
        a0d, ahd, a1d = a(t - h), a(t + dt / 2.0 - h), a(t + dt - h)

        k1x, k1l = rhs_masked(X[k], L[k], xd0, ld0, a0, a0d)
        k2x, k2l = rhs_masked(
            X[k] + 0.5 * dt * k1x, L[k] + 0.5 * dt * k1l, xdh, ldh, ah, ahd
        )
        k3x, k3l = rhs_masked(
            X[k] + 0.5 * dt * k2x, L[k] + 0.5 * dt * k2l, xdh, ldh, ah, ahd
        )
        k4x, k4l = rhs_masked(
            X[k] + dt * k3x, L[k] + dt * k3l, xd1, ld1, a1, a1d
        )
        xn = X[k] + dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        ln = L[k] + dt / 6.0 * (k1l + 2.0 * k2l + 2.0 * k3l + k4l)

        if np.any(ln < neg_limit):
            raise FluidIntegrationError(
                f"tip density fell below {neg_limit:.3g} at t = {t + dt:.6g}"
            )
        bad = (ln < 0.0) | (xn < 0.0)
        if np.any(bad & alive) and not warned:
            warnings.warn(
                "small negative fluid densities clamped to zero", RuntimeWarning
            )
            warned = True
        np.clip(xn, 0.0, None, out=xn)
        np.clip(ln, 0.0, None, out=ln)
        dying = alive & (ln <= L_FLOOR)
        if np.any(dying):
            ln[dying] = 0.0
            xn[dying] = 0.0
            alive = alive & ~dying
        np.minimum(xn, ln, out=xn)
        X[k + 1] = xn
        L[k + 1] = ln
    return FluidTrajectory(times, X, L, h, dt)


def constant_history(x0, l0) -> tuple[HistoryFn, HistoryFn]:
    """History functions holding the given state constant on [0, delay]."""
    xa = np.asarray(x0, dtype=float)
    la = np.asarray(l0, dtype=float)
    return (lambda t: xa), (lambda t: la)
