"""Linear stability numerics.

Covers both halves of the toolkit: the growth-rate root and unstable-mode
check for the linearized fluid tip dynamics, a winding-number root counter
for transcendental characteristic functions on rectangles, and the spectral
sufficient condition for the delayed compliance network (with the ring
closed form).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


# -- fluid linearization ----------------------------------------------------

def growth_gap(x: float) -> float:
    """1 + x/2 - e^(-x) - x e^x - x^2 e^x; its positive root sets the
    instability growth rate of unbalanced-type perturbations."""
    ex = math.exp(x)
    return 1.0 + 0.5 * x - math.exp(-x) - x * ex - x * x * ex


def find_x0(tol: float = 1e-12) -> float:
    """Positive root of growth_gap in (0, 1) by bisection to abs tol."""
    lo, hi = 1e-6, 1.0
    f_lo, f_hi = growth_gap(lo), growth_gap(hi)
    if not (f_lo > 0 > f_hi):
        raise RuntimeError("bisection bracket lost its sign change")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if growth_gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mode_ratio(x0: float) -> float:
    """Free-tip perturbation per unit tip perturbation: 1/2 - x0 e^x0."""
    return 0.5 - x0 * math.exp(x0)


@dataclass(frozen=True)
class ModeCheck:
    theta: np.ndarray
    xi: np.ndarray
    z: complex
    residual: float


def verify_unstable_mode(
    d: int, delay: float, theta: Sequence[float] | None = None, r_offset: float = 0.0
) -> ModeCheck:
    """Substitute the zero-sum exponential mode into the linearized system.

    The mode has growth rate z = x0/delay and free-tip amplitudes
    xi_i = r0 theta_i for any zero-sum tip-perturbation vector theta.
    Returns the max modulus of the defect of both linearized relations:

        (1 + h z) xi_i = -theta_i/2 + mean(theta) + (theta_i - mean(theta)) e^(-zh)
        h z theta_i    = (theta_i/2 - xi_i) e^(-zh)

    r_offset shifts the amplitude ratio away from r0 (sanity probes).
    """
    if d < 2:
        raise ValueError("the unbalanced mode needs at least two types")
    if not delay > 0:
        raise ValueError("delay must be positive")
    if theta is None:
        th = np.zeros(d)
        th[0], th[1] = 1.0, -1.0
    else:
        th = np.asarray(theta, dtype=float)
        if th.shape != (d,):
            raise ValueError("theta must have length d")
        if abs(th.sum()) > 1e-9 * max(np.abs(th).max(), 1.0):
            raise ValueError("theta must sum to zero")
        if np.abs(th).max() == 0.0:
            raise ValueError("theta must be nonzero")
    th = th / np.abs(th).max()  # unit max-norm
    x0 = find_x0()
    r0 = mode_ratio(x0) + r_offset
    h = delay
    z = x0 / h
    xi = r0 * th
    mean = th.mean()
    ezh = cmath.exp(-z * h)
    line1 = (1.0 + h * z) * xi - (-0.5 * th + mean + (th - mean) * ezh)
    line2 = h * z * th - (0.5 * th - xi) * ezh
    residual = float(max(np.abs(line1).max(), np.abs(line2).max()))
    return ModeCheck(th, xi, z, residual)


def balanced_characteristic(delay: float) -> Callable[[complex], complex]:
    """Characteristic function 1 + h z - e^(-zh)/2 of aggregate (nonzero-sum)
    tip perturbations; all its roots sit in the open left half plane."""
    h = float(delay)

    def f(z: complex) -> complex:
        return 1.0 + h * z - 0.5 * cmath.exp(-z * h)

    return f


# -- winding-number root counting -------------------------------------------

class ContourError(RuntimeError):
    """The contour runs too close to a root (or refinement gave up)."""


@dataclass(frozen=True)
class SpectralRegion:
    """Axis-aligned rectangle in the complex plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    samples_per_side: int = 64

    def __post_init__(self) -> None:
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("degenerate rectangle")
        if self.samples_per_side < 2:
            raise ValueError("need at least 2 samples per side")

    def corners(self) -> list[complex]:
        return [
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        ]


def count_roots(
    f: Callable[[complex], complex],
    region: SpectralRegion,
    min_modulus: float = 1e-9,
    max_depth: int = 48,
) -> int:
    """Roots of f (with multiplicity) inside the rectangle, by winding number.

    The phase of f is accumulated along the boundary with adaptive bisection
    keeping every phase step below pi/2; a contour value with modulus at or
    below min_modulus, or a segment that cannot be refined to a small phase
    step, raises ContourError (shrink or shift the region instead of trusting
    a wrong count).
    """
    corners = region.corners()
    total = 0.0

    def fval(z: complex) -> complex:
        v = f(z)
        if abs(v) <= min_modulus:
            raise ContourError(
                f"|f| = {abs(v):.3g} <= {min_modulus:.3g} on the contour at {z:.6g}"
            )
        return v

    def walk(za: complex, va: complex, zb: complex, vb: complex, depth: int) -> float:
        dphi = cmath.phase(vb / va)
        if abs(dphi) < 0.5 * math.pi:
            return dphi
        if depth >= max_depth:
            raise ContourError(
                f"phase step {dphi:.3f} not resolvable near {za:.6g} .. {zb:.6g}"
            )
        zm = 0.5 * (za + zb)
        vm = fval(zm)
        return walk(za, va, zm, vm, depth + 1) + walk(zm, vm, zb, vb, depth + 1)

    for side in range(4):
        za, zb = corners[side], corners[(side + 1) % 4]
        pts = [
            za + (zb - za) * k / region.samples_per_side
            for k in range(region.samples_per_side + 1)
        ]
        vals = [fval(z) for z in pts]
        for k in range(region.samples_per_side):
            total += walk(pts[k], vals[k], pts[k + 1], vals[k + 1], 0)
    count = total / (2.0 * math.pi)
    nearest = round(count)
    if abs(count - nearest) > 1e-6:
        raise ContourError(f"winding number {count:.8f} is not close to an integer")
    return int(nearest)


# -- compliance-network spectrum ---------------------------------------------

def compliance_matrix(z: complex, network) -> np.ndarray:
    """Delay-transfer matrix M(z): M_ij = D_ij e^(-z tau_ji) / (z + E_i k_i).

    tau_ji is the lag from activity j to activity i; the network object must
    expose coupling (n, n), lags_to (n, n) with lags_to[i, j] = tau_ji,
    cost_sens E and ctrl_gain k.
    """
    delta = network.cost_sens * network.ctrl_gain
    z = complex(z)
    denom = z + delta.astype(complex)
    if np.any(np.abs(denom) < 1e-12):
        raise ZeroDivisionError(f"z = {z:.6g} hits a pole of the transfer matrix")
    phase = np.exp(-z * network.lags_to.astype(complex))
    return (network.coupling * phase) / denom[:, None]


def ring_eigenvalues(z: complex, n: int, coupling: float, lag: float, delta: float) -> np.ndarray:
    """Closed-form eigenvalues of M(z) for the nearest-neighbor ring:
    (D e^(-z tau) / (z + delta)) * 2 cos(2 pi a / n), a = 1..n."""
    z = complex(z)
    if abs(z + delta) < 1e-12:
        raise ZeroDivisionError("z hits the ring transfer pole")
    base = coupling * cmath.exp(-z * lag) / (z + delta)
    a = np.arange(1, n + 1)
    return base * 2.0 * np.cos(2.0 * np.pi * a / n)


@dataclass
class SufficientConditionReport:
    passed: bool
    margin: float  # w/2 - max |lambda| over the sampled grid
    witness: complex  # grid point achieving the max eigenvalue modulus
    witness_modulus: float
    threshold: float  # w/2
    grid_shape: tuple[int, int]
    skipped_poles: int
    ring_condition: bool | None = None  # D < w*delta/4 when the net is a ring
    notes: list[str] = field(default_factory=list)


def check_sufficient_condition(
    network,
    re_max: float | None = None,
    im_max: float | None = None,
    re_points: int = 41,
    im_points: int = 161,
) -> SufficientConditionReport:
    """Sample max |eig M(z)| over a right-half-plane rectangle.

    PASS means every sampled point stays below w/2, which keeps all windowed
    feedback roots in the open left half plane.  Defaults: the rectangle
    spans Re in [0, 10 max(E_i k_i)], |Im| <= 100/window (the eigenvalues
    decay like 1/|z|, so far-field points cannot violate the bound).
    """
    delta = network.cost_sens * network.ctrl_gain
    w = network.window
    if re_max is None:
        re_max = 10.0 * float(delta.max())
    if im_max is None:
        im_max = 100.0 / w
    threshold = w / 2.0
    worst = -1.0
    witness = complex(0.0, 0.0)
    skipped = 0
    for x in np.linspace(0.0, re_max, re_points):
        for y in np.linspace(-im_max, im_max, im_points):
            z = complex(x, y)
            try:
                m = compliance_matrix(z, network)
            except ZeroDivisionError:
                skipped += 1
                continue
            lam = float(np.abs(np.linalg.eigvals(m)).max())
            if lam > worst:
                worst = lam
                witness = z
    report = SufficientConditionReport(
        passed=worst < threshold,
        margin=threshold - worst,
        witness=witness,
        witness_modulus=worst,
        threshold=threshold,
        grid_shape=(re_points, im_points),
        skipped_poles=skipped,
    )
    ring = getattr(network, "ring_params", None)
    if ring is not None:
        coupling, _ = ring
        d0 = float(delta[0])
        report.ring_condition = bool(coupling < w * d0 / 4.0)
        report.notes.append(
            f"ring analytic condition: D = {coupling:.6g} "
            f"{'<' if report.ring_condition else '>='} w*delta/4 = {w * d0 / 4.0:.6g}"
        )
    return report


def window_characteristic(network) -> Callable[[complex], complex]:
    """det((1 - e^(-wz)) M(z) - w I): its right-half-plane roots are exactly
    the unstable modes of the linearized windowed feedback loop."""
    w = network.window
    n = network.n

    def g(z: complex) -> complex:
        m = compliance_matrix(z, network)
        return complex(np.linalg.det((1.0 - cmath.exp(-w * z)) * m - w * np.eye(n)))

    return g
