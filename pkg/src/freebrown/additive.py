"""Brown measure of a self-adjoint initial condition plus a free circular
Brownian motion.

Everything is driven by the implicit support-height function

    v_t(a) = the unique b in (0, sqrt(t)] with sum_j w_j/((a-x_j)^2 + b^2) = 1/t,
             or 0 when sum_j w_j/(a-x_j)^2 <= 1/t,

found by bisection (the map b -> sum is strictly decreasing, and the sum is
bounded by 1/b^2 so the root never exceeds sqrt(t)). The support of the Brown
measure is the vertical strip |b| < v_t(a); inside it the planar density is
constant in b and equals

    w_t(a) = (1/(pi t)) * (1 - (t/2) * dI2/da),   I2(a) = sum_j w_j x_j / D_j,

with D_j = (a-x_j)^2 + v_t(a)^2 and d(v_t^2)/da obtained by implicit
differentiation of the defining identity (no finite differences near the
support edge, where v_t' blows up). The real-axis map

    psi_t(a) = a + t sum_j w_j (a-x_j)/D_j = Re H_t(a + i v_t(a)),
    H_t(z)   = z + t G(z),

pushes the Brown measure forward to the semicircular flow's law: the density
of that law at psi_t(a) is v_t(a)/(pi t), and w_t = psi_t'/(2 pi t).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    AtomDivision,
    NonpositiveTime,
    OutsideSupport,
    ValidationError,
)
from .measures import SpectralMeasure, cauchy_transform
from .quadrature import integrate_adaptive

#: residual target for the v_t bisection, relative to 1/t
V_RESIDUAL_REL = 1e-12
#: bisection iteration cap (bracket [0, sqrt(t)] collapses long before this)
BISECT_MAX_ITER = 200


def _check_time(t):
    if not t > 0:
        raise NonpositiveTime(f"t must be > 0, got {t}")


def _sum_inv_sq(mu, a):
    """sum_j w_j / (a - x_j)^2, read as +inf when a hits an atom."""
    d = np.asarray(a, float)[:, None] - mu.locations[None, :]
    with np.errstate(divide="ignore"):
        return (mu.weights[None, :] / (d * d)).sum(axis=1)


def _sum_kernel(mu, a, v):
    """sum_j w_j / ((a - x_j)^2 + v^2), vectorized over parallel a, v arrays."""
    d = a[:, None] - mu.locations[None, :]
    return (mu.weights[None, :] / (d * d + (v * v)[:, None])).sum(axis=1)


def v_t_array(mu: SpectralMeasure, t: float, a) -> np.ndarray:
    """v_t at every point of ``a`` (vectorized bisection on [0, sqrt(t)])."""
    mu.require_real("v_t")
    _check_time(t)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    target = 1.0 / t
    inside = _sum_inv_sq(mu, a) > target
    v = np.zeros_like(a)
    if not np.any(inside):
        return v
    ai = a[inside]
    lo = np.zeros_like(ai)
    hi = np.full_like(ai, np.sqrt(t))
    root = np.empty_like(ai)
    done = np.zeros(ai.shape, dtype=bool)
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        s = _sum_kernel(mu, ai, mid)
        # freeze each point at the first iterate meeting the residual target;
        # points are independent, so chunked/parallel runs agree bitwise
        hit = ~done & (np.abs(s - target) <= V_RESIDUAL_REL * target)
        root[hit] = mid[hit]
        done |= hit
        if np.all(done):
            break
        above = s > target  # root lies above mid
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.max(np.where(done, 0.0, hi - lo)) <= 1e-18 * np.sqrt(t):
            break
    root[~done] = 0.5 * (lo[~done] + hi[~done])
    v[inside] = root
    return v


def v_t(mu: SpectralMeasure, t: float, a: float) -> float:
    """Support height at a single point (0 outside the strip)."""
    return float(v_t_array(mu, t, np.array([a]))[0])


def subordination_H(mu: SpectralMeasure, t: float, z: complex) -> complex:
    """H_t(z) = z + t G(z), the left inverse of the subordination map."""
    _check_time(t)
    return complex(z) + t * cauchy_transform(mu, z)


def psi_t_array(mu, t, a, v=None):
    mu.require_real("psi_t")
    _check_time(t)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if v is None:
        v = v_t_array(mu, t, a)
    d = a[:, None] - mu.locations[None, :]
    D = d * d + (v * v)[:, None]
    if np.any(D == 0.0):
        raise AtomDivision("psi_t at an atom with v_t = 0")
    return a + t * (mu.weights[None, :] * d / D).sum(axis=1)


def psi_t(mu: SpectralMeasure, t: float, a: float) -> float:
    """psi_t(a) = a + t sum_j w_j (a-x_j)/((a-x_j)^2 + v_t(a)^2)."""
    return float(psi_t_array(mu, t, np.array([a]))[0])


def density_w_array(mu, t, a, v=None):
    mu.require_real("density_w")
    _check_time(t)
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if v is None:
        v = v_t_array(mu, t, a)
    w = np.zeros_like(a)
    inside = v > 0.0
    if not np.any(inside):
        return w
    ai, vi = a[inside], v[inside]
    d = ai[:, None] - mu.locations[None, :]
    D = d * d + (vi * vi)[:, None]
    D2 = D * D
    wj = mu.weights[None, :]
    A = (wj * d / D2).sum(axis=1)
    B = (wj / D2).sum(axis=1)
    dv2 = -2.0 * A / B
    x = mu.locations[None, :]
    dI2 = -(wj * x * (2.0 * d + dv2[:, None]) / D2).sum(axis=1)
    w[inside] = (1.0 / (np.pi * t)) * (1.0 - 0.5 * t * dI2)
    return w


def density_w(mu: SpectralMeasure, t: float, a: float) -> float:
    """Planar Brown density at real coordinate a (0 outside the strip)."""
    return float(density_w_array(mu, t, np.array([a]))[0])


def additive_law_density(mu: SpectralMeasure, t: float, a: float):
    """Point (psi_t(a), v_t(a)/(pi t)) on the graph of the law of the
    semicircular flow; only defined where v_t(a) > 0."""
    v = v_t(mu, t, a)
    if v <= 0.0:
        raise OutsideSupport(f"v_t({a}) = 0: no push-forward density there")
    return psi_t(mu, t, a), v / (np.pi * t)


# -- profiles ----------------------------------------------------------------


@dataclass(frozen=True)
class AdditiveProfile:
    """Grid evaluation of (v_t, w_t, psi_t) plus the refined support set."""

    measure: SpectralMeasure
    t: float
    grid: np.ndarray
    v: np.ndarray
    w: np.ndarray
    psi: np.ndarray
    support_intervals: tuple

    def __iter__(self):
        """Rows (a, v, w, psi) in grid order."""
        return iter(zip(self.grid, self.v, self.w, self.psi))


def _refine_support_endpoint(mu, t, a_inside, a_outside):
    """Bisect the sign of sum_j w_j/(a-x_j)^2 - 1/t between bracket points.

    Returns the outside-side iterate: there the computed v_t is exactly 0,
    and the true endpoint is inside the collapsed bracket.
    """
    target = 1.0 / t
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (a_inside + a_outside)
        if mid == a_inside or mid == a_outside:
            break
        if _sum_inv_sq(mu, np.array([mid]))[0] > target:
            a_inside = mid
        else:
            a_outside = mid
    return a_outside


def _support_intervals(mu, t, grid, inside):
    intervals = []
    n = len(grid)
    i = 0
    while i < n:
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and inside[j + 1]:
            j += 1
        # left endpoint: refine against the previous grid point if any
        if i > 0:
            lo = _refine_support_endpoint(mu, t, grid[i], grid[i - 1])
        else:
            lo = grid[0]  # support may continue past the grid
        if j + 1 < n:
            hi = _refine_support_endpoint(mu, t, grid[j], grid[j + 1])
        else:
            hi = grid[-1]
        intervals.append((float(lo), float(hi)))
        i = j + 1
    return tuple(intervals)


def _default_workers():
    try:
        return max(1, int(os.environ.get("FREEBROWN_THREADS", "1")))
    except ValueError:
        return 1


def additive_profile(mu: SpectralMeasure, t: float, grid, workers=None) -> AdditiveProfile:
    """Evaluate the profile on a strictly increasing grid.

    Support intervals are the maximal grid runs with v > 0, their endpoints
    refined by bisection on the exactly computable indicator
    sum_j w_j/(a-x_j)^2 - 1/t (a run touching the grid edge keeps the edge).
    Rows are computed in deterministic grid order; ``workers`` (default from
    FREEBROWN_THREADS) chunks the grid across threads.
    """
    mu.require_real("additive_profile")
    _check_time(t)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 2 or not np.all(np.diff(grid) > 0):
        raise ValidationError("grid must be strictly increasing with >= 2 points")

    workers = _default_workers() if workers is None else max(1, int(workers))

    def rows_for(chunk):
        v = v_t_array(mu, t, chunk)
        w = density_w_array(mu, t, chunk, v)
        psi = psi_t_array(mu, t, chunk, v)
        return v, w, psi

    if workers == 1 or len(grid) < 4 * workers:
        v, w, psi = rows_for(grid)
    else:
        chunks = np.array_split(grid, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(rows_for, chunks))
        v = np.concatenate([p[0] for p in parts])
        w = np.concatenate([p[1] for p in parts])
        psi = np.concatenate([p[2] for p in parts])

    intervals = _support_intervals(mu, t, grid, v > 0.0)
    return AdditiveProfile(mu, t, grid, v, w, psi, intervals)


# -- integrals over the support ----------------------------------------------


def _pushforward_integrand(mu, t, powers):
    def f(a):
        v = v_t_array(mu, t, a)
        w = density_w_array(mu, t, a, v)
        base = 2.0 * v * w
        psi = psi_t_array(mu, t, a, v)
        return np.stack([base * psi**k for k in powers], axis=1)

    return f


def pushforward_moments(profile: AdditiveProfile, k_max: int) -> np.ndarray:
    """Moments m_k = int psi_t(a)^k 2 v_t(a) w_t(a) da, k = 1..k_max.

    Adaptive per-interval quadrature, refined until successive Richardson
    estimates agree to 1e-8 relative.
    """
    if k_max < 1:
        raise ValidationError("k_max must be >= 1")
    powers = list(range(1, k_max + 1))
    total = np.zeros(k_max)
    f = _pushforward_integrand(profile.measure, profile.t, powers)
    for lo, hi in profile.support_intervals:
        total += integrate_adaptive(f, lo, hi, rel_tol=1e-8)
    return total


def total_mass(profile: AdditiveProfile) -> float:
    """int 2 v_t w_t da over the support (should be 1)."""
    f = _pushforward_integrand(profile.measure, profile.t, [0])
    mass = 0.0
    for lo, hi in profile.support_intervals:
        mass += float(integrate_adaptive(f, lo, hi, rel_tol=1e-8)[0])
    return mass


# -- file output ---------------------------------------------------------------


def write_profile_csv(profile: AdditiveProfile, path):
    """CSV rows a,v,w,psi at 17 significant digits (byte-stable)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("a,v,w,psi\n")
        for a, v, w, psi in profile:
            fh.write(f"{a:.17g},{v:.17g},{w:.17g},{psi:.17g}\n")


def support_sidecar(profile: AdditiveProfile) -> dict:
    return {
        "t": profile.t,
        "intervals": [[lo, hi] for lo, hi in profile.support_intervals],
    }
