"""Brown measure of a unitary initial condition times a free multiplicative
Brownian motion.

Conventions: the low-level functions integrate against ``mu_bar``, the
distribution of the adjoint unitary (atom angles ``beta_j``), and evaluate
kernels at ``u_j = theta + beta_j``; this equals integrating the original
spectral measure of the unitary at ``theta - alpha_j``. The profile builder
takes the original measure and reflects it internally.

The boundary radius function is the implicit root of

    f(r, theta) = (1-r^2)/(-2 log r) * sum_j w_j / (1 - 2 r cos u_j + r^2)

against 1/t: r_t(theta) is the unique root in (0,1) when the circle limit
f(1-, theta) exceeds 1/t, else 1 (f is strictly increasing in r on (0,1) and
satisfies f(r) = f(1/r)). Inside the support annulus sector
{r_t < r < 1/r_t} the planar density in polar coordinates is w_t(theta)/r^2
with

    w_t(theta) = (1/4pi) (2/t + dm_t/dtheta) = (1/(2 pi t)) dphi/dtheta,

where m_t(theta) = 2 sum_j w_j r sin u_j / D_j and phi(theta) =
theta + (t/2) m_t(theta) is the continuous boundary angle map; r_t'(theta)
enters dm_t/dtheta through implicit differentiation -f_theta/f_r of the
defining identity, so no finite differences appear. The Haar measure short-
circuits every formula: r_t = exp(-t/2), phi = theta, w_t = 1/(2 pi t).

Denominators are evaluated as D = (1-r)^2 + 4 r sin^2(u/2), which stays
accurate as r -> 1.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidRadius,
    NonpositiveTime,
    OutsideU,
    PoleAtAtom,
    ValidationError,
    ZeroLambda,
)
from .measures import SpectralMeasure, reflect_circle_measure
from .quadrature import integrate_adaptive

#: residual target for the r_t bisection, relative to 1/t
R_RESIDUAL_REL = 1e-12
BISECT_MAX_ITER = 200
#: bisection steps per arc endpoint refinement
ARC_REFINE_STEPS = 60
#: upper bracket: roots are separated from 1 by the f(1-,theta) > 1/t margin
R_BRACKET_HI = 1.0 - 1e-15


def _check_time(t):
    if not t > 0:
        raise NonpositiveTime(f"t must be > 0, got {t}")


def _g(r):
    """(1 - r^2)/(-2 log r) for r in (0,1).

    1 - r^2 is formed as (1-r)(1+r): near r = 1 the difference 1-r is exact
    and log(r) of the representable r is well conditioned, so no log1p
    gymnastics are needed.
    """
    return (1.0 - r) * (1.0 + r) / (-2.0 * np.log(r))


def _g_prime(r):
    """d/dr of _g; series for r near 1 where the direct form cancels."""
    r = np.asarray(r, dtype=float)
    u = 1.0 - r
    L = -np.log(r)
    direct = ((1.0 - r) * (1.0 + r) / r - 2.0 * r * L) / (2.0 * L * L)
    series = 1.0 - u / 3.0
    return np.where(u < 1e-4, series, direct)


def _den(r, u):
    """1 - 2 r cos u + r^2 written as (1-r)^2 + 4 r sin^2(u/2)."""
    return (1.0 - r) ** 2 + 4.0 * r * np.sin(0.5 * u) ** 2


def _kernel_sum(mu_bar, r, thetas):
    """sum_j w_j / D_j(r, theta + beta_j); r and thetas parallel arrays."""
    u = thetas[:, None] + mu_bar.locations[None, :]
    return (mu_bar.weights[None, :] / _den(r[:, None], u)).sum(axis=1)


def f_value(mu_bar: SpectralMeasure, r: float, theta: float) -> float:
    """f(r, theta); canonicalized through f(r) = f(1/r) for r > 1.

    Haar returns the closed form 1/(-2 log r).
    """
    mu_bar.require_circle("f_value")
    if r <= 0.0 or r == 1.0:
        raise InvalidRadius(f"f is singular at r={r}")
    if r > 1.0:
        r = 1.0 / r
    if mu_bar.is_haar:
        return float(1.0 / (-2.0 * np.log(r)))
    s = _kernel_sum(mu_bar, np.array([r]), np.array([float(theta)]))[0]
    return float(_g(r) * s)


def f_limit_at_circle(mu_bar: SpectralMeasure, theta) -> np.ndarray:
    """f(1-, theta) = sum_j w_j / (4 sin^2(u_j/2)); +inf at atom angles.

    The Haar limit is +inf for every theta (the full circle lies in U_t).
    """
    mu_bar.require_circle("f_limit_at_circle")
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    if mu_bar.is_haar:
        return np.full_like(th, np.inf)
    u = th[:, None] + mu_bar.locations[None, :]
    with np.errstate(divide="ignore"):
        vals = (mu_bar.weights[None, :] / (4.0 * np.sin(0.5 * u) ** 2)).sum(axis=1)
    return vals


def T_of_lambda(mu_bar: SpectralMeasure, lam: complex) -> float:
    """T(lambda) = 1/f(|lambda|, arg lambda); 0 where f diverges.

    Satisfies T(lambda) = T(1/conj(lambda)).
    """
    lam = complex(lam)
    if lam == 0:
        raise ZeroLambda("T is undefined at lambda = 0")
    r, theta = abs(lam), float(np.angle(lam))
    if r == 1.0:
        fl = float(f_limit_at_circle(mu_bar, theta)[0])
        return 0.0 if np.isinf(fl) else 1.0 / fl
    return 1.0 / f_value(mu_bar, r, theta)


def r_t_array(mu_bar: SpectralMeasure, t: float, thetas) -> np.ndarray:
    """Boundary radius r_t at each angle (vectorized bisection in (0,1))."""
    mu_bar.require_circle("r_t")
    _check_time(t)
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    if mu_bar.is_haar:
        return np.full_like(th, np.exp(-0.5 * t))
    target = 1.0 / t
    inside = f_limit_at_circle(mu_bar, th) > target
    r = np.ones_like(th)
    if not np.any(inside):
        return r
    thi = th[inside]

    def f_at(rr):
        return _g(rr) * _kernel_sum(mu_bar, rr, thi)

    lo = np.full_like(thi, 0.5)
    for _ in range(BISECT_MAX_ITER):
        bad = f_at(lo) >= target
        if not np.any(bad):
            break
        lo = np.where(bad, 0.5 * lo, lo)
    hi = np.full_like(thi, R_BRACKET_HI)
    root = np.empty_like(thi)
    done = np.zeros(thi.shape, dtype=bool)
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        s = f_at(mid)
        # per-point freeze at the first residual-verified iterate keeps
        # chunked/parallel evaluation bitwise deterministic
        hit = ~done & (np.abs(s - target) <= R_RESIDUAL_REL * target)
        root[hit] = mid[hit]
        done |= hit
        if np.all(done):
            break
        below = s < target  # f increasing: root above mid
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.max(np.where(done, 0.0, hi - lo)) <= 1e-18:
            break
    root[~done] = 0.5 * (lo[~done] + hi[~done])
    r[inside] = root
    return r


def r_t(mu_bar: SpectralMeasure, t: float, theta: float) -> float:
    return float(r_t_array(mu_bar, t, np.array([theta]))[0])


def phi_map(mu_bar: SpectralMeasure, t: float, z: complex) -> complex:
    """Left inverse of the subordination map:
    Phi(z) = z exp((t/2) sum_j w_j (1 + xi_j z)/(1 - xi_j z)), xi_j = e^{i beta_j}.
    """
    mu_bar.require_circle("phi_map")
    _check_time(t)
    z = complex(z)
    if mu_bar.is_haar:
        return z * np.exp(0.5 * t)
    xi = mu_bar.unit_atoms
    d = 1.0 - xi * z
    if np.min(np.abs(d)) <= 1e-14:
        raise PoleAtAtom(f"Phi has a pole at z={z}")
    expo = 0.5 * t * np.sum(mu_bar.weights * (1.0 + xi * z) / d)
    return z * complex(np.exp(expo))


def _angle_rows(mu_bar, t, thetas, r):
    """(phi, w, m) at angles with r = r_t(theta) < 1, vectorized.

    phi comes out as the continuous representative directly (it is a finite
    sum of continuous terms, not a principal-branch argument).
    """
    if mu_bar.is_haar:
        w = np.full_like(thetas, 1.0 / (2.0 * np.pi * t))
        return thetas.copy(), w, np.zeros_like(thetas)
    u = thetas[:, None] + mu_bar.locations[None, :]
    wj = mu_bar.weights[None, :]
    rc = r[:, None]
    D = _den(rc, u)
    D2 = D * D
    su, cu = np.sin(u), np.cos(u)
    S1 = (wj / D).sum(axis=1)
    Ssin_D = (wj * su / D).sum(axis=1)
    Ssin_D2 = (wj * su / D2).sum(axis=1)
    Scos_D2 = (wj * cu / D2).sum(axis=1)
    S_D2 = (wj / D2).sum(axis=1)

    m = 2.0 * r * Ssin_D
    phi = thetas + 0.5 * t * m

    g = _g(r)
    gp = _g_prime(r)
    f_r = gp * S1 + g * (2.0 * Scos_D2 - 2.0 * r * S_D2)
    f_th = -2.0 * r * g * Ssin_D2
    drdth = -f_th / f_r
    dm = 2.0 * (
        drdth * (1.0 - r * r) * Ssin_D2 + (r**3 + r) * Scos_D2 - 2.0 * r * r * S_D2
    )
    w = (2.0 / t + dm) / (4.0 * np.pi)
    return phi, w, m


def _phi_only(mu_bar, t, thetas, r):
    """Angle map theta + (t/2) m without the density machinery; valid at
    r = 1 too (used for rows outside U_t)."""
    if mu_bar.is_haar:
        return thetas.copy()
    u = thetas[:, None] + mu_bar.locations[None, :]
    D = _den(r[:, None], u)
    m = 2.0 * r * (mu_bar.weights[None, :] * np.sin(u) / D).sum(axis=1)
    return thetas + 0.5 * t * m


def phi_of_theta_array(mu_bar: SpectralMeasure, t: float, thetas) -> np.ndarray:
    """Vectorized boundary angle map, extended by the unit-circle
    continuation (r_t = 1) outside U_t."""
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    return _phi_only(mu_bar, t, th, r_t_array(mu_bar, t, th))


def m_t(mu_bar: SpectralMeasure, t: float, theta: float) -> float:
    """m_t(theta) = 2 sum_j w_j r sin u_j / D_j at r = r_t(theta)."""
    r = r_t(mu_bar, t, theta)
    if r >= 1.0:
        raise OutsideU(f"theta={theta} not in U_t")
    _, _, m = _angle_rows(mu_bar, t, np.array([float(theta)]), np.array([r]))
    return float(m[0])


def phi_of_theta(mu_bar: SpectralMeasure, t: float, theta: float) -> float:
    """Continuous boundary angle phi(theta) = theta + (t/2) m_t(theta)."""
    r = r_t(mu_bar, t, theta)
    if r >= 1.0:
        raise OutsideU(f"theta={theta} not in U_t")
    phi, _, _ = _angle_rows(mu_bar, t, np.array([float(theta)]), np.array([r]))
    return float(phi[0])


def density_w_theta(mu_bar: SpectralMeasure, t: float, theta: float) -> float:
    """Angular density w_t(theta) = (1/4pi)(2/t + dm_t/dtheta)."""
    r = r_t(mu_bar, t, theta)
    if r >= 1.0:
        raise OutsideU(f"theta={theta} not in U_t")
    _, w, _ = _angle_rows(mu_bar, t, np.array([float(theta)]), np.array([r]))
    return float(w[0])


# -- profiles ----------------------------------------------------------------


@dataclass(frozen=True)
class MultiplicativeProfile:
    """Per-angle rows (theta, r, phi, w, arg_density) plus the U_t arcs.

    ``u_components`` are maximal open arcs within the principal interval
    (-pi, pi]; a component of U_t crossing the cut at +-pi shows up as two
    entries, and the full circle (e.g. Haar) as the single arc (-pi, pi).
    Rows with r = 1 sit outside U_t: w and arg_density are 0 there and phi
    holds the boundary continuation of the angle map.
    """

    measure: SpectralMeasure
    measure_bar: SpectralMeasure
    t: float
    thetas: np.ndarray
    r: np.ndarray
    phi: np.ndarray
    w: np.ndarray
    arg_density: np.ndarray
    u_components: tuple

    def __iter__(self):
        return iter(zip(self.thetas, self.r, self.phi, self.w, self.arg_density))


def _refine_arc_endpoint(mu_bar, t, th_inside, th_outside):
    """ARC_REFINE_STEPS bisection steps on f(1-, theta) - 1/t."""
    target = 1.0 / t
    for _ in range(ARC_REFINE_STEPS):
        mid = 0.5 * (th_inside + th_outside)
        if mid == th_inside or mid == th_outside:
            break
        if f_limit_at_circle(mu_bar, mid)[0] > target:
            th_inside = mid
        else:
            th_outside = mid
    return th_outside


def _u_components(mu_bar, t, thetas, inside):
    """Maximal arcs of {f(1-, theta) > 1/t} within (-pi, pi].

    A component of U_t crossing the cut at +-pi is reported as two arcs
    meeting at the cut. When a run ends at the grid angle pi with its true
    endpoint just beyond, the wrapped sliver (-pi, endpoint - 2pi) is emitted
    too, so arc integrals cover all of U_t.
    """
    if np.all(inside):
        return ((-np.pi, np.pi),)
    if not np.any(inside):
        return ()
    n = len(thetas)
    step = 2.0 * np.pi / n
    wraps = bool(inside[0] and inside[-1])
    comps = []
    sliver = None
    i = 0
    while i < n:
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and inside[j + 1]:
            j += 1
        if i > 0:
            lo = _refine_arc_endpoint(mu_bar, t, thetas[i], thetas[i - 1])
        elif wraps:
            lo = -np.pi
        else:
            # -pi (== the last grid angle pi) is a genuine outside bracket
            lo = max(-np.pi, _refine_arc_endpoint(mu_bar, t, thetas[0], -np.pi))
        if j + 1 < n:
            hi = _refine_arc_endpoint(mu_bar, t, thetas[j], thetas[j + 1])
        elif wraps:
            hi = np.pi
        else:
            # run ends at the grid angle pi; endpoint sits in (pi, pi + step)
            end = _refine_arc_endpoint(mu_bar, t, thetas[-1], thetas[-1] + step)
            hi = np.pi
            if end - 2.0 * np.pi > -np.pi:
                sliver = (-np.pi, float(end - 2.0 * np.pi))
        comps.append((float(lo), float(hi)))
        i = j + 1
    if sliver is not None:
        comps.insert(0, sliver)
    return tuple(comps)


def _default_workers():
    try:
        return max(1, int(os.environ.get("FREEBROWN_THREADS", "1")))
    except ValueError:
        return 1


def multiplicative_profile(
    mu: SpectralMeasure, t: float, n_theta: int, workers=None
) -> MultiplicativeProfile:
    """Profile on a uniform angle grid over (-pi, pi].

    Takes the spectral measure of the unitary itself; the reflection is built
    internally and the support region is {r_t(theta) < r < 1/r_t(theta)}.
    """
    mu.require_circle("multiplicative_profile")
    _check_time(t)
    if n_theta < 16:
        raise ValidationError("n_theta must be >= 16")
    mu_bar = reflect_circle_measure(mu)
    thetas = np.linspace(-np.pi, np.pi, n_theta + 1)[1:]

    workers = _default_workers() if workers is None else max(1, int(workers))

    def rows_for(chunk):
        r = r_t_array(mu_bar, t, chunk)
        phi = np.empty_like(chunk)
        w = np.zeros_like(chunk)
        hit = r < 1.0
        if np.any(hit):
            phi_in, w_in, _ = _angle_rows(mu_bar, t, chunk[hit], r[hit])
            phi[hit] = phi_in
            w[hit] = w_in
        if np.any(~hit):
            # boundary continuation of the angle map on the unit circle
            phi[~hit] = _phi_only(mu_bar, t, chunk[~hit], r[~hit])
        return r, phi, w

    if workers == 1 or n_theta < 4 * workers:
        r, phi, w = rows_for(thetas)
    else:
        chunks = np.array_split(thetas, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(rows_for, chunks))
        r = np.concatenate([p[0] for p in parts])
        phi = np.concatenate([p[1] for p in parts])
        w = np.concatenate([p[2] for p in parts])

    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(r < 1.0, -2.0 * np.log(r) * w, 0.0)
    comps = _u_components(mu_bar, t, thetas, r < 1.0)
    return MultiplicativeProfile(mu, mu_bar, t, thetas, r, phi, w, a, comps)


def mult_law_density(mu: SpectralMeasure, t: float, theta: float):
    """Point (phi(theta), -log r_t(theta)/(pi t)) on the law of the unitary
    flow; defined for theta in U_t."""
    mu.require_circle("mult_law_density")
    mu_bar = reflect_circle_measure(mu)
    r = r_t(mu_bar, t, theta)
    if r >= 1.0:
        raise OutsideU(f"theta={theta} not in U_t")
    phi, _, _ = _angle_rows(mu_bar, t, np.array([float(theta)]), np.array([r]))
    return float(phi[0]), float(-np.log(r) / (np.pi * t))


def arg_marginal(profile: MultiplicativeProfile) -> np.ndarray:
    """Rows (theta, a_t(theta)) of the argument marginal a_t = -2 log(r_t) w_t."""
    return np.column_stack((profile.thetas, profile.arg_density))


def _mass_integrand(mu_bar, t):
    target = 1.0 / t

    def f(th):
        r = r_t_array(mu_bar, t, th)
        out = np.zeros_like(th)
        hit = r < 1.0
        if np.any(hit):
            _, w, _ = _angle_rows(mu_bar, t, th[hit], r[hit])
            out[hit] = -2.0 * np.log(r[hit]) * w
        return out

    return f


def total_mass(profile: MultiplicativeProfile) -> float:
    """int -2 log(r_t) w_t dtheta over the arcs (equals int p_t dphi; 1)."""
    if profile.measure_bar.is_haar:
        return 1.0  # -2 log(e^{-t/2}) * 1/(2 pi t) * 2 pi exactly
    f = _mass_integrand(profile.measure_bar, profile.t)
    mass = 0.0
    for lo, hi in profile.u_components:
        mass += float(integrate_adaptive(f, lo, hi, rel_tol=1e-8))
    return mass


# -- Haar annulus cross-check --------------------------------------------------


@dataclass(frozen=True)
class AnnulusCheck:
    """Haar-case radial CDF comparison: S-transform route vs density route."""

    t: float
    radii: np.ndarray
    cdf_stransform: np.ndarray
    cdf_radial: np.ndarray
    max_discrepancy: float


def annulus_radial_cdf(t: float, r: float) -> float:
    """Closed-form radial CDF 1 + S^{-1}(r^-2) = 1/2 + log(r)/t on the
    annulus [e^{-t/2}, e^{t/2}], clipped to [0, 1] outside."""
    _check_time(t)
    return float(np.clip(0.5 + np.log(r) / t, 0.0, 1.0))


def haar_annulus_check(t: float, n_radii: int = 33) -> AnnulusCheck:
    """Compare the Haagerup-Larsen CDF against the numeric radial integral
    of the annulus density 1/(2 pi t rho^2) (area element 2 pi rho drho)."""
    _check_time(t)
    r_in, r_out = np.exp(-0.5 * t), np.exp(0.5 * t)
    radii = np.linspace(r_in, r_out, n_radii)
    cdf_s = np.array([annulus_radial_cdf(t, r) for r in radii])

    def dens(rho):
        return (1.0 / (2.0 * np.pi * t * rho**2)) * 2.0 * np.pi * rho

    cdf_num = np.zeros_like(radii)
    for i, r in enumerate(radii):
        if r > r_in:
            cdf_num[i] = float(
                integrate_adaptive(dens, r_in, float(r), rel_tol=1e-13, abs_floor=1e-15)
            )
    disc = float(np.max(np.abs(cdf_s - cdf_num)))
    return AnnulusCheck(t, radii, cdf_s, cdf_num, disc)


# -- file output ----------------------------------------------------------------


def write_profile_csv(profile: MultiplicativeProfile, path):
    """CSV rows theta,r,phi,w,arg_density at 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("theta,r,phi,w,arg_density\n")
        for th, r, phi, w, a in profile:
            fh.write(f"{th:.17g},{r:.17g},{phi:.17g},{w:.17g},{a:.17g}\n")


def arcs_sidecar(profile: MultiplicativeProfile) -> dict:
    return {"t": profile.t, "arcs": [[lo, hi] for lo, hi in profile.u_components]}
