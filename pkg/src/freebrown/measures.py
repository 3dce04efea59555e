"""Atomic spectral measures on the line or the unit circle, and their transforms.

A measure is a finite list of atoms ``(location, weight)`` with weights summing
to one; the Haar measure on the circle is the single closed-form special case.
Continuous inputs are admitted only as user-supplied atomic discretizations,
which keeps every integral in the package an exact finite sum.

Transforms implemented here:

* Cauchy transform ``G(z) = sum_j w_j / (z - x_j)`` (real-atomic),
* moment generating function ``psi(z) = sum_j w_j xi_j z / (1 - xi_j z)``
  with ``xi_j = exp(i theta_j)`` (circle),
* ``eta(z) = psi(z) / (1 + psi(z))``,
* reflection ``theta_j -> -theta_j`` (distribution of the adjoint unitary).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDenominator,
    InvalidMeasure,
    PoleAtAtom,
    WrongSupport,
)

REAL_ATOMIC = "real-atomic"
CIRCLE_ATOMIC = "circle-atomic"
HAAR = "haar"

#: merge tolerance for duplicate atom locations
DEDUP_TOL = 1e-12
#: weights must sum to 1 within this at construction time
WEIGHT_SUM_TOL = 1e-12
#: file loader renormalizes weight sums within this window, rejects beyond
FILE_WEIGHT_TOL = 1e-6
#: evaluation this close to a pole raises PoleAtAtom
POLE_TOL = 1e-14


def wrap_angle(theta):
    """Normalize an angle (array or scalar) to (-pi, pi]."""
    out = np.remainder(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    out = np.where(out == -np.pi, np.pi, out)
    if np.ndim(theta) == 0:
        return float(out)
    return out


def _dedup(locations, weights):
    """Sort atoms and merge locations closer than DEDUP_TOL (weights add)."""
    order = np.argsort(locations, kind="stable")
    locs = locations[order]
    ws = weights[order]
    out_l, out_w = [], []
    for x, w in zip(locs, ws):
        if out_l and abs(x - out_l[-1]) <= DEDUP_TOL:
            out_w[-1] += w
        else:
            out_l.append(x)
            out_w.append(w)
    return np.array(out_l), np.array(out_w)


@dataclass(frozen=True)
class SpectralMeasure:
    """Atomic probability measure on R or on the unit circle, or Haar.

    ``locations`` holds real points (real-atomic) or angles in (-pi, pi]
    (circle-atomic); both arrays are empty for the Haar kind. Instances are
    immutable and safe to share across threads.
    """

    kind: str
    locations: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.kind not in (REAL_ATOMIC, CIRCLE_ATOMIC, HAAR):
            raise InvalidMeasure(f"unknown measure kind {self.kind!r}")
        locs = np.asarray(self.locations, dtype=float)
        ws = np.asarray(self.weights, dtype=float)
        if self.kind == HAAR:
            if locs.size or ws.size:
                raise InvalidMeasure("haar kind carries no atoms")
        else:
            if locs.ndim != 1 or ws.shape != locs.shape or locs.size == 0:
                raise InvalidMeasure("atoms must be parallel nonempty 1-d arrays")
            if not (np.all(np.isfinite(locs)) and np.all(np.isfinite(ws))):
                raise InvalidMeasure("non-finite atom data")
            if np.any(ws < 0):
                raise InvalidMeasure("negative weight")
            total = ws.sum()
            if abs(total - 1.0) > WEIGHT_SUM_TOL:
                raise InvalidMeasure(
                    f"weights sum to {total!r}, not 1 within {WEIGHT_SUM_TOL}"
                )
            if self.kind == CIRCLE_ATOMIC:
                locs = wrap_angle(locs)
            locs, ws = _dedup(locs, ws)
            # zero-weight atoms carry no mass but would inject spurious poles
            keep = ws > 0.0
            locs, ws = locs[keep], ws[keep]
            if locs.size == 0:
                raise InvalidMeasure("measure has no mass")
            ws = ws / ws.sum()
        locs.setflags(write=False)
        ws.setflags(write=False)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", ws)

    # -- constructors ------------------------------------------------------

    @classmethod
    def real_atomic(cls, locations, weights):
        return cls(REAL_ATOMIC, np.asarray(locations, float), np.asarray(weights, float))

    @classmethod
    def circle_atomic(cls, angles, weights):
        return cls(CIRCLE_ATOMIC, np.asarray(angles, float), np.asarray(weights, float))

    @classmethod
    def haar(cls):
        return cls(HAAR, np.empty(0), np.empty(0))

    @classmethod
    def point_mass(cls, x):
        return cls.real_atomic([x], [1.0])

    # -- predicates --------------------------------------------------------

    @property
    def is_haar(self):
        return self.kind == HAAR

    @property
    def on_circle(self):
        return self.kind in (CIRCLE_ATOMIC, HAAR)

    def require_real(self, what="operation"):
        if self.kind != REAL_ATOMIC:
            raise WrongSupport(f"{what} needs a real-atomic measure, got {self.kind}")

    def require_circle(self, what="operation"):
        if not self.on_circle:
            raise WrongSupport(f"{what} needs a circle measure, got {self.kind}")

    @property
    def unit_atoms(self):
        """Atoms as points exp(i theta_j) on the unit circle."""
        self.require_circle()
        return np.exp(1j * self.locations)


# -- transforms -------------------------------------------------------------


def cauchy_transform(mu: SpectralMeasure, z: complex) -> complex:
    """G_mu(z) = sum_j w_j / (z - x_j); maps C+ into C-."""
    mu.require_real("cauchy_transform")
    z = complex(z)
    d = z - mu.locations
    if np.min(np.abs(d)) <= POLE_TOL:
        raise PoleAtAtom(f"z={z} sits on an atom of the measure")
    return complex(np.sum(mu.weights / d))


def moment_generator_psi(mu: SpectralMeasure, z: complex) -> complex:
    """psi_mu(z) = sum_j w_j xi_j z / (1 - xi_j z); identically 0 for Haar."""
    mu.require_circle("moment_generator_psi")
    if mu.is_haar:
        return 0.0 + 0.0j
    z = complex(z)
    xi = mu.unit_atoms
    d = 1.0 - xi * z
    if np.min(np.abs(d)) <= POLE_TOL:
        raise PoleAtAtom(f"z={z} sits on a pole of psi")
    return complex(np.sum(mu.weights * xi * z / d))


def eta_transform(mu: SpectralMeasure, z: complex) -> complex:
    """eta = psi / (1 + psi)."""
    psi = moment_generator_psi(mu, z)
    denom = 1.0 + psi
    if abs(denom) < POLE_TOL:
        raise DegenerateDenominator(f"1 + psi vanished at z={z}")
    return psi / denom


def reflect_circle_measure(mu: SpectralMeasure) -> SpectralMeasure:
    """Distribution of the adjoint: atom angles negated, Haar fixed."""
    mu.require_circle("reflect_circle_measure")
    if mu.is_haar:
        return mu
    return SpectralMeasure.circle_atomic(wrap_angle(-mu.locations), mu.weights)


# -- file format -------------------------------------------------------------
#
# {"kind": "real-atomic" | "circle-atomic" | "haar",
#  "atoms": [{"x" | "theta": number, "w": number}, ...]}


def measure_from_dict(data) -> SpectralMeasure:
    if not isinstance(data, dict) or "kind" not in data:
        raise InvalidMeasure("measure document must be an object with a 'kind'")
    kind = data["kind"]
    if kind == HAAR:
        if data.get("atoms"):
            raise InvalidMeasure("haar measure must not list atoms")
        return SpectralMeasure.haar()
    if kind not in (REAL_ATOMIC, CIRCLE_ATOMIC):
        raise InvalidMeasure(f"unknown measure kind {kind!r}")
    key = "x" if kind == REAL_ATOMIC else "theta"
    atoms = data.get("atoms")
    if not atoms:
        raise InvalidMeasure("atomic measure needs a nonempty 'atoms' list")
    try:
        locs = np.array([float(a[key]) for a in atoms])
        ws = np.array([float(a["w"]) for a in atoms])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidMeasure(f"malformed atom entry: {exc}") from exc
    total = ws.sum()
    if not math.isfinite(total) or abs(total - 1.0) > FILE_WEIGHT_TOL:
        raise InvalidMeasure(
            f"atom weights sum to {total!r}; must be within {FILE_WEIGHT_TOL} of 1"
        )
    ws = ws / total
    return SpectralMeasure(kind, locs, ws)


def measure_to_dict(mu: SpectralMeasure) -> dict:
    if mu.is_haar:
        return {"kind": HAAR, "atoms": []}
    key = "x" if mu.kind == REAL_ATOMIC else "theta"
    return {
        "kind": mu.kind,
        "atoms": [
            {key: float(x), "w": float(w)}
            for x, w in zip(mu.locations, mu.weights)
        ],
    }


def load_measure(path) -> SpectralMeasure:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidMeasure(f"{path}: not valid JSON ({exc})") from exc
    return measure_from_dict(data)
