"""Double-cone geometry in wavenumber space and the orthogonal split.

A cone is a direction (unit axis) and a half angle.  Angles are always
measured between the line through a lattice vector and the line through
the axis, so a mode and its negation get the same angle and a Hermitian
field is cone-supported together with its conjugate modes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConeError
from .spectral import SpectralField, SpectralGrid


@dataclass(frozen=True)
class Cone:
    """Axis direction and half angle theta0 in (0, pi/2]."""

    axis: tuple[float, float, float]
    half_angle: float

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        norm = float(np.linalg.norm(a))
        if not norm > 0:
            raise ConeError("cone axis must be a nonzero direction")
        object.__setattr__(self, "axis", tuple(a / norm))
        if not (0.0 < self.half_angle <= np.pi / 2 + 1e-12):
            raise ConeError(
                f"half angle must lie in (0, pi/2], got {self.half_angle}"
            )

    @property
    def axis_array(self) -> np.ndarray:
        return np.asarray(self.axis, dtype=float)


def cone_angle(xi, cone: Cone) -> float | np.ndarray:
    """Line angle arccos(|xi.axis| / |xi|), batched over a trailing-3 array."""
    v = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(v, axis=-1)
    if np.ndim(norm) == 0 and norm == 0.0:
        raise ConeError("cone_angle undefined for the zero vector")
    dot = np.abs(v @ cone.axis_array)
    cosang = np.clip(dot / np.where(norm == 0.0, 1.0, norm), 0.0, 1.0)
    ang = np.arccos(cosang)
    return float(ang) if np.ndim(ang) == 0 else ang


def cone_contains(xi, cone: Cone) -> bool | np.ndarray:
    """Membership of the double cone; the zero mode counts as inside."""
    v = np.asarray(xi, dtype=float)
    norm = np.linalg.norm(v, axis=-1)
    inside = np.where(norm == 0.0, True, _angle_leq(v, norm, cone))
    return bool(inside) if np.ndim(inside) == 0 else inside


def _angle_leq(v, norm, cone):
    dot = np.abs(v @ cone.axis_array)
    cosang = dot / np.where(norm == 0.0, 1.0, norm)
    return cosang >= np.cos(cone.half_angle) - 1e-15


def lattice_membership(grid: SpectralGrid, cone: Cone) -> np.ndarray:
    """Boolean (n, n, n) mask of lattice modes inside the double cone."""
    kx, ky, kz = grid.k_axes()
    ax = cone.axis_array
    dot = np.abs(kx * ax[0] + ky * ax[1] + kz * ax[2])
    norm = np.sqrt(grid.k_squared())
    with np.errstate(invalid="ignore", divide="ignore"):
        cosang = dot / norm
    mask = cosang >= np.cos(cone.half_angle) - 1e-15
    mask[0, 0, 0] = True
    return mask


def cone_leakage(f: SpectralField, cone: Cone) -> float:
    """Fraction of the field energy on modes outside the double cone."""
    mask = lattice_membership(f.grid, cone)
    e = np.abs(f.coeffs) ** 2
    total = float(np.sum(e))
    if total == 0.0:
        return 0.0
    outside = float(np.sum(e[..., ~mask]))
    return outside / total


def support_modes(f: SpectralField, rel_tol: float = 1e-13) -> np.ndarray:
    """Storage indices (rows of 3) of modes carrying relative amplitude."""
    amp = np.abs(f.coeffs)
    while amp.ndim > 3:
        amp = amp.max(axis=0)
    cut = rel_tol * float(amp.max()) if amp.max() > 0 else np.inf
    return np.argwhere(amp > cut)


def max_support_angle(f: SpectralField, cone: Cone, rel_tol: float = 1e-13) -> float:
    """Largest line angle from the cone axis over the supported modes."""
    idx = support_modes(f, rel_tol)
    if idx.size == 0:
        return 0.0
    freqs = f.grid.freqs()
    kvecs = freqs[idx] / f.grid.box_scale
    nonzero = np.linalg.norm(kvecs, axis=1) > 0
    if not np.any(nonzero):
        return 0.0
    return float(np.max(cone_angle(kvecs[nonzero], cone)))


def support_radius(f: SpectralField, rel_tol: float = 1e-13) -> float:
    """Largest |k| over the supported modes."""
    idx = support_modes(f, rel_tol)
    if idx.size == 0:
        return 0.0
    freqs = f.grid.freqs()
    kvecs = freqs[idx] / f.grid.box_scale
    return float(np.max(np.linalg.norm(kvecs, axis=1)))


def split_eta(eta, w):
    """Orthogonal split of eta along w: a parallel to w, b = eta - a.

    Returns (a, b) with a = (eta.w / |w|^2) w, so |b| equals
    |eta| sin(angle(eta, w)) and a.b = 0 exactly up to rounding.
    """
    eta = np.asarray(eta, dtype=float)
    w = np.asarray(w, dtype=float)
    w2 = float(w @ w)
    if w2 == 0.0:
        raise ConeError("split direction w must be nonzero")
    a = (float(eta @ w) / w2) * w
    return a, eta - a
