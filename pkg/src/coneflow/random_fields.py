"""Seeded random fields with the structural constraints the model assumes.

Used by the randomized verification suites and the test battery.  All
generators take an explicit numpy Generator so runs are reproducible.
"""

from __future__ import annotations

import numpy as np

from .cones import Cone, lattice_membership
from .errors import FieldError
from .spectral import (
    SpectralField,
    SpectralGrid,
    hermitian_symmetrize,
    project_coeffs,
)


def _lead_shape(rank: str):
    try:
        return {"scalar": (), "vector": (3,), "tensor": (3, 3)}[rank]
    except KeyError:
        raise FieldError(f"unknown rank {rank!r}") from None


def _radius_mask(grid: SpectralGrid, max_radius: float | None) -> np.ndarray:
    if max_radius is None:
        return np.ones(grid.shape, dtype=bool)
    return grid.k_squared() <= max_radius**2 + 1e-12


def _nyquist_mask(grid: SpectralGrid) -> np.ndarray:
    """True away from the three self-paired +n/2 planes."""
    keep = np.ones(grid.shape, dtype=bool)
    j = grid.n // 2
    keep[j, :, :] = False
    keep[:, j, :] = False
    keep[:, :, j] = False
    return keep


def random_field(
    grid: SpectralGrid,
    rank: str,
    rng: np.random.Generator,
    max_radius: float | None = None,
    amplitude: float = 1.0,
    hermitian: bool = True,
    nyquist_free: bool = True,
    mean_free: bool = True,
) -> SpectralField:
    """Random band-limited field, Hermitian (real samples) by default."""
    shape = _lead_shape(rank) + grid.shape
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    mask = _radius_mask(grid, max_radius)
    if nyquist_free:
        mask = mask & _nyquist_mask(grid)
    c = c * mask
    field = SpectralField(grid, c)
    if hermitian:
        field = hermitian_symmetrize(field)
    c = field.coeffs.copy()
    if mean_free:
        c[..., 0, 0, 0] = 0.0
    norm = np.sqrt(np.sum(np.abs(c) ** 2))
    if norm > 0:
        c *= amplitude / norm
    return SpectralField(grid, c)


def random_solenoidal(
    grid: SpectralGrid,
    rng: np.random.Generator,
    max_radius: float | None = None,
    amplitude: float = 1.0,
) -> SpectralField:
    """Random divergence-free Hermitian velocity field."""
    f = random_field(grid, "vector", rng, max_radius=max_radius, amplitude=1.0)
    c = project_coeffs(f.coeffs, grid)
    norm = np.sqrt(np.sum(np.abs(c) ** 2))
    if norm > 0:
        c = c * (amplitude / norm)
    return SpectralField(grid, c)


def _project_columns(c: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Per mode, make every column of the tensor orthogonal to k.

    Enforces k_i c_ij = 0, the spectral form of a divergence-free
    transpose.
    """
    out = c.copy()
    for j in range(3):
        out[:, j] = project_coeffs(np.ascontiguousarray(out[:, j]), grid)
    return out


def random_div_tfree_tensor(
    grid: SpectralGrid,
    rng: np.random.Generator,
    max_radius: float | None = None,
    amplitude: float = 1.0,
    cone: Cone | None = None,
) -> SpectralField:
    """Random Hermitian tensor with div(E^T) = 0 exactly per mode.

    Optionally restricted to a double cone in wavenumber space.
    """
    f = random_field(grid, "tensor", rng, max_radius=max_radius, amplitude=1.0)
    c = f.coeffs.copy()
    if cone is not None:
        mask = lattice_membership(grid, cone)
        c = c * mask
        c[..., 0, 0, 0] = 0.0
    c = _project_columns(c, grid)
    norm = np.sqrt(np.sum(np.abs(c) ** 2))
    if norm > 0:
        c *= amplitude / norm
    return SpectralField(grid, c)


def random_cone_field(
    grid: SpectralGrid,
    rank: str,
    cone: Cone,
    rng: np.random.Generator,
    max_radius: float | None = None,
    amplitude: float = 1.0,
    hermitian: bool = True,
) -> SpectralField:
    """Random field supported on the double cone (zero mode excluded)."""
    f = random_field(grid, rank, rng, max_radius=max_radius, amplitude=1.0,
                     hermitian=hermitian)
    c = f.coeffs * lattice_membership(grid, cone)
    c[..., 0, 0, 0] = 0.0
    norm = np.sqrt(np.sum(np.abs(c) ** 2))
    if norm > 0:
        c = c * (amplitude / norm)
    return SpectralField(grid, c)
