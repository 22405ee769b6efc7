"""Spectral grid, fields, exact dealiased products, projection, norms.

Fields live on a periodic cube of side 2*pi*L sampled at n points per
dimension.  A field is stored as the complex amplitudes c(k) of the
Fourier series f(x) = sum_k c(k) exp(i k.x), with k running over the
signed integer lattice divided by L.  With this normalization the L2
norm of f (root mean square over the box) equals the root sum of
squares of the coefficient moduli, so Parseval sums need no volume
factors.

Quadratic products are computed by zero padding to a grid of
pad_factor*n points per dimension, multiplying pointwise in physical
space and truncating back to the resolved band.  For pad_factor >= 3/2
the result equals the exact discrete convolution of the two coefficient
sets truncated to the band, with no aliasing.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

from .errors import FieldError, GridError

RANKS = ("scalar", "vector", "tensor")

_WORKERS = None


def set_fft_workers(n: int | None) -> None:
    """Set the worker count passed to the FFT backend (None = serial)."""
    global _WORKERS
    _WORKERS = n


def fft_workers():
    return _WORKERS


_env_threads = os.environ.get("CONEFLOW_THREADS", "").strip()
if _env_threads:
    set_fft_workers(max(1, int(_env_threads)))


@lru_cache(maxsize=64)
def signed_freqs(n: int) -> np.ndarray:
    """Signed integer frequency for each FFT index.

    Standard FFT ordering with negative frequencies in the upper half,
    except that the self-paired index n/2 is labeled +n/2, so the
    per-dimension frequencies are the integers -n/2+1 ... n/2.
    """
    j = np.arange(n)
    out = np.where(j <= n // 2, j, j - n)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class SpectralGrid:
    """Cubic spectral grid: n modes per dimension on a box of side 2*pi*L."""

    n: int
    box_scale: float = 1.0
    pad_factor: float = 2.0

    def __post_init__(self):
        if self.n < 2 or self.n % 2 != 0:
            raise GridError(f"n must be even and >= 2, got {self.n}")
        if not (self.box_scale > 0):
            raise GridError(f"box_scale must be positive, got {self.box_scale}")
        if self.pad_factor < 1.5:
            raise GridError(
                f"pad_factor must be >= 3/2 for exact products, got {self.pad_factor}"
            )
        m = self.pad_factor * self.n
        if abs(m - round(m)) > 1e-9 or round(m) % 2 != 0:
            raise GridError(
                f"pad_factor*n must be an even integer, got {self.pad_factor}*{self.n}"
            )

    @property
    def padded_n(self) -> int:
        return int(round(self.pad_factor * self.n))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    def freqs(self) -> np.ndarray:
        """Signed integer frequencies along one dimension."""
        return signed_freqs(self.n)

    def k1(self) -> np.ndarray:
        """Physical wavenumbers along one dimension (integers / L)."""
        return signed_freqs(self.n) / self.box_scale

    def k_axes(self):
        """Wavenumber arrays broadcastable to the (n, n, n) lattice."""
        k = self.k1()
        return k[:, None, None], k[None, :, None], k[None, None, :]

    def k_squared(self) -> np.ndarray:
        kx, ky, kz = self.k_axes()
        return kx * kx + ky * ky + kz * kz

    def wavenumber_of(self, index: tuple[int, int, int]) -> np.ndarray:
        """Signed wavenumber triple of a storage index triple."""
        f = signed_freqs(self.n)
        i, j, k = index
        if not all(0 <= m < self.n for m in (i, j, k)):
            raise GridError(f"index {index} outside [0, {self.n})^3")
        return np.array([f[i], f[j], f[k]], dtype=float) / self.box_scale

    def index_of(self, freq_triple) -> tuple[int, int, int]:
        """Storage index of a signed integer frequency triple (must be in band)."""
        n = self.n
        out = []
        for m in freq_triple:
            m = int(round(m))
            if not (-n // 2 + 1 <= m <= n // 2):
                raise GridError(f"frequency {m} outside resolved band of n={n}")
            out.append(m % n)
        return tuple(out)


def _rank_of_shape(shape, n) -> str:
    if shape == (n, n, n):
        return "scalar"
    if shape == (3, n, n, n):
        return "vector"
    if shape == (3, 3, n, n, n):
        return "tensor"
    raise FieldError(f"coefficient shape {shape} not scalar/vector/tensor on n={n}")


class SpectralField:
    """Immutable container for Parseval-normalized spectral coefficients."""

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid: SpectralGrid, coeffs: np.ndarray, copy: bool = False):
        coeffs = np.asarray(coeffs)
        _rank_of_shape(coeffs.shape, grid.n)
        if coeffs.dtype != np.complex128:
            coeffs = coeffs.astype(np.complex128)
        elif copy:
            coeffs = coeffs.copy()
        coeffs.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coeffs", coeffs)

    def __setattr__(self, *a):
        raise AttributeError("SpectralField is immutable")

    @property
    def rank(self) -> str:
        return _rank_of_shape(self.coeffs.shape, self.grid.n)

    @classmethod
    def zeros(cls, grid: SpectralGrid, rank: str) -> "SpectralField":
        if rank not in RANKS:
            raise FieldError(f"unknown rank {rank!r}")
        lead = {"scalar": (), "vector": (3,), "tensor": (3, 3)}[rank]
        return cls(grid, np.zeros(lead + grid.shape, dtype=np.complex128))

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.grid, coeffs)

    def component(self, *idx) -> "SpectralField":
        """Scalar component field (one index for vector, two for tensor)."""
        return SpectralField(self.grid, self.coeffs[idx])

    def zero_mode(self) -> np.ndarray:
        return np.asarray(self.coeffs[..., 0, 0, 0])

    # -- value semantics -------------------------------------------------
    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            raise FieldError("use dealiased_product for field*field")
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    # -- norms ------------------------------------------------------------
    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def sobolev_norm(self, s: int) -> float:
        return sobolev_norm(self, s)

    def hdot_half_norm(self) -> float:
        return hdot_half_norm(self)


def _check_same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise GridError(f"grid mismatch: {a.grid} vs {b.grid}")


def wavenumber_of(index, grid: SpectralGrid) -> np.ndarray:
    return grid.wavenumber_of(index)


# ---------------------------------------------------------------------------
# transforms on the unpadded grid
# ---------------------------------------------------------------------------

def forward_transform(samples: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Collocation samples -> series coefficients c(k) (batched over leading axes)."""
    return sfft.fftn(samples, axes=(-3, -2, -1), workers=_WORKERS) / grid.n**3


def inverse_transform(coeffs: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Series coefficients -> complex samples on the n^3 collocation lattice."""
    return sfft.ifftn(coeffs, axes=(-3, -2, -1), workers=_WORKERS) * grid.n**3


def field_from_samples(grid: SpectralGrid, samples: np.ndarray) -> SpectralField:
    return SpectralField(grid, forward_transform(np.asarray(samples), grid))


def to_physical(field: SpectralField) -> np.ndarray:
    """Complex collocation samples of the field on its own grid."""
    return inverse_transform(field.coeffs, field.grid)


def to_real_physical(field: SpectralField, tol: float = 1e-12) -> np.ndarray:
    """Real collocation samples; raises if the field is not Hermitian."""
    if not is_hermitian(field, tol):
        raise FieldError("field is not Hermitian symmetric; samples are complex")
    return to_physical(field).real


# ---------------------------------------------------------------------------
# Hermitian symmetry (realness of collocation samples)
# ---------------------------------------------------------------------------

def reflect_coeffs(c: np.ndarray) -> np.ndarray:
    """Coefficient array evaluated at the negated lattice index, axis-wise."""
    out = c
    for ax in (-3, -2, -1):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def hermitian_defect(field: SpectralField) -> float:
    """Max modulus of c(k) - conj(c(-k)) over the self-mapped index lattice."""
    c = field.coeffs
    return float(np.max(np.abs(c - np.conj(reflect_coeffs(c)))))


def is_hermitian(field: SpectralField, tol: float = 1e-12) -> bool:
    scale = float(np.max(np.abs(field.coeffs))) if field.coeffs.size else 0.0
    return hermitian_defect(field) <= tol * max(scale, 1e-300)


def hermitian_symmetrize(field: SpectralField) -> SpectralField:
    """Nearest coefficient set with real collocation samples."""
    c = field.coeffs
    return field.with_coeffs(0.5 * (c + np.conj(reflect_coeffs(c))))


def nyquist_energy(field: SpectralField) -> float:
    """Energy sitting on the three +n/2 planes (self-paired under negation)."""
    j = field.grid.n // 2
    c = field.coeffs
    total = 0.0
    for ax_idx in range(3):
        sl = [slice(None)] * c.ndim
        sl[c.ndim - 3 + ax_idx] = j
        total += float(np.sum(np.abs(c[tuple(sl)]) ** 2))
    return total


# ---------------------------------------------------------------------------
# padded transforms and dealiased products
# ---------------------------------------------------------------------------

@lru_cache(maxsize=64)
def _band_index_map(n: int, m: int) -> np.ndarray:
    """Index of each band frequency inside the padded array of size m."""
    return signed_freqs(n) % m


def _axis_blocks(n: int, m: int):
    """(band slice, padded slice) pairs per axis: nonneg+Nyquist, negative.

    Both frequency groups are storage-contiguous, so pad/unpad reduce to
    eight block copies instead of fancy-index gathers.
    """
    a = n // 2 + 1
    b = n - a
    return ((slice(0, a), slice(0, a)), (slice(a, n), slice(m - b, m)))


def pad_spectrum(coeffs: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Embed band coefficients into the padded lattice (batched)."""
    n, m = grid.n, grid.padded_n
    out = np.zeros(coeffs.shape[:-3] + (m, m, m), dtype=np.complex128)
    blocks = _axis_blocks(n, m)
    for sx, dx in blocks:
        for sy, dy in blocks:
            for sz, dz in blocks:
                out[..., dx, dy, dz] = coeffs[..., sx, sy, sz]
    return out


def unpad_spectrum(padded: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Truncate padded-lattice coefficients back to the resolved band."""
    n, m = grid.n, grid.padded_n
    out = np.empty(padded.shape[:-3] + (n, n, n), dtype=np.complex128)
    blocks = _axis_blocks(n, m)
    for sx, dx in blocks:
        for sy, dy in blocks:
            for sz, dz in blocks:
                out[..., sx, sy, sz] = padded[..., dx, dy, dz]
    return out


def pad_to_physical_complex(coeffs: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    m = grid.padded_n
    return sfft.ifftn(pad_spectrum(coeffs, grid), axes=(-3, -2, -1),
                      workers=_WORKERS) * m**3


def physical_to_band_complex(samples: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    m = grid.padded_n
    spec = sfft.fftn(samples, axes=(-3, -2, -1), workers=_WORKERS)
    return unpad_spectrum(spec, grid) / m**3


def pad_to_physical_real(coeffs: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Real padded samples of a Hermitian field via the half-spectrum transform.

    Exact for Hermitian coefficient sets.  Content on the +n/2 planes is
    interpreted with its implied conjugate partner, which matches the
    realness convention of the collocation samples.
    """
    n, m = grid.n, grid.padded_n
    a = n // 2 + 1
    spec = np.zeros(coeffs.shape[:-3] + (m, m, m // 2 + 1), dtype=np.complex128)
    blocks = _axis_blocks(n, m)
    for sx, dx in blocks:
        for sy, dy in blocks:
            spec[..., dx, dy, 0:a] = coeffs[..., sx, sy, 0:a]
    return sfft.irfftn(spec, s=(m, m, m), axes=(-3, -2, -1), workers=_WORKERS) * m**3


def physical_to_band_real(samples: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Band coefficients of real padded samples (inverse of the real path)."""
    n, m = grid.n, grid.padded_n
    a = n // 2 + 1
    b = n - a
    spec = sfft.rfftn(samples, axes=(-3, -2, -1), workers=_WORKERS) / m**3
    out = np.empty(samples.shape[:-3] + (n, n, n), dtype=np.complex128)
    blocks = _axis_blocks(n, m)
    # non-negative k3 read directly from the half spectrum
    for sx, dx in blocks:
        for sy, dy in blocks:
            out[..., sx, sy, 0:a] = spec[..., dx, dy, 0:a]
    # negative k3 reconstructed from Hermitian symmetry of a real signal:
    # out(jx,jy,jz) = conj(spec(-jx, -jy, -jz)), index negation mod m.
    # Index negation splits each axis into three contiguous strided reads.
    neg_pairs = (
        (slice(0, 1), slice(0, 1)),
        (slice(1, a), slice(m - 1, m - a, -1)),
        (slice(a, n), slice(b, 0, -1)),
    )
    for sx, px in neg_pairs:
        for sy, py in neg_pairs:
            np.conjugate(spec[..., px, py, b:0:-1], out=out[..., sx, sy, a:])
    return out


def _hermitian_realpath_ok(field: SpectralField, tol: float = 1e-13) -> bool:
    # The half-spectrum transform splits unpaired +n/2 content into an
    # implied +-n/2 pair, which changes the represented polynomial; the
    # real path is therefore reserved for Nyquist-free Hermitian fields,
    # where it agrees with the complex path to rounding.
    if not is_hermitian(field, tol):
        return False
    scale = float(np.max(np.abs(field.coeffs))) if field.coeffs.size else 0.0
    return nyquist_energy(field) <= (tol * max(scale, 1e-300)) ** 2


def dealiased_product(a: SpectralField, b: SpectralField) -> SpectralField:
    """Exact band-truncated product of two fields.

    Equal ranks multiply componentwise; a scalar multiplies any rank.
    The coefficients of the result equal the exact discrete convolution
    of the two coefficient sets truncated to the resolved band.
    """
    _check_same_grid(a, b)
    ra, rb = a.rank, b.rank
    if not (ra == rb or ra == "scalar" or rb == "scalar"):
        raise FieldError(f"rank combination {ra}*{rb} not defined componentwise")
    grid = a.grid
    if _hermitian_realpath_ok(a) and _hermitian_realpath_ok(b):
        pa = pad_to_physical_real(a.coeffs, grid)
        pb = pad_to_physical_real(b.coeffs, grid)
        return SpectralField(grid, physical_to_band_real(pa * pb, grid))
    pa = pad_to_physical_complex(a.coeffs, grid)
    pb = pad_to_physical_complex(b.coeffs, grid)
    return SpectralField(grid, physical_to_band_complex(pa * pb, grid))


# ---------------------------------------------------------------------------
# Leray projection
# ---------------------------------------------------------------------------

def project_coeffs(coeffs: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Divergence-free projection v - k (k.v)/|k|^2 applied per mode."""
    if coeffs.shape[:-3] != (3,):
        raise FieldError("Leray projection expects a vector field")
    kx, ky, kz = grid.k_axes()
    k2 = grid.k_squared()
    with np.errstate(divide="ignore", invalid="ignore"):
        kdotv = (kx * coeffs[0] + ky * coeffs[1] + kz * coeffs[2]) / k2
    kdotv[0, 0, 0] = 0.0  # zero mode passes through unchanged
    out = coeffs.copy()
    out[0] -= kx * kdotv
    out[1] -= ky * kdotv
    out[2] -= kz * kdotv
    return out


def leray_project(field: SpectralField) -> SpectralField:
    return field.with_coeffs(project_coeffs(field.coeffs, field.grid))


def divergence_linf(field: SpectralField) -> float:
    """Max modulus of the spectral divergence coefficients of a vector field."""
    kx, ky, kz = field.grid.k_axes()
    c = field.coeffs
    div = kx * c[0] + ky * c[1] + kz * c[2]
    return float(np.max(np.abs(div)))


# ---------------------------------------------------------------------------
# differential operators (spectral multipliers)
# ---------------------------------------------------------------------------

def partial_coeffs(coeffs: np.ndarray, grid: SpectralGrid, axis: int) -> np.ndarray:
    """d/dx_axis as the multiplier i*k_axis (axis in {0,1,2})."""
    k = grid.k1()
    shape = [1, 1, 1]
    shape[axis] = grid.n
    return coeffs * (1j * k.reshape(shape))


def gradient(field: SpectralField) -> SpectralField:
    """Scalar -> vector (d_j f); vector -> tensor with [i, j] = d_j u_i."""
    c = field.coeffs
    grid = field.grid
    if field.rank == "scalar":
        out = np.stack([partial_coeffs(c, grid, ax) for ax in range(3)])
    elif field.rank == "vector":
        out = np.stack(
            [np.stack([partial_coeffs(c[i], grid, j) for j in range(3)])
             for i in range(3)]
        )
    else:
        raise FieldError("gradient of a tensor field is not provided")
    return SpectralField(grid, out)


def divergence(field: SpectralField) -> SpectralField:
    """Vector -> scalar sum_j d_j u_j; tensor -> vector [i] = sum_j d_j F_ij."""
    c = field.coeffs
    grid = field.grid
    if field.rank == "vector":
        out = sum(partial_coeffs(c[j], grid, j) for j in range(3))
    elif field.rank == "tensor":
        out = np.stack(
            [sum(partial_coeffs(c[i, j], grid, j) for j in range(3))
             for i in range(3)]
        )
    else:
        raise FieldError("divergence needs a vector or tensor field")
    return SpectralField(grid, out)


def laplacian(field: SpectralField) -> SpectralField:
    return field.with_coeffs(field.coeffs * (-field.grid.k_squared()))


def transpose_tensor(field: SpectralField) -> SpectralField:
    if field.rank != "tensor":
        raise FieldError("transpose needs a tensor field")
    return field.with_coeffs(np.swapaxes(field.coeffs, 0, 1))


_LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _LEVI_CIVITA[_i, _j, _k] = 1.0
    _LEVI_CIVITA[_i, _k, _j] = -1.0


def curl_rows(field: SpectralField) -> SpectralField:
    """Row-wise curl of a tensor: [i, m] = eps_mkj d_k E_ij."""
    if field.rank != "tensor":
        raise FieldError("curl_rows needs a tensor field")
    c = field.coeffs
    grid = field.grid
    out = np.zeros_like(c)
    for m in range(3):
        for k in range(3):
            for j in range(3):
                e = _LEVI_CIVITA[m, k, j]
                if e:
                    for i in range(3):
                        out[i, m] += e * partial_coeffs(c[i, j], grid, k)
    return SpectralField(grid, out)


# ---------------------------------------------------------------------------
# norms and inner products
# ---------------------------------------------------------------------------

def sobolev_weight(grid: SpectralGrid, s: int) -> np.ndarray:
    """Multiplier sum_{j=0..s} |k|^(2j) on the lattice."""
    if s < 0 or int(s) != s:
        raise ValueError(f"integer s >= 0 required, got {s}")
    k2 = grid.k_squared()
    w = np.ones_like(k2)
    term = np.ones_like(k2)
    for _ in range(int(s)):
        term = term * k2
        w = w + term
    return w


def weighted_norm(coeffs: np.ndarray, weight: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(coeffs) ** 2 * weight)))


def weighted_inner(a: np.ndarray, b: np.ndarray, weight: np.ndarray) -> float:
    """Real part of the weighted coefficient pairing sum w(k) a(k) conj(b(k))."""
    return float(np.sum((a * np.conj(b)).real * weight))


def sobolev_norm(field: SpectralField, s: int) -> float:
    return weighted_norm(field.coeffs, sobolev_weight(field.grid, s))


def hdot_half_norm(field: SpectralField) -> float:
    return weighted_norm(field.coeffs, np.sqrt(field.grid.k_squared()))


def hdot_norm(field: SpectralField, p: int) -> float:
    """Homogeneous norm with multiplier |k|^(2p)."""
    return weighted_norm(field.coeffs, field.grid.k_squared() ** p)


def l2_inner(a: SpectralField, b: SpectralField) -> float:
    _check_same_grid(a, b)
    return float(np.sum((a.coeffs * np.conj(b.coeffs)).real))


# ---------------------------------------------------------------------------
# regridding (coefficient-preserving embed into a finer index lattice)
# ---------------------------------------------------------------------------

def embed_field(field: SpectralField, n_new: int) -> SpectralField:
    """Copy coefficients onto a grid with more modes and the same box size."""
    grid = field.grid
    if n_new < grid.n:
        raise GridError("embed_field only grows the mode count")
    new_grid = SpectralGrid(n_new, grid.box_scale, grid.pad_factor)
    idx = signed_freqs(grid.n) % n_new
    out = np.zeros(field.coeffs.shape[:-3] + new_grid.shape, dtype=np.complex128)
    out[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]] = field.coeffs
    return SpectralField(new_grid, out)
