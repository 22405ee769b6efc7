"""Independent reference implementations used to cross-check the fast paths.

Everything here is deliberately naive: direct summed convolutions,
single-coefficient DFT sums, dense matrix exponentials, oversampled
quadrature.  None of it reuses the padded-transform machinery it is
meant to validate.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import scipy.fft as sfft
import scipy.linalg


def _signed(n: int) -> np.ndarray:
    j = np.arange(n)
    return np.where(j <= n // 2, j, j - n)


@lru_cache(maxsize=8)
def _pair_table(n: int):
    """Gather table: for output mode k and input mode eta, the flat storage
    index of k - eta if it lies in the band, else n^3 (sentinel)."""
    if n > 12:
        raise ValueError("direct convolution table only built for small n")
    f = _signed(n)
    fx, fy, fz = np.meshgrid(f, f, f, indexing="ij")
    modes = np.stack([fx.ravel(), fy.ravel(), fz.ravel()], axis=1)  # (n^3, 3)
    d = modes[:, None, :] - modes[None, :, :]
    valid = np.all((d >= -n // 2 + 1) & (d <= n // 2), axis=2)
    idx = (d[..., 0] % n) * n * n + (d[..., 1] % n) * n + (d[..., 2] % n)
    idx = np.where(valid, idx, n**3)
    return idx.astype(np.int64)


def direct_convolution(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact truncated convolution sum_eta a(eta) b(k - eta), k in band.

    Wavenumber arithmetic with no modular wrap: pairs whose difference
    leaves the band contribute nothing.  O(n^6); intended for n <= 12.
    """
    n = a.shape[-1]
    table = _pair_table(n)
    b_ext = np.concatenate([b.ravel(), [0.0]])
    gathered = b_ext[table]                       # (n^3, n^3)
    out = gathered @ a.ravel()
    return out.reshape(n, n, n)


def dft_coefficient(samples: np.ndarray, freq_triple, box_scale: float = 1.0):
    """One series coefficient by the plain O(n^3) DFT sum."""
    n = samples.shape[0]
    x = 2.0 * np.pi * np.arange(n) / n
    mx, my, mz = freq_triple
    phase = (
        np.exp(-1j * mx * x)[:, None, None]
        * np.exp(-1j * my * x)[None, :, None]
        * np.exp(-1j * mz * x)[None, None, :]
    )
    return complex(np.sum(samples * phase) / n**3)


def quadrature_inner(a: np.ndarray, b: np.ndarray, oversample: int = 4):
    """Box-mean of f conj(g) by sampling both fields on a finer lattice.

    Exact for band-limited inputs once the fine lattice resolves the sum
    of the support radii; oversample=4 is enough for any band pair.
    """
    n = a.shape[-1]
    m = oversample * n
    fa = _oversampled(a, m)
    fb = _oversampled(b, m)
    return complex(np.mean(fa * np.conj(fb)))


def _oversampled(c: np.ndarray, m: int) -> np.ndarray:
    n = c.shape[-1]
    idx = _signed(n) % m
    spec = np.zeros(c.shape[:-3] + (m, m, m), dtype=np.complex128)
    spec[..., idx[:, None, None], idx[None, :, None], idx[None, None, :]] = c
    return sfft.ifftn(spec, axes=(-3, -2, -1)) * m**3


# ---------------------------------------------------------------------------
# mode-local linearization of the perturbation system
# ---------------------------------------------------------------------------

def linear_mode_matrix(kvec, mu: float = 1.0) -> np.ndarray:
    """12x12 generator of the linearized (u, E) dynamics at one mode.

    State ordering [u1, u2, u3, E11, E12, ..., E33].  Built directly from
    the linear terms of the model: the viscous term, the divergence of E
    and of its transpose projected onto divergence-free vectors, and the
    velocity-gradient source of E.
    """
    k = np.asarray(kvec, dtype=float)
    k2 = float(k @ k)
    if k2 == 0.0:
        raise ValueError("linearization oracle needs a nonzero mode")
    proj = np.eye(3) - np.outer(k, k) / k2
    src = np.zeros((3, 9), dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            src[i, 3 * i + j] += 1j * k[j]     # (div E)_i
            src[i, 3 * j + i] += 1j * k[j]     # (div E^T)_i
    gen = np.zeros((12, 12), dtype=np.complex128)
    gen[:3, :3] = -mu * k2 * np.eye(3)
    gen[:3, 3:] = proj @ src
    for i in range(3):
        for j in range(3):
            gen[3 + 3 * i + j, i] = 1j * k[j]  # E_ij' = i k_j u_i
    return gen


def propagate_linear_mode(kvec, u0, e0, t: float, mu: float = 1.0):
    """Matrix-exponential evolution of one linearized mode."""
    gen = linear_mode_matrix(kvec, mu)
    state = np.concatenate([np.asarray(u0, complex), np.asarray(e0, complex).ravel()])
    out = scipy.linalg.expm(gen * t) @ state
    return out[:3], out[3:].reshape(3, 3)
