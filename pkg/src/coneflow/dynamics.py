"""Time evolution of the coupled velocity / deformation perturbation system.

The model, in perturbation form around the identity deformation:

    u_t + u.grad(u) - mu Lap(u) + grad(P) = div(E E^T) + div(E) + div(E^T)
    E_t + u.grad(E) = grad(u) E + grad(u)
    div(u) = 0

with [grad(u)]_ij = d_j u_i, [div(F)]_i = sum_j d_j F_ij,
[grad(u) E]_ik = d_j u_i E_jk and [u.grad(E)]_ij = u_k d_k E_ij.

Quadratic terms are evaluated as exact dealiased products.  Advection is
assembled in divergence form (d_j of u_i u_j, d_k of u_k E_ij), which is
identical to the advective form in exact convolution arithmetic because
the velocity stays divergence free through every stage.

Time stepping is integrating-factor RK4: the viscous semigroup
exp(-mu |k|^2 dt) is applied exactly per stage to the velocity while all
coupling and nonlinear terms stay explicit.  The deformation tensor has
no dissipation and sees plain RK4 weights.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import BlowupDetected, FieldError, GridError, PreconditionError
from .spectral import (
    SpectralField,
    SpectralGrid,
    is_hermitian,
    nyquist_energy,
    pad_to_physical_real,
    partial_coeffs,
    physical_to_band_real,
    project_coeffs,
    reflect_coeffs,
    to_physical,
)


@dataclass
class FlowState:
    """Velocity (vector), deformation perturbation (tensor), time, viscosity."""

    u: SpectralField
    E: SpectralField
    t: float = 0.0
    mu: float = 1.0

    def __post_init__(self):
        if self.u.rank != "vector":
            raise FieldError("u must be a vector field")
        if self.E.rank != "tensor":
            raise FieldError("E must be a tensor field")
        if self.u.grid != self.E.grid:
            raise GridError("u and E must share a grid")
        if not (self.mu > 0):
            raise ValueError(f"viscosity must be positive, got {self.mu}")

    @property
    def grid(self) -> SpectralGrid:
        return self.u.grid

    def h2_sum(self) -> float:
        return self.u.sobolev_norm(2) + self.E.sobolev_norm(2)


@dataclass(frozen=True)
class StepperConfig:
    """Integrating-factor RK4 parameters.

    Stability of the explicit coupling is governed by the elastic wave
    rate k_max and the advective rate |u|_inf k_max; the documented
    heuristic bound is dt * k_max * (1 + |u|_inf) * exp(mu k_max^2 dt)
    <= 2.8 (imaginary-axis RK4 limit with the in-step growth of the
    transformed coupling).  evolve_E=False freezes the deformation
    tensor; it exists for decay tests against the heat semigroup.
    """

    dt: float
    evolve_E: bool = True
    enforce_hermitian: bool = True

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError(f"dt must be positive, got {self.dt}")


def k_max(grid: SpectralGrid) -> float:
    return np.sqrt(3.0) * (grid.n // 2) / grid.box_scale


def stability_margin(state: FlowState, cfg: StepperConfig) -> float:
    """Explicit-term stability estimate; values above 1 are out of bounds."""
    km = k_max(state.grid)
    u_inf = float(np.max(np.abs(to_physical(state.u).real)))
    k2m = km * km
    return cfg.dt * km * (1.0 + u_inf) * np.exp(state.mu * k2m * cfg.dt) / 2.8


# ---------------------------------------------------------------------------
# right-hand side assembly
# ---------------------------------------------------------------------------

_SYM_PAIRS = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]


def _zero_nyquist(arr: np.ndarray, n: int) -> np.ndarray:
    """Drop the three unpaired +n/2 planes (in place), returning arr.

    The stepper is a Galerkin truncation onto the symmetric band
    |k_j| <= n/2 - 1, on which reflection k -> -k is a bijection; this
    keeps the half-spectrum product path exact and makes discrete
    integration by parts hold without Nyquist boundary terms.
    """
    half = n // 2
    arr[..., half, :, :] = 0.0
    arr[..., :, half, :] = 0.0
    arr[..., :, :, half] = 0.0
    return arr


def _quadratic_terms(uc: np.ndarray, Ec: np.ndarray, grid: SpectralGrid):
    """All dealiased quadratic terms, batched through two padded transforms.

    Returns coefficient arrays (adv_u, adv_E, graduE, eet) where
    adv_u_i = FT[u.grad u]_i, adv_E_ij = FT[u.grad E]_ij,
    graduE_ik = FT[d_j u_i E_jk], eet_ij = FT[(E E^T)_ij].
    """
    n = grid.n
    gu = np.empty((3, 3, n, n, n), dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            gu[i, j] = partial_coeffs(uc[i], grid, j)
    stack = np.concatenate([uc, gu.reshape(9, n, n, n), Ec.reshape(9, n, n, n)])
    phys = pad_to_physical_real(stack, grid)
    up = phys[:3]
    gup = phys[3:12].reshape(3, 3, *phys.shape[-3:])
    Ep = phys[12:21].reshape(3, 3, *phys.shape[-3:])

    m = phys.shape[-1]
    prods = np.empty((48, m, m, m), dtype=np.float64)
    scratch = np.empty((m, m, m), dtype=np.float64)
    pos = 0
    for i, j in _SYM_PAIRS:                      # u_i u_j, 6
        np.multiply(up[i], up[j], out=prods[pos])
        pos += 1
    for k in range(3):                           # u_k E_ij, 27
        for i in range(3):
            for j in range(3):
                np.multiply(up[k], Ep[i, j], out=prods[pos])
                pos += 1
    for i in range(3):                           # sum_j d_j(u_i) E_jk, 9
        for k in range(3):
            np.multiply(gup[i, 0], Ep[0, k], out=prods[pos])
            np.multiply(gup[i, 1], Ep[1, k], out=scratch)
            prods[pos] += scratch
            np.multiply(gup[i, 2], Ep[2, k], out=scratch)
            prods[pos] += scratch
            pos += 1
    for i, j in _SYM_PAIRS:                      # (E E^T)_ij, 6
        np.multiply(Ep[i, 0], Ep[j, 0], out=prods[pos])
        np.multiply(Ep[i, 1], Ep[j, 1], out=scratch)
        prods[pos] += scratch
        np.multiply(Ep[i, 2], Ep[j, 2], out=scratch)
        prods[pos] += scratch
        pos += 1

    spec = _zero_nyquist(physical_to_band_real(prods, grid), n)

    uu = np.empty((3, 3, n, n, n), dtype=np.complex128)
    for idx, (i, j) in enumerate(_SYM_PAIRS):
        uu[i, j] = spec[idx]
        uu[j, i] = spec[idx]
    uE = spec[6:33].reshape(3, 3, 3, n, n, n)
    graduE = spec[33:42].reshape(3, 3, n, n, n)
    eet = np.empty((3, 3, n, n, n), dtype=np.complex128)
    for idx, (i, j) in enumerate(_SYM_PAIRS):
        eet[i, j] = spec[42 + idx]
        eet[j, i] = spec[42 + idx]

    adv_u = np.stack(
        [sum(partial_coeffs(uu[i, j], grid, j) for j in range(3)) for i in range(3)]
    )
    adv_E = np.empty((3, 3, n, n, n), dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            adv_E[i, j] = sum(partial_coeffs(uE[k, i, j], grid, k) for k in range(3))
    return adv_u, adv_E, graduE, eet


def _linear_terms(uc: np.ndarray, Ec: np.ndarray, grid: SpectralGrid):
    """(grad u, div E, div E^T, div(EE^T) helper form) linear multipliers."""
    n = grid.n
    gu = np.empty((3, 3, n, n, n), dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            gu[i, j] = partial_coeffs(uc[i], grid, j)
    div_e = np.stack(
        [sum(partial_coeffs(Ec[i, j], grid, j) for j in range(3)) for i in range(3)]
    )
    div_et = np.stack(
        [sum(partial_coeffs(Ec[j, i], grid, j) for j in range(3)) for i in range(3)]
    )
    return gu, div_e, div_et


def _nl_rhs(uc: np.ndarray, Ec: np.ndarray, grid: SpectralGrid, evolve_E: bool):
    """Explicit part of the stepper: everything except the viscous term."""
    adv_u, adv_E, graduE, eet = _quadratic_terms(uc, Ec, grid)
    gu, div_e, div_et = _linear_terms(uc, Ec, grid)
    div_eet = np.stack(
        [sum(partial_coeffs(eet[i, j], grid, j) for j in range(3)) for i in range(3)]
    )
    nu = project_coeffs(-adv_u + div_eet + div_e + div_et, grid)
    if evolve_E:
        ne = -adv_E + graduE + gu
    else:
        ne = np.zeros_like(Ec)
    return nu, ne


@dataclass
class RhsBundle:
    """Every model term at one state, shared by the stepper and diagnostics."""

    grid: SpectralGrid
    mu: float
    adv_u: np.ndarray      # FT[u.grad u]
    adv_E: np.ndarray      # FT[u.grad E]
    graduE: np.ndarray     # FT[grad(u) E]
    eet: np.ndarray        # FT[E E^T]
    div_eet: np.ndarray
    grad_u: np.ndarray
    div_e: np.ndarray
    div_et: np.ndarray
    lap_u: np.ndarray
    raw_u: np.ndarray      # unprojected momentum right side
    u_t: np.ndarray        # projected momentum right side
    e_t: np.ndarray
    pressure: np.ndarray


def rhs_bundle(state: FlowState) -> RhsBundle:
    grid = state.grid
    uc, Ec = state.u.coeffs, state.E.coeffs
    adv_u, adv_E, graduE, eet = _quadratic_terms(uc, Ec, grid)
    gu, div_e, div_et = _linear_terms(uc, Ec, grid)
    div_eet = np.stack(
        [sum(partial_coeffs(eet[i, j], grid, j) for j in range(3)) for i in range(3)]
    )
    lap_u = uc * (-grid.k_squared())
    raw_u = -adv_u + state.mu * lap_u + div_eet + div_e + div_et
    u_t = project_coeffs(raw_u, grid)
    e_t = -adv_E + graduE + gu
    kx, ky, kz = grid.k_axes()
    k2 = grid.k_squared()
    with np.errstate(divide="ignore", invalid="ignore"):
        pressure = -1j * (kx * raw_u[0] + ky * raw_u[1] + kz * raw_u[2]) / k2
    pressure[0, 0, 0] = 0.0
    return RhsBundle(grid, state.mu, adv_u, adv_E, graduE, eet, div_eet, gu,
                     div_e, div_et, lap_u, raw_u, u_t, e_t, pressure)


def momentum_rhs(state: FlowState) -> SpectralField:
    """Projected momentum right side (viscous term included)."""
    return SpectralField(state.grid, rhs_bundle(state).u_t)


def deformation_rhs(state: FlowState) -> SpectralField:
    """Deformation right side -u.grad(E) + grad(u) E + grad(u)."""
    return SpectralField(state.grid, rhs_bundle(state).e_t)


def pressure_of(state: FlowState) -> SpectralField:
    """Pressure recovered per mode from the unprojected momentum terms.

    P_hat(k) = -i (k . raw(k)) / |k|^2 with zero mean, so that
    raw - grad(P) equals the projected right side.
    """
    return SpectralField(state.grid, rhs_bundle(state).pressure)


# ---------------------------------------------------------------------------
# integrating-factor RK4
# ---------------------------------------------------------------------------

def step(state: FlowState, cfg: StepperConfig) -> FlowState:
    """One IF-RK4 step; raises BlowupDetected on non-finite output."""
    grid = state.grid
    dt = cfg.dt
    k2 = grid.k_squared()
    phih = np.exp(-state.mu * k2 * (0.5 * dt))
    phif = phih * phih
    uc, Ec = state.u.coeffs, state.E.coeffs

    k1u, k1e = _nl_rhs(uc, Ec, grid, cfg.evolve_E)
    u1 = phih * (uc + (0.5 * dt) * k1u)
    e1 = Ec + (0.5 * dt) * k1e
    k2u, k2e = _nl_rhs(u1, e1, grid, cfg.evolve_E)
    u2 = phih * uc + (0.5 * dt) * k2u
    e2 = Ec + (0.5 * dt) * k2e
    k3u, k3e = _nl_rhs(u2, e2, grid, cfg.evolve_E)
    u3 = phif * uc + dt * (phih * k3u)
    e3 = Ec + dt * k3e
    k4u, k4e = _nl_rhs(u3, e3, grid, cfg.evolve_E)

    un = phif * uc + (dt / 6.0) * (phif * k1u + 2.0 * phih * (k2u + k3u) + k4u)
    en = Ec + (dt / 6.0) * (k1e + 2.0 * (k2e + k3e) + k4e)

    un = project_coeffs(un, grid)
    if cfg.enforce_hermitian:
        un = 0.5 * (un + np.conj(reflect_coeffs(un)))
        en = 0.5 * (en + np.conj(reflect_coeffs(en)))
    _zero_nyquist(un, grid.n)
    _zero_nyquist(en, grid.n)
    if not (np.all(np.isfinite(un.view(np.float64)))
            and np.all(np.isfinite(en.view(np.float64)))):
        raise BlowupDetected(state.t + dt)
    return FlowState(
        SpectralField(grid, un), SpectralField(grid, en), state.t + dt, state.mu
    )


# ---------------------------------------------------------------------------
# trajectory driver
# ---------------------------------------------------------------------------

@dataclass
class SimulationResult:
    outcome: str                 # completed | guard | blowup
    t_stop: float
    records: list
    ledger_history: list
    final_state: FlowState | None
    warnings: list[str] = field(default_factory=list)


def band_edge_fraction(state: FlowState, margin: int = 3) -> float:
    """Energy fraction within `margin` modes of the band edge."""
    grid = state.grid
    f = np.abs(grid.freqs())
    edge = (grid.n // 2) - margin
    near = (f[:, None, None] >= edge) | (f[None, :, None] >= edge) \
        | (f[None, None, :] >= edge)
    eu = np.abs(state.u.coeffs) ** 2
    ee = np.abs(state.E.coeffs) ** 2
    total = float(np.sum(eu) + np.sum(ee))
    if total == 0.0:
        return 0.0
    return float(np.sum(eu[..., near]) + np.sum(ee[..., near])) / total


def simulate(
    state: FlowState,
    cfg: StepperConfig,
    t_end: float,
    sample_every: int = 10,
    cone=None,
    guard_factor: float = 1e4,
    checkpoint_dir=None,
    checkpoint_every: int = 0,
) -> SimulationResult:
    """March to t_end, sampling diagnostics every sample_every steps.

    Ends early with outcome "guard" when the H2 norm sum exceeds
    guard_factor times its initial value, or "blowup" on non-finite
    values.  Emits a warning when the doubled initial support radius
    does not fit the resolved band, and when tangible energy reaches
    the band edge (spectral truncation would then distort products).
    """
    from . import checkpoint as ckpt
    from .cones import Cone, support_radius
    from .diagnostics import EnergyLedger, record as make_record

    if cone is None:
        cone = Cone((0.0, 0.0, 1.0), np.pi / 2)
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    for name, f in (("u", state.u), ("E", state.E)):
        if not is_hermitian(f, 1e-10):
            raise PreconditionError(f"initial {name} is not Hermitian")
        scale = max(float(np.max(np.abs(f.coeffs))), 1e-300)
        if nyquist_energy(f) > (1e-10 * scale) ** 2:
            raise PreconditionError(f"initial {name} has +n/2 plane content")
    grid = state.grid
    nsteps_f = (t_end - state.t) / cfg.dt
    nsteps = int(round(nsteps_f))
    if nsteps < 0 or abs(nsteps_f - nsteps) > 1e-8:
        raise ValueError(f"t_end - t0 = {t_end - state.t} is not a multiple of dt")

    warn_list: list[str] = []
    r0 = max(support_radius(state.u), support_radius(state.E))
    band = (grid.n // 2) / grid.box_scale
    if 2.0 * r0 > band + 1e-9:
        msg = (f"doubled initial support radius {2 * r0:.3g} exceeds the resolved "
               f"band {band:.3g}; quadratic interactions will be truncated")
        warnings.warn(msg)
        warn_list.append(msg)

    margin = stability_margin(state, cfg)
    if margin > 1.0:
        msg = f"stepper stability margin {margin:.3g} above 1; expect instability"
        warnings.warn(msg)
        warn_list.append(msg)

    guard = guard_factor * state.h2_sum()
    ledger = EnergyLedger.start(theta0=cone.half_angle)
    records = []
    ledgers = []
    edge_warned = False

    def sample(st: FlowState):
        nonlocal ledger, edge_warned
        rec = make_record(st, cone)
        ledger = ledger.updated(rec)
        rec = replace(rec, energy0=ledger.energy0, energy1=ledger.energy1,
                      energy_total=ledger.energy_total)
        records.append(rec)
        ledgers.append(ledger)
        if not edge_warned and band_edge_fraction(st) > 1e-10:
            msg = (f"band-edge energy fraction {band_edge_fraction(st):.3g} "
                   f"above 1e-10 at t={st.t:.6g}; truncation is active")
            warnings.warn(msg)
            warn_list.append(msg)
            edge_warned = True

    def maybe_checkpoint(st: FlowState, isample: int):
        if checkpoint_dir is not None and checkpoint_every and \
                isample % checkpoint_every == 0:
            ckpt.write_state(checkpoint_dir, st, label=f"t{st.t:.6f}")

    sample(state)
    maybe_checkpoint(state, 0)
    isample = 0
    for istep in range(1, nsteps + 1):
        try:
            state = step(state, cfg)
        except BlowupDetected as exc:
            return SimulationResult("blowup", exc.t, records, ledgers, None,
                                    warn_list)
        if istep % sample_every == 0 or istep == nsteps:
            isample += 1
            sample(state)
            maybe_checkpoint(state, isample)
            if state.h2_sum() > guard > 0:
                return SimulationResult("guard", state.t, records, ledgers,
                                        state, warn_list)
    return SimulationResult("completed", state.t, records, ledgers, state,
                            warn_list)
