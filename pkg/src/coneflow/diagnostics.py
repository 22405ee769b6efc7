"""Structure diagnostics: norms, energy bookkeeping, and exact identities.

Everything here is a pure function of a state snapshot.  The I/J term
decompositions, the cancellation identities, the transport annihilation
check, and the angle-gain bound are all evaluated with the same
dealiased product machinery the stepper uses, so the asserted identities
hold to rounding, not to discretization error.

Weighted inner products follow the coefficient convention of
``spectral``: <f, g>_w = sum_k w(k) Re[f(k) conj(g(k))], which equals
the box-mean integral for w = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .cones import Cone, cone_leakage, support_modes
from .dynamics import FlowState, RhsBundle, rhs_bundle
from .errors import InvariantViolation, PreconditionError
from .spectral import (
    SpectralField,
    curl_rows,
    divergence_linf,
    partial_coeffs,
    to_real_physical,
)

_IDENTITY_TOL = 1e-10


# ---------------------------------------------------------------------------
# record and CSV schema
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    l2_u: float
    l2_E: float
    h2_u: float
    h2_E: float
    grad_u_h2: float
    grad_E_h1: float
    div_E_h1: float
    I_terms: tuple          # I1..I6
    J_terms: tuple          # J1..J8
    det_residual: float
    div_ET_residual: float
    curl_structure_residual: float
    cone_leakage_u: float
    cone_leakage_E: float
    energy0: float
    energy1: float
    energy_total: float
    energy_identity_residual: float


CSV_COLUMNS = (
    "t", "l2_u", "l2_E", "h2_u", "h2_E", "grad_u_h2", "grad_E_h1", "div_E_h1",
    "I1", "I2", "I3", "I4", "I5", "I6",
    "J1", "J2", "J3", "J4", "J5", "J6", "J7", "J8",
    "det_res", "divET_res", "curl_res", "leak_u", "leak_E",
    "E0", "E1", "Etotal", "energy_id_res",
)


def csv_header() -> str:
    return ",".join(CSV_COLUMNS)


def csv_row(rec: DiagnosticRecord) -> str:
    vals = (
        rec.t, rec.l2_u, rec.l2_E, rec.h2_u, rec.h2_E,
        rec.grad_u_h2, rec.grad_E_h1, rec.div_E_h1,
        *rec.I_terms, *rec.J_terms,
        rec.det_residual, rec.div_ET_residual, rec.curl_structure_residual,
        rec.cone_leakage_u, rec.cone_leakage_E,
        rec.energy0, rec.energy1, rec.energy_total,
        rec.energy_identity_residual,
    )
    # fixed-width scientific notation keeps output byte-identical across runs
    return ",".join(f"{v:.17e}" for v in vals)


# ---------------------------------------------------------------------------
# energy ledger
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyLedger:
    """Running sup / trapezoid-integral bookkeeping of the weighted energies.

    energy0 = sup_t theta0^2 (h2_u^2 + h2_E^2) + int theta0^2 |grad u|_{H2}^2,
    energy1 = int theta0^2 |grad E|_{H1}^2, energy_total their sum.  All three
    are nondecreasing by construction.
    """

    theta0: float
    t: Optional[float] = None
    sup_sq: float = 0.0
    diss_u: float = 0.0
    diss_E: float = 0.0
    last_gu2: float = 0.0
    last_ge2: float = 0.0

    @classmethod
    def start(cls, theta0: float) -> "EnergyLedger":
        return cls(theta0=theta0)

    @property
    def energy0(self) -> float:
        return self.sup_sq + self.diss_u

    @property
    def energy1(self) -> float:
        return self.diss_E

    @property
    def energy_total(self) -> float:
        return self.energy0 + self.energy1

    def updated(self, rec: DiagnosticRecord) -> "EnergyLedger":
        th2 = self.theta0 ** 2
        point = th2 * (rec.h2_u ** 2 + rec.h2_E ** 2)
        gu2 = th2 * rec.grad_u_h2 ** 2
        ge2 = th2 * rec.grad_E_h1 ** 2
        if self.t is None:
            return replace(self, t=rec.t, sup_sq=point,
                           last_gu2=gu2, last_ge2=ge2)
        dt = rec.t - self.t
        if dt <= 0:
            raise ValueError(
                f"ledger requires increasing t, got {rec.t} after {self.t}")
        return replace(
            self,
            t=rec.t,
            sup_sq=max(self.sup_sq, point),
            diss_u=self.diss_u + 0.5 * dt * (self.last_gu2 + gu2),
            diss_E=self.diss_E + 0.5 * dt * (self.last_ge2 + ge2),
            last_gu2=gu2,
            last_ge2=ge2,
        )


def update_ledger(ledger: EnergyLedger, rec: DiagnosticRecord,
                  theta0: float, dt_sample: float) -> EnergyLedger:
    """Explicit-cadence ledger update; validates theta0 and the time step."""
    if abs(theta0 - ledger.theta0) > 1e-15 * max(abs(theta0), 1.0):
        raise ValueError("theta0 does not match the ledger")
    if ledger.t is not None and abs((ledger.t + dt_sample) - rec.t) > 1e-9:
        raise ValueError(
            f"record at t={rec.t} does not follow ledger t={ledger.t} "
            f"with dt_sample={dt_sample}")
    return ledger.updated(rec)


# ---------------------------------------------------------------------------
# weighted sums
# ---------------------------------------------------------------------------

def _wsum(a: np.ndarray, b: np.ndarray, w) -> float:
    """sum over all components and modes of w * Re(a conj(b))."""
    return float(np.sum((a.real * b.real + a.imag * b.imag) * w))


def _weights(grid):
    k2 = grid.k_squared()
    return k2, 1.0 + k2, k2 * k2


# ---------------------------------------------------------------------------
# I and J terms
# ---------------------------------------------------------------------------

def compute_I_terms(state: FlowState, theta0: float = 1.0,
                    bundle: RhsBundle | None = None) -> tuple:
    """The six H2-level terms of the velocity/deformation energy balance.

    I1 = -th2 <u.grad u, u>_{H2.}   I2 = +th2 <div(EE^T), u>_{H2.}
    I3 = +th2 <div E, u>_{H2.}      I4 = -th2 <u.grad E, E>_{H2.}
    I5 = +th2 <grad(u) E, E>_{H2.}  I6 = +th2 <grad u, E>_{H2.}
    (H2. denoting the homogeneous weight |k|^4.)

    Asserts the defining balance with the time derivative taken from the
    model right side:
      sum(I) + th2 <div E^T, u>_{H2.}
        = th2 [<u_t,u> + <E_t,E>]_{H2.} + th2 mu |grad u|_{H2.}^2.
    The correction term vanishes for states carrying the columnwise
    divergence-free structure; keeping it makes the identity hold for
    arbitrary solenoidal states.
    """
    if bundle is None:
        bundle = rhs_bundle(state)
    grid = state.grid
    _, _, w4 = _weights(grid)
    th2 = theta0 * theta0
    uc, Ec = state.u.coeffs, state.E.coeffs
    terms = (
        -th2 * _wsum(bundle.adv_u, uc, w4),
        th2 * _wsum(bundle.div_eet, uc, w4),
        th2 * _wsum(bundle.div_e, uc, w4),
        -th2 * _wsum(bundle.adv_E, Ec, w4),
        th2 * _wsum(bundle.graduE, Ec, w4),
        th2 * _wsum(bundle.grad_u, Ec, w4),
    )
    correction = th2 * _wsum(bundle.div_et, uc, w4)
    rhs = th2 * (_wsum(bundle.u_t, uc, w4) + _wsum(bundle.e_t, Ec, w4)) \
        + th2 * state.mu * _wsum(uc, uc, w4 * grid.k_squared())
    resid = abs(sum(terms) + correction - rhs)
    scale = sum(abs(v) for v in terms) + abs(correction) + abs(rhs) + 1e-300
    # the balance presumes an exactly solenoidal velocity (pressure drops)
    solenoidal = divergence_linf(state.u) <= 1e-8 * (
        1.0 + float(np.max(np.abs(uc))))
    if solenoidal and resid > _IDENTITY_TOL * scale:
        raise InvariantViolation(
            f"H2 balance violated: residual {resid:.3e} vs scale {scale:.3e}")
    return terms


def compute_J_terms(state: FlowState, du_dt: SpectralField | None = None,
                    theta0: float = 1.0,
                    bundle: RhsBundle | None = None) -> tuple:
    """The eight H1-level terms of the div-E balance.

    J1 = th2 d/dt <u, div E>_{H1} (both time derivatives from the model
    right side), J2 = -th2 <grad u, u.grad E>, J3 = +th2 <grad u, grad(u)E>,
    J4 = +th2 |grad u|^2, J5 = +th2 <div E, u.grad u>, J6 = +th2
    <div E, grad P>, J7 = -th2 mu <div E, Lap u>, J8 = -th2
    <div E, div(EE^T)>, all in H1.

    Asserts the defining balance, exact for arbitrary states:
      sum(J) = th2 |div E|_{H1}^2 + th2 <div E, div E^T>_{H1}.
    """
    if bundle is None:
        bundle = rhs_bundle(state)
    grid = state.grid
    n = grid.n
    _, wh1, _ = _weights(grid)
    th2 = theta0 * theta0
    uc = state.u.coeffs
    u_t = du_dt.coeffs if du_dt is not None else bundle.u_t
    div_et_dt = np.stack(
        [sum(partial_coeffs(bundle.e_t[i, j], grid, j) for j in range(3))
         for i in range(3)]
    )
    grad_p = np.stack([partial_coeffs(bundle.pressure, grid, ax)
                       for ax in range(3)])
    gu = bundle.grad_u.reshape(9, n, n, n)
    terms = (
        th2 * (_wsum(u_t, bundle.div_e, wh1) + _wsum(uc, div_et_dt, wh1)),
        -th2 * _wsum(gu, bundle.adv_E.reshape(9, n, n, n), wh1),
        th2 * _wsum(gu, bundle.graduE.reshape(9, n, n, n), wh1),
        th2 * _wsum(gu, gu, wh1),
        th2 * _wsum(bundle.div_e, bundle.adv_u, wh1),
        th2 * _wsum(bundle.div_e, grad_p, wh1),
        -th2 * state.mu * _wsum(bundle.div_e, bundle.lap_u, wh1),
        -th2 * _wsum(bundle.div_e, bundle.div_eet, wh1),
    )
    rhs = th2 * (_wsum(bundle.div_e, bundle.div_e, wh1)
                 + _wsum(bundle.div_e, bundle.div_et, wh1))
    resid = abs(sum(terms) - rhs)
    scale = sum(abs(v) for v in terms) + abs(rhs) + 1e-300
    if resid > _IDENTITY_TOL * scale:
        raise InvariantViolation(
            f"H1 div-E balance violated: residual {resid:.3e} "
            f"vs scale {scale:.3e}")
    return terms


def energy_identity_residual(state: FlowState, theta0: float = 1.0,
                             bundle: RhsBundle | None = None) -> float:
    """Defect of the L2 energy law, time derivative from the model RHS.

    Returns th2 [<u_t,u> + <E_t,E>]_{L2} + th2 mu |grad u|_{L2}^2, which
    collapses to th2 <div E^T, u>_{L2} by exact discrete cancellations
    and is therefore rounding-level whenever the columnwise structure
    holds.
    """
    if bundle is None:
        bundle = rhs_bundle(state)
    grid = state.grid
    th2 = theta0 * theta0
    uc, Ec = state.u.coeffs, state.E.coeffs
    return th2 * (_wsum(bundle.u_t, uc, 1.0) + _wsum(bundle.e_t, Ec, 1.0)) \
        + th2 * state.mu * _wsum(uc, uc, grid.k_squared())


# ---------------------------------------------------------------------------
# structural residuals
# ---------------------------------------------------------------------------

def det_residual(E: SpectralField) -> float:
    """max over collocation points of |det(I + E) - 1|."""
    p = to_real_physical(E)
    a = p + np.eye(3)[:, :, None, None, None]
    det = (
        a[0, 0] * (a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1])
        - a[0, 1] * (a[1, 0] * a[2, 2] - a[1, 2] * a[2, 0])
        + a[0, 2] * (a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0])
    )
    return float(np.max(np.abs(det - 1.0)))


def div_ET_residual(E: SpectralField) -> float:
    """|div E^T|_{L2} / max(|E|_{L2}, eps)."""
    grid = E.grid
    div_et = np.stack(
        [sum(partial_coeffs(E.coeffs[j, i], grid, j) for j in range(3))
         for i in range(3)]
    )
    num = np.sqrt(np.sum(np.abs(div_et) ** 2))
    return float(num / max(E.l2_norm(), 1e-300))


def _tensor_phys(coeffs: np.ndarray, grid) -> np.ndarray:
    """Padded collocation samples, real path when legal, complex otherwise."""
    from .spectral import (pad_to_physical_complex, pad_to_physical_real,
                           reflect_coeffs)
    scale = max(float(np.max(np.abs(coeffs))), 1e-300)
    defect = float(np.max(np.abs(coeffs - np.conj(reflect_coeffs(coeffs)))))
    half = grid.n // 2
    nyq = (float(np.sum(np.abs(coeffs[..., half, :, :]) ** 2))
           + float(np.sum(np.abs(coeffs[..., :, half, :]) ** 2))
           + float(np.sum(np.abs(coeffs[..., :, :, half]) ** 2)))
    if defect <= 2e-13 * scale and nyq <= (1e-13 * scale) ** 2:
        return pad_to_physical_real(coeffs, grid)
    return pad_to_physical_complex(coeffs, grid)


def _band_of_phys(samples: np.ndarray, grid) -> np.ndarray:
    from .spectral import physical_to_band_complex, physical_to_band_real
    if np.isrealobj(samples):
        return physical_to_band_real(samples, grid)
    return physical_to_band_complex(samples, grid)


def curl_structure_residual(E: SpectralField) -> float:
    """Normalized defect of the gradient-compatibility identity

        grad_k E_ij - grad_j E_ik = E_lj grad_l E_ik - E_lk grad_l E_ij,

    measured in L2 over all index triples and divided by |grad E|_{L2}.
    The left side is assembled from spectral multipliers, the right side
    from dealiased products.
    """
    grid = E.grid
    n = grid.n
    Ec = E.coeffs
    dE = np.empty((3, 3, 3, n, n, n), dtype=np.complex128)   # dE[l,i,k]
    for l in range(3):
        for i in range(3):
            for k in range(3):
                dE[l, i, k] = partial_coeffs(Ec[i, k], grid, l)
    stack = np.concatenate([Ec.reshape(9, n, n, n),
                            dE.reshape(27, n, n, n)])
    phys = _tensor_phys(stack, grid)
    Ep = phys[:9].reshape(3, 3, *phys.shape[-3:])
    dEp = phys[9:].reshape(3, 3, 3, *phys.shape[-3:])
    # G[j,i,k] = sum_l E_lj grad_l E_ik
    prods = np.empty((27,) + phys.shape[-3:], dtype=phys.dtype)
    pos = 0
    for j in range(3):
        for i in range(3):
            for k in range(3):
                prods[pos] = Ep[0, j] * dEp[0, i, k] + Ep[1, j] * dEp[1, i, k] \
                    + Ep[2, j] * dEp[2, i, k]
                pos += 1
    G = _band_of_phys(prods, grid).reshape(3, 3, 3, n, n, n)
    num_sq = 0.0
    for i in range(3):
        for j in range(3):
            for k in range(3):
                resid = dE[k, i, j] - dE[j, i, k] - (G[j, i, k] - G[k, i, j])
                num_sq += float(np.sum(np.abs(resid) ** 2))
    grad_norm = np.sqrt(np.sum(grid.k_squared() * np.abs(Ec) ** 2))
    return float(np.sqrt(num_sq) / max(grad_norm, 1e-300))


def transport_annihilation_check(state: FlowState, theta0: float = 1.0) -> float:
    """th2 <u.grad(Lap E), Lap E>_{L2} via dealiased products.

    Zero to rounding for solenoidal real velocity; generically nonzero
    when u has a divergence (the negative control).
    """
    grid = state.grid
    n = grid.n
    lap = -grid.k_squared()
    lapE = state.E.coeffs * lap
    stack = np.concatenate([state.u.coeffs, lapE.reshape(9, n, n, n)])
    phys = _tensor_phys(stack, grid)
    up, fp = phys[:3], phys[3:].reshape(3, 3, *phys.shape[-3:])
    prods = np.empty((27,) + phys.shape[-3:], dtype=phys.dtype)
    pos = 0
    for k in range(3):
        for i in range(3):
            for j in range(3):
                prods[pos] = up[k] * fp[i, j]
                pos += 1
    uf = _band_of_phys(prods, grid).reshape(3, 3, 3, n, n, n)
    adv = np.empty((3, 3, n, n, n), dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            adv[i, j] = sum(partial_coeffs(uf[k, i, j], grid, k)
                            for k in range(3))
    return theta0 * theta0 * _wsum(adv, lapE, 1.0)


# ---------------------------------------------------------------------------
# angle-gain bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AngleGainReport:
    max_ratio: float
    worst_mode: Optional[tuple]
    theta_eff: float
    max_pair_angle: float
    nominal_ratio: float
    theta_nominal: float


def angle_gain_bound_check(E: SpectralField, theta0: float,
                           rel_tol: float = 1e-6) -> AngleGainReport:
    """Per-mode verification of the angular-gain convolution bound.

    For the quadratic stress term with transform
        T_ik(xi) = i sum_eta eta_j E_jk(xi-eta) E_ik(eta),
    the columnwise divergence-free structure annihilates the component
    of eta parallel to xi-eta, leaving the rejection b with
    |b| = |eta| sin(angle(eta, xi-eta)).  The check assembles, over all
    pairs of support modes (coefficients above rel_tol of the max),
        LHS_ik(xi) = |sum b_j E_jk(xi-eta) E_ik(eta)|,
        RHS_ik(xi) = sum |E_jk(xi-eta)| |eta| |E_ik(eta)|,
    and asserts max LHS/(theta_eff RHS) <= 1 + 1e-10, where theta_eff is
    the largest sin(angle) realized among the interacting pairs.  The
    ratio against the nominal cone angle theta0 is reported untested.
    """
    resid = div_ET_residual(E)
    if resid > 1e-8:
        raise PreconditionError(
            f"angle-gain bound needs columnwise divergence-free E; "
            f"div E^T residual is {resid:.3e}")
    grid = E.grid
    idx = support_modes(E, rel_tol)                    # storage indices
    if idx.size == 0:
        return AngleGainReport(0.0, None, 0.0, 0.0, 0.0, theta0)
    signed = grid.freqs()[idx]                         # signed integer modes
    phys = signed.astype(np.float64) / grid.box_scale  # wavenumbers
    vals = E.coeffs[:, :, idx[:, 0], idx[:, 1], idx[:, 2]]   # (3,3,S)
    S = idx.shape[0]

    eta = np.repeat(np.arange(S), S)
    w = np.tile(np.arange(S), S)
    eta_v = phys[eta]                                  # (P,3) gradient carrier
    w_v = phys[w]
    keep = (np.einsum("ij,ij->i", eta_v, eta_v) > 0) \
        & (np.einsum("ij,ij->i", w_v, w_v) > 0)
    eta, w, eta_v, w_v = eta[keep], w[keep], eta_v[keep], w_v[keep]

    w2 = np.einsum("ij,ij->i", w_v, w_v)
    proj = np.einsum("ij,ij->i", eta_v, w_v) / w2
    b = eta_v - proj[:, None] * w_v                    # (P,3)
    eta_norm = np.sqrt(np.einsum("ij,ij->i", eta_v, eta_v))
    sin_pair = np.sqrt(np.einsum("ij,ij->i", b, b)) / eta_norm
    cosang = np.clip(np.einsum("ij,ij->i", eta_v, w_v)
                     / (eta_norm * np.sqrt(w2)), -1.0, 1.0)
    theta_eff = float(np.max(sin_pair))
    max_angle = float(np.max(np.arccos(cosang)))

    xi = signed[eta] + signed[w]                       # (P,3) output modes
    codes, inverse = np.unique(xi, axis=0, return_inverse=True)
    ncode = codes.shape[0]

    max_ratio = 0.0
    nominal_ratio = 0.0
    worst = None
    for i in range(3):
        for k in range(3):
            bE = np.einsum("pj,pj->p", b, vals[:, k, w].T)   # b_j E_jk(w)
            contrib = bE * vals[i, k, eta]
            lhs = np.abs(
                np.bincount(inverse, weights=contrib.real, minlength=ncode)
                + 1j * np.bincount(inverse, weights=contrib.imag,
                                   minlength=ncode))
            mag = np.sum(np.abs(vals[:, k, w]), axis=0) * eta_norm \
                * np.abs(vals[i, k, eta])
            rhs = np.bincount(inverse, weights=mag, minlength=ncode)
            ok = rhs > 0
            if not np.any(ok):
                continue
            ratios = lhs[ok] / (theta_eff * rhs[ok]) if theta_eff > 0 \
                else np.zeros(int(np.sum(ok)))
            j = int(np.argmax(ratios))
            if ratios[j] > max_ratio:
                max_ratio = float(ratios[j])
                worst = tuple(int(v) for v in codes[np.flatnonzero(ok)[j]])
            nominal_ratio = max(
                nominal_ratio, float(np.max(lhs[ok] / (theta0 * rhs[ok]))))
    if max_ratio > 1.0 + 1e-10:
        raise InvariantViolation(
            f"angle-gain bound violated: max ratio {max_ratio:.15f} "
            f"at mode {worst}")
    return AngleGainReport(max_ratio, worst, theta_eff, max_angle,
                           nominal_ratio, theta0)


# ---------------------------------------------------------------------------
# div/curl control report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lemma31Report:
    lhs: float
    rhs_linear: float
    rhs_quadratic: float
    ratio: float
    applicable: bool
    curl_residual: float
    split_defect: float


def lemma31_report(E: SpectralField, theta0: float,
                   curl_tol: float = 1e-6) -> Lemma31Report:
    """Numeric instance of the div/curl gradient control.

    lhs = |grad E|_{H1}, rhs_linear = |div E|_{H1}, rhs_quadratic =
    theta0 |E|_{H2} |grad E|_{H1}; ratio = lhs/(linear + quadratic).
    Also verifies the exact rowwise Helmholtz split
    |grad E|^2_{H1} = |div E|^2_{H1} + |curl E|^2_{H1}, whose defect is
    returned.  Reports are labeled inapplicable when the quadratic
    gradient-compatibility identity fails at curl_tol.
    """
    grid = E.grid
    k2 = grid.k_squared()
    wh1 = 1.0 + k2
    Ec = E.coeffs
    grad_sq = float(np.sum(wh1 * k2 * np.abs(Ec) ** 2))
    div_e = np.stack(
        [sum(partial_coeffs(Ec[i, j], grid, j) for j in range(3))
         for i in range(3)]
    )
    div_sq = float(np.sum(wh1 * np.abs(div_e) ** 2))
    curl = curl_rows(E).coeffs
    curl_sq = float(np.sum(wh1 * np.abs(curl) ** 2))
    split_defect = abs(grad_sq - div_sq - curl_sq) / max(grad_sq, 1e-300)
    if split_defect > 1e-12:
        raise InvariantViolation(
            f"rowwise Helmholtz split violated: defect {split_defect:.3e}")
    lhs = np.sqrt(grad_sq)
    rhs_lin = np.sqrt(div_sq)
    rhs_quad = theta0 * E.sobolev_norm(2) * lhs
    denom = rhs_lin + rhs_quad
    ratio = float(lhs / denom) if denom > 0 else 0.0
    curl_resid = curl_structure_residual(E)
    return Lemma31Report(float(lhs), float(rhs_lin), float(rhs_quad), ratio,
                         curl_resid <= curl_tol, curl_resid, split_defect)


# ---------------------------------------------------------------------------
# full record
# ---------------------------------------------------------------------------

def record(state: FlowState, cone: Cone,
           bundle: RhsBundle | None = None) -> DiagnosticRecord:
    """Evaluate every monitored quantity at one state snapshot.

    Ledger fields (energy0/energy1/energy_total) are filled with zeros;
    the trajectory driver replaces them after updating its ledger.
    """
    if bundle is None:
        bundle = rhs_bundle(state)
    grid = state.grid
    k2, wh1, _ = _weights(grid)
    theta0 = cone.half_angle
    uc, Ec = state.u.coeffs, state.E.coeffs
    grad_u_h2 = np.sqrt(float(np.sum(
        (1.0 + k2 + k2 * k2) * k2 * np.abs(uc) ** 2)))
    grad_E_h1 = np.sqrt(float(np.sum(wh1 * k2 * np.abs(Ec) ** 2)))
    div_E_h1 = np.sqrt(float(np.sum(wh1 * np.abs(bundle.div_e) ** 2)))
    return DiagnosticRecord(
        t=state.t,
        l2_u=state.u.l2_norm(),
        l2_E=state.E.l2_norm(),
        h2_u=state.u.sobolev_norm(2),
        h2_E=state.E.sobolev_norm(2),
        grad_u_h2=grad_u_h2,
        grad_E_h1=grad_E_h1,
        div_E_h1=div_E_h1,
        I_terms=compute_I_terms(state, theta0, bundle),
        J_terms=compute_J_terms(state, None, theta0, bundle),
        det_residual=det_residual(state.E),
        div_ET_residual=div_ET_residual(state.E),
        curl_structure_residual=curl_structure_residual(state.E),
        cone_leakage_u=cone_leakage(state.u, cone),
        cone_leakage_E=cone_leakage(state.E, cone),
        energy0=0.0,
        energy1=0.0,
        energy_total=0.0,
        energy_identity_residual=energy_identity_residual(
            state, theta0, bundle),
    )
