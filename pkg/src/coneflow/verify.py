"""Randomized self-verification suites with explicit margins.

Each suite draws from a seeded generator, measures a set of quantities
against their tolerances, and returns one CheckResult per check.  The
command line maps suite failures to a nonzero exit code.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cones import Cone, cone_leakage, split_eta
from .errors import BlowupDetected
from .oracles import (direct_convolution, propagate_linear_mode,
                      quadrature_inner)
from .random_fields import (random_cone_field, random_div_tfree_tensor,
                            random_field, random_solenoidal)
from .spectral import (SpectralField, SpectralGrid, dealiased_product,
                       divergence_linf, l2_inner, leray_project,
                       partial_coeffs, to_physical)

DEFAULT_SEED = 1234


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    allowed: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.measured <= self.allowed

    @property
    def margin(self) -> float:
        """allowed / measured; > 1 means the check passed with headroom."""
        if self.measured == 0.0:
            return float("inf")
        return self.allowed / self.measured


def _res(name, measured, allowed, detail="") -> CheckResult:
    return CheckResult(name, float(measured), float(allowed), detail)


def suite_spectral(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []

    worst_r, worst_c = 0.0, 0.0
    for pf in (1.5, 2.0):
        grid = SpectralGrid(8, 1.0, pf)
        for _ in range(10):
            a = random_field(grid, "scalar", rng)
            b = random_field(grid, "scalar", rng)
            ref = direct_convolution(a.coeffs, b.coeffs)
            err = np.max(np.abs(dealiased_product(a, b).coeffs - ref))
            worst_r = max(worst_r, err / max(np.max(np.abs(ref)), 1e-300))
            ac = random_field(grid, "scalar", rng, hermitian=False,
                              nyquist_free=False)
            bc = random_field(grid, "scalar", rng, hermitian=False,
                              nyquist_free=False)
            refc = direct_convolution(ac.coeffs, bc.coeffs)
            errc = np.max(np.abs(dealiased_product(ac, bc).coeffs - refc))
            worst_c = max(worst_c, errc / max(np.max(np.abs(refc)), 1e-300))
    out.append(_res("conv_oracle_real_path", worst_r, 1e-12))
    out.append(_res("conv_oracle_complex_path", worst_c, 1e-12))

    grid = SpectralGrid(16, 1.25, 2.0)
    f = random_field(grid, "vector", rng)
    back = np.max(np.abs(
        np.fft.fftn(to_physical(f), axes=(-3, -2, -1)) / grid.n ** 3
        - f.coeffs))
    out.append(_res("transform_roundtrip", back, 1e-13))

    a = random_field(grid, "scalar", rng)
    b = random_field(grid, "scalar", rng)
    pars = abs(l2_inner(a, b) - quadrature_inner(a.coeffs, b.coeffs).real)
    out.append(_res("parseval_vs_quadrature", pars,
                    1e-12 * a.l2_norm() * b.l2_norm()))

    v = random_field(grid, "vector", rng)
    pv = leray_project(v)
    ppv = leray_project(pv)
    out.append(_res("leray_idempotent",
                    np.max(np.abs(ppv.coeffs - pv.coeffs)),
                    1e-14 * np.max(np.abs(pv.coeffs))))
    out.append(_res("leray_divergence", divergence_linf(pv),
                    1e-12 * np.max(np.abs(pv.coeffs)) * grid.n))

    g = random_field(grid, "scalar", rng)
    h = random_field(grid, "scalar", rng)
    lhs = np.sum(partial_coeffs(g.coeffs, grid, 0) * np.conj(h.coeffs))
    rhs = -np.sum(g.coeffs * np.conj(partial_coeffs(h.coeffs, grid, 0)))
    out.append(_res("integration_by_parts", abs(lhs - rhs),
                    1e-12 * abs(lhs) + 1e-300))
    return out


def suite_cancellations(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    from .diagnostics import (compute_I_terms, compute_J_terms,
                              energy_identity_residual,
                              transport_annihilation_check)
    from .dynamics import FlowState

    rng = np.random.default_rng(seed)
    grid = SpectralGrid(16, 1.0, 1.5)
    worst_i36 = worst_j6 = worst_tr = worst_en = 0.0
    neg_control = np.inf
    for _ in range(20):
        u = random_solenoidal(grid, rng, max_radius=6.0, amplitude=0.5)
        E = random_div_tfree_tensor(grid, rng, max_radius=6.0, amplitude=0.5)
        st = FlowState(u, E)
        I = compute_I_terms(st)
        J = compute_J_terms(st)
        iscale = sum(abs(v) for v in I) + 1e-300
        jscale = sum(abs(v) for v in J) + 1e-300
        worst_i36 = max(worst_i36, abs(I[2] + I[5]) / iscale)
        worst_j6 = max(worst_j6, abs(J[5]) / jscale)
        tr = transport_annihilation_check(st)
        tscale = u.l2_norm() * st.E.l2_norm() * grid.n ** 2 + 1e-300
        worst_tr = max(worst_tr, abs(tr) / tscale)
        en = energy_identity_residual(st)
        escale = u.l2_norm() ** 2 + E.l2_norm() ** 2
        worst_en = max(worst_en, abs(en) / escale)
        ubad = random_field(grid, "vector", rng, max_radius=6.0, amplitude=0.5)
        neg = abs(transport_annihilation_check(FlowState(ubad, E)))
        neg_control = min(neg_control, neg / tscale)
    out = [
        _res("I3_plus_I6", worst_i36, 1e-12),
        _res("J6_pressure_orthogonality", worst_j6, 1e-12),
        _res("transport_annihilation", worst_tr, 1e-12),
        _res("energy_identity", worst_en, 1e-12),
        # the non-solenoidal control must NOT cancel
        _res("transport_negative_control", 1e-8 / max(neg_control, 1e-300),
             1.0, "reciprocal margin: control stayed nonzero"),
    ]
    return out


def suite_cone(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    worst_b = worst_ab = worst_pyth = 0.0
    for _ in range(10_000):
        eta = rng.standard_normal(3)
        w = rng.standard_normal(3)
        a, b = split_eta(eta, w)
        ne = np.linalg.norm(eta)
        cosang = float(eta @ w) / (ne * np.linalg.norm(w))
        sinang = np.sqrt(max(0.0, 1.0 - cosang * cosang))
        worst_b = max(worst_b, abs(np.linalg.norm(b) - ne * sinang))
        worst_ab = max(worst_ab, abs(float(a @ b)))
        worst_pyth = max(worst_pyth, abs(
            np.linalg.norm(a) ** 2 + np.linalg.norm(b) ** 2 - ne * ne))
    out = [
        _res("split_eta_rejection_norm", worst_b, 1e-13),
        _res("split_eta_orthogonal", worst_ab, 1e-13),
        _res("split_eta_pythagoras", worst_pyth, 1e-12),
    ]
    grid = SpectralGrid(16, 1.0, 1.5)
    f = random_field(grid, "vector", rng)
    out.append(_res("halfspace_cone_leaks_nothing",
                    cone_leakage(f, Cone((0.0, 0.0, 1.0), np.pi / 2)), 0.0))
    cone = Cone((0.0, 0.0, 1.0), 0.4)
    g = random_cone_field(grid, "vector", cone, rng, max_radius=6.0)
    out.append(_res("cone_field_leakage", cone_leakage(g, cone), 1e-15))
    return out


def suite_data(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    from .initial_data import (build_E0, build_profile_f, build_u0,
                               build_v_lambda, verify_lambda_scaling)
    from .spectral import hermitian_defect

    out = []
    grid = SpectralGrid(16, 1.5, 1.5)
    f = build_profile_f(2.5, grid)
    out.append(_res("profile_norm", abs(f.l2_norm() - 2.5), 1e-12))
    outside = grid.k_squared() >= 1.0
    out.append(_res("profile_support",
                    float(np.max(np.abs(f.coeffs[..., outside]))), 0.0))
    v = build_v_lambda(f, 4.0)
    out.append(_res("v_lambda_divergence", divergence_linf(v),
                    1e-14 * max(np.max(np.abs(v.coeffs)), 1e-300) * grid.n))
    u0 = build_u0(v)
    out.append(_res("u0_hermitian", hermitian_defect(u0),
                    1e-14 * max(np.max(np.abs(u0.coeffs)), 1e-300)))

    rep = verify_lambda_scaling(f, [4, 8, 16])
    out.append(_res("scaling_exponent", abs(rep.exponent - 0.5), 0.1))
    out.append(_res("weighted_norm_decreasing",
                    0.0 if rep.weighted_decreasing else 1.0, 0.0))
    out.append(_res("support_angles", 0.0 if rep.angles_within_bound else 1.0,
                    0.0))

    small = build_profile_f(1e-6, SpectralGrid(16, 0.75, 1.5))
    u0s = build_u0(build_v_lambda(small, 8.0))
    _, erep = build_E0(u0s, 0.25, 0.025)
    out.append(_res("E0_det_gate", erep.det_residual, 1e-6))
    out.append(_res("E0_divET_gate", erep.div_ET_residual, 1e-8))
    out.append(_res("E0_curl_gate", erep.curl_residual, 1e-6))
    out.append(_res("E0_leakage_gate", erep.cone_leakage, 1e-8))
    return out


def suite_dynamics(seed: int = DEFAULT_SEED) -> list[CheckResult]:
    from .dynamics import FlowState, StepperConfig, simulate, step

    rng = np.random.default_rng(seed)
    out = []

    # viscous decay of a single mode with the nonlinearity exactly zero
    grid = SpectralGrid(8, 1.0, 2.0)
    c = np.zeros((3, 8, 8, 8), dtype=np.complex128)
    c[0, 0, 0, 2] = 0.5
    c[0, 0, 0, -2] = 0.5
    u = SpectralField(grid, c)
    E = SpectralField.zeros(grid, "tensor")
    st = FlowState(u, E, mu=0.8)
    cfg = StepperConfig(dt=0.01, evolve_E=False)
    for _ in range(50):
        st = step(st, cfg)
    exact = 0.5 * np.exp(-0.8 * 4.0 * 0.5)
    got = st.u.coeffs[0, 0, 0, 2]
    out.append(_res("heat_decay", abs(got - exact), 1e-12))

    # single-mode linearization against the matrix-exponential oracle
    amp = 1e-8
    c = np.zeros((3, 8, 8, 8), dtype=np.complex128)
    e = np.zeros((3, 3, 8, 8, 8), dtype=np.complex128)
    kvec = np.array([1.0, 2.0, 0.0])
    u_mode = np.array([2.0, -1.0, 0.5j]) * amp
    u_mode -= kvec * (kvec @ u_mode) / (kvec @ kvec)
    e_mode = (rng.standard_normal((3, 3))
              + 1j * rng.standard_normal((3, 3))) * amp
    e_mode -= np.outer(kvec, kvec @ e_mode) / (kvec @ kvec)  # k_i e_ij = 0
    c[:, 1, 2, 0] = u_mode
    c[:, -1, -2, 0] = np.conj(u_mode)
    e[:, :, 1, 2, 0] = e_mode
    e[:, :, -1, -2, 0] = np.conj(e_mode)
    st = FlowState(SpectralField(grid, c), SpectralField(grid, e), mu=1.0)
    cfg = StepperConfig(dt=0.005)
    for _ in range(100):
        st = step(st, cfg)
    uref, eref = propagate_linear_mode(kvec, u_mode, e_mode, 0.5, 1.0)
    err = max(np.max(np.abs(st.u.coeffs[:, 1, 2, 0] - uref)),
              np.max(np.abs(st.E.coeffs[:, :, 1, 2, 0] - eref)))
    out.append(_res("linear_mode_oracle", err / amp, 1e-8))

    # Richardson order measurement on a nonlinear trajectory
    grid = SpectralGrid(8, 1.0, 1.5)
    u = random_solenoidal(grid, rng, max_radius=3.0, amplitude=0.4)
    E = random_div_tfree_tensor(grid, rng, max_radius=3.0, amplitude=0.4)

    def advance(dt, nsteps):
        s = FlowState(u, E)
        cfg = StepperConfig(dt=dt)
        for _ in range(nsteps):
            s = step(s, cfg)
        return s

    f1 = advance(0.02, 10)
    f2 = advance(0.01, 20)
    f4 = advance(0.005, 40)
    d1 = np.max(np.abs(f1.u.coeffs - f2.u.coeffs))
    d2 = np.max(np.abs(f2.u.coeffs - f4.u.coeffs))
    order = np.log2(d1 / d2)
    out.append(_res("richardson_order", abs(order - 4.0), 0.2,
                    f"measured order {order:.3f}"))
    out.append(_res("divergence_drift", divergence_linf(f4.u),
                    1e-13 * max(np.max(np.abs(f4.u.coeffs)), 1e-300) * grid.n))

    # blowup guard: an enormous state must be flagged, not propagated
    ub = random_solenoidal(grid, rng, max_radius=3.0, amplitude=1e8)
    Eb = random_div_tfree_tensor(grid, rng, max_radius=3.0, amplitude=1e8)
    try:
        res = simulate(FlowState(ub, Eb), StepperConfig(dt=0.05), 1.0,
                       sample_every=20)
        flagged = res.outcome in ("blowup", "guard")
    except BlowupDetected:
        flagged = True
    out.append(_res("blowup_flagged", 0.0 if flagged else 1.0, 0.0))
    return out


SUITES = {
    "spectral": suite_spectral,
    "cancellations": suite_cancellations,
    "cone": suite_cone,
    "data": suite_data,
    "dynamics": suite_dynamics,
}


def run_suite(name: str, seed: int = DEFAULT_SEED) -> list[CheckResult]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return SUITES[name](seed)
