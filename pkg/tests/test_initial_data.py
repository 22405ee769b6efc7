"""Initial-data factory tests.

Covers:
- the compactly supported Fourier profile and its normalization
- the shifted curl construction and its cone support
- Hermitian velocity datum
- frozen-velocity transport for the deformation datum and its gates
- the amplitude scaling law across the shift parameter
"""

import numpy as np
import pytest

from coneflow.cones import Cone, cone_leakage, max_support_angle, \
    support_modes
from coneflow.errors import ConstructionError, GridError, PreconditionError
from coneflow.initial_data import (
    build_E0,
    build_profile_f,
    build_u0,
    build_v_lambda,
    theta_lambda,
    verify_lambda_scaling,
)
from coneflow.spectral import (
    SpectralField,
    SpectralGrid,
    divergence_linf,
    gradient,
    hermitian_defect,
    to_real_physical,
)


class TestThetaLambda:
    def test_reference_value(self):
        assert np.isclose(theta_lambda(8), 0.1253278311680654)

    def test_monotone_decreasing(self):
        vals = [theta_lambda(x) for x in (2, 4, 8, 16, 32)]
        assert all(b < a for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("lam", [1.0, 0.5, -3])
    def test_domain(self, lam):
        with pytest.raises(ValueError):
            theta_lambda(lam)


class TestProfile:
    def test_norm_and_components(self, grid16):
        f = build_profile_f(2.5, grid16)
        assert np.isclose(f.l2_norm(), 2.5)
        assert np.array_equal(f.coeffs[0], f.coeffs[1])
        assert np.max(np.abs(f.coeffs[2])) == 0.0

    def test_support_in_unit_ball(self, grid16):
        f = build_profile_f(1.0, grid16)
        idx = support_modes(f)
        k = grid16.freqs()[idx] / grid16.box_scale
        assert np.all(np.sum(k * k, axis=1) < 1.0)

    def test_zero_mass_gives_zero_field(self, grid16):
        f = build_profile_f(0.0, grid16)
        assert f.l2_norm() == 0.0

    def test_band_must_resolve_unit_ball(self):
        with pytest.raises(GridError):
            build_profile_f(1.0, SpectralGrid(8, box_scale=8.0))


class TestVLambda:
    def grid(self):
        return SpectralGrid(16, box_scale=0.75, pad_factor=1.5)

    def test_divergence_free_exactly(self):
        f = build_profile_f(1.0, self.grid())
        v = build_v_lambda(f, 8)
        assert divergence_linf(v) < 1e-14

    def test_support_within_angle_bound(self):
        grid = self.grid()
        f = build_profile_f(1.0, grid)
        v = build_v_lambda(f, 8)
        axis = Cone((0.0, 0.0, 1.0), np.pi / 2)
        quantum = np.arcsin(min(1.0, 1.0 / (8 * grid.box_scale)))
        assert max_support_angle(v, axis) <= theta_lambda(8) + quantum

    def test_norm_preserved_by_curl_shift(self):
        # |i xi x f / |xi|| = |f| componentwise only for f orthogonal to
        # xi; here just check the norm is finite and nonzero
        f = build_profile_f(1.0, self.grid())
        v = build_v_lambda(f, 8)
        assert v.l2_norm() > 0.1

    def test_nonintegral_shift_rejected(self):
        f = build_profile_f(1.0, SpectralGrid(16, box_scale=0.7))
        with pytest.raises(GridError):
            build_v_lambda(f, 8)

    def test_band_too_small_rejected(self):
        f = build_profile_f(1.0, SpectralGrid(16, box_scale=1.0))
        with pytest.raises(GridError):
            build_v_lambda(f, 16)   # (16+1)*1 > 8

    def test_profile_support_must_fit_unit_ball(self):
        grid = self.grid()
        coeffs = np.zeros((3,) + grid.shape, dtype=complex)
        coeffs[0, 0, 0, 2] = 1.0   # |k| = 2/0.75 > 1
        with pytest.raises(PreconditionError):
            build_v_lambda(SpectralField(grid, coeffs), 8)


class TestU0:
    def test_hermitian_and_divergence_free(self):
        grid = SpectralGrid(16, box_scale=0.75, pad_factor=1.5)
        v = build_v_lambda(build_profile_f(1.0, grid), 8)
        u0 = build_u0(v)
        assert hermitian_defect(u0) < 1e-15
        assert divergence_linf(u0) < 1e-14
        phys = to_real_physical(u0)
        assert phys.dtype == np.float64

    def test_half_energy_of_one_sided_field(self):
        # v is supported on one nappe only, so its Hermitian part
        # carries exactly half the energy
        grid = SpectralGrid(16, box_scale=0.75, pad_factor=1.5)
        v = build_v_lambda(build_profile_f(1.0, grid), 8)
        u0 = build_u0(v)
        assert np.isclose(u0.l2_norm(), v.l2_norm() / np.sqrt(2.0))


class TestE0:
    def degenerate_pair(self, m0=1e-6):
        # L = 0.75, lambda = 8: the profile collapses to the origin mode
        # and u0 is a single shear mode, so transport is exactly linear
        grid = SpectralGrid(16, box_scale=0.75, pad_factor=1.5)
        u0 = build_u0(build_v_lambda(build_profile_f(m0, grid), 8))
        return grid, u0

    def test_exact_shear_datum(self):
        grid, u0 = self.degenerate_pair()
        E0, rep = build_E0(u0, 0.5, 0.05)
        want = 0.5 * gradient(u0).coeffs
        scale = max(np.max(np.abs(want)), 1e-300)
        assert np.max(np.abs(E0.coeffs - want)) / scale < 1e-13
        assert rep.det_residual == 0.0
        assert rep.div_ET_residual == 0.0
        assert rep.curl_residual == 0.0
        assert rep.cone_leakage == 0.0
        assert rep.steps == 10

    def test_report_roundtrips_to_dict(self):
        _, u0 = self.degenerate_pair()
        _, rep = build_E0(u0, 0.25, 0.05)
        d = rep.as_dict()
        assert d["t_end"] == 0.25
        assert set(d) >= {"det_residual", "div_ET_residual",
                          "curl_residual", "cone_leakage", "h2_norm"}

    def test_nonintegral_steps_rejected(self):
        _, u0 = self.degenerate_pair()
        with pytest.raises(ValueError):
            build_E0(u0, 0.25, 0.03)

    def test_nonpositive_horizon_rejected(self):
        _, u0 = self.degenerate_pair()
        with pytest.raises(ValueError):
            build_E0(u0, -0.5, 0.05)

    def test_unstable_dt_rejected(self):
        grid, u0 = self.degenerate_pair(m0=50.0)
        with pytest.raises(ValueError):
            build_E0(u0, 10.0, 2.5)

    def test_leakage_gate_raises_construction_error(self):
        _, u0 = self.degenerate_pair()
        narrow = Cone((1.0, 0.0, 0.0), 0.05)  # support is on the z axis
        with pytest.raises(ConstructionError) as exc_info:
            build_E0(u0, 0.5, 0.05, cone=narrow)
        assert "cone_leakage" in exc_info.value.residuals

    def test_nonvector_rejected(self, grid16, rng):
        from coneflow.random_fields import random_field
        T = random_field(grid16, "tensor", rng)
        with pytest.raises(Exception):
            build_E0(T, 0.5, 0.05)


class TestLambdaScaling:
    def test_exponent_and_monotonicity(self):
        grid = SpectralGrid(16, box_scale=1.5, pad_factor=1.5)
        f = build_profile_f(1.0, grid)
        rep = verify_lambda_scaling(f, (4, 8, 16))
        assert 0.45 <= rep.exponent <= 0.55
        assert rep.weighted_decreasing
        assert rep.angles_within_bound
        assert [r.lam for r in rep.rows] == [4, 8, 16]
        for row in rep.rows:
            assert row.n >= 2 * (row.lam + 1) * 1.5

    def test_needs_three_lambdas(self):
        grid = SpectralGrid(16, box_scale=1.5, pad_factor=1.5)
        f = build_profile_f(1.0, grid)
        with pytest.raises(ValueError):
            verify_lambda_scaling(f, (4, 8))
