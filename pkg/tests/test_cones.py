"""Cone geometry and the orthogonal wavevector splitting.

Covers:
- Cone validation and double-cone membership
- lattice membership masks and leakage measurement
- support queries on fields
- split_eta: parallel/orthogonal decomposition and |b| = |eta| sin(angle)
"""

import numpy as np
import pytest

from coneflow.cones import (
    Cone,
    cone_angle,
    cone_contains,
    cone_leakage,
    lattice_membership,
    max_support_angle,
    split_eta,
    support_modes,
    support_radius,
)
from coneflow.errors import ConeError
from coneflow.random_fields import random_cone_field, random_field
from coneflow.spectral import SpectralField, SpectralGrid


class TestConeValidation:
    def test_axis_normalized(self):
        c = Cone((0.0, 0.0, 2.0), 0.3)
        assert np.isclose(np.linalg.norm(c.axis), 1.0)

    @pytest.mark.parametrize("angle", [0.0, -0.1, np.pi / 2 + 0.01, np.pi])
    def test_half_angle_range(self, angle):
        with pytest.raises(ConeError):
            Cone((0, 0, 1), angle)

    def test_zero_axis_rejected(self):
        with pytest.raises(ConeError):
            Cone((0, 0, 0), 0.3)


class TestMembership:
    def test_axis_member_both_nappes(self):
        c = Cone((0, 0, 1), 0.2)
        assert cone_contains((0, 0, 5), c)
        assert cone_contains((0, 0, -5), c)

    def test_orthogonal_direction_outside(self):
        c = Cone((0, 0, 1), 0.2)
        assert not cone_contains((1, 0, 0), c)

    def test_angle_measured_to_nearest_nappe(self):
        c = Cone((0, 0, 1), 0.5)
        a = cone_angle((0, 1, 1), c)
        assert np.isclose(a, np.pi / 4)
        assert np.isclose(cone_angle((0, 1, -1), c), np.pi / 4)

    def test_boundary_inclusive(self):
        c = Cone((0, 0, 1), np.pi / 4)
        assert cone_contains((0, 1, 1), c)

    def test_zero_vector_belongs(self):
        # the mean mode never counts as leakage
        c = Cone((0, 0, 1), 0.1)
        assert cone_contains((0, 0, 0), c)

    def test_halfspace_cone_contains_everything(self, rng):
        c = Cone((0, 0, 1), np.pi / 2)
        pts = rng.standard_normal((100, 3))
        assert np.all(cone_contains(pts, c))


class TestLatticeAndLeakage:
    def test_membership_mask_shape_and_axis(self, grid16):
        c = Cone((0, 0, 1), 0.2)
        mask = lattice_membership(grid16, c)
        assert mask.shape == grid16.shape
        assert mask[0, 0, 3]
        assert mask[0, 0, -3]
        assert not mask[3, 0, 0]

    def test_leakage_zero_for_cone_field(self, grid16, rng):
        c = Cone((0, 0, 1), 0.4)
        f = random_cone_field(grid16, "vector", c, rng)
        assert cone_leakage(f, c) == 0.0

    def test_leakage_detects_outside_mode(self, grid16):
        c = Cone((0, 0, 1), 0.2)
        coeffs = np.zeros(grid16.shape, dtype=complex)
        coeffs[0, 0, 4] = 1.0       # inside
        coeffs[4, 0, 0] = 0.5       # outside
        f = SpectralField(grid16, coeffs)
        # leakage is the energy fraction outside the double cone
        assert np.isclose(cone_leakage(f, c), 0.25 / 1.25)

    def test_halfspace_leaks_nothing(self, grid16, rng):
        c = Cone((0, 0, 1), np.pi / 2)
        f = random_field(grid16, "tensor", rng)
        assert cone_leakage(f, c) == 0.0


class TestSupportQueries:
    def test_support_modes_returns_storage_indices(self, grid8):
        coeffs = np.zeros(grid8.shape, dtype=complex)
        coeffs[1, 2, 3] = 1.0
        coeffs[0, 0, 5] = 2.0
        f = SpectralField(grid8, coeffs)
        idx = support_modes(f)
        assert sorted(map(tuple, idx)) == [(0, 0, 5), (1, 2, 3)]

    def test_support_threshold(self, grid8):
        coeffs = np.zeros(grid8.shape, dtype=complex)
        coeffs[1, 0, 0] = 1.0
        coeffs[0, 1, 0] = 1e-9
        f = SpectralField(grid8, coeffs)
        assert len(support_modes(f, rel_tol=1e-6)) == 1
        assert len(support_modes(f, rel_tol=1e-12)) == 2

    def test_max_support_angle(self, grid16):
        c = Cone((0, 0, 1), np.pi / 2)
        coeffs = np.zeros(grid16.shape, dtype=complex)
        coeffs[0, 3, 3] = 1.0  # 45 degrees off axis
        f = SpectralField(grid16, coeffs)
        assert np.isclose(max_support_angle(f, c), np.pi / 4)

    def test_support_radius(self, grid16):
        grid = SpectralGrid(16, box_scale=2.0)
        coeffs = np.zeros(grid.shape, dtype=complex)
        coeffs[0, 0, 4] = 1.0
        f = SpectralField(grid, coeffs)
        assert np.isclose(support_radius(f), 2.0)  # |k| = 4 / L


class TestSplitEta:
    def test_components_reassemble(self, rng):
        for _ in range(50):
            eta = rng.standard_normal(3)
            w = rng.standard_normal(3)
            a, b = split_eta(eta, w)
            assert np.allclose(a + b, eta, atol=1e-13)

    def test_a_parallel_b_orthogonal(self, rng):
        for _ in range(50):
            eta = rng.standard_normal(3)
            w = rng.standard_normal(3)
            a, b = split_eta(eta, w)
            assert np.linalg.norm(np.cross(a, w)) < 1e-12 * np.linalg.norm(w)
            assert abs(np.dot(b, w)) < 1e-12
            assert abs(np.dot(a, b)) < 1e-12

    def test_rejection_norm_is_sine(self, rng):
        # |b| = |eta| sin(angle(eta, w))
        for _ in range(50):
            eta = rng.standard_normal(3)
            w = rng.standard_normal(3)
            a, b = split_eta(eta, w)
            cosang = np.dot(eta, w) / (np.linalg.norm(eta) * np.linalg.norm(w))
            sinang = np.sqrt(max(0.0, 1.0 - cosang**2))
            assert np.isclose(np.linalg.norm(b),
                              np.linalg.norm(eta) * sinang, atol=1e-13)

    def test_parallel_eta_gives_zero_b(self):
        a, b = split_eta((0, 0, 3.0), (0, 0, 1.0))
        assert np.allclose(a, (0, 0, 3.0))
        assert np.linalg.norm(b) < 1e-15

    def test_zero_w_rejected(self):
        with pytest.raises(ConeError):
            split_eta((1.0, 0, 0), (0, 0, 0))
