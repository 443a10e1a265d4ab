"""
unit tests for boundary sections and the fourier algebra
"""

import numpy as np
import pytest

from diskbvp.core.errors import DimensionMismatchError, GridResolutionError
from diskbvp.core.fields import (
    BoundarySection,
    PolarGridFunction,
    analyze,
    antiderivative,
    apply_N,
    derivative,
    galerkin_matrix,
    grid_angles,
    inner_product,
    multiply_sections,
    norm,
    project_H,
    synthesize,
)


class TestBoundarySection:
    """test section construction and validation"""

    def test_shape_is_checked(self):
        """test a coefficient array of the wrong shape is rejected"""
        with pytest.raises(DimensionMismatchError):
            BoundarySection(1, 2, np.zeros((2, 4)))

    def test_non_finite_rejected(self):
        """test nan coefficients are rejected"""
        coeffs = np.zeros((2, 3), dtype=complex)
        coeffs[0, 1] = np.nan
        with pytest.raises(DimensionMismatchError):
            BoundarySection(1, 1, coeffs)

    def test_vector_layout(self):
        """test stacking is component-major with normal components first"""
        f = BoundarySection.single_mode(2, 1, component=2, k=-1, value=3.0)
        vector = f.vector()
        assert vector.size == f.dim == 12
        assert vector[2 * 3 + 0] == 3.0
        assert BoundarySection.from_vector(2, 1, vector).tangential[0, 0] == 3.0

    def test_single_mode_outside_truncation(self):
        with pytest.raises(DimensionMismatchError):
            BoundarySection.single_mode(1, 2, 0, 3)

    def test_constant_section(self):
        """test constants sit on the k = 0 slot"""
        f = BoundarySection.constant([1.0, 2.0], K=3)
        assert f.m == 1
        assert f.coeffs[1, 3] == 2.0
        assert np.count_nonzero(f.coeffs) == 2

    def test_random_real_section(self, rng):
        """test real random sections are conjugate symmetric"""
        f = BoundarySection.random(2, 5, rng, real=True, mean_zero=True)
        assert f.is_real()
        assert np.all(f.coeffs[:, 5] == 0)
        assert np.max(np.abs(synthesize(f, 32).imag)) < 1e-12

    def test_real_part(self, rng):
        f = BoundarySection.random(1, 3, rng)
        real = f.real_part()
        assert real.is_real()
        assert np.allclose(synthesize(real, 16), synthesize(f, 16).real)

    def test_incompatible_sum(self):
        with pytest.raises(DimensionMismatchError):
            BoundarySection.zeros(1, 2) + BoundarySection.zeros(1, 3)

    def test_sections_are_immutable(self):
        f = BoundarySection.zeros(1, 1)
        with pytest.raises(ValueError):
            f.coeffs[0, 0] = 1.0


class TestFourierAlgebra:
    """test synthesis, analysis and the pointwise operations"""

    def test_analyze_inverts_synthesize(self, rng):
        f = BoundarySection.random(1, 6, rng)
        g = analyze(synthesize(f, 40), 6)
        assert np.allclose(g.coeffs, f.coeffs, atol=1e-13)

    def test_coarse_grid_rejected(self, rng):
        """test a grid with fewer than 2K+1 points raises"""
        f = BoundarySection.random(1, 6, rng)
        with pytest.raises(GridResolutionError):
            synthesize(f, 12)

    def test_derivative_of_cosine(self):
        """test d/dtheta cos theta = -sin theta"""
        f = BoundarySection(1, 2, np.array([[0, 0.5, 0, 0.5, 0], [0, 0, 0, 0, 0]]))
        values = synthesize(derivative(f), 16)[0].real
        assert np.allclose(values, -np.sin(grid_angles(16)), atol=1e-13)

    def test_antiderivative_inverts_derivative(self, rng):
        f = project_H(BoundarySection.random(1, 4, rng))
        assert np.allclose(antiderivative(derivative(f)).coeffs, f.coeffs, atol=1e-14)

    def test_project_h_removes_means(self, rng):
        f = project_H(BoundarySection.random(2, 3, rng))
        assert np.all(f.coeffs[:, 3] == 0)

    def test_norm_matches_inner_product(self, rng):
        f = BoundarySection.random(1, 3, rng)
        assert norm(f) ** 2 == pytest.approx(inner_product(f, f).real)

    def test_norm_is_l2_on_the_circle(self):
        """test ||1|| = sqrt(2 pi) on the unit circle"""
        f = BoundarySection.constant([1.0, 0.0], 2)
        assert norm(f) == pytest.approx(np.sqrt(2 * np.pi))

    def test_apply_N_signs(self, rng):
        f = BoundarySection.random(1, 2, rng)
        g = apply_N(f)
        assert np.allclose(g.normal, -f.normal)
        assert np.allclose(g.tangential, f.tangential)

    def test_multiply_by_identity(self, rng):
        f = BoundarySection.random(1, 4, rng)
        identity = np.eye(2)[:, :, None].astype(complex)
        assert np.allclose(multiply_sections(identity, f).coeffs, f.coeffs, atol=1e-14)

    def test_galerkin_matrix_of_constant(self):
        """test a constant matrix field acts as a kronecker product"""
        entries = np.array([[2.0, 1.0], [0.0, 3.0]], dtype=complex)[:, :, None]
        M = galerkin_matrix(entries, 2)
        assert np.allclose(M, np.kron(entries[:, :, 0], np.eye(5)))

    def test_galerkin_matches_pointwise_product(self, rng):
        """test the toeplitz matrix reproduces the truncated pointwise product"""
        entries = np.zeros((2, 2, 3), dtype=complex)
        entries[:, :, 1] = np.eye(2)
        entries[0, 1, 2] = 0.25
        f = BoundarySection.random(1, 5, rng)
        expected = multiply_sections(entries, f)
        assert np.allclose(galerkin_matrix(entries, 5) @ f.vector(), expected.vector(), atol=1e-13)


class TestPolarGridFunction:
    """test polar samples"""

    def test_radii_must_lie_in_disk(self):
        with pytest.raises(DimensionMismatchError):
            PolarGridFunction(np.array([0.5, 1.5]), grid_angles(4), np.zeros((1, 2, 4)))

    def test_radii_must_increase(self):
        with pytest.raises(DimensionMismatchError):
            PolarGridFunction(np.array([0.8, 0.5]), grid_angles(4), np.zeros((1, 2, 4)))

    def test_frame_layout(self):
        grid = PolarGridFunction(np.array([0.5, 1.0]), grid_angles(4), np.ones((2, 2, 4)), "grad")
        frame = grid.to_frame()
        assert list(frame.columns) == ["r", "theta", "component", "re", "im"]
        assert len(frame) == 16
        assert set(frame["component"]) == {0, 1}
