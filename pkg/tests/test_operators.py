"""
unit tests for the boundary operators, hodge splittings, spectra and resolvents
"""

import numpy as np
import pytest

from diskbvp.core.coefficients import hat_transform
from diskbvp.core.errors import NearSingularError
from diskbvp.core.fields import BoundarySection, project_H
from diskbvp.core.operators import (
    assemble_D,
    assemble_D0,
    assemble_N,
    constant_basis,
    h_indices,
    h_to_tilde,
    harmonic_mean_projection,
    hodge_projections,
    inverse_D,
    resolvent,
    spectrum,
)

K = 4


class TestAssembly:
    """test the dense matrices of D, N and the generators"""

    def test_D_is_self_adjoint(self):
        D = assemble_D(2, K).entries
        assert np.allclose(D, D.conj().T)

    def test_D_eigenvalues(self):
        """test D has eigenvalues +-k on every mode"""
        eigenvalues = np.linalg.eigvalsh(assemble_D(1, K).entries)
        expected = np.sort([s * k for k in range(-K, K + 1) for s in (1, -1)])
        assert np.allclose(eigenvalues, expected)

    def test_inverse_D_on_H(self):
        idx = h_indices(1, K)
        product = inverse_D(1, K).entries @ assemble_D(1, K).entries
        assert np.allclose(product[np.ix_(idx, idx)], np.eye(idx.size))
        assert np.allclose(product @ constant_basis(1, K), 0.0)

    def test_N_squares_to_identity(self):
        N = assemble_N(1, K).entries
        assert np.allclose(N @ N, np.eye(N.shape[0]))

    def test_identity_generator(self, identity):
        D0, D0_tilde = assemble_D0(identity, 0.0, K)
        D = assemble_D(1, K).entries
        assert np.allclose(D0.entries, D)
        assert np.allclose(D0_tilde.entries, D)

    def test_adjoint_identity(self, accretive):
        """test (B0 D - sigma N)^* = D B0^* - sigma N"""
        sigma = 0.7
        _, D0_tilde = assemble_D0(accretive, sigma, K)
        D0_adjoint, _ = assemble_D0(accretive.adjoint(), sigma, K)
        assert np.max(np.abs(D0_tilde.adjoint().entries - D0_adjoint.entries)) < 1e-12

    def test_apply_checks_size(self, identity):
        D0, _ = assemble_D0(identity, 0.0, K)
        with pytest.raises(ValueError):
            D0.apply(BoundarySection.zeros(1, K + 1))


class TestHodgeProjections:
    """test the hodge splittings"""

    def test_complementary(self, accretive):
        B0 = hat_transform(accretive)
        P = hodge_projections(B0, 0.0, K)
        n = P.P1.dim
        assert np.allclose(P.P1.entries + P.P0.entries, np.eye(n))
        assert np.max(np.abs(P.P1.entries @ P.P0.entries)) < 1e-12
        assert np.linalg.matrix_rank(P.P0.entries, tol=1e-8) == 2
        assert np.linalg.matrix_rank(P.P0_tilde.entries, tol=1e-8) == 2

    def test_P1_maps_into_H(self, accretive, rng):
        P = hodge_projections(hat_transform(accretive), 0.0, K)
        f = BoundarySection.random(1, K, rng)
        image = P.P1.apply(f)
        assert np.max(np.abs(image.coeffs[:, K])) < 1e-12

    def test_identity_projects_on_constants(self, identity):
        E = constant_basis(1, K)
        P = hodge_projections(identity, 0.0, K)
        assert np.allclose(P.P0.entries, E @ E.conj().T)
        assert np.allclose(harmonic_mean_projection(identity, K).entries, E @ E.conj().T)

    def test_h_to_tilde_identity(self, identity, rng):
        h = project_H(BoundarySection.random(1, K, rng))
        assert np.allclose(h_to_tilde(h, identity, 0.0).coeffs, h.coeffs)

    def test_h_to_tilde_defining_identity(self, accretive, rng):
        """test D_0 h = D h-tilde for mean-zero h"""
        sigma = 1.0
        h = project_H(BoundarySection.random(1, K, rng))
        D0, _ = assemble_D0(accretive, sigma, K)
        tilde = h_to_tilde(h, accretive, sigma)
        D = assemble_D(1, K).entries
        assert np.max(np.abs(D0.entries @ h.vector() - D @ tilde.vector())) < 1e-11


class TestSpectrum:
    """test the spectra and the hyperbolic region"""

    def test_identity_on_H(self, identity):
        D0, _ = assemble_D0(identity, 0.0, K)
        report = spectrum(D0)
        assert report.min_abs_real == pytest.approx(1.0)
        assert report.omega == pytest.approx(0.0, abs=1e-7)
        assert report.violations == 0
        expected = np.sort([s * j for j in range(1, K + 1) for s in (1, -1) for _ in range(2)])
        assert np.allclose(np.sort(report.restricted.real), expected)

    def test_shifted_identity(self, identity):
        """test the eigenvalues of D + N are +-sqrt(1 + k^2)"""
        D0, _ = assemble_D0(identity, 1.0, K)
        report = spectrum(D0)
        expected = np.sort([np.sqrt(1.0 + k ** 2) for k in range(-K, K + 1) for _ in range(2)])
        assert np.allclose(np.sort(np.abs(report.eigenvalues)), expected)
        assert report.violations == 0
        assert report.summary()["count"] == D0.dim

    def test_random_region(self, accretive):
        report = spectrum(assemble_D0(hat_transform(accretive), 0.0, K)[0])
        assert report.violations == 0
        assert 0.0 <= report.omega < np.pi / 2
        assert report.min_abs_real > 0


class TestResolvent:
    """test resolvents of the generator"""

    def test_imaginary_axis(self, identity):
        """test ||(iy - D)^{-1}|| = 1 / sqrt(1 + y^2) on H"""
        D0, _ = assemble_D0(identity, 0.0, K)
        report = resolvent(D0, 2j)
        assert report.on_H
        assert report.norm == pytest.approx(1.0 / np.sqrt(5.0))

    def test_near_spectrum(self, identity):
        D0, _ = assemble_D0(identity, 0.0, K)
        with pytest.raises(NearSingularError):
            resolvent(D0, 1.0)

    def test_shifted_origin(self, identity):
        """test D + N is invertible on all of L2"""
        D0, _ = assemble_D0(identity, 1.0, K)
        report = resolvent(D0, 0.0)
        assert not report.on_H
        assert report.norm == pytest.approx(1.0)
