"""
unit tests for coefficient fields, the hat transform and discrepancies
"""

import numpy as np
import pytest

from diskbvp.core.carleson import carleson_norm, truncated_carleson_norms
from diskbvp.core.coefficients import (
    CoefficientField,
    Discrepancy,
    RadialCoefficient,
    accretivity_garding,
    accretivity_pointwise,
    conjugate_coefficients,
    dini_square_modulus,
    hat_transform,
    pullback_coefficients,
)
from diskbvp.core.errors import DegenerateCoefficientError, DimensionMismatchError
from diskbvp.data.samples import cosine_diagonal, radial_perturbation, random_hermitean, step_discrepancy


class TestCoefficientField:
    """test the coefficient container"""

    def test_shape_is_checked(self):
        with pytest.raises(DimensionMismatchError):
            CoefficientField(1, 1, np.zeros((2, 2, 4)))

    def test_odd_constant_rejected(self):
        with pytest.raises(DimensionMismatchError):
            CoefficientField.constant(np.eye(3))

    def test_with_K_pads_and_truncates(self, accretive):
        padded = accretive.with_K(12)
        assert padded.K == 12
        assert np.allclose(padded.with_K(8).entries, accretive.entries)

    def test_evaluate_matches_grid_values(self, accretive):
        n = 20
        theta = 2 * np.pi * np.arange(n) / n
        assert np.allclose(accretive.evaluate(theta), accretive.values(n), atol=1e-13)

    def test_adjoint_is_involution(self, accretive):
        assert np.allclose(accretive.adjoint().adjoint().entries, accretive.entries)

    def test_flip_is_involution(self, accretive):
        assert np.allclose(accretive.flip().flip().entries, accretive.entries)

    def test_hermitean_sample(self, rng):
        assert random_hermitean(1, 4, rng).is_hermitean()

    def test_block_views(self):
        A = CoefficientField.constant(np.array([[1.0, 2.0], [3.0, 4.0]]))
        assert A.block("nt")[0, 0, 0] == 2.0
        assert A.block("tn")[0, 0, 0] == 3.0
        assert not A.is_block_diagonal()
        assert cosine_diagonal(2).is_block_diagonal()

    def test_from_values_records_residual(self):
        """test sampling a non-polynomial records a truncation residual"""
        func = lambda theta: np.array([np.diag([np.exp(np.cos(t)), 1.0]) for t in theta])
        coarse = CoefficientField.from_function(func, 1, 1)
        fine = CoefficientField.from_function(func, 1, 12)
        assert coarse.truncation_residual > 1e-3
        assert fine.truncation_residual < 1e-10


class TestHatTransform:
    """test the block transform and the conjugate coefficients"""

    def test_identity_is_fixed(self, identity):
        assert np.allclose(hat_transform(identity).entries, identity.entries)

    def test_constant_matrix(self):
        """test the closed form of the hat transform for a constant 2 x 2 matrix"""
        a, b, c, d = 2.0, 0.5, -0.25, 3.0
        hat = hat_transform(CoefficientField.constant(np.array([[a, b], [c, d]])))
        expected = np.array([[1 / a, -b / a], [c / a, d - c * b / a]])
        assert np.allclose(hat.entries[:, :, 0], expected)

    def test_involution(self):
        """test hat(hat(A)) = A for diag(1 + 0.3 cos theta, 1)"""
        A = cosine_diagonal(32)
        twice = hat_transform(hat_transform(A))
        assert np.max(np.abs(twice.values() - A.values())) < 1e-12

    def test_involution_random(self, accretive):
        A = accretive.with_K(48)
        twice = hat_transform(hat_transform(A))
        assert np.max(np.abs(twice.values() - A.values())) < 1e-9

    def test_singular_normal_block(self):
        A = CoefficientField.constant(np.array([[0.0, 1.0], [-1.0, 1.0]]))
        with pytest.raises(DegenerateCoefficientError):
            hat_transform(A)

    def test_conjugate_of_identity(self, identity):
        assert np.allclose(conjugate_coefficients(identity).entries, identity.entries)

    def test_conjugate_of_diagonal(self):
        """test J^t diag(a, b)^{-1} J = diag(1/b, 1/a)"""
        conj = conjugate_coefficients(CoefficientField.constant(np.diag([2.0, 4.0])))
        assert np.allclose(conj.entries[:, :, 0], np.diag([0.25, 0.5]))


class TestAccretivity:
    """test the accretivity constants"""

    def test_identity(self, identity):
        assert accretivity_garding(identity.with_K(3)) == pytest.approx(1.0)
        assert identity.is_accretive

    def test_pointwise_cosine(self):
        """test min of 1 + 0.3 cos theta is 0.7"""
        A = cosine_diagonal(1)
        assert accretivity_pointwise(A) == pytest.approx(0.7, abs=1e-12)
        assert A.kappa_pointwise == pytest.approx(0.7, abs=1e-12)

    def test_garding_is_positive_for_samples(self, accretive):
        assert accretive.kappa_garding > 0

    def test_non_accretive_flagged(self):
        A = CoefficientField.constant(np.diag([1.0, -1.0]), 2)
        assert accretivity_garding(A) < 0
        assert not A.is_accretive


class TestPullback:
    """test the change of variables"""

    def test_identity_jacobian(self, accretive):
        n = 4 * (2 * accretive.K + 1)
        pulled = pullback_coefficients(accretive, np.repeat(np.eye(2)[None], n, axis=0))
        assert np.allclose(pulled.entries, accretive.entries, atol=1e-12)

    def test_rotation_of_identity(self, identity):
        """test a rotation leaves the identity invariant"""
        n = 8
        angle = 0.3
        rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        pulled = pullback_coefficients(identity, np.repeat(rotation[None], n, axis=0))
        assert np.allclose(pulled.entries[:, :, 0], np.eye(2))

    def test_singular_jacobian(self, identity):
        with pytest.raises(DegenerateCoefficientError):
            pullback_coefficients(identity, np.zeros((4, 2, 2)))


class TestDiscrepancy:
    """test radial discrepancies and the carleson norm"""

    def test_radially_independent_vanishes(self, accretive):
        radial = RadialCoefficient.radially_independent(accretive)
        E = radial.discrepancy(np.geomspace(1e-3, 5.0, 12))
        assert E.sup_norm < 1e-12
        assert dini_square_modulus(radial) < 1e-20

    def test_zero_discrepancy(self, identity):
        E = Discrepancy.zero(hat_transform(identity), np.geomspace(1e-3, 1.0, 5))
        assert E.is_zero()
        assert carleson_norm(E) == 0.0

    def test_sample_count_checked(self, identity):
        with pytest.raises(DimensionMismatchError):
            Discrepancy(identity, np.array([0.1, 0.2]), [identity])

    def test_truncation(self, identity):
        times = np.geomspace(1e-2, 4.0, 9)
        E = step_discrepancy(identity, times, 0.1)
        assert E.truncated(1e-3).is_zero()
        assert E.sup_norm == pytest.approx(0.1)

    def test_carleson_monotone_in_truncation(self, accretive, rng):
        radial = radial_perturbation(accretive, 0.05, rng)
        E = radial.discrepancy(np.geomspace(1e-3, 8.0, 40))
        norms = truncated_carleson_norms(E, [0.05, 0.2, 1.0, 10.0])
        assert np.all(np.diff(norms) >= -1e-14)
        assert norms[-1] == pytest.approx(carleson_norm(E))

    def test_truncation_precedes_whitney_sup(self, identity):
        """test values of E at t >= tau do not leak into ||chi_{t<tau} E||_C"""
        active = CoefficientField.constant(0.3 * np.eye(2))
        zero = CoefficientField.constant(np.zeros((2, 2)))
        times = 0.8 ** np.arange(40, -1, -1) * 4.0
        E = Discrepancy.from_profile(identity, times, lambda t: active if t >= 0.2 else zero)
        norms = truncated_carleson_norms(E, [0.15, 0.5])
        assert norms[0] == 0.0
        assert carleson_norm(E, tau=0.15) == 0.0
        assert norms[1] > 0.0

    def test_perturbation_scales_with_epsilon(self, accretive):
        """test the discrepancy of A_1 + eps (1 - r) C is O(eps)"""
        times = np.geomspace(1e-3, 2.0, 8)
        small = radial_perturbation(accretive, 1e-3, np.random.default_rng(5)).discrepancy(times)
        large = radial_perturbation(accretive, 1e-2, np.random.default_rng(5)).discrepancy(times)
        assert large.sup_norm > 5 * small.sup_norm
        assert large.sup_norm < 0.1
