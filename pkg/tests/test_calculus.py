"""
unit tests for the functional calculus of D_0 and D_0-tilde
"""

import numpy as np
import pytest

from diskbvp.core.calculus import (
    EIGEN_PATH,
    CalculusHandle,
    abs_value,
    block_anticommutator,
    chi_minus,
    chi_plus,
    dunford_cross_check,
    exp_abs,
    intertwine_check,
    kato_sqrt,
    named_function,
    sgn,
    similarity_residual,
    square_function_norm,
)
from diskbvp.core.coefficients import CoefficientField, hat_transform
from diskbvp.core.errors import DataSpaceError
from diskbvp.core.fields import BoundarySection, project_H
from diskbvp.core.operators import assemble_D

K = 3


@pytest.fixture
def plain(identity):
    return CalculusHandle.build(identity, 0.0, K)


@pytest.fixture
def perturbed(accretive):
    return CalculusHandle.build(hat_transform(accretive), 0.0, K)


class TestSpectralFunctions:
    """test the named functions and the extension to null directions"""

    def test_named_lookup(self):
        assert named_function("sgn").name == "sgn"
        assert named_function("exp_abs", 0.5).parameter == 0.5
        with pytest.raises(KeyError):
            named_function("log")

    def test_sgn_on_mode_one(self, plain):
        """test sgn(D) maps the normal mode-one coefficient to i times the tangential one"""
        f = BoundarySection.single_mode(1, K, 0, 1)
        g = plain.apply(sgn(), f)
        assert g.tangential[0, K + 1] == pytest.approx(1j)
        assert np.max(np.abs(g.normal)) < 1e-12

    def test_sgn_squares_to_identity(self, perturbed):
        S = perturbed.matrix(sgn())
        assert np.allclose(S @ S, np.eye(perturbed.dim), atol=1e-10)

    def test_projections_are_complementary(self, perturbed):
        P = perturbed.matrix(chi_plus())
        Q = perturbed.matrix(chi_minus())
        assert np.allclose(P + Q, np.eye(perturbed.dim), atol=1e-10)
        assert np.allclose(P @ P, P, atol=1e-10)

    def test_semigroup_property(self, perturbed):
        product = perturbed.matrix(exp_abs(0.3)) @ perturbed.matrix(exp_abs(0.5))
        assert np.allclose(product, perturbed.matrix(exp_abs(0.8)), atol=1e-10)

    def test_abs_of_D(self, plain):
        A = plain.matrix(abs_value())
        D = assemble_D(1, K).entries
        assert np.allclose(A @ A, D @ D, atol=1e-10)

    def test_eigen_path(self, plain):
        assert plain.path == EIGEN_PATH
        assert plain.has_gap
        assert plain.gap == pytest.approx(1.0)


class TestIntertwining:
    """test the relations between D_0 and D_0-tilde"""

    def test_identity(self, plain):
        assert intertwine_check(plain) < 1e-12

    def test_random_coefficients(self, perturbed):
        assert intertwine_check(perturbed) < 1e-8

    def test_shifted(self, accretive):
        handle = CalculusHandle.build(hat_transform(accretive), 1.0, K)
        assert intertwine_check(handle) < 1e-8

    def test_similarity(self, perturbed):
        assert similarity_residual(perturbed, sgn()) < 1e-8

    def test_dunford_integral(self, plain):
        assert dunford_cross_check(plain, exp_abs(0.5)) < 1e-6


class TestSquareFunction:
    """test the square function quadrature"""

    def test_identity_ratio(self, plain, rng):
        """test int |t k / (1 + t^2 k^2)|^2 dt/t = 1/2 on every mode"""
        f = project_H(BoundarySection.random(1, K, rng))
        report = square_function_norm(plain, f)
        assert report.ratio == pytest.approx(0.5, abs=1e-3)
        assert report.drift < 0.05

    def test_random_ratio_bounded(self, perturbed, rng):
        f = project_H(BoundarySection.random(1, K, rng))
        report = square_function_norm(perturbed, f)
        assert 0.05 < report.ratio < 20.0


class TestKatoSquareRoot:
    """test the square root of -h d/dtheta H d/dtheta"""

    def test_identity(self, rng):
        """test sqrt(-d^2) u has the norm of the derivative of u"""
        u = project_H(BoundarySection.random(1, K, rng)).normal
        result = kato_sqrt(CoefficientField.identity(1, 0), u)
        assert result.ratio == pytest.approx(1.0)
        assert result.tangential_residual < 1e-10

    def test_needs_block_coefficients(self, accretive):
        with pytest.raises(DataSpaceError):
            kato_sqrt(accretive, np.zeros((1, 2 * K + 1)))


class TestAnticommutator:
    """test 1/2 (E_0 N + N E_0) = sigma ((D B0)^2 + sigma^2)^{-1/2}"""

    def test_identity(self, identity):
        report = block_anticommutator(identity, 0.5, K)
        assert report.residual < 1e-10

    def test_needs_shift(self, identity):
        with pytest.raises(DataSpaceError):
            block_anticommutator(identity, 0.0, K)
