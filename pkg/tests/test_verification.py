"""
unit tests for the check registry, the norms and the finite-difference oracle
"""

import numpy as np
import pytest

from diskbvp.api.types import CheckResult, Ledger, Suite
from diskbvp.core.errors import ConfigError, SpectralGapError
from diskbvp.core.fields import PolarGridFunction
from diskbvp.data.samples import cosine_diagonal, identity_coefficient
from diskbvp.solver.bvp import solve_dirichlet
from diskbvp.verification.battery import (
    Check,
    CheckMetadata,
    CheckRegistry,
    Observation,
    identity_battery,
    registry,
    run_check,
)
from diskbvp.verification.norms import nt_maximal
from diskbvp.verification.oracle import compare_with_oracle, fd_oracle


def _check(run, tolerance=1e-6):
    return Check(CheckMetadata("stub", Suite.IDENTITIES, "stub check", tolerance), run)


class TestRegistry:
    """test check registration and lookup"""

    def test_every_suite_has_checks(self):
        for suite in Suite:
            assert registry.get_checks_by_suite(suite)

    def test_check_ids(self):
        assert registry.get_check("identities.hat_involution") is not None
        assert registry.get_check("oracle.oracle_baseline") is not None
        assert registry.get_check("missing.check") is None

    def test_decorator_registration(self):
        local = CheckRegistry()

        @local.check("answer", Suite.NORMS, "constant observation", 1.0)
        def _answer(config, rng):
            return Observation(0.5)

        assert [c.check_id for c in local.get_all_checks()] == ["norms.answer"]
        assert local.get_checks_by_suite(Suite.IDENTITIES) == []


class TestRunCheck:
    """test how observations become ledger lines"""

    def test_pass_and_fail(self, small_config):
        assert run_check(_check(lambda config, rng: Observation(1e-8)), small_config).passed
        assert not run_check(_check(lambda config, rng: Observation(1e-3)), small_config).passed

    def test_trend_failure(self, small_config):
        result = run_check(_check(lambda config, rng: Observation(0.0, trend_ok=False)), small_config)
        assert not result.passed
        assert result.details["trend_ok"] is False

    def test_nan_fails(self, small_config):
        assert not run_check(_check(lambda config, rng: Observation(float("nan"))), small_config).passed

    def test_numeric_error_recorded(self, small_config):
        def _raise(config, rng):
            raise SpectralGapError("no gap", gap=0.0)

        result = run_check(_check(_raise), small_config)
        assert not result.passed
        assert np.isnan(result.observed)
        assert result.details["error"]["error"] == "SpectralGapError"
        assert result.details["error"]["details"] == {"gap": 0.0}

    def test_streams_are_reproducible(self, small_config):
        draw = _check(lambda config, rng: Observation(float(rng.random()), {}), tolerance=1.0)
        assert run_check(draw, small_config).observed == run_check(draw, small_config).observed


class TestBattery:
    """test a few inexpensive registered checks end to end"""

    @pytest.mark.parametrize("check_id", [
        "identities.hat_adjoint",
        "identities.semigroup_modes",
        "norms.carleson_monotone",
        "oracle.oracle_constant",
    ])
    def test_registered_check_passes(self, small_config, check_id):
        result = run_check(registry.get_check(check_id), small_config)
        assert result.passed, result.details

    def test_unknown_suite(self, small_config):
        with pytest.raises(ConfigError):
            identity_battery(small_config, ["unknown"])

    def test_ledger_summary(self):
        ledger = Ledger(["identities"], [
            CheckResult("identities", "a", True, 0.0, 1.0),
            CheckResult("identities", "b", False, 2.0, 1.0),
        ])
        summary = ledger.to_dict()
        assert not ledger.passed
        assert summary["failures"] == 1
        assert [r["name"] for r in summary["results"]] == ["a", "b"]


class TestNorms:
    """test the non-tangential maximal function"""

    def test_unit_modulus(self, identity, cosine):
        """test |grad (r cos theta)| = 1 gives N = 1 everywhere"""
        grad = solve_dirichlet(cosine, identity).grad
        result = nt_maximal(grad)
        assert np.allclose(result.values, 1.0, atol=1e-8)
        assert result.norm == pytest.approx(np.sqrt(2 * np.pi), rel=1e-8)

    def test_homogeneous(self, identity, cosine):
        grad = solve_dirichlet(cosine, identity).grad
        doubled = PolarGridFunction(grad.radii, grad.angles, 2.0 * grad.values, "grad")
        assert nt_maximal(doubled).norm == pytest.approx(2.0 * nt_maximal(grad).norm)


class TestOracle:
    """test the finite-difference reference solver"""

    def test_harmonic_baseline(self, identity):
        errors = []
        for n_r, n_theta in [(16, 32), (32, 64)]:
            grid = fd_oracle(identity, np.cos, n_r, n_theta)
            R, T = np.meshgrid(grid.radii, grid.angles, indexing="ij")
            errors.append(float(np.max(np.abs(grid.values[0] - R * np.cos(T)))))
        assert errors[1] < 1e-3
        assert errors[1] < errors[0]

    def test_constant_datum(self):
        grid = fd_oracle(cosine_diagonal(1), lambda theta: np.full(theta.shape, 2.5), 16, 32)
        assert np.max(np.abs(grid.values[0] - 2.5)) < 1e-12

    def test_spectral_agreement(self, identity, cosine):
        solution = solve_dirichlet(cosine, identity)
        comparison = compare_with_oracle(solution, fd_oracle(identity, cosine, 32, 64))
        assert comparison.relative_l2 < 1e-3
        assert comparison.n_theta == 64

    def test_vector_datum_rejected(self):
        with pytest.raises(ValueError):
            fd_oracle(identity_coefficient(2), np.zeros((2, 3)), 8, 16)
