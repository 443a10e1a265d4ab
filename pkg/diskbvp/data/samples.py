"""
seeded coefficient and discrepancy samples for tests and the verification battery
"""

import logging
from typing import Optional

import numpy as np

from ..core.calculus import CalculusHandle, chi_plus
from ..core.coefficients import (
    CoefficientField, Discrepancy, RadialCoefficient, accretivity_garding, evaluation_size,
)
from ..core.fields import BoundarySection, mode_range

logger = logging.getLogger(__name__)


def _random_entries(m: int, bandwidth: int, rng: np.random.Generator, real: bool) -> np.ndarray:
    shape = (2 * m, 2 * m, 2 * bandwidth + 1)
    entries = rng.standard_normal(shape) + (0.0 if real else 1j * rng.standard_normal(shape))
    if real:
        # real-valued on the circle: c_{-k} = conj(c_k)
        entries = 0.5 * (entries + np.conj(entries[:, :, ::-1]))
    return entries / (1.0 + np.abs(mode_range(bandwidth)))[None, None, :]


def _normalized(field: CoefficientField, amplitude: float) -> CoefficientField:
    size = field.sup_norm(evaluation_size(field.K))
    return field.scaled(amplitude / size) if size > 0 else field


def identity_coefficient(m: int = 1, K: int = 0) -> CoefficientField:
    field = CoefficientField.identity(m, K)
    accretivity_garding(field)
    return field


def random_accretive(m: int, K: int, rng: np.random.Generator, amplitude: float = 0.5,
                     bandwidth: Optional[int] = None, real: bool = False) -> CoefficientField:
    """I + P with sup |P| = amplitude < 1, hence pointwise accretive"""
    bandwidth = min(K, 2) if bandwidth is None else bandwidth
    perturbation = _normalized(CoefficientField(m, bandwidth, _random_entries(m, bandwidth, rng, real)), amplitude)
    field = (CoefficientField.identity(m, bandwidth) + perturbation).with_K(K)
    accretivity_garding(field)
    return field


def random_hermitean(m: int, K: int, rng: np.random.Generator, amplitude: float = 0.5,
                     bandwidth: Optional[int] = None) -> CoefficientField:
    """pointwise hermitean I + P with sup |P| = amplitude"""
    bandwidth = min(K, 2) if bandwidth is None else bandwidth
    raw = CoefficientField(m, bandwidth, _random_entries(m, bandwidth, rng, False))
    symmetric = (raw + raw.adjoint()).scaled(0.5)
    field = (CoefficientField.identity(m, bandwidth) + _normalized(symmetric, amplitude)).with_K(K)
    accretivity_garding(field)
    return field


def random_block(m: int, K: int, rng: np.random.Generator, amplitude: float = 0.5,
                 bandwidth: Optional[int] = None) -> CoefficientField:
    """diag(a_perp, a_par) with vanishing mixed blocks"""
    field = random_accretive(m, K, rng, amplitude, bandwidth)
    entries = np.array(field.entries)
    entries[:m, m:] = 0.0
    entries[m:, :m] = 0.0
    block = CoefficientField(m, field.K, entries)
    accretivity_garding(block)
    return block


def cosine_diagonal(K: int = 1, amplitude: float = 0.3) -> CoefficientField:
    """the real scalar example diag(1 + amplitude cos theta, 1)"""
    entries = np.zeros((2, 2, 2 * K + 1), dtype=complex)
    entries[0, 0, K] = 1.0
    entries[1, 1, K] = 1.0
    if K >= 1:
        entries[0, 0, K - 1] = 0.5 * amplitude
        entries[0, 0, K + 1] = 0.5 * amplitude
    field = CoefficientField(1, K, entries)
    accretivity_garding(field)
    return field


def radial_perturbation(A1: CoefficientField, epsilon: float, rng: np.random.Generator,
                        bandwidth: Optional[int] = None, real: bool = False) -> RadialCoefficient:
    """A(r, theta) = A_1(theta) + epsilon (1 - r) C(theta) with sup |C| = 1"""
    bandwidth = min(A1.K, 2) if bandwidth is None else bandwidth
    C = _normalized(CoefficientField(A1.m, bandwidth, _random_entries(A1.m, bandwidth, rng, real)), 1.0)

    def func(r: float, theta: np.ndarray) -> np.ndarray:
        return A1.evaluate(theta) + epsilon * (1.0 - r) * C.evaluate(theta)

    logger.info(f"radial perturbation of size {epsilon:.3e}")
    return RadialCoefficient(A1.m, A1.K, func, f"radial perturbation eps={epsilon:g}")


def step_discrepancy(base: CoefficientField, times: np.ndarray, epsilon: float,
                     matrix: Optional[np.ndarray] = None, cutoff: float = 1.0) -> Discrepancy:
    """E_t = epsilon chi_{t < cutoff} M for a fixed matrix M (default: identity)"""
    m = base.m
    matrix = np.eye(2 * m) if matrix is None else np.asarray(matrix, dtype=complex)
    active = CoefficientField.constant(epsilon * matrix, 0)
    zero = CoefficientField.constant(np.zeros((2 * m, 2 * m)), 0)
    return Discrepancy.from_profile(base, times, lambda t: active if t < cutoff else zero)


def hardy_sample(handle: CalculusHandle, rng: np.random.Generator) -> BoundarySection:
    """E_0^+ applied to a random mean-zero section"""
    f = BoundarySection.random(handle.m, handle.K, rng, mean_zero=True)
    return BoundarySection.from_vector(handle.m, handle.K, handle.matrix(chi_plus()) @ f.vector())


def cosine_datum(m: int, K: int) -> np.ndarray:
    """cos theta in every component, as (m, 2K+1) coefficients"""
    datum = np.zeros((m, 2 * K + 1), dtype=complex)
    if K >= 1:
        datum[:, K - 1] = 0.5
        datum[:, K + 1] = 0.5
    return datum


def random_datum(m: int, K: int, rng: np.random.Generator, mean_zero: bool = False,
                 decay: float = 1.0) -> np.ndarray:
    """real-valued boundary datum with e^{-decay |k|} coefficient profile"""
    section = BoundarySection.random(m, K, rng, real=True, mean_zero=mean_zero, decay=decay)
    return np.array(section.normal)
