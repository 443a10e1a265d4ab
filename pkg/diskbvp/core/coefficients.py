"""
pointwise matrix algebra on coefficient fields: the hat transform, conjugate
coefficients, accretivity constants, radial discrepancies and pullbacks
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import DegenerateCoefficientError, DimensionMismatchError
from .fields import (
    BoundarySection,
    analyze_array,
    galerkin_matrix,
    grid_angles,
    mode_range,
    multiply_sections,
    synthesize_array,
)

logger = logging.getLogger(__name__)

TRUNCATION_WARN = 1e-10
SINGULAR_TOL = 1e-12


def evaluation_size(K: int) -> int:
    """dealiased evaluation grid for pointwise inverses"""
    return 4 * (2 * K + 1)


@dataclass(eq=False)
class CoefficientField:
    """2m x 2m matrix field on the circle as truncated fourier series"""
    m: int
    K: int
    entries: np.ndarray  # (2m, 2m, 2K+1)
    kappa_garding: Optional[float] = None  # cached garding constant on H_1
    kappa_pointwise: Optional[float] = None  # cached pointwise constant
    truncation_residual: float = 0.0  # sup error of the last re-analysis

    def __post_init__(self):
        self.entries = np.array(self.entries, dtype=complex)
        expected = (2 * self.m, 2 * self.m, 2 * self.K + 1)
        if self.entries.shape != expected:
            raise DimensionMismatchError(
                f"coefficient entries have shape {self.entries.shape}, expected {expected}"
            )
        if not np.all(np.isfinite(self.entries)):
            raise DegenerateCoefficientError("coefficient field has non-finite entries")

    @property
    def is_accretive(self) -> bool:
        return self.kappa_garding is not None and self.kappa_garding > 0

    @classmethod
    def constant(cls, matrix: np.ndarray, K: int = 0) -> "CoefficientField":
        matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
        if matrix.shape[0] != matrix.shape[1] or matrix.shape[0] % 2:
            raise DimensionMismatchError(f"constant coefficient of shape {matrix.shape}")
        entries = np.zeros(matrix.shape + (2 * K + 1,), dtype=complex)
        entries[:, :, K] = matrix
        return cls(matrix.shape[0] // 2, K, entries)

    @classmethod
    def identity(cls, m: int, K: int = 0) -> "CoefficientField":
        return cls.constant(np.eye(2 * m), K)

    @classmethod
    def from_values(cls, values: np.ndarray, K: int) -> "CoefficientField":
        """analyze grid samples (n, 2m, 2m) and record the truncation residual"""
        values = np.asarray(values, dtype=complex)
        stacked = np.moveaxis(values, 0, -1)
        entries = analyze_array(stacked, K)
        resynth = synthesize_array(entries, values.shape[0])
        residual = float(np.max(np.abs(resynth - stacked), initial=0.0))
        return cls(values.shape[1] // 2, K, entries, truncation_residual=residual)

    @classmethod
    def from_function(cls, func: Callable[[np.ndarray], np.ndarray], m: int, K: int,
                      n: Optional[int] = None) -> "CoefficientField":
        """sample func(theta) -> (n, 2m, 2m) on a dealiased grid"""
        n = n or evaluation_size(K)
        values = np.asarray(func(grid_angles(n)), dtype=complex)
        if values.shape != (n, 2 * m, 2 * m):
            raise DimensionMismatchError(f"coefficient function returned shape {values.shape}")
        return cls.from_values(values, K)

    def values(self, n: Optional[int] = None) -> np.ndarray:
        """grid samples (n, 2m, 2m) at uniform angles"""
        n = n or evaluation_size(self.K)
        return np.moveaxis(synthesize_array(self.entries, n), -1, 0)

    def evaluate(self, theta: np.ndarray) -> np.ndarray:
        """direct trigonometric evaluation at arbitrary angles"""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        phases = np.exp(1j * np.outer(theta, mode_range(self.K)))
        return np.einsum("tk,abk->tab", phases, self.entries)

    def with_K(self, K: int) -> "CoefficientField":
        """zero-pad or truncate to modes -K..K"""
        entries = np.zeros((2 * self.m, 2 * self.m, 2 * K + 1), dtype=complex)
        common = min(K, self.K)
        entries[:, :, K - common:K + common + 1] = self.entries[:, :, self.K - common:self.K + common + 1]
        return CoefficientField(self.m, K, entries)

    def adjoint(self) -> "CoefficientField":
        """pointwise conjugate transpose"""
        return CoefficientField(self.m, self.K, np.conj(self.entries.transpose(1, 0, 2)[:, :, ::-1]))

    def flip(self) -> "CoefficientField":
        """N B N: sign change of the off-diagonal blocks"""
        signs = np.ones(2 * self.m)
        signs[: self.m] = -1.0
        return CoefficientField(self.m, self.K, self.entries * np.outer(signs, signs)[:, :, None])

    def scaled(self, factor: complex) -> "CoefficientField":
        return CoefficientField(self.m, self.K, self.entries * factor)

    def _aligned(self, other: "CoefficientField"):
        if self.m != other.m:
            raise DimensionMismatchError(f"coefficient sizes m={self.m} and m={other.m}")
        K = max(self.K, other.K)
        return self.with_K(K).entries, other.with_K(K).entries, K

    def __add__(self, other: "CoefficientField") -> "CoefficientField":
        a, b, K = self._aligned(other)
        return CoefficientField(self.m, K, a + b)

    def __sub__(self, other: "CoefficientField") -> "CoefficientField":
        a, b, K = self._aligned(other)
        return CoefficientField(self.m, K, a - b)

    def bandwidth(self, tol: float = 1e-14) -> int:
        significant = np.nonzero(np.max(np.abs(self.entries), axis=(0, 1)) > tol)[0]
        if significant.size == 0:
            return 0
        return int(np.max(np.abs(mode_range(self.K)[significant])))

    def sup_norm(self, n: Optional[int] = None) -> float:
        """sup over the evaluation grid of the pointwise spectral norm"""
        return float(np.max(np.linalg.norm(self.values(n), ord=2, axis=(1, 2))))

    def block(self, name: str) -> np.ndarray:
        """entries of one m x m block: 'nn', 'nt', 'tn' or 'tt' (normal/tangential)"""
        m = self.m
        rows = slice(0, m) if name[0] == "n" else slice(m, 2 * m)
        cols = slice(0, m) if name[1] == "n" else slice(m, 2 * m)
        return self.entries[rows, cols]

    def is_block_diagonal(self, tol: float = 1e-13) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.entries))))
        return bool(max(np.max(np.abs(self.block("nt"))), np.max(np.abs(self.block("tn")))) <= tol * scale)

    def is_hermitean(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.entries - self.adjoint().entries)) <= tol * max(1.0, self.sup_norm()))

    def multiply(self, f: BoundarySection) -> BoundarySection:
        """pointwise product with a section"""
        return multiply_sections(self.entries, f)


def _check_invertible(blocks: np.ndarray, angles: np.ndarray, what: str) -> None:
    singular_values = np.linalg.svd(blocks, compute_uv=False)
    ratio = singular_values[:, -1] / np.maximum(singular_values[:, 0], np.finfo(float).tiny)
    worst = int(np.argmin(ratio))
    if ratio[worst] < SINGULAR_TOL:
        raise DegenerateCoefficientError(
            f"{what} is singular at theta={angles[worst]:.6f}",
            theta=float(angles[worst]),
            reciprocal_condition=float(ratio[worst]),
        )


def _reanalyze(values: np.ndarray, K: int, what: str) -> CoefficientField:
    result = CoefficientField.from_values(values, K)
    if result.truncation_residual > TRUNCATION_WARN:
        logger.warning(f"{what} truncated at K={K} with residual {result.truncation_residual:.3e}")
    return result


def hat_transform(A: CoefficientField) -> CoefficientField:
    """the self-inverse block transform A -> A-hat turning the equation into an ODE"""
    m = A.m
    n = evaluation_size(A.K)
    values = A.values(n)
    a, b = values[:, :m, :m], values[:, :m, m:]
    c, d = values[:, m:, :m], values[:, m:, m:]
    _check_invertible(a, grid_angles(n), "normal-normal block A_nn")
    a_inv = np.linalg.inv(a)
    hat = np.empty_like(values)
    hat[:, :m, :m] = a_inv
    hat[:, :m, m:] = -a_inv @ b
    hat[:, m:, :m] = c @ a_inv
    hat[:, m:, m:] = d - c @ a_inv @ b
    return _reanalyze(hat, A.K, "hat transform")


def conjugate_coefficients(A: CoefficientField) -> CoefficientField:
    """J^t A^{-1} J, the coefficients of the conjugate equation on the disk"""
    m = A.m
    n = evaluation_size(A.K)
    values = A.values(n)
    _check_invertible(values, grid_angles(n), "coefficient matrix")
    J = np.block([[np.zeros((m, m)), -np.eye(m)], [np.eye(m), np.zeros((m, m))]])
    conj = J.T[None] @ np.linalg.inv(values) @ J[None]
    return _reanalyze(conj, A.K, "conjugate coefficients")


def h1_indices(m: int, K: int) -> np.ndarray:
    """stacked indices of H_1: every coefficient except the tangential means"""
    width = 2 * K + 1
    excluded = {c * width + K for c in range(m, 2 * m)}
    return np.array([i for i in range(2 * m * width) if i not in excluded])


def accretivity_garding(A: CoefficientField, K: Optional[int] = None) -> float:
    """smallest value of Re(M_A g, g)/|g|^2 over the discretized H_1; cached on A"""
    K = A.K if K is None else K
    M = galerkin_matrix(A.entries, K)
    keep = h1_indices(A.m, K)
    herm = 0.5 * (M + M.conj().T)[np.ix_(keep, keep)]
    kappa = float(np.linalg.eigvalsh(herm)[0])
    A.kappa_garding = kappa
    if kappa <= 0:
        logger.warning(f"coefficients are not accretive on H_1 (kappa={kappa:.3e})")
    return kappa


def accretivity_pointwise(A: CoefficientField, n: Optional[int] = None) -> float:
    """min over the grid of the smallest eigenvalue of the hermitean part"""
    values = A.values(n)
    herm = 0.5 * (values + np.conj(values.transpose(0, 2, 1)))
    kappa = float(np.min(np.linalg.eigvalsh(herm)[:, 0]))
    A.kappa_pointwise = kappa
    return kappa


def pullback_coefficients(A: CoefficientField, jacobian: np.ndarray) -> CoefficientField:
    """|J| J^{-1} A(rho(x)) J^{-t} for A sampled at rho(x) on the jacobian's grid"""
    jacobian = np.asarray(jacobian, dtype=float)
    n = jacobian.shape[0]
    if jacobian.shape != (n, 2, 2):
        raise DimensionMismatchError(f"jacobian grid of shape {jacobian.shape}, expected ({n}, 2, 2)")
    det = np.linalg.det(jacobian)
    worst = int(np.argmin(np.abs(det)))
    if abs(det[worst]) < SINGULAR_TOL:
        raise DegenerateCoefficientError(
            f"jacobian is singular at theta={grid_angles(n)[worst]:.6f}",
            theta=float(grid_angles(n)[worst]),
        )
    J = np.einsum("tij,ab->tiajb", jacobian, np.eye(A.m)).reshape(n, 2 * A.m, 2 * A.m)
    J_inv = np.linalg.inv(J)
    pulled = np.abs(det)[:, None, None] * J_inv @ A.values(n) @ J_inv.transpose(0, 2, 1)
    return _reanalyze(pulled, A.K, "pullback")


@dataclass(eq=False)
class Discrepancy:
    """E_t = B_0 - B_t sampled on a time grid"""
    base: CoefficientField  # B_0, the hat transform of the boundary trace
    times: np.ndarray
    samples: List[CoefficientField] = field(default_factory=list)
    carleson_norm: Optional[float] = None
    sup_norm: Optional[float] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.samples) != self.times.size:
            raise DimensionMismatchError(
                f"{len(self.samples)} discrepancy samples for {self.times.size} times"
            )
        if self.sup_norm is None:
            self.sup_norm = max((s.sup_norm() for s in self.samples), default=0.0)

    @property
    def m(self) -> int:
        return self.base.m

    @classmethod
    def zero(cls, base: CoefficientField, times: np.ndarray) -> "Discrepancy":
        zero = CoefficientField.constant(np.zeros((2 * base.m, 2 * base.m)), 0)
        return cls(base, times, [zero for _ in np.atleast_1d(times)], sup_norm=0.0)

    @classmethod
    def from_profile(cls, base: CoefficientField, times: np.ndarray,
                     profile: Callable[[float], CoefficientField]) -> "Discrepancy":
        """discrepancy given directly as t -> E_t"""
        times = np.asarray(times, dtype=float)
        return cls(base, times, [profile(float(t)) for t in times])

    def is_zero(self, tol: float = 0.0) -> bool:
        return bool(self.sup_norm is not None and self.sup_norm <= tol)

    def bandwidth_K(self) -> int:
        return max([self.base.K] + [s.K for s in self.samples])

    def scaled(self, factor: float) -> "Discrepancy":
        return Discrepancy(self.base, self.times, [s.scaled(factor) for s in self.samples])

    def truncated(self, tau: float) -> "Discrepancy":
        """chi_{t < tau} E"""
        zero = CoefficientField.constant(np.zeros((2 * self.m, 2 * self.m)), 0)
        samples = [s if t < tau else zero for t, s in zip(self.times, self.samples)]
        return Discrepancy(self.base, self.times, samples)

    def adjoint(self) -> "Discrepancy":
        """discrepancy of the adjoint coefficients: N E_t^* N around N B_0^* N"""
        return Discrepancy(
            self.base.adjoint().flip(),
            self.times,
            [s.adjoint().flip() for s in self.samples],
        )

    def at(self, t: float) -> CoefficientField:
        idx = int(np.argmin(np.abs(self.times - t)))
        return self.samples[idx]


@dataclass(eq=False)
class RadialCoefficient:
    """coefficients A(r, theta) in the moving frame with boundary trace A(1, .)"""
    m: int
    K: int
    func: Callable[[float, np.ndarray], np.ndarray]  # (r, theta array) -> (n, 2m, 2m)
    name: str = "radial"

    def field_at(self, r: float, n: Optional[int] = None) -> CoefficientField:
        return CoefficientField.from_function(lambda theta: self.func(r, theta), self.m, self.K, n)

    def boundary(self) -> CoefficientField:
        return self.field_at(1.0)

    def evaluate(self, r: float, theta: np.ndarray) -> np.ndarray:
        return np.asarray(self.func(r, np.atleast_1d(theta)), dtype=complex)

    @classmethod
    def radially_independent(cls, A1: CoefficientField, name: str = "radially independent") -> "RadialCoefficient":
        return cls(A1.m, A1.K, lambda r, theta: A1.evaluate(theta), name)

    def discrepancy(self, times: np.ndarray) -> Discrepancy:
        """E_t = hat(A_1) - hat(A_{e^{-t}}) on the time grid"""
        base = hat_transform(self.boundary())
        samples = [base - hat_transform(self.field_at(float(np.exp(-t)))) for t in np.asarray(times)]
        logger.info(f"built discrepancy of '{self.name}' on {len(samples)} times")
        return Discrepancy(base, times, samples)


def dini_square_modulus(A: RadialCoefficient, depths: Optional[Sequence[float]] = None,
                        n: Optional[int] = None) -> float:
    """integral of w_A(t)^2 dt/t, w_A(t) = sup{|A(rx) - A(x)| : 1 - r < t}"""
    depths = np.geomspace(1e-4, 1.0, 65) if depths is None else np.asarray(depths, dtype=float)
    boundary_values = A.boundary().values(n)
    n_grid = boundary_values.shape[0]
    deviation = np.array([
        np.max(np.linalg.norm(A.field_at(1.0 - t, n_grid).values(n_grid) - boundary_values, ord=2, axis=(1, 2)))
        for t in depths
    ])
    modulus = np.maximum.accumulate(deviation)
    log_t = np.log(depths)
    return float(trapezoid(modulus ** 2, log_t))
