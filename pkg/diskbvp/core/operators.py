"""
dense matrices of D, N, multiplication operators and the generators D_0, D_0-tilde
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple

import numpy as np

from .coefficients import CoefficientField, evaluation_size
from .errors import ConditioningError, DimensionMismatchError, NearSingularError
from .fields import BoundarySection, galerkin_matrix, mode_range

logger = logging.getLogger(__name__)


class OperatorTag(Enum):
    """what an operator matrix represents"""
    D = "d"
    N = "n"
    MULT = "mult"
    D0 = "d0"
    D0_TILDE = "d0_tilde"
    PROJECTION = "projection"
    FUNCTION_OF_D0 = "function_of_d0"


@dataclass(eq=False)
class OperatorMatrix:
    """dense operator on stacked fourier coefficients (component-major, modes -K..K)"""
    m: int
    K: int
    entries: np.ndarray
    tag: OperatorTag
    sigma: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.shape != (self.dim, self.dim):
            raise DimensionMismatchError(
                f"operator of shape {self.entries.shape} does not act on m={self.m}, K={self.K}"
            )

    @property
    def dim(self) -> int:
        return 2 * self.m * (2 * self.K + 1)

    def apply(self, f: BoundarySection) -> BoundarySection:
        if (f.m, f.K) != (self.m, self.K):
            raise DimensionMismatchError(
                f"operator on (m={self.m}, K={self.K}) applied to section (m={f.m}, K={f.K})"
            )
        return BoundarySection.from_vector(self.m, self.K, self.entries @ f.vector())

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.m, self.K, self.entries.conj().T, self.tag, self.sigma, f"{self.label}*")

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries, 2))

    def __matmul__(self, other: "OperatorMatrix") -> np.ndarray:
        return self.entries @ other.entries


def h_indices(m: int, K: int) -> np.ndarray:
    """stacked indices of the mean-zero subspace H (modes k != 0)"""
    width = 2 * K + 1
    return np.array([c * width + j for c in range(2 * m) for j in range(width) if j != K])


def constant_basis(m: int, K: int) -> np.ndarray:
    """the 2m orthonormal columns spanning H-perp (the k = 0 coefficients)"""
    width = 2 * K + 1
    E = np.zeros((2 * m * width, 2 * m), dtype=complex)
    for c in range(2 * m):
        E[c * width + K, c] = 1.0
    return E


def normal_mask(m: int, K: int) -> np.ndarray:
    """True on stacked indices of normal components"""
    return np.arange(2 * m * (2 * K + 1)) < m * (2 * K + 1)


def assemble_D(m: int, K: int) -> OperatorMatrix:
    """D = [[0, -d_tau], [d_tau, 0]], block diagonal over modes"""
    width = 2 * K + 1
    entries = np.zeros((2 * m * width, 2 * m * width), dtype=complex)
    ik = 1j * mode_range(K)
    for j in range(m):
        normal = j * width + np.arange(width)
        tangential = (m + j) * width + np.arange(width)
        entries[normal, tangential] = -ik
        entries[tangential, normal] = ik
    return OperatorMatrix(m, K, entries, OperatorTag.D, label="D")


def assemble_N(m: int, K: int) -> OperatorMatrix:
    """N = -1 on normal, +1 on tangential components"""
    signs = np.where(normal_mask(m, K), -1.0, 1.0)
    return OperatorMatrix(m, K, np.diag(signs).astype(complex), OperatorTag.N, label="N")


def assemble_mult(B: CoefficientField, K: int) -> OperatorMatrix:
    """galerkin matrix of pointwise multiplication by B"""
    return OperatorMatrix(B.m, K, galerkin_matrix(B.entries, K), OperatorTag.MULT, label="M_B")


def inverse_D(m: int, K: int) -> OperatorMatrix:
    """inverse of D on H, extended by 0 on H-perp"""
    D = assemble_D(m, K).entries
    idx = h_indices(m, K)
    entries = np.zeros_like(D)
    entries[np.ix_(idx, idx)] = np.linalg.inv(D[np.ix_(idx, idx)])
    return OperatorMatrix(m, K, entries, OperatorTag.D, label="D^-1")


def assemble_D0(B0: CoefficientField, sigma: float, K: int) -> Tuple[OperatorMatrix, OperatorMatrix]:
    """D_0 = D M_B0 + sigma N and D_0-tilde = M_B0 D - sigma N"""
    D = assemble_D(B0.m, K).entries
    N = assemble_N(B0.m, K).entries
    M = galerkin_matrix(B0.entries, K)
    if B0.kappa_garding is not None and B0.kappa_garding <= 0:
        logger.warning(f"assembling D_0 from non-accretive coefficients (kappa={B0.kappa_garding:.3e})")
    D0 = OperatorMatrix(B0.m, K, D @ M + sigma * N, OperatorTag.D0, sigma, "D_0")
    D0_tilde = OperatorMatrix(B0.m, K, M @ D - sigma * N, OperatorTag.D0_TILDE, sigma, "D_0~")
    logger.info(f"assembled D_0 of size {D0.dim} (m={B0.m}, K={K}, sigma={sigma})")
    return D0, D0_tilde


@dataclass(eq=False)
class HodgeProjections:
    """P1 onto H along B0^{-1} H-perp, and P1-tilde onto B0 H along H-perp"""
    P1: OperatorMatrix
    P0: OperatorMatrix
    P1_tilde: OperatorMatrix
    P0_tilde: OperatorMatrix
    condition_number: float = 0.0


def hodge_projections(B0: CoefficientField, sigma: float, K: int,
                      cond_limit: float = 1e8) -> HodgeProjections:
    """hodge splittings L2 = H + B0^{-1} H-perp and L2 = B0 H + H-perp (sigma enters only the tags)"""
    m = B0.m
    M = galerkin_matrix(B0.entries, K)
    E = constant_basis(m, K)
    idx = h_indices(m, K)
    condition = float(np.linalg.cond(M[np.ix_(idx, idx)]))
    if not np.isfinite(condition) or condition > cond_limit:
        raise ConditioningError(
            f"P_H B0 is ill-conditioned on H (cond={condition:.3e})", condition_number=condition
        )
    Minv = np.linalg.inv(M)
    Z = Minv @ E
    P0 = Z @ np.linalg.solve(E.conj().T @ Z, E.conj().T)
    P0_tilde = E @ np.linalg.solve(E.conj().T @ Minv @ E, E.conj().T @ Minv)
    identity = np.eye(M.shape[0])

    def make(entries, label):
        return OperatorMatrix(m, K, entries, OperatorTag.PROJECTION, sigma, label)

    return HodgeProjections(
        P1=make(identity - P0, "P1"),
        P0=make(P0, "P0"),
        P1_tilde=make(identity - P0_tilde, "P1~"),
        P0_tilde=make(P0_tilde, "P0~"),
        condition_number=condition,
    )


def harmonic_mean_projection(B0: CoefficientField, K: int) -> OperatorMatrix:
    """P0-tilde g = (mean B0^{-1})^{-1} mean(B0^{-1} g), from the pointwise inverse"""
    n = evaluation_size(max(B0.K, K))
    inverse_values = np.linalg.inv(B0.values(n))
    inverse = CoefficientField.from_values(inverse_values, max(B0.K, 2 * K))
    G = galerkin_matrix(inverse.entries, K)
    E = constant_basis(B0.m, K)
    mean_inverse = inverse.entries[:, :, inverse.K]
    entries = E @ np.linalg.solve(mean_inverse, E.conj().T @ G)
    return OperatorMatrix(B0.m, K, entries, OperatorTag.PROJECTION, label="harmonic mean")


def h_to_tilde(h: BoundarySection, B0: CoefficientField, sigma: float) -> BoundarySection:
    """mean-zero h-tilde with P_H h-tilde = P_H B0 h + sigma D^{-1} N h"""
    M = galerkin_matrix(B0.entries, h.K)
    N = assemble_N(h.m, h.K).entries
    Dinv = inverse_D(h.m, h.K).entries
    vector = M @ h.vector() + sigma * (Dinv @ (N @ h.vector()))
    result = BoundarySection.from_vector(h.m, h.K, vector)
    coeffs = np.array(result.coeffs)
    coeffs[:, h.K] = 0.0
    return result.with_coeffs(coeffs)


def fit_region_angle(eigenvalues: np.ndarray, sigma: float) -> float:
    """smallest omega with tan(omega)^2 x^2 >= y^2 + sigma^2 for every eigenvalue x + iy"""
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    if eigenvalues.size == 0:
        return 0.0
    x = np.abs(eigenvalues.real)
    y = np.abs(eigenvalues.imag)
    reach = np.sqrt(y ** 2 + sigma ** 2)
    with np.errstate(divide="ignore"):
        angles = np.where(x > 0, np.arctan2(reach, x), np.pi / 2)
    return float(np.max(angles))


@dataclass(eq=False)
class SpectrumReport:
    """eigenvalues of a generator with the fitted double hyperbolic region"""
    eigenvalues: np.ndarray
    restricted: np.ndarray  # eigenvalues on H (sigma = 0) or all of them
    omega: float
    sigma: float
    min_abs_real: float
    violations: int = 0
    in_region: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def summary(self) -> Dict[str, float]:
        return {
            "count": int(self.eigenvalues.size),
            "omega": self.omega,
            "min_abs_real": self.min_abs_real,
            "violations": self.violations,
        }


def spectrum(D0: OperatorMatrix, omega: Optional[float] = None, tol: float = 1e-9) -> SpectrumReport:
    """dense eigensolve with a region check against a fitted (or supplied) angle"""
    sigma = D0.sigma or 0.0
    eigenvalues = np.linalg.eigvals(D0.entries)
    scale = max(1.0, D0.norm())
    if sigma == 0.0:
        idx = h_indices(D0.m, D0.K)
        restricted = np.linalg.eigvals(D0.entries[np.ix_(idx, idx)])
    else:
        restricted = eigenvalues
    fitted = fit_region_angle(restricted, sigma) if omega is None else omega
    x, y = np.abs(restricted.real), np.abs(restricted.imag)
    in_region = np.tan(fitted) ** 2 * x ** 2 >= (y ** 2 + sigma ** 2) * (1.0 - tol) - tol * scale
    violations = int(np.count_nonzero(~in_region))
    min_abs_real = float(np.min(x, initial=np.inf))
    if violations:
        logger.warning(f"{violations} eigenvalues outside the hyperbolic region of angle {fitted:.4f}")
    return SpectrumReport(eigenvalues, restricted, fitted, sigma, min_abs_real, violations, in_region)


@dataclass(eq=False)
class ResolventReport:
    """(lambda - D_0)^{-1} with its norm and the region bound for a fitted angle"""
    lam: complex
    matrix: np.ndarray
    norm: float
    bound: float  # region bound for the fitted angle, inf when it does not apply
    on_H: bool
    reach: float = 0.0  # sqrt(y^2 + sigma^2)

    @property
    def constant(self) -> float:
        """observed C in ||X|| <= C / sqrt(y^2 + sigma^2)"""
        return self.norm * self.reach if self.reach > 0 else self.norm


def resolvent(D0: OperatorMatrix, lam: complex, on_H: Optional[bool] = None,
              omega: Optional[float] = None, tol: float = 1e-10) -> ResolventReport:
    """solve (lambda - D_0) X = I, restricted to H when sigma = 0"""
    sigma = D0.sigma or 0.0
    on_H = (sigma == 0.0) if on_H is None else on_H
    if on_H:
        idx = h_indices(D0.m, D0.K)
        A = D0.entries[np.ix_(idx, idx)]
    else:
        A = D0.entries
    eigenvalues = np.linalg.eigvals(A)
    distance = float(np.min(np.abs(eigenvalues - lam)))
    if distance < tol * max(1.0, float(np.linalg.norm(A, 2))):
        raise NearSingularError(
            f"lambda={lam} lies within {distance:.3e} of the spectrum", distance=distance
        )
    X = np.linalg.solve(lam * np.eye(A.shape[0]) - A, np.eye(A.shape[0]))
    if omega is None:
        relevant = eigenvalues if on_H or sigma != 0.0 else eigenvalues[np.abs(eigenvalues) > tol]
        omega = fit_region_angle(relevant, sigma)
    lam = complex(lam)
    reach = float(np.sqrt(lam.imag ** 2 + sigma ** 2))
    bound = np.inf
    if 0.0 < omega < np.pi / 2:
        denominator = reach / np.tan(omega) - abs(lam.real)
        if denominator > 0:
            bound = 1.0 / denominator
    return ResolventReport(lam, X, float(np.linalg.norm(X, 2)), float(bound), on_H, reach)
