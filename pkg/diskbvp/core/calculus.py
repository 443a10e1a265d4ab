"""
bisectorial functional calculus of D_0 and D_0-tilde

b(T) = V diag(b(lambda)) W on a modal basis that covers the whole space: eigenvectors
of the generator on H (sigma = 0) or on L2 (sigma != 0), plus the 2m null directions
of the sigma = 0 splittings with their 0+ / 0- labels
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import trapezoid
from scipy.linalg import expm, funm, schur, solve_sylvester

from .coefficients import CoefficientField
from .errors import DataSpaceError, DimensionMismatchError, QuadratureError, SpectralGapError
from .fields import BoundarySection, galerkin_matrix, mode_range
from .operators import (
    OperatorMatrix,
    OperatorTag,
    assemble_D,
    assemble_D0,
    assemble_N,
    constant_basis,
    h_indices,
    hodge_projections,
    normal_mask,
)

logger = logging.getLogger(__name__)

EIGEN_PATH = "eigen"
SCHUR_PATH = "schur"


@dataclass(frozen=True)
class SpectralFunction:
    """holomorphic function on the two half planes with limits b(0+), b(0-)"""
    name: str
    right: Callable[[np.ndarray], np.ndarray]
    left: Callable[[np.ndarray], np.ndarray]
    zero_plus: complex
    zero_minus: complex
    parameter: Optional[float] = None

    def __call__(self, lam: np.ndarray, side: np.ndarray) -> np.ndarray:
        """values on eigenvalues of the right (side > 0) and left (side < 0) half planes"""
        lam = np.asarray(lam, dtype=complex)
        values = np.empty(lam.shape, dtype=complex)
        right = side > 0
        values[right] = self.right(lam[right])
        values[~right] = self.left(lam[~right])
        return values

    def __mul__(self, other: "SpectralFunction") -> "SpectralFunction":
        return SpectralFunction(
            f"{self.name}*{other.name}",
            lambda z: self.right(z) * other.right(z),
            lambda z: self.left(z) * other.left(z),
            self.zero_plus * other.zero_plus,
            self.zero_minus * other.zero_minus,
        )


def sgn() -> SpectralFunction:
    return SpectralFunction("sgn", lambda z: np.ones_like(z), lambda z: -np.ones_like(z), 1.0, -1.0)


def chi_plus() -> SpectralFunction:
    return SpectralFunction("chi_plus", lambda z: np.ones_like(z), lambda z: np.zeros_like(z), 1.0, 0.0)


def chi_minus() -> SpectralFunction:
    return SpectralFunction("chi_minus", lambda z: np.zeros_like(z), lambda z: np.ones_like(z), 0.0, 1.0)


def abs_value() -> SpectralFunction:
    return SpectralFunction("abs", lambda z: z, lambda z: -z, 0.0, 0.0)


def exp_abs(t: float) -> SpectralFunction:
    """e^{-t|z|}, the identity on null directions"""
    return SpectralFunction("exp_abs", lambda z: np.exp(-t * z), lambda z: np.exp(t * z), 1.0, 1.0, t)


def psi_sf(t: float) -> SpectralFunction:
    """t z (1 + t^2 z^2)^{-1}"""
    psi = lambda z: t * z / (1.0 + (t * z) ** 2)
    return SpectralFunction("psi_sf", psi, psi, 0.0, 0.0, t)


def inv_sqrt_shift(sigma: float) -> SpectralFunction:
    """(z^2 + sigma^2)^{-1/2} with the branch of positive real part"""
    root = lambda z: 1.0 / (z * np.sqrt(1.0 + sigma ** 2 / z ** 2))
    value = 1.0 / sigma if sigma != 0 else np.inf
    return SpectralFunction("inv_sqrt_shift", root, lambda z: -root(z), value, value, sigma)


def idx_of_constants(m: int, K: int) -> np.ndarray:
    width = 2 * K + 1
    return np.array([c * width + K for c in range(2 * m)])


NAMED_FUNCTIONS: Dict[str, Callable[..., SpectralFunction]] = {
    "sgn": sgn,
    "chi_plus": chi_plus,
    "chi_minus": chi_minus,
    "abs": abs_value,
    "exp_abs": exp_abs,
    "psi_sf": psi_sf,
    "inv_sqrt_shift": inv_sqrt_shift,
}


def named_function(name: str, parameter: Optional[float] = None) -> SpectralFunction:
    if name not in NAMED_FUNCTIONS:
        raise KeyError(f"unknown spectral function '{name}'")
    factory = NAMED_FUNCTIONS[name]
    return factory() if parameter is None and name in ("sgn", "chi_plus", "chi_minus", "abs") else factory(parameter)


@dataclass(eq=False)
class CalculusHandle:
    """factorized generator ready for b(D_0) or b(D_0-tilde)"""
    B0: CoefficientField
    sigma: float
    K: int
    tilde: bool
    generator: OperatorMatrix
    lift: np.ndarray  # core coordinates -> L2
    restrict: np.ndarray  # L2 -> core coordinates
    core: np.ndarray  # generator in core coordinates
    null_V: np.ndarray  # (dim, n_null)
    null_W: np.ndarray  # (n_null, dim)
    null_side: np.ndarray  # +1 for 0+, -1 for 0-
    path: str = EIGEN_PATH
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    eigenvectors: Optional[np.ndarray] = None
    eigenvectors_inv: Optional[np.ndarray] = None
    condition_number: float = 1.0
    reconstruction_residual: float = 0.0
    gap: float = 0.0
    gap_tol: float = 1e-8
    schur_form: Optional[Tuple[np.ndarray, np.ndarray, int]] = None

    @property
    def m(self) -> int:
        return self.B0.m

    @property
    def dim(self) -> int:
        return self.generator.dim

    @property
    def has_gap(self) -> bool:
        return self.gap > self.gap_tol

    @property
    def side(self) -> np.ndarray:
        return np.where(self.eigenvalues.real > 0, 1, -1)

    @classmethod
    def build(cls, B0: CoefficientField, sigma: float, K: int, tilde: bool = False,
              gap_tol: float = 1e-8, cond_limit: float = 1e8) -> "CalculusHandle":
        m = B0.m
        D0, D0_tilde = assemble_D0(B0, sigma, K)
        generator = D0_tilde if tilde else D0
        dim = generator.dim
        if sigma != 0.0:
            lift = np.eye(dim, dtype=complex)
            restrict = np.eye(dim, dtype=complex)
            core = generator.entries
            null_V = np.zeros((dim, 0), dtype=complex)
            null_W = np.zeros((0, dim), dtype=complex)
            null_side = np.zeros(0, dtype=int)
        else:
            idx = h_indices(m, K)
            E = constant_basis(m, K)
            embed = np.zeros((dim, idx.size), dtype=complex)
            embed[idx, np.arange(idx.size)] = 1.0
            projections = hodge_projections(B0, sigma, K, cond_limit)
            core = D0.entries[np.ix_(idx, idx)]
            normal = normal_mask(m, K)[idx_of_constants(m, K)]
            if tilde:
                M = galerkin_matrix(B0.entries, K)
                lift = M @ embed
                restrict = np.linalg.solve(M, projections.P1_tilde.entries)[idx]
                null_V = E
                null_W = E.conj().T @ projections.P0_tilde.entries
                null_side = np.where(normal, 1, -1)
            else:
                lift = embed
                restrict = projections.P1.entries[idx]
                Z = projections.P0.entries @ E
                null_V = Z
                null_W = E.conj().T
                null_side = np.where(normal, -1, 1)
        scale = max(1.0, generator.norm())
        handle = cls(
            B0=B0, sigma=sigma, K=K, tilde=tilde, generator=generator,
            lift=lift, restrict=restrict, core=core,
            null_V=null_V, null_W=null_W, null_side=null_side,
            gap_tol=gap_tol * scale,
        )
        handle._factorize(cond_limit)
        return handle

    def _factorize(self, cond_limit: float) -> None:
        eigenvalues, vectors = np.linalg.eig(self.core)
        self.eigenvalues = eigenvalues
        self.gap = float(np.min(np.abs(eigenvalues.real), initial=np.inf))
        condition = float(np.linalg.cond(vectors))
        self.condition_number = condition
        if np.isfinite(condition) and condition < cond_limit:
            self.path = EIGEN_PATH
            self.eigenvectors = vectors
            self.eigenvectors_inv = np.linalg.inv(vectors)
            rebuilt = vectors @ np.diag(eigenvalues) @ self.eigenvectors_inv
            self.reconstruction_residual = float(np.linalg.norm(rebuilt - self.core, 2))
        else:
            logger.warning(f"eigenvector condition {condition:.3e} >= {cond_limit:.1e}, using schur-parlett")
            self.path = SCHUR_PATH
            T, Q, sdim = schur(self.core.astype(complex), output="complex", sort="rhp")
            self.schur_form = (T, Q, int(sdim))
        if not self.has_gap:
            logger.warning(f"eigenvalue within {self.gap:.3e} of the imaginary axis")
        logger.info(
            f"calculus on {'D_0~' if self.tilde else 'D_0'} (sigma={self.sigma}) via {self.path} path, "
            f"cond={condition:.3e}, gap={self.gap:.3e}"
        )

    def require_eigen(self) -> None:
        if self.path != EIGEN_PATH:
            raise SpectralGapError(
                "product integration needs a diagonalizable generator",
                condition_number=self.condition_number,
            )
        if not self.has_gap:
            raise SpectralGapError(f"spectral gap {self.gap:.3e} below tolerance", gap=self.gap)

    def modal_basis(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """(V, W, mu, side): f = V y, y = W f; mode p evolves as e^{-t mu_p}"""
        self.require_eigen()
        V = np.hstack([self.lift @ self.eigenvectors, self.null_V])
        W = np.vstack([self.eigenvectors_inv @ self.restrict, self.null_W])
        side = np.concatenate([self.side, self.null_side])
        lam = np.concatenate([self.eigenvalues, np.zeros(self.null_side.size, dtype=complex)])
        mu = np.where(side > 0, lam, -lam)
        return V, W, mu, side

    def matrix(self, b: SpectralFunction) -> np.ndarray:
        """dense matrix of b(generator)"""
        if not self.has_gap:
            raise SpectralGapError(f"eigenvalue within {self.gap:.3e} of the imaginary axis", gap=self.gap)
        if self.path == EIGEN_PATH:
            values = b(self.eigenvalues, self.side)
            core = (self.eigenvectors * values[None, :]) @ self.eigenvectors_inv
        else:
            core = self._schur_parlett(b)
        result = self.lift @ core @ self.restrict
        if self.null_side.size:
            null_values = np.where(self.null_side > 0, b.zero_plus, b.zero_minus)
            result = result + (self.null_V * null_values[None, :]) @ self.null_W
        return result

    def operator(self, b: SpectralFunction) -> OperatorMatrix:
        return OperatorMatrix(self.m, self.K, self.matrix(b), OperatorTag.FUNCTION_OF_D0, self.sigma, b.name)

    def _schur_parlett(self, b: SpectralFunction) -> np.ndarray:
        T, Q, k = self.schur_form
        T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
        F11 = _block_function(b, T11, right=True)
        F22 = _block_function(b, T22, right=False)
        F = np.zeros_like(T)
        F[:k, :k] = F11
        F[k:, k:] = F22
        if 0 < k < T.shape[0]:
            F[:k, k:] = solve_sylvester(T11, -T22, F11 @ T12 - T12 @ F22)
        return Q @ F @ Q.conj().T

    def apply(self, b: SpectralFunction, f: BoundarySection) -> BoundarySection:
        if (f.m, f.K) != (self.m, self.K):
            raise DimensionMismatchError(f"section (m={f.m}, K={f.K}) does not match the handle")
        return BoundarySection.from_vector(f.m, f.K, self.matrix(b) @ f.vector())


def _block_function(b: SpectralFunction, T: np.ndarray, right: bool) -> np.ndarray:
    if T.size == 0:
        return T.copy()
    identity = np.eye(T.shape[0], dtype=complex)
    sign = 1.0 if right else -1.0
    if b.name in ("sgn", "chi_plus", "chi_minus"):
        scalar = b.right(np.ones(1))[0] if right else b.left(np.ones(1))[0]
        return scalar * identity
    if b.name == "abs":
        return sign * T
    if b.name == "exp_abs":
        return expm(-sign * b.parameter * T)
    return funm(T, b.right if right else b.left)


@dataclass(eq=False)
class HardyProjections:
    """E_0^+-, E_0~^+- with the sigma = 0 conventions on the null directions"""
    E0_plus: OperatorMatrix
    E0_minus: OperatorMatrix
    E0t_plus: OperatorMatrix
    E0t_minus: OperatorMatrix


def tilde_partner(handle: CalculusHandle, cond_limit: float = 1e8) -> CalculusHandle:
    """the handle of D_0-tilde for a D_0 handle (and conversely)"""
    return CalculusHandle.build(
        handle.B0, handle.sigma, handle.K, tilde=not handle.tilde,
        gap_tol=handle.gap_tol / max(1.0, handle.generator.norm()), cond_limit=cond_limit,
    )


def _ordered(handle: CalculusHandle, partner: Optional[CalculusHandle]) -> Tuple[CalculusHandle, CalculusHandle]:
    partner = tilde_partner(handle) if partner is None else partner
    return (partner, handle) if handle.tilde else (handle, partner)


def extended_hardy(handle: CalculusHandle, partner: Optional[CalculusHandle] = None) -> HardyProjections:
    """spectral projections chi+-(D_0), chi+-(D_0~)"""
    plain, tilde = _ordered(handle, partner)
    return HardyProjections(
        E0_plus=plain.operator(chi_plus()),
        E0_minus=plain.operator(chi_minus()),
        E0t_plus=tilde.operator(chi_plus()),
        E0t_minus=tilde.operator(chi_minus()),
    )


def intertwine_check(handle: CalculusHandle, partner: Optional[CalculusHandle] = None) -> float:
    """max of ||E_0^+- D - D E_0~^+-|| and ||D_0 D - D D_0~||"""
    plain, tilde = _ordered(handle, partner)
    projections = extended_hardy(plain, tilde)
    D = assemble_D(plain.m, plain.K).entries
    residuals = [
        np.linalg.norm(projections.E0_plus.entries @ D - D @ projections.E0t_plus.entries, 2),
        np.linalg.norm(projections.E0_minus.entries @ D - D @ projections.E0t_minus.entries, 2),
        np.linalg.norm(plain.generator.entries @ D - D @ tilde.generator.entries, 2),
    ]
    return float(max(residuals))


def similarity_residual(handle: CalculusHandle, b: SpectralFunction,
                        partner: Optional[CalculusHandle] = None) -> float:
    """|| b(B0 D) B0 - B0 b(D B0) || on H (sigma = 0)"""
    plain, tilde = _ordered(handle, partner)
    M = galerkin_matrix(plain.B0.entries, plain.K)
    idx = h_indices(plain.m, plain.K)
    difference = tilde.matrix(b) @ M - M @ plain.matrix(b)
    return float(np.linalg.norm(difference[:, idx], 2))


@dataclass(eq=False)
class SquareFunctionReport:
    """int ||psi(t D_0) f||^2 dt/t against ||f||^2"""
    value: float
    norm_squared: float
    ratio: float
    drift: float
    t_range: Tuple[float, float]
    points: int


def _square_function_value(handle: CalculusHandle, f: np.ndarray, ts: np.ndarray) -> float:
    if handle.path == EIGEN_PATH:
        V, W, _, _ = handle.modal_basis()
        lam = np.concatenate([handle.eigenvalues, np.zeros(handle.null_side.size)])
        y = W @ f
        integrand = np.array([
            np.linalg.norm(V @ (t * lam / (1.0 + (t * lam) ** 2) * y)) ** 2 for t in ts
        ])
    else:
        integrand = np.array([np.linalg.norm(handle.matrix(psi_sf(t)) @ f) ** 2 for t in ts])
    return float(2.0 * np.pi * trapezoid(integrand, np.log(ts))) if ts.size > 1 else 0.0


def square_function_norm(handle: CalculusHandle, f: BoundarySection, points_per_decade: int = 40,
                         t_range: Optional[Tuple[float, float]] = None,
                         drift_tol: float = 0.05) -> SquareFunctionReport:
    """geometric-grid quadrature of the square function, checked against a grid of half density"""
    magnitudes = np.abs(handle.eigenvalues)
    if t_range is None:
        t_range = (1e-3 / float(np.max(magnitudes)), 1e3 / float(np.min(magnitudes)))
    decades = np.log10(t_range[1] / t_range[0])
    count = max(2, int(np.ceil(decades * points_per_decade)) + 1)
    ts = np.geomspace(t_range[0], t_range[1], count)
    vector = f.vector()
    value = _square_function_value(handle, vector, ts)
    coarse = _square_function_value(handle, vector, ts[::2])
    norm_squared = float(2.0 * np.pi * np.linalg.norm(vector) ** 2)
    drift = abs(value - coarse) / value if value > 0 else 0.0
    if drift > drift_tol:
        raise QuadratureError(
            f"square function changes by {100 * drift:.1f}% under grid doubling", drift=drift
        )
    ratio = value / norm_squared if norm_squared > 0 else 0.0
    return SquareFunctionReport(value, norm_squared, ratio, drift, t_range, count)


@dataclass(eq=False)
class KatoResult:
    """sqrt(hL) u computed as the normal part of sgn(B0 D) (0, H d_tau u)"""
    sqrt_u: np.ndarray  # (m, 2K+1)
    norm: float
    gradient_norm: float
    ratio: float
    tangential_residual: float


def kato_sqrt(B0: CoefficientField, u: np.ndarray, handle: Optional[CalculusHandle] = None) -> KatoResult:
    """square root of hL, L = -d_tau H d_tau, for block coefficients B0 = diag(h, H)"""
    if not B0.is_block_diagonal():
        raise DataSpaceError("kato square root needs block diagonal coefficients diag(h, H)")
    u = np.atleast_2d(np.asarray(u, dtype=complex))
    m, width = u.shape
    K = (width - 1) // 2
    if m != B0.m:
        raise DimensionMismatchError(f"scalar datum with {m} components for m={B0.m} coefficients")
    if handle is None:
        handle = CalculusHandle.build(B0, 0.0, K, tilde=True)
    elif not handle.tilde or handle.sigma != 0.0:
        raise DataSpaceError("kato square root needs the sigma = 0 handle of B0 D")
    gradient = u * (1j * mode_range(K))[None, :]
    lifted = np.zeros((2 * m, width), dtype=complex)
    lifted[m:] = gradient
    f = BoundarySection(m, K, lifted)
    M = galerkin_matrix(B0.entries, K)
    g = BoundarySection.from_vector(m, K, handle.matrix(sgn()) @ (M @ f.vector()))
    norm = float(np.sqrt(2 * np.pi) * np.linalg.norm(g.normal))
    gradient_norm = float(np.sqrt(2 * np.pi) * np.linalg.norm(gradient))
    ratio = norm / gradient_norm if gradient_norm > 0 else 0.0
    return KatoResult(np.array(g.normal), norm, gradient_norm, ratio, float(np.linalg.norm(g.tangential)))


def dunford_cross_check(handle: CalculusHandle, b: SpectralFunction, panels: int = 8, order: int = 16) -> float:
    """relative gap between b restricted to the right spectrum and its contour integral"""
    handle.require_eigen()
    lam = handle.eigenvalues
    right = lam.real > 0
    if not right.any():
        return 0.0
    left_edge = 0.5 * handle.gap
    right_edge = float(np.max(lam.real)) + 1.0
    height = float(np.max(np.abs(lam.imag))) + 1.0
    corners = [
        complex(left_edge, -height), complex(right_edge, -height),
        complex(right_edge, height), complex(left_edge, height),
    ]
    nodes, weights = leggauss(order)
    identity = np.eye(handle.core.shape[0], dtype=complex)
    integral = np.zeros_like(identity)
    for start, end in zip(corners, corners[1:] + corners[:1]):
        for p in range(panels):
            a = start + (end - start) * p / panels
            c = start + (end - start) * (p + 1) / panels
            half = 0.5 * (c - a)
            for x, w in zip(nodes, weights):
                z = a + half * (x + 1.0)
                value = b.right(np.array([z]))[0]
                integral += w * half * value * np.linalg.solve(z * identity - handle.core, identity)
    integral /= 2j * np.pi
    values = np.where(right, b.right(lam), 0.0)
    expected = (handle.eigenvectors * values[None, :]) @ handle.eigenvectors_inv
    scale = max(1.0, float(np.linalg.norm(expected, 2)))
    return float(np.linalg.norm(integral - expected, 2) / scale)


@dataclass(eq=False)
class AnticommutatorReport:
    """both sides of 1/2 (E_0 N + N E_0) = sigma ((D B0)^2 + sigma^2)^{-1/2}"""
    lhs: np.ndarray
    rhs: np.ndarray
    residual: float


def block_anticommutator(B0: CoefficientField, sigma: float, K: int) -> AnticommutatorReport:
    if sigma == 0.0:
        raise DataSpaceError("the anticommutator identity needs sigma != 0")
    if not B0.is_block_diagonal():
        logger.warning("anticommutator identity is only expected for block coefficients")
    shifted = CalculusHandle.build(B0, sigma, K)
    unshifted = CalculusHandle.build(B0, 0.0, K)
    N = assemble_N(B0.m, K).entries
    E0 = shifted.matrix(sgn())
    lhs = 0.5 * (E0 @ N + N @ E0)
    rhs = sigma * unshifted.matrix(inv_sqrt_shift(sigma))
    return AnticommutatorReport(lhs, rhs, float(np.linalg.norm(lhs - rhs, 2)))
