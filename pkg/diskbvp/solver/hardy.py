"""
perturbed hardy projections, well-posedness boundary maps and their duality
"""

import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.linalg import orth

from ..api.types import ProblemKind, SolveReport
from ..core.calculus import CalculusHandle, chi_plus
from ..core.carleson import carleson_norm
from ..core.coefficients import CoefficientField, Discrepancy, RadialCoefficient, hat_transform
from ..core.errors import DimensionMismatchError, IllPosednessError, InvertibilityError
from ..core.fields import BoundarySection, galerkin_matrix
from ..core.operators import assemble_D, assemble_N, h_indices, normal_mask
from .integral import ConormalIntegrals
from .timegrid import DEFAULT_Q, TimeGrid

logger = logging.getLogger(__name__)

CARLESON_THRESHOLD = 0.25  # largest ||E||_C accepted without an override


@dataclass
class SolverSettings:
    """numerical parameters of the solution pipeline"""
    q: float = DEFAULT_Q
    t_max: Optional[float] = None  # default from decay_tol and the spectral gap
    t_min: float = 1e-4
    decay_tol: float = 1e-12
    gap_tol: float = 1e-8
    iteration_tol: float = 1e-10
    max_iterations: int = 500
    cond_limit: float = 1e8
    dense_limit: int = 6000
    method: str = "auto"  # auto, iterative or dense
    carleson_threshold: float = CARLESON_THRESHOLD
    carleson_override: bool = False  # solve even when ||E||_C exceeds the threshold


def decay_horizon(handle: CalculusHandle, decay_tol: float) -> float:
    """T with ||e^{-T Lambda}|| below decay_tol on the decaying modes"""
    decaying = np.abs(handle.eigenvalues.real)
    rate = float(np.min(decaying)) if decaying.size else 1.0
    return float(np.log(1.0 / decay_tol) / rate)


@dataclass(eq=False)
class SolverContext:
    """calculus handles, discrepancy, time grid and cached integral operators of one problem"""
    handle: CalculusHandle
    tilde_handle: CalculusHandle
    E: Discrepancy
    grid: TimeGrid
    integrals: ConormalIntegrals
    settings: SolverSettings = field(default_factory=SolverSettings)
    name: str = "coefficients"

    @property
    def m(self) -> int:
        return self.handle.m

    @property
    def K(self) -> int:
        return self.handle.K

    @property
    def sigma(self) -> float:
        return self.handle.sigma

    @property
    def B0(self) -> CoefficientField:
        return self.E.base

    @classmethod
    def from_discrepancy(cls, E: Discrepancy, sigma: float, K: int, grid: TimeGrid,
                         settings: Optional[SolverSettings] = None, name: str = "coefficients") -> "SolverContext":
        settings = settings or SolverSettings()
        handle = CalculusHandle.build(E.base, sigma, K, gap_tol=settings.gap_tol, cond_limit=settings.cond_limit)
        tilde = CalculusHandle.build(E.base, sigma, K, tilde=True, gap_tol=settings.gap_tol,
                                     cond_limit=settings.cond_limit)
        integrals = ConormalIntegrals(handle, E, grid, tilde, dense_limit=settings.dense_limit)
        return cls(handle, tilde, E, grid, integrals, settings, name)

    @classmethod
    def create(cls, A: Union[RadialCoefficient, CoefficientField], K: int, sigma: float = 0.0,
               settings: Optional[SolverSettings] = None) -> "SolverContext":
        """hat transform of the boundary trace, time grid from the spectral gap, discrepancy on the grid"""
        settings = settings or SolverSettings()
        independent = isinstance(A, CoefficientField)
        radial = RadialCoefficient.radially_independent(A) if independent else A
        B0 = hat_transform(radial.boundary())
        handle = CalculusHandle.build(B0, sigma, K, gap_tol=settings.gap_tol, cond_limit=settings.cond_limit)
        t_max = settings.t_max or decay_horizon(handle, settings.decay_tol)
        grid = TimeGrid.geometric(t_max, settings.q, settings.t_min)
        E = Discrepancy.zero(B0, grid.nodes) if independent else radial.discrepancy(grid.nodes)
        tilde = CalculusHandle.build(B0, sigma, K, tilde=True, gap_tol=settings.gap_tol,
                                     cond_limit=settings.cond_limit)
        integrals = ConormalIntegrals(handle, E, grid, tilde, dense_limit=settings.dense_limit)
        logger.info(f"solver context for '{radial.name}': K={K}, sigma={sigma}, {grid.size} time nodes")
        return cls(handle, tilde, E, grid, integrals, settings, radial.name)

    def adjoint(self) -> "SolverContext":
        """context of the adjoint coefficients on the same time grid"""
        return SolverContext.from_discrepancy(self.E.adjoint(), self.sigma, self.K, self.grid,
                                              self.settings, f"{self.name}*")

    def free_averages(self, handle: CalculusHandle, X: np.ndarray) -> np.ndarray:
        """cell averages (L, n, c) of e^{-t Lambda} X"""
        V, W, mu, _ = handle.modal_basis()
        return np.einsum("ap,lp,pc->lac", V, self.grid.semigroup_averages(mu), W @ X)

    @property
    def carleson_norm(self) -> float:
        """||E||_C, computed once and cached on the discrepancy"""
        if self.E.carleson_norm is None:
            carleson_norm(self.E)
        return self.E.carleson_norm

    @property
    def small_carleson(self) -> bool:
        return self.carleson_norm <= self.settings.carleson_threshold

    def require_small_carleson(self) -> bool:
        """run the small-carleson diagnostic; raise unless it passes or is overridden"""
        if self.small_carleson:
            return True
        threshold = self.settings.carleson_threshold
        if not self.settings.carleson_override:
            raise InvertibilityError(
                f"carleson norm {self.carleson_norm:.3e} of '{self.name}' exceeds {threshold:.3e}",
                carleson_norm=self.carleson_norm, threshold=threshold, small_carleson_verified=False,
            )
        logger.warning(f"carleson norm {self.carleson_norm:.3e} exceeds {threshold:.3e}, solving by override")
        return False

    def solve(self, rhs: np.ndarray):
        s = self.settings
        f, report = self.integrals.solve(rhs, s.iteration_tol, s.max_iterations, s.method)
        report.small_carleson_verified = self.small_carleson
        return f, report


def _columns(h) -> np.ndarray:
    if isinstance(h, BoundarySection):
        return h.vector()[:, None]
    h = np.asarray(h, dtype=complex)
    return h[:, None] if h.ndim == 1 else h


def hardy_plus_matrix(context: SolverContext, h) -> np.ndarray:
    """E_A^+ applied to the columns of h"""
    X = context.handle.matrix(chi_plus()) @ _columns(h)
    if context.integrals.zero:
        return X
    f, _ = context.solve(context.free_averages(context.handle, X))
    return X + context.integrals.at(0.0, f)


def tilde_hardy_plus_matrix(context: SolverContext, h) -> np.ndarray:
    """E_A~^+ applied to the columns of h"""
    X = context.tilde_handle.matrix(chi_plus()) @ _columns(h)
    if context.integrals.zero:
        return X
    D = assemble_D(context.m, context.K).entries
    rhs = np.einsum("ab,lbc->lac", D, context.free_averages(context.tilde_handle, X))
    f, _ = context.solve(rhs)
    return X + context.integrals.tilde_at(0.0, f)


def perturbed_hardy(h: BoundarySection, context: SolverContext, tilde: bool = False) -> BoundarySection:
    """E_A^+ h, or E_A~^+ h when tilde is set"""
    if (h.m, h.K) != (context.m, context.K):
        raise DimensionMismatchError(f"section (m={h.m}, K={h.K}) does not match the solver context")
    apply = tilde_hardy_plus_matrix if tilde else hardy_plus_matrix
    return BoundarySection.from_vector(h.m, h.K, apply(context, h)[:, 0])


def problem_rows(problem: ProblemKind, m: int, K: int) -> np.ndarray:
    """stacked indices of the boundary data seen by each problem"""
    normal = normal_mask(m, K)
    if problem is ProblemKind.DIRICHLET:
        return np.nonzero(normal)[0]
    idx = h_indices(m, K)
    if problem is ProblemKind.NEUMANN:
        return idx[normal[idx]]
    return idx[~normal[idx]]


@dataclass(eq=False)
class BoundaryMap:
    """matrix of h+ -> (E_A^+ h+)_perp / _par (or h~+ -> (E_A~^+ h~+)_perp) on an orthonormal basis"""
    problem: ProblemKind
    basis: np.ndarray  # (n, r) orthonormal columns of E_0^+ H or E_0~^+ L2
    rows: np.ndarray
    matrix: np.ndarray
    condition_number: float
    solve_report: Optional[SolveReport] = None

    def solve(self, datum: np.ndarray) -> np.ndarray:
        """h+ (or h~+) whose image has the given data on the problem rows"""
        coefficients = np.linalg.solve(self.matrix, np.asarray(datum, dtype=complex))
        return self.basis @ coefficients

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


def wellposedness_map(problem: ProblemKind, context: SolverContext) -> BoundaryMap:
    """assemble the boundary map and check that it is an isomorphism"""
    m, K = context.m, context.K
    if problem is ProblemKind.DIRICHLET:
        projection = context.tilde_handle.matrix(chi_plus())
        expected = m * (2 * K + 1)
    else:
        idx = h_indices(m, K)
        projection = context.handle.matrix(chi_plus())[:, idx]
        expected = 2 * m * K
    basis = orth(projection, rcond=1e-8)
    rows = problem_rows(problem, m, K)
    if basis.shape[1] != expected:
        raise IllPosednessError(
            f"{problem.value} hardy subspace has dimension {basis.shape[1]}, expected {expected}",
            dimension=basis.shape[1], expected=expected,
        )
    image = tilde_hardy_plus_matrix(context, basis) if problem is ProblemKind.DIRICHLET \
        else hardy_plus_matrix(context, basis)
    matrix = image[rows]
    condition = float(np.linalg.cond(matrix))
    if not np.isfinite(condition) or condition > context.settings.cond_limit:
        raise IllPosednessError(
            f"{problem.value} boundary map is rank deficient (cond={condition:.3e})",
            condition_number=condition,
        )
    logger.info(f"{problem.value} boundary map of size {matrix.shape[0]}, cond={condition:.3e}")
    return BoundaryMap(problem, basis, rows, matrix, condition)


def duality_residual(context: SolverContext, adjoint_context: Optional[SolverContext] = None) -> float:
    """|| (E_A^-)^* - N E_{A*}~^+ N || as forms on H x L2"""
    adjoint_context = adjoint_context or context.adjoint()
    n = context.handle.dim
    idx = h_indices(context.m, context.K)
    identity = np.eye(n, dtype=complex)
    minus = identity - hardy_plus_matrix(context, identity)
    N = assemble_N(context.m, context.K).entries
    dual = N @ tilde_hardy_plus_matrix(adjoint_context, identity) @ N
    X = minus[np.ix_(idx, idx)]
    Y = dual[np.ix_(idx, idx)]
    return float(np.linalg.norm(X.conj().T - Y, 2))


def rellich_residual(context: SolverContext, h_plus: BoundarySection) -> float:
    """|(N h+, B0 h+)| / ||h+||^2, zero for hermitean B0 and sigma = 0"""
    vector = h_plus.vector()
    M = galerkin_matrix(context.B0.entries, context.K)
    N = assemble_N(context.m, context.K).entries
    pairing = np.vdot(M @ vector, N @ vector)
    size = float(np.vdot(vector, vector).real)
    return float(abs(pairing) / size) if size > 0 else 0.0
