"""
the integral operators S_A, S_A-tilde and the solve of (I - S_A) f = e^{-t Lambda} h+
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigs, gmres

from ..api.types import SolveReport, SolveStatus
from ..core.calculus import CalculusHandle, chi_minus, tilde_partner
from ..core.coefficients import Discrepancy
from ..core.errors import HardyProjectionError, InvertibilityError, QuadratureError
from ..core.fields import BoundarySection, galerkin_matrix
from ..core.operators import assemble_D, assemble_N, hodge_projections
from .timegrid import TimeGrid, Trajectory, TrajectoryKind

logger = logging.getLogger(__name__)

DIRECT_ROUTE = "direct"
DECOMPOSED_ROUTE = "decomposed"
EIGVALS_LIMIT = 1500  # above this size rho(S_A) comes from arpack


def semigroup_trajectory(h_plus: BoundarySection, handle: CalculusHandle, grid: TimeGrid,
                         tol: float = 1e-8) -> Trajectory:
    """f_t = e^{-t Lambda} h+ (cell averages, node values and t = 0 value)"""
    vector = h_plus.vector()
    outside = handle.matrix(chi_minus()) @ vector
    scale = max(float(np.linalg.norm(vector)), np.finfo(float).tiny)
    if np.linalg.norm(outside) > tol * scale:
        raise HardyProjectionError(
            f"datum has a component {np.linalg.norm(outside) / scale:.3e} outside the positive hardy subspace"
        )
    return evolve(vector, handle, grid)


def evolve(vector: np.ndarray, handle: CalculusHandle, grid: TimeGrid) -> Trajectory:
    """e^{-t Lambda} applied to any vector (the identity on null directions)"""
    V, W, mu, _ = handle.modal_basis()
    y = W @ vector
    averages = (grid.semigroup_averages(mu) * y[None, :]) @ V.T
    nodes = (np.exp(-grid.nodes[:, None] * mu[None, :]) * y[None, :]) @ V.T
    kind = TrajectoryKind.POTENTIAL_V if handle.tilde else TrajectoryKind.CONORMAL_F
    return Trajectory(grid, handle.m, handle.K, averages, kind, nodes, np.array(vector, dtype=complex))


def _contraction_rate(changes) -> float:
    """geometric mean ratio of successive fixed-point updates"""
    changes = [c for c in changes if c > 0]
    if len(changes) < 2:
        return 0.0
    return float((changes[-1] / changes[0]) ** (1.0 / (len(changes) - 1)))


class ConormalIntegrals:
    """product-integrated S_A and S_A-tilde for one discrepancy on one time grid"""

    def __init__(self, handle: CalculusHandle, E: Discrepancy, grid: TimeGrid,
                 tilde_handle: Optional[CalculusHandle] = None, route: str = DIRECT_ROUTE,
                 dense_limit: int = 6000):
        if handle.tilde:
            raise ValueError("S_A is built on the D_0 handle")
        handle.require_eigen()
        grid.check_times(E.times)
        self.handle = handle
        self.E = E
        self.grid = grid
        self.route = route
        self.dense_limit = dense_limit
        self.K = handle.K
        self.m = handle.m
        self._tilde_handle = tilde_handle
        self._lu = None
        self._dense = None
        self._rho = None
        self._contraction = None
        self._tilde_cache = None
        self.zero = E.is_zero()
        order = np.argsort(E.times)
        self.mult = np.array([galerkin_matrix(E.samples[i].entries, self.K) for i in order])
        self.V, self.W, self.mu, self.side = handle.modal_basis()
        self.weights = grid.cell_weights(self.mu, self.side)
        self.G = self._data_maps(route)

    def _data_maps(self, route: str) -> np.ndarray:
        """(L, P, n): modal coordinates of D E_s f_s"""
        D = assemble_D(self.m, self.K).entries
        if route == DIRECT_ROUTE:
            return np.einsum("pa,ab,jbc->jpc", self.W, D, self.mult)
        if route != DECOMPOSED_ROUTE:
            raise ValueError(f"unknown S_A route '{route}'")
        # D = (D_0 - sigma N) B0^{-1} P1~, and W D_0 = diag(lambda) W
        M = galerkin_matrix(self.handle.B0.entries, self.K)
        projections = hodge_projections(self.handle.B0, self.handle.sigma, self.K)
        inverse = np.linalg.solve(M, projections.P1_tilde.entries)
        N = assemble_N(self.m, self.K).entries
        lam = np.where(self.side > 0, self.mu, -self.mu)
        hat = lam[:, None] * (self.W @ inverse)
        check = self.W @ N @ inverse
        return np.einsum("pa,jab->jpb", hat - self.handle.sigma * check, self.mult)

    @property
    def tilde_handle(self) -> CalculusHandle:
        if self._tilde_handle is None:
            self._tilde_handle = tilde_partner(self.handle)
        return self._tilde_handle

    @property
    def size(self) -> int:
        return self.grid.size * self.handle.dim

    # S_A

    def apply(self, f: np.ndarray) -> np.ndarray:
        """cell averages of S_A f for cell averages f of shape (L, n) or (L, n, c)"""
        if self.zero:
            return np.zeros_like(f, dtype=complex)
        y = np.einsum("jpb,jb...->jp...", self.G, f)
        z = np.einsum("ijp,jp...->ip...", self.weights, y)
        return np.einsum("ap,ip...->ia...", self.V, z)

    def at(self, t: float, f: np.ndarray) -> np.ndarray:
        """point value (S_A f)(t)"""
        if self.zero:
            return np.zeros(f.shape[1:], dtype=complex)
        y = np.einsum("jpb,jb...->jp...", self.G, f)
        z = np.einsum("jp,jp...->p...", self.grid.point_weights(t, self.mu, self.side), y)
        return np.einsum("ap,p...->a...", self.V, z)

    def at_nodes(self, f: np.ndarray) -> np.ndarray:
        return np.array([self.at(t, f) for t in self.grid.nodes])

    # S_A-tilde

    def _tilde_parts(self):
        if self._tilde_cache is None:
            V, W, mu, side = self.tilde_handle.modal_basis()
            G = np.einsum("pa,jab->jpb", W, self.mult)
            self._tilde_cache = (V, mu, side, G, self.grid.cell_weights(mu, side))
        return self._tilde_cache

    def apply_tilde(self, f: np.ndarray) -> np.ndarray:
        if self.zero:
            return np.zeros_like(f, dtype=complex)
        V, _, _, G, weights = self._tilde_parts()
        y = np.einsum("jpb,jb...->jp...", G, f)
        return np.einsum("ap,ip...->ia...", V, np.einsum("ijp,jp...->ip...", weights, y))

    def tilde_at(self, t: float, f: np.ndarray) -> np.ndarray:
        if self.zero:
            return np.zeros(f.shape[1:], dtype=complex)
        V, mu, side, G, _ = self._tilde_parts()
        y = np.einsum("jpb,jb...->jp...", G, f)
        return V @ np.einsum("jp,jp...->p...", self.grid.point_weights(t, mu, side), y)

    # linear algebra of I - S_A

    def dense_matrix(self) -> np.ndarray:
        """stacked (L n) x (L n) matrix of S_A"""
        if self._dense is None:
            if self.size > self.dense_limit:
                raise InvertibilityError(f"stacked system of size {self.size} exceeds the dense limit")
            S = np.einsum("ap,ijp,jpb->iajb", self.V, self.weights, self.G)
            self._dense = S.reshape(self.size, self.size)
        return self._dense

    def lu(self):
        if self._lu is None:
            system = np.eye(self.size) - self.dense_matrix()
            self._lu = lu_factor(system)
            pivots = np.abs(np.diag(self._lu[0]))
            if np.min(pivots) <= 1e-14 * np.max(pivots):
                self._lu = None
                raise InvertibilityError("I - S_A is numerically singular", status=SolveStatus.SINGULAR.value,
                                         small_carleson_verified=False)
            logger.info(f"factorized I - S_A of size {self.size}")
        return self._lu

    def linear_operator(self) -> LinearOperator:
        shape = (self.grid.size, self.handle.dim)
        return LinearOperator(
            (self.size, self.size),
            matvec=lambda x: self.apply(x.reshape(shape)).ravel(),
            dtype=complex,
        )

    def spectral_radius(self) -> float:
        """largest |eigenvalue| of the discretized S_A"""
        if self.zero:
            return 0.0
        if self._rho is not None:
            return self._rho
        if self.size <= min(EIGVALS_LIMIT, self.dense_limit):
            self._rho = float(np.max(np.abs(np.linalg.eigvals(self.dense_matrix()))))
            return self._rho
        try:
            values = eigs(self.linear_operator(), k=1, which="LM", return_eigenvectors=False)
        except ArpackNoConvergence as exc:
            values = exc.eigenvalues
            logger.warning(f"arpack did not converge on S_A of size {self.size}")
        if len(values):
            self._rho = float(np.max(np.abs(values)))
        elif self._contraction is not None:
            self._rho = self._contraction
        else:
            return float("nan")
        return self._rho

    def solve(self, rhs: np.ndarray, tol: float = 1e-10, max_iterations: int = 500,
              method: str = "auto") -> Tuple[np.ndarray, SolveReport]:
        """f = rhs + S_A f by fixed-point iteration, falling back to a dense (or krylov) solve"""
        rhs = np.asarray(rhs, dtype=complex)
        if self.zero:
            return rhs.copy(), SolveReport(SolveStatus.TRIVIAL)
        report = SolveReport(SolveStatus.ITERATIVE)
        f = rhs.copy()
        converged = False
        if method in ("auto", "iterative"):
            changes = []
            for iteration in range(1, max_iterations + 1):
                update = rhs + self.apply(f)
                change = np.linalg.norm(update - f)
                changes.append(change)
                f = update
                size = np.linalg.norm(f)
                if change <= tol * max(size, np.finfo(float).tiny):
                    converged = True
                    report.iterations = iteration
                    self._contraction = _contraction_rate(changes)
                    report.spectral_radius = self.spectral_radius()
                    break
                if not np.isfinite(size) or size > 1e12 * max(np.linalg.norm(rhs), 1.0):
                    break
            if not converged:
                report.notes.append("fixed-point iteration did not converge")
                logger.warning(f"fixed-point iteration stalled after {max_iterations} steps, solving directly")
        if not converged:
            if method == "iterative":
                raise InvertibilityError(
                    "fixed-point iteration for I - S_A did not converge",
                    spectral_radius=self.spectral_radius(), small_carleson_verified=False,
                )
            f, report = self._direct_solve(rhs, report)
        report.residual = self.residual(f, rhs)
        return f, report

    def _direct_solve(self, rhs: np.ndarray, report: SolveReport) -> Tuple[np.ndarray, SolveReport]:
        shape = rhs.shape
        flat = rhs.reshape(self.size, -1)
        if self.size <= self.dense_limit:
            try:
                solution = lu_solve(self.lu(), flat)
            except InvertibilityError as exc:
                exc.details["spectral_radius"] = self.spectral_radius()
                raise
            report.status = SolveStatus.DENSE
        else:
            operator = LinearOperator(
                (self.size, self.size),
                matvec=lambda x: x - self.apply(x.reshape(shape[:2])).ravel(),
                dtype=complex,
            )
            columns = []
            for column in flat.T:
                solution, info = gmres(operator, column, rtol=1e-12, restart=200, maxiter=50)
                if info != 0:
                    raise InvertibilityError(
                        "krylov solve of I - S_A did not converge",
                        spectral_radius=self.spectral_radius(), small_carleson_verified=False,
                    )
                columns.append(solution)
            solution = np.stack(columns, axis=1)
            report.status = SolveStatus.KRYLOV
        report.spectral_radius = self.spectral_radius()
        return solution.reshape(shape), report

    def residual(self, f: np.ndarray, rhs: np.ndarray) -> float:
        """||f - rhs - S_A f|| / ||f||"""
        size = max(float(np.linalg.norm(f)), np.finfo(float).tiny)
        return float(np.linalg.norm(f - rhs - self.apply(f)) / size)


def apply_SA(E: Discrepancy, f: Trajectory, handle: CalculusHandle,
             route: str = DIRECT_ROUTE) -> Trajectory:
    """S_A f as a conormal trajectory (cell averages, node values, t = 0 value)"""
    if f.kind is not TrajectoryKind.CONORMAL_F:
        raise QuadratureError("S_A acts on conormal trajectories")
    integrals = ConormalIntegrals(handle, E, f.grid, route=route)
    return Trajectory(
        f.grid, f.m, f.K, integrals.apply(f.averages), TrajectoryKind.CONORMAL_F,
        integrals.at_nodes(f.averages), integrals.at(0.0, f.averages),
    )


def apply_tilde_SA(E: Discrepancy, f: Trajectory, handle: CalculusHandle,
                   tilde_handle: Optional[CalculusHandle] = None) -> Trajectory:
    """S_A-tilde f as a potential trajectory; its t = 0 value is h-tilde-minus"""
    integrals = ConormalIntegrals(handle, E, f.grid, tilde_handle)
    result = Trajectory(
        f.grid, f.m, f.K, integrals.apply_tilde(f.averages), TrajectoryKind.POTENTIAL_V,
        np.array([integrals.tilde_at(t, f.averages) for t in f.grid.nodes]),
        integrals.tilde_at(0.0, f.averages),
    )
    growth = weight_growth(result)
    if growth > 1.0:
        logger.warning(f"potential grows like e^({growth:.2f} t), the weighted class may not apply")
    result.diagnostics["weight_growth"] = growth
    return result


def weight_growth(trajectory: Trajectory) -> float:
    """fitted exponent of ||v_t|| on the upper half of the grid (Y_delta proxy)"""
    norms = trajectory.norms(pointwise=True)
    upper = trajectory.grid.nodes >= 1.0
    if np.count_nonzero(upper) < 3 or np.all(norms[upper] == 0):
        return 0.0
    slope = np.polyfit(trajectory.grid.nodes[upper], np.log(np.maximum(norms[upper], 1e-300)), 1)[0]
    return float(slope)


def solve_conormal(h_plus: BoundarySection, E: Discrepancy, handle: CalculusHandle, grid: TimeGrid,
                   integrals: Optional[ConormalIntegrals] = None, tol: float = 1e-10,
                   max_iterations: int = 500, method: str = "auto") -> Trajectory:
    """f = (I - S_A)^{-1} e^{-t Lambda} h+"""
    free = semigroup_trajectory(h_plus, handle, grid)
    integrals = integrals or ConormalIntegrals(handle, E, grid)
    f, report = integrals.solve(free.averages, tol, max_iterations, method)
    nodes = free.node_values + integrals.at_nodes(f)
    initial = free.initial + integrals.at(0.0, f)
    trajectory = Trajectory(grid, handle.m, handle.K, f, TrajectoryKind.CONORMAL_F, nodes, initial)
    trajectory.diagnostics["solve"] = report
    logger.info(f"conormal solve {report.status.value} in {report.iterations} iterations, residual {report.residual:.2e}")
    return trajectory


def ode_residual(f: Trajectory, handle: CalculusHandle, E: Optional[Discrepancy] = None) -> float:
    """max over nodes of ||(f_{l+1} - f_l)/dt + D_0 f_mid - D E_mid f_mid|| relative to ||D_0 f||"""
    if f.node_values is None:
        raise QuadratureError("ode residual needs node values")
    values = f.node_values
    dt = np.diff(f.grid.nodes)[:, None]
    middle = 0.5 * (values[1:] + values[:-1])
    D0 = handle.generator.entries
    residual = (values[1:] - values[:-1]) / dt + middle @ D0.T
    if E is not None and not E.is_zero():
        D = assemble_D(f.m, f.K).entries
        order = np.argsort(E.times)
        mult = [galerkin_matrix(E.samples[i].entries, f.K) for i in order]
        forcing = np.array([
            D @ (0.5 * (mult[l] @ values[l] + mult[l + 1] @ values[l + 1])) for l in range(f.grid.size - 1)
        ])
        residual = residual - forcing
    scale = max(float(np.max(np.linalg.norm(values @ D0.T, axis=1))), np.finfo(float).tiny)
    return float(np.max(np.linalg.norm(residual, axis=1)) / scale)
