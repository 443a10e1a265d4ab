"""
dirichlet, neumann and regularity solutions on the disk, reconstructed from conormal trajectories
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid

from ..api.types import ProblemKind
from ..core.calculus import chi_plus
from ..core.coefficients import CoefficientField, Discrepancy, RadialCoefficient, evaluation_size
from ..core.errors import DataSpaceError, DimensionMismatchError
from ..core.fields import BoundarySection, PolarGridFunction, galerkin_matrix, grid_angles, synthesize_array
from ..core.operators import assemble_D, inverse_D
from .hardy import SolverContext, SolverSettings, wellposedness_map
from .timegrid import Trajectory, TrajectoryKind

logger = logging.getLogger(__name__)

MEAN_TOL = 1e-10


def _point_state(handle, start: np.ndarray, t: float) -> np.ndarray:
    V, W, mu, _ = handle.modal_basis()
    return V @ (np.exp(-t * mu) * (W @ start))


@dataclass(eq=False)
class BVPSolution:
    """solution of one boundary value problem with its conormal (f) and potential (v) trajectories"""
    problem: ProblemKind
    context: SolverContext
    h_plus: np.ndarray  # E_0^+ part driving f
    h_tilde_plus: np.ndarray  # E_0~^+ part driving v
    f: Trajectory
    v: Trajectory
    datum: np.ndarray  # (m, 2K+1)
    n_theta: int
    u: Optional[PolarGridFunction] = None
    grad: Optional[PolarGridFunction] = None
    conjugate: Optional[PolarGridFunction] = None
    trace_u1: Optional[BoundarySection] = None
    trace_g1: Optional[BoundarySection] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.context.m

    @property
    def K(self) -> int:
        return self.context.K

    def conormal_at(self, t: float) -> np.ndarray:
        """f_t = e^{-t Lambda} h+ + (S_A f)(t)"""
        free = _point_state(self.context.handle, self.h_plus, t)
        return free + self.context.integrals.at(t, self.f.averages)

    def potential_at(self, t: float) -> np.ndarray:
        """v_t = e^{-t Lambda~} h~+ + (S_A~ f)(t)"""
        free = _point_state(self.context.tilde_handle, self.h_tilde_plus, t)
        return free + self.context.integrals.tilde_at(t, self.f.averages)

    def _multiplied(self, t: float, vector: np.ndarray) -> np.ndarray:
        """B_t f with B_t = B_0 - E_t"""
        context = self.context
        M0 = galerkin_matrix(context.B0.entries, self.K)
        if t == 0.0 or context.integrals.zero:
            return M0 @ vector
        return M0 @ vector - context.integrals.mult[context.grid.cell_of(t)] @ vector

    def mean_offsets(self, times: np.ndarray) -> np.ndarray:
        """c(t) = -int_0^t e^{sigma s} mean((B_s f_s)_perp) ds per component, interpolated from the grid"""
        width = 2 * self.K + 1
        means_at = [j * width + self.K for j in range(self.m)]
        table_times = np.concatenate([[0.0], self.context.grid.nodes])
        conormals = np.vstack([self.f.initial[None, :], self.f.node_values])
        means = np.array([
            np.exp(self.context.sigma * t) * self._multiplied(t, f)[means_at]
            for t, f in zip(table_times, conormals)
        ])
        table = -cumulative_trapezoid(means, table_times, axis=0, initial=0.0)
        times = np.asarray(times, dtype=float)
        return np.stack([
            np.interp(times, table_times, table[:, j].real) + 1j * np.interp(times, table_times, table[:, j].imag)
            for j in range(self.m)
        ], axis=1)

    def evaluate(self, radii: Sequence[float], n_theta: Optional[int] = None):
        """(u, grad, conjugate) on the polar grid of the given radii in (0, 1]"""
        n_theta = n_theta or self.n_theta
        radii = np.sort(np.asarray(radii, dtype=float))
        times = -np.log(radii)
        conormals = np.array([self.conormal_at(t) for t in times])
        potentials = np.array([self.potential_at(t) for t in times])
        offsets = None if self.problem is ProblemKind.DIRICHLET else self.mean_offsets(times)
        return self._reconstruct(radii, times, conormals, potentials, offsets, n_theta)

    def _reconstruct(self, radii, times, conormals, potentials, offsets, n_theta):
        m, K, sigma = self.m, self.K, self.context.sigma
        width = 2 * K + 1
        angles = grid_angles(n_theta)
        scale = radii ** (-sigma)
        v_coeffs = potentials.reshape(radii.size, 2 * m, width)
        f_coeffs = conormals.reshape(radii.size, 2 * m, width)
        if self.problem is ProblemKind.DIRICHLET:
            u_coeffs = v_coeffs[:, :m] * scale[:, None, None]
        else:
            u_coeffs = f_coeffs[:, m:] * _inverse_derivative(K)[None, None, :] * scale[:, None, None]
            u_coeffs[:, :, K] = offsets
        multiplied = np.array([self._multiplied(t, f) for t, f in zip(times, conormals)])
        g_coeffs = np.concatenate([
            multiplied.reshape(radii.size, 2 * m, width)[:, :m], f_coeffs[:, m:]
        ], axis=1) * (radii ** (-(sigma + 1.0)))[:, None, None]
        conjugate_coeffs = v_coeffs[:, m:] * scale[:, None, None]

        def grid(coeffs, label):
            values = synthesize_array(coeffs, n_theta).transpose(1, 0, 2)
            return PolarGridFunction(radii, angles, values, label)

        return grid(u_coeffs, "u"), grid(g_coeffs, "grad"), grid(conjugate_coeffs, "conjugate")

    def boundary_traces(self):
        """(u_1, g_1) as sections: u_1 in the normal slots, g_1 = (d_r u, d_theta u)"""
        m, K = self.m, self.K
        f0 = self.f.initial
        v0 = self.v.initial
        width = 2 * K + 1
        u1 = np.zeros(2 * m * width, dtype=complex)
        if self.problem is ProblemKind.DIRICHLET:
            u1[: m * width] = v0[: m * width]
        else:
            u1[: m * width] = f0[m * width:] * np.tile(_inverse_derivative(K), m)
        g1 = np.concatenate([self._multiplied(0.0, f0)[: m * width], f0[m * width:]])
        return BoundarySection.from_vector(m, K, u1), BoundarySection.from_vector(m, K, g1)

    def trace_error(self) -> float:
        """distance of the reconstructed boundary data from the prescribed datum"""
        width = 2 * self.K + 1
        if self.problem is ProblemKind.DIRICHLET:
            observed = self.trace_u1.normal
        elif self.problem is ProblemKind.NEUMANN:
            observed = self.f.initial[: self.m * width].reshape(self.m, width)
        else:
            observed = self.trace_g1.tangential
        scale = max(float(np.max(np.abs(self.datum))), 1.0)
        return float(np.max(np.abs(observed - self.datum)) / scale)


def _inverse_derivative(K: int) -> np.ndarray:
    """multipliers of the mean-zero antiderivative on modes -K..K"""
    k = np.arange(-K, K + 1)
    factor = np.zeros(k.size, dtype=complex)
    factor[k != 0] = 1.0 / (1j * k[k != 0])
    return factor


def datum_array(phi: Union[np.ndarray, BoundarySection], m: int, K: int,
                problem: ProblemKind) -> np.ndarray:
    """(m, 2K+1) fourier coefficients of the boundary datum"""
    if isinstance(phi, BoundarySection):
        phi = phi.tangential if problem is ProblemKind.REGULARITY else phi.normal
    phi = np.atleast_2d(np.asarray(phi, dtype=complex))
    if phi.shape != (m, 2 * K + 1):
        raise DimensionMismatchError(f"datum of shape {phi.shape}, expected {(m, 2 * K + 1)}")
    if not np.all(np.isfinite(phi)):
        raise DataSpaceError("datum has non-finite coefficients")
    if problem is not ProblemKind.DIRICHLET:
        mean = float(np.max(np.abs(phi[:, K])))
        if mean > MEAN_TOL * max(float(np.max(np.abs(phi))), 1.0):
            what = "neumann datum" if problem is ProblemKind.NEUMANN else "tangential gradient datum"
            raise DataSpaceError(f"{what} must have zero mean, found {mean:.3e}", mean=mean)
    return phi


def _context(phi, A, K: Optional[int], sigma: float, settings: Optional[SolverSettings],
             context: Optional[SolverContext]) -> SolverContext:
    """reuse the given context, or build one for A (the identity when A is omitted)"""
    if isinstance(phi, BoundarySection):
        m, width = phi.m, 2 * phi.K + 1
    else:
        m, width = np.atleast_2d(phi).shape
    if K is None:
        K = context.K if context is not None else (width - 1) // 2
    if context is not None:
        if context.K != K:
            raise DimensionMismatchError(f"solver context has K={context.K}, datum has K={K}")
        return context
    if A is None:
        A = CoefficientField.identity(m)
    return SolverContext.create(A, K, sigma, settings)


def _solve(problem: ProblemKind, context: SolverContext, h_plus: np.ndarray, h_tilde_plus: np.ndarray,
           datum: np.ndarray, n_theta: Optional[int]) -> BVPSolution:
    integrals = context.integrals
    grid = context.grid
    m, K = context.m, context.K
    free_f = context.free_averages(context.handle, h_plus[:, None])[..., 0]
    free_v = context.free_averages(context.tilde_handle, h_tilde_plus[:, None])[..., 0]
    f_avg, report = context.solve(free_f)
    f_nodes = np.array([_point_state(context.handle, h_plus, t) for t in grid.nodes]) \
        + integrals.at_nodes(f_avg)
    v_nodes = np.array([
        _point_state(context.tilde_handle, h_tilde_plus, t) + integrals.tilde_at(t, f_avg)
        for t in grid.nodes
    ])
    f = Trajectory(grid, m, K, f_avg, TrajectoryKind.CONORMAL_F, f_nodes, h_plus + integrals.at(0.0, f_avg))
    f.diagnostics["solve"] = report
    v = Trajectory(grid, m, K, free_v + integrals.apply_tilde(f_avg), TrajectoryKind.POTENTIAL_V,
                   v_nodes, h_tilde_plus + integrals.tilde_at(0.0, f_avg))
    n_theta = n_theta or max(64, evaluation_size(K))
    solution = BVPSolution(problem, context, h_plus, h_tilde_plus, f, v, datum, n_theta)
    solution.trace_u1, solution.trace_g1 = solution.boundary_traces()
    radii = np.concatenate([np.exp(-grid.nodes[::-1]), [1.0]])
    solution.u, solution.grad, solution.conjugate = solution.evaluate(radii, n_theta)
    solution.diagnostics.update({
        "solve_status": report.status.value,
        "iterations": report.iterations,
        "residual": report.residual,
        "spectral_radius": report.spectral_radius,
        "carleson_norm": context.carleson_norm,
        "carleson_threshold": context.settings.carleson_threshold,
        "small_carleson_verified": report.small_carleson_verified,
        "t_max": grid.t_max,
        "time_nodes": grid.size,
        "trace_error": solution.trace_error(),
    })
    logger.info(
        f"{problem.value} solve: {report.status.value}, trace error {solution.diagnostics['trace_error']:.2e}"
    )
    return solution


def solve_dirichlet(phi: Union[np.ndarray, BoundarySection], A: Union[RadialCoefficient, CoefficientField, None] = None,
                    K: Optional[int] = None, sigma: float = 0.0, settings: Optional[SolverSettings] = None,
                    context: Optional[SolverContext] = None, n_theta: Optional[int] = None) -> BVPSolution:
    """u with u|_{r=1} = phi, built from v = e^{-t Lambda~} h~+ + S_A~ f"""
    context = _context(phi, A, K, sigma, settings, context)
    context.require_small_carleson()
    K = context.K
    datum = datum_array(phi, context.m, K, ProblemKind.DIRICHLET)
    boundary_map = wellposedness_map(ProblemKind.DIRICHLET, context)
    h_tilde_plus = boundary_map.solve(datum.ravel())
    h_plus = assemble_D(context.m, K).entries @ h_tilde_plus
    solution = _solve(ProblemKind.DIRICHLET, context, h_plus, h_tilde_plus, datum, n_theta)
    solution.diagnostics["condition_number"] = boundary_map.condition_number
    return solution


def _solve_conormal_problem(problem: ProblemKind, phi, A, K, sigma, settings, context, n_theta) -> BVPSolution:
    context = _context(phi, A, K, sigma, settings, context)
    context.require_small_carleson()
    K = context.K
    datum = datum_array(phi, context.m, K, problem)
    boundary_map = wellposedness_map(problem, context)
    keep = np.arange(2 * K + 1) != K
    h_plus = boundary_map.solve(datum[:, keep].ravel())
    lift = inverse_D(context.m, K).entries @ h_plus
    h_tilde_plus = context.tilde_handle.matrix(chi_plus()) @ lift
    solution = _solve(problem, context, h_plus, h_tilde_plus, datum, n_theta)
    solution.diagnostics["condition_number"] = boundary_map.condition_number
    return solution


def solve_neumann(phi: Union[np.ndarray, BoundarySection], A: Union[RadialCoefficient, CoefficientField, None] = None,
                  K: Optional[int] = None, sigma: float = 0.0, settings: Optional[SolverSettings] = None,
                  context: Optional[SolverContext] = None, n_theta: Optional[int] = None) -> BVPSolution:
    """u with conormal derivative phi at r = 1, normalized to mean zero on the boundary"""
    return _solve_conormal_problem(ProblemKind.NEUMANN, phi, A, K, sigma, settings, context, n_theta)


def solve_regularity(phi: Union[np.ndarray, BoundarySection], A: Union[RadialCoefficient, CoefficientField, None] = None,
                     K: Optional[int] = None, sigma: float = 0.0, settings: Optional[SolverSettings] = None,
                     context: Optional[SolverContext] = None, n_theta: Optional[int] = None) -> BVPSolution:
    """u with tangential gradient phi at r = 1, normalized to mean zero on the boundary"""
    return _solve_conormal_problem(ProblemKind.REGULARITY, phi, A, K, sigma, settings, context, n_theta)


SOLVERS = {
    ProblemKind.DIRICHLET: solve_dirichlet,
    ProblemKind.NEUMANN: solve_neumann,
    ProblemKind.REGULARITY: solve_regularity,
}


@dataclass
class ConjugatePairReport:
    """decomposition v = e^{-t Lambda~} v_0 + w~ and f = e^{-t Lambda} f_0 + w"""
    potential_remainder: np.ndarray  # ||w~_t|| at the nodes
    conormal_remainder: np.ndarray  # ||w_t|| at the nodes
    pairing_residual: float  # max ||D v_t - f_t|| / max ||f_t||
    growth_exponent: float  # fitted exponent of ||v_t - v_0|| for small t
    boundary_limit: float  # ||v_{t_min} - v_0|| / ||v_0||


def conjugate_pair(solution: BVPSolution) -> ConjugatePairReport:
    """split the trajectories into semigroup parts and remainders and check D v = f"""
    context = solution.context
    nodes = context.grid.nodes
    v0, f0 = solution.v.initial, solution.f.initial
    semigroup_v = np.array([_point_state(context.tilde_handle, v0, t) for t in nodes])
    semigroup_f = np.array([_point_state(context.handle, f0, t) for t in nodes])
    w_tilde = solution.v.node_values - semigroup_v
    w = solution.f.node_values - semigroup_f
    D = assemble_D(solution.m, solution.K).entries
    pairing = solution.v.node_values @ D.T - solution.f.node_values
    scale = max(float(np.max(np.linalg.norm(solution.f.node_values, axis=1))), np.finfo(float).tiny)
    distance = np.linalg.norm(solution.v.node_values - v0[None, :], axis=1)
    small = (nodes < 0.1) & (distance > 0)
    growth = float(np.polyfit(np.log(nodes[small]), np.log(distance[small]), 1)[0]) \
        if np.count_nonzero(small) >= 3 else 0.0
    return ConjugatePairReport(
        potential_remainder=np.linalg.norm(w_tilde, axis=1),
        conormal_remainder=np.linalg.norm(w, axis=1),
        pairing_residual=float(np.max(np.linalg.norm(pairing, axis=1)) / scale),
        growth_exponent=growth,
        boundary_limit=float(distance[0] / max(np.linalg.norm(v0), np.finfo(float).tiny)),
    )


@dataclass(eq=False)
class SemigroupFamily:
    """P_r phi = the dirichlet solution for radially independent coefficients, read at radius r"""
    radii: np.ndarray
    operators: List[np.ndarray]  # each (m(2K+1), m(2K+1)) on normal coefficients

    def at(self, r: float) -> np.ndarray:
        index = int(np.argmin(np.abs(self.radii - r)))
        if not np.isclose(self.radii[index], r):
            raise DimensionMismatchError(f"radius {r} is not part of the family")
        return self.operators[index]


def semigroup_family(context: SolverContext, radii: Sequence[float]) -> SemigroupFamily:
    """P_r = R_perp r^{-sigma} e^{-t Lambda~} Q Phi^{-1} for the boundary coefficients of the context"""
    base = SolverContext.from_discrepancy(
        Discrepancy.zero(context.B0, context.grid.nodes), context.sigma, context.K, context.grid,
        context.settings, f"{context.name} boundary",
    )
    boundary_map = wellposedness_map(ProblemKind.DIRICHLET, base)
    lift = boundary_map.basis @ boundary_map.inverse()
    rows = boundary_map.rows
    radii = np.asarray(radii, dtype=float)
    V, W, mu, _ = base.tilde_handle.modal_basis()
    operators = []
    for r in radii:
        t = -np.log(r)
        evolution = (V * np.exp(-t * mu)[None, :]) @ W
        operators.append(r ** (-context.sigma) * (evolution @ lift)[rows])
    return SemigroupFamily(radii, operators)


def multiplicativity_residual(family: SemigroupFamily, r: float, s: float) -> float:
    """||P_{rs} - P_r P_s||"""
    return float(np.linalg.norm(family.at(r * s) - family.at(r) @ family.at(s), 2))
