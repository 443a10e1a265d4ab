"""
verification battery: registered checks grouped in suites, run into a ledger
"""

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Union

import numpy as np

from ..api.config import RunConfig
from ..api.types import CheckResult, Ledger, ProblemKind, Suite
from ..core.calculus import CalculusHandle, block_anticommutator, intertwine_check, square_function_norm
from ..core.carleson import carleson_norm, truncated_carleson_norms
from ..core.coefficients import hat_transform
from ..core.errors import ConfigError, DiskBVPError
from ..core.fields import BoundarySection, mode_range
from ..core.operators import h_indices
from ..data.samples import (
    cosine_datum, cosine_diagonal, hardy_sample, identity_coefficient, radial_perturbation,
    random_accretive, random_block, random_datum, random_hermitean, step_discrepancy,
)
from ..solver.bvp import SOLVERS, conjugate_pair, multiplicativity_residual, semigroup_family, solve_dirichlet
from ..solver.hardy import (
    SolverContext, decay_horizon, duality_residual, hardy_plus_matrix, rellich_residual,
)
from ..solver.integral import DECOMPOSED_ROUTE, ConormalIntegrals
from ..solver.timegrid import TimeGrid
from .norms import apriori_constant, reverse_holder_ratio, trace_rate, y_x_norms
from .oracle import compare_with_oracle, fd_oracle

logger = logging.getLogger(__name__)

SAMPLE_AMPLITUDE = 0.3  # sup |A - I| of random samples
LOOSE_BOUND = 1e2  # observed constants of nonconstructive estimates
ORACLE_GRIDS = [(64, 128), (128, 256)]  # (n_r, n_theta), coarse to fine
HAT_RESOLUTION = 64  # modes kept while checking the involution


@dataclass
class Observation:
    """what a check measured"""
    value: float
    details: Dict[str, Any] = field(default_factory=dict)
    trend_ok: bool = True  # refinement trend, when the check has one


@dataclass
class CheckMetadata:
    """metadata for check registration"""
    name: str
    suite: Suite
    description: str
    tolerance: float


@dataclass
class Check:
    metadata: CheckMetadata
    run: Callable[[RunConfig, np.random.Generator], Observation]

    @property
    def check_id(self) -> str:
        return f"{self.metadata.suite.value}.{self.metadata.name}"


class CheckRegistry:
    """central check registry"""

    def __init__(self):
        self.checks: Dict[str, Check] = {}

    def register_check(self, check: Check) -> bool:
        check_id = check.check_id
        if check_id in self.checks:
            logger.warning(f"check {check_id} already registered, overwriting")
        self.checks[check_id] = check
        logger.debug(f"registered check: {check_id}")
        return True

    def check(self, name: str, suite: Suite, description: str, tolerance: float):
        """decorator registering a check function"""
        def decorator(func):
            self.register_check(Check(CheckMetadata(name, suite, description, tolerance), func))
            return func
        return decorator

    def get_check(self, check_id: str) -> Optional[Check]:
        return self.checks.get(check_id)

    def get_checks_by_suite(self, suite: Suite) -> List[Check]:
        return [c for c in self.checks.values() if c.metadata.suite is suite]

    def get_all_checks(self) -> List[Check]:
        return list(self.checks.values())


registry = CheckRegistry()


def _generator(seed: int, check_id: str) -> np.random.Generator:
    """per-check stream, independent of execution order"""
    return np.random.default_rng([seed, zlib.crc32(check_id.encode("utf-8"))])


def run_check(check: Check, config: RunConfig) -> CheckResult:
    meta = check.metadata
    try:
        observation = check.run(config, _generator(config.seed, check.check_id))
    except DiskBVPError as exc:
        logger.error(f"check {check.check_id} raised {type(exc).__name__}: {exc.message}")
        return CheckResult(meta.suite.value, meta.name, False, float("nan"), meta.tolerance,
                           meta.description, config.seed, {"error": exc.to_dict()})
    value = float(observation.value)
    passed = bool(np.isfinite(value) and value <= meta.tolerance and observation.trend_ok)
    if not passed:
        logger.warning(f"check {check.check_id} failed: observed {value:.3e}, tolerance {meta.tolerance:.1e}")
    details = dict(observation.details)
    details["trend_ok"] = observation.trend_ok
    return CheckResult(meta.suite.value, meta.name, passed, value, meta.tolerance,
                       meta.description, config.seed, details)


def _suites(suites: Optional[Iterable[Union[Suite, str]]]) -> List[Suite]:
    if suites is None:
        return list(Suite)
    selected = []
    for suite in suites:
        try:
            selected.append(suite if isinstance(suite, Suite) else Suite(suite))
        except ValueError as exc:
            raise ConfigError(f"unknown suite '{suite}'", field="suite") from exc
    return selected


def identity_battery(config: RunConfig, suites: Optional[Iterable[Union[Suite, str]]] = None,
                     workers: int = 1) -> Ledger:
    """run every registered check of the selected suites; results keep registration order"""
    selected = _suites(suites)
    checks = [c for suite in selected for c in registry.get_checks_by_suite(suite)]
    logger.info(f"running {len(checks)} checks from {[s.value for s in selected]}")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda c: run_check(c, config), checks))
    else:
        results = [run_check(c, config) for c in checks]
    ledger = Ledger([s.value for s in selected], results, seed=config.seed)
    logger.info(f"battery finished: {len(results) - len(ledger.failures)}/{len(results)} passed")
    return ledger


# shared instances

def _small_K(config: RunConfig) -> int:
    return max(2, min(config.K, 4))


def _m(config: RunConfig) -> int:
    return min(config.m, 2)


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), np.finfo(float).tiny))


def _padded(f: BoundarySection, K: int) -> BoundarySection:
    coeffs = np.zeros((2 * f.m, 2 * K + 1), dtype=complex)
    coeffs[:, K - f.K:K + f.K + 1] = f.coeffs
    return BoundarySection(f.m, K, coeffs)


def _perturbed_context(config: RunConfig, rng: np.random.Generator, K: int,
                       m: Optional[int] = None) -> SolverContext:
    """small-carleson radial perturbation A_1 + epsilon (1 - r) C of a random accretive A_1"""
    A1 = random_accretive(m or _m(config), config.coeff_K, rng, SAMPLE_AMPLITUDE)
    radial = radial_perturbation(A1, config.epsilon, rng)
    return SolverContext.create(radial, K, 0.0, config.solver_settings())


def _step_context(config: RunConfig, rng: np.random.Generator) -> SolverContext:
    """E_t = epsilon chi_{t<1} M with a fixed unit matrix M"""
    m, K = _m(config), _small_K(config)
    B0 = hat_transform(random_accretive(m, config.coeff_K, rng, SAMPLE_AMPLITUDE))
    settings = config.solver_settings()
    handle = CalculusHandle.build(B0, 0.0, K, gap_tol=config.gap_tol, cond_limit=config.cond_limit)
    grid = TimeGrid.geometric(config.t_max or decay_horizon(handle, config.decay_tol), config.q, config.t_min)
    matrix = rng.standard_normal((2 * m, 2 * m))
    E = step_discrepancy(B0, grid.nodes, config.epsilon, matrix / np.linalg.norm(matrix, 2))
    return SolverContext.from_discrepancy(E, 0.0, K, grid, settings, "step discrepancy")


# identities

@registry.check("hat_involution", Suite.IDENTITIES, "hat(hat(A)) = A on random accretive samples", 1e-11)
def _hat_involution(config: RunConfig, rng: np.random.Generator) -> Observation:
    errors = []
    for i in range(10 * config.samples):
        A = random_accretive(1 + i % 2, config.coeff_K, rng, SAMPLE_AMPLITUDE, bandwidth=min(config.K, 2))
        A = A.with_K(max(config.coeff_K, HAT_RESOLUTION))
        errors.append(float(np.max(np.abs(hat_transform(hat_transform(A)).values() - A.values()))))
    return Observation(max(errors), {"samples": len(errors)})


@registry.check("hat_adjoint", Suite.IDENTITIES, "hat(A*) = N hat(A)* N", 1e-11)
def _hat_adjoint(config: RunConfig, rng: np.random.Generator) -> Observation:
    errors = []
    for _ in range(config.samples):
        A = random_accretive(_m(config), config.coeff_K, rng, SAMPLE_AMPLITUDE)
        expected = hat_transform(A).adjoint().flip()
        errors.append(float(np.max(np.abs(hat_transform(A.adjoint()).values() - expected.values()))))
    return Observation(max(errors), {"samples": len(errors)})


@registry.check("intertwining", Suite.IDENTITIES, "E_0 D = D E_0~ and D_0 D = D D_0~", 1e-10)
def _intertwining(config: RunConfig, rng: np.random.Generator) -> Observation:
    residuals = {}
    for sigma in sorted({0.0, 1.0, config.sigma}):
        B0 = hat_transform(random_accretive(_m(config), config.coeff_K, rng, SAMPLE_AMPLITUDE))
        handle = CalculusHandle.build(B0, sigma, config.K, gap_tol=config.gap_tol, cond_limit=config.cond_limit)
        residuals[f"sigma={sigma:g}"] = intertwine_check(handle)
    return Observation(max(residuals.values()), residuals)


@registry.check("harmonic_baseline", Suite.IDENTITIES, "A = I, cos theta gives r cos theta and -r sin theta", 1e-10)
def _harmonic_baseline(config: RunConfig, rng: np.random.Generator) -> Observation:
    K = 16
    solution = solve_dirichlet(cosine_datum(1, K), identity_coefficient(1), K=K, settings=config.solver_settings())
    R, T = np.meshgrid(solution.u.radii, solution.u.angles, indexing="ij")
    u_error = float(np.max(np.abs(solution.u.values[0] - R * np.cos(T))))
    shifted = solution.conjugate.values[0] + R * np.sin(T)
    conjugate_error = float(np.max(np.abs(shifted - shifted.mean())))
    return Observation(max(u_error, conjugate_error), {"u": u_error, "conjugate": conjugate_error})


@registry.check("duality", Suite.IDENTITIES, "(E_A^-)* = N E_{A*}~^+ N on small-carleson instances", 1e-7)
def _duality(config: RunConfig, rng: np.random.Generator) -> Observation:
    context = _perturbed_context(config, rng, _small_K(config))
    residual = duality_residual(context)
    return Observation(residual, {"carleson_norm": carleson_norm(context.E)})


@registry.check("rellich", Suite.IDENTITIES, "(N h+, B0 h+) = 0 for hermitean A and sigma = 0", 1e-9)
def _rellich(config: RunConfig, rng: np.random.Generator) -> Observation:
    A1 = random_hermitean(_m(config), config.coeff_K, rng, SAMPLE_AMPLITUDE)
    context = SolverContext.create(A1, config.K, 0.0, config.solver_settings())
    residuals = [rellich_residual(context, hardy_sample(context.handle, rng)) for _ in range(4 * config.samples)]
    return Observation(max(residuals), {"samples": len(residuals)})


@registry.check("block_anticommutator", Suite.IDENTITIES,
                "(E_0 N + N E_0)/2 = sigma ((D B0)^2 + sigma^2)^{-1/2} for block B0, sigma = 1", 1e-8)
def _block_anticommutator(config: RunConfig, rng: np.random.Generator) -> Observation:
    B0 = hat_transform(random_block(_m(config), config.coeff_K, rng, SAMPLE_AMPLITUDE))
    report = block_anticommutator(B0, 1.0, config.K)
    return Observation(report.residual, {"lhs_norm": float(np.linalg.norm(report.lhs, 2))})


@registry.check("integral_solve", Suite.IDENTITIES, "fixed-point and dense solves of (I - S_A) f agree", 1e-9)
def _integral_solve(config: RunConfig, rng: np.random.Generator) -> Observation:
    context = _step_context(config, rng)
    h = hardy_sample(context.handle, rng)
    rhs = context.free_averages(context.handle, h.vector()[:, None])[..., 0]
    integrals = context.integrals
    fixed, fixed_report = integrals.solve(rhs, config.iteration_tol, config.max_iterations, "iterative")
    dense, dense_report = integrals.solve(rhs, method="dense")
    difference = _relative(fixed, dense)
    radius = dense_report.spectral_radius
    details = {
        "difference": difference,
        "fixed_point_residual": fixed_report.residual,
        "dense_residual": dense_report.residual,
        "iterations": fixed_report.iterations,
        "spectral_radius": radius,
    }
    return Observation(max(difference, fixed_report.residual, dense_report.residual), details,
                       trend_ok=radius is None or radius < 0.5)


@registry.check("route_equivalence", Suite.IDENTITIES, "direct and decomposed S_A agree", 1e-9)
def _route_equivalence(config: RunConfig, rng: np.random.Generator) -> Observation:
    context = _step_context(config, rng)
    decomposed = ConormalIntegrals(context.handle, context.E, context.grid, context.tilde_handle,
                                   route=DECOMPOSED_ROUTE)
    shape = (context.grid.size, context.handle.dim)
    f = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return Observation(_relative(decomposed.apply(f), context.integrals.apply(f)))


@registry.check("semigroup_law", Suite.IDENTITIES, "P_{1/2} P_{1/2} = P_{1/4} for hermitean A_1", 1e-7)
def _semigroup_law(config: RunConfig, rng: np.random.Generator) -> Observation:
    A1 = random_hermitean(_m(config), config.coeff_K, rng, SAMPLE_AMPLITUDE)
    context = SolverContext.create(A1, _small_K(config), 0.0, config.solver_settings())
    family = semigroup_family(context, [0.25, 0.5])
    return Observation(multiplicativity_residual(family, 0.5, 0.5))


@registry.check("semigroup_modes", Suite.IDENTITIES, "P_r acts as r^|k| per mode for A = I", 1e-12)
def _semigroup_modes(config: RunConfig, rng: np.random.Generator) -> Observation:
    m, K = _m(config), config.K
    context = SolverContext.create(identity_coefficient(m), K, 0.0, config.solver_settings())
    radii = [0.25, 0.5, 0.75]
    family = semigroup_family(context, radii)
    errors = [
        float(np.max(np.abs(family.at(r) - np.diag(np.tile(r ** np.abs(mode_range(K)), m)))))
        for r in radii
    ]
    return Observation(max(errors), {"radii": radii})


@registry.check("projection", Suite.IDENTITIES, "E_A^+ is a projection on H", 1e-8)
def _projection(config: RunConfig, rng: np.random.Generator) -> Observation:
    context = _perturbed_context(config, rng, _small_K(config))
    idx = h_indices(context.m, context.K)
    X = hardy_plus_matrix(context, np.eye(context.handle.dim))[np.ix_(idx, idx)]
    residual = float(np.linalg.norm(X @ X - X, 2) / max(np.linalg.norm(X, 2), 1.0))
    return Observation(residual)


@registry.check("conjugate_pairing", Suite.IDENTITIES, "D v_t = f_t for dirichlet and neumann solutions", 1e-8)
def _conjugate_pairing(config: RunConfig, rng: np.random.Generator) -> Observation:
    context = _perturbed_context(config, rng, _small_K(config), m=1)
    residuals = {}
    for problem in (ProblemKind.DIRICHLET, ProblemKind.NEUMANN):
        datum = random_datum(1, context.K, rng, mean_zero=problem is ProblemKind.NEUMANN)
        solution = SOLVERS[problem](datum, context=context)
        residuals[problem.value] = conjugate_pair(solution).pairing_residual
    return Observation(max(residuals.values()), residuals)


# norms

@registry.check("square_function", Suite.NORMS, "square-function constant drifts < 10% when K doubles", 0.10)
def _square_function(config: RunConfig, rng: np.random.Generator) -> Observation:
    drifts, constants = [], []
    for i in range(4 * config.samples):
        sigma = 0.0 if i % 2 == 0 else 1.0
        B0 = hat_transform(random_accretive(1, config.coeff_K, rng, SAMPLE_AMPLITUDE))
        f = BoundarySection.random(1, min(config.K, 2), rng, mean_zero=True)
        per_K = []
        for K in (config.K, 2 * config.K):
            handle = CalculusHandle.build(B0, sigma, K, gap_tol=config.gap_tol, cond_limit=config.cond_limit)
            ratio = square_function_norm(handle, _padded(f, K)).ratio
            per_K.append(max(ratio, 1.0 / ratio))
        constants.append(per_K[0])
        drifts.append(abs(per_K[1] - per_K[0]) / per_K[0])
    return Observation(max(drifts), {"max_constant": max(constants), "samples": len(drifts)})


def _dirichlet_family(config: RunConfig, rng: np.random.Generator, count: int):
    """(radial coefficient, datum) pairs of small-carleson dirichlet problems"""
    K = _small_K(config)
    family = []
    for _ in range(count):
        A1 = random_accretive(1, config.coeff_K, rng, SAMPLE_AMPLITUDE)
        radial = radial_perturbation(A1, config.epsilon, rng)
        family.append((radial, random_datum(1, K, rng)))
    return family, K


@registry.check("apriori", Suite.NORMS, "a priori nt constant stable within 15% under refinement", 0.15)
def _apriori(config: RunConfig, rng: np.random.Generator) -> Observation:
    family, K = _dirichlet_family(config, rng, 2 * config.samples)
    coarse_settings = config.solver_settings()
    fine_settings = config.solver_settings()
    fine_settings.q = float(np.sqrt(config.q))
    changes, constants = [], []
    for radial, datum in family:
        coarse = apriori_constant(solve_dirichlet(datum, radial, K=K, settings=coarse_settings))
        fine = apriori_constant(solve_dirichlet(datum, radial, K=K, settings=fine_settings))
        constants.append(fine.constant)
        changes.append(abs(fine.constant - coarse.constant) / max(coarse.constant, np.finfo(float).tiny))
    return Observation(max(changes), {"max_constant": max(constants), "problems": len(family)},
                       trend_ok=bool(np.all(np.isfinite(constants))))


@registry.check("trace_rate", Suite.NORMS, "||u_r - u_1|| <= C (1 - r), observed C", LOOSE_BOUND)
def _trace_rate(config: RunConfig, rng: np.random.Generator) -> Observation:
    family, K = _dirichlet_family(config, rng, 3)
    reports = [trace_rate(solve_dirichlet(datum, radial, K=K, settings=config.solver_settings()))
               for radial, datum in family]
    return Observation(max(r.constant for r in reports), {"exponents": [r.exponent for r in reports]})


@registry.check("embeddings", Suite.NORMS, "Y* < X < L2 < Y embedding ratios stay bounded", LOOSE_BOUND)
def _embeddings(config: RunConfig, rng: np.random.Generator) -> Observation:
    family, K = _dirichlet_family(config, rng, 3)
    worst: Dict[str, float] = {}
    for radial, datum in family:
        solution = solve_dirichlet(datum, radial, K=K, settings=config.solver_settings())
        for name, ratio in y_x_norms(solution.f).ratios.items():
            worst[name] = max(worst.get(name, 0.0), ratio)
    return Observation(max(worst.values()), worst)


@registry.check("reverse_holder", Suite.NORMS, "reverse holder ratio with p = 2.5 on smooth solutions", 10.0)
def _reverse_holder(config: RunConfig, rng: np.random.Generator) -> Observation:
    K = _small_K(config)
    solution = solve_dirichlet(random_datum(1, K, rng), cosine_diagonal(config.coeff_K), K=K,
                               settings=config.solver_settings())
    report = reverse_holder_ratio(solution)
    return Observation(report.ratio, {"p": report.p, "balls": int(report.ratios.size)})


@registry.check("carleson_monotone", Suite.NORMS, "truncated carleson norm is nondecreasing in tau", 1e-12)
def _carleson_monotone(config: RunConfig, rng: np.random.Generator) -> Observation:
    context = _perturbed_context(config, rng, _small_K(config), m=1)
    grid = context.grid
    taus = np.geomspace(grid.nodes[0], grid.t_max, 12)
    norms = truncated_carleson_norms(context.E, taus)
    decrease = float(max(0.0, -np.min(np.diff(norms))))
    return Observation(decrease, {"norms": norms.tolist()})


# oracle

@registry.check("oracle_baseline", Suite.ORACLE, "finite differences reproduce r cos theta for A = I", 1e-4)
def _oracle_baseline(config: RunConfig, rng: np.random.Generator) -> Observation:
    errors = []
    for n_r, n_theta in ORACLE_GRIDS:
        grid = fd_oracle(identity_coefficient(1), lambda theta: np.cos(theta), n_r, n_theta)
        R, T = np.meshgrid(grid.radii, grid.angles, indexing="ij")
        errors.append(float(np.max(np.abs(grid.values[0] - R * np.cos(T)))))
    return Observation(errors[0], {"errors": errors}, trend_ok=errors[-1] < errors[0])


@registry.check("oracle_constant", Suite.ORACLE, "constant data give constant finite-difference solutions", 1e-12)
def _oracle_constant(config: RunConfig, rng: np.random.Generator) -> Observation:
    grid = fd_oracle(cosine_diagonal(1), lambda theta: np.full(theta.shape, 2.5), 32, 64)
    return Observation(float(np.max(np.abs(grid.values[0] - 2.5))))


@registry.check("oracle_cosine", Suite.ORACLE, "spectral vs finite differences for diag(1 + 0.3 cos, 1)", 5e-3)
def _oracle_cosine(config: RunConfig, rng: np.random.Generator) -> Observation:
    A = cosine_diagonal(config.coeff_K)
    datum = cosine_datum(1, config.K)
    if config.K >= 2:
        datum[0, config.K + 2] = -0.25j
        datum[0, config.K - 2] = 0.25j
    solution = solve_dirichlet(datum, A, K=config.K, settings=config.solver_settings())
    errors = []
    for n_r, n_theta in ORACLE_GRIDS:
        comparison = compare_with_oracle(solution, fd_oracle(A, datum, n_r, n_theta))
        errors.append(comparison.relative_l2)
    return Observation(errors[-1], {"relative_l2": errors}, trend_ok=errors[-1] < errors[0])
