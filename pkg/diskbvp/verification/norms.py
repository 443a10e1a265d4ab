"""
X, Y and Y* norms, whitney-averaged non-tangential maximal functions and a priori diagnostics
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import uniform_filter1d

from ..core.carleson import WHITNEY_C0, WHITNEY_C1
from ..core.fields import TWO_PI, PolarGridFunction, grid_angles, synthesize_array
from ..solver.bvp import BVPSolution
from ..solver.timegrid import Trajectory

logger = logging.getLogger(__name__)

REVERSE_HOLDER_P = 2.5


def _time_weights(times: np.ndarray) -> np.ndarray:
    """dt weights of sorted sample times (midpoint cells)"""
    if times.size == 1:
        return np.ones(1)
    edges = np.empty(times.size + 1)
    edges[1:-1] = 0.5 * (times[1:] + times[:-1])
    edges[0] = max(times[0] - 0.5 * (times[1] - times[0]), 0.0)
    edges[-1] = times[-1] + 0.5 * (times[-1] - times[-2])
    return np.diff(edges)


def _squared_samples(source: Union[Trajectory, PolarGridFunction], n_theta: Optional[int]):
    """(times, dt weights, |f|^2 on times x angles) of a trajectory or an interior polar grid"""
    if isinstance(source, Trajectory):
        values = source.node_values if source.node_values is not None else source.averages
        n_theta = n_theta or max(64, 4 * (2 * source.K + 1))
        coeffs = values.reshape(source.grid.size, 2 * source.m, 2 * source.K + 1)
        samples = synthesize_array(coeffs, n_theta)
        return source.grid.nodes, source.grid.widths, np.sum(np.abs(samples) ** 2, axis=1)
    interior = source.radii < 1.0
    times = -np.log(source.radii[interior])[::-1]
    squared = np.sum(np.abs(source.values[:, interior, :]) ** 2, axis=0)[::-1]
    return times, _time_weights(times), squared


@dataclass
class NTMaximalResult:
    """whitney-averaged non-tangential maximal function on the boundary grid"""
    values: np.ndarray
    norm: float
    scales: np.ndarray  # dyadic whitney heights used
    scale_floor: bool = False  # smallest boxes collapse to one angular column

    @property
    def angles(self) -> np.ndarray:
        return grid_angles(self.values.size)


def nt_maximal(f: Union[Trajectory, PolarGridFunction], n_theta: Optional[int] = None,
               c0: float = WHITNEY_C0, c1: float = WHITNEY_C1) -> NTMaximalResult:
    """sup over dyadic whitney boxes of the L2 box average, per boundary angle"""
    times, weights, squared = _squared_samples(f, n_theta)
    n = squared.shape[1]
    dtheta = TWO_PI / n
    low = int(np.ceil(np.log2(times.min())))
    high = int(np.floor(np.log2(times.max())))
    scales = 2.0 ** np.arange(low, high + 1)
    if scales.size == 0:
        scales = np.array([float(np.sqrt(times.min() * times.max()))])
    best = np.zeros(n)
    floor = False
    for t in scales:
        window = (times > t / c0) & (times < c0 * t)
        if not window.any():
            continue
        half = int(np.floor(c1 * t / dtheta))
        if half == 0:
            floor = True
        half = min(half, n // 2)
        arc_means = uniform_filter1d(squared[window], size=2 * half + 1, axis=1, mode="wrap")
        box = (weights[window, None] * arc_means).sum(axis=0) / weights[window].sum()
        best = np.maximum(best, box)
    if floor:
        logger.warning(f"whitney boxes below the angular resolution {dtheta:.3e}, using single columns")
    values = np.sqrt(best)
    return NTMaximalResult(values, float(np.sqrt(TWO_PI * np.mean(best))), scales, floor)


def local_l2_sup(f: Trajectory, points: int = 33) -> float:
    """sup_t t^{-1} int_t^{2t} ||f_s||^2 ds over the resolved range"""
    nodes = f.grid.nodes
    squared = f.norms(pointwise=f.node_values is not None) ** 2
    best = 0.0
    for t in nodes[2 * nodes <= nodes[-1]]:
        s = np.linspace(t, 2 * t, points)
        best = max(best, float(trapezoid(np.interp(s, nodes, squared), s) / t))
    return best


@dataclass
class NormReport:
    """norms of one conormal trajectory and the observed embedding ratios"""
    y_norm: float
    x_norm: float
    nt_max_norm: float
    sup_l2_norm: float
    y_star_norm: float
    l2_norm: float
    square_fn_norm: Optional[float] = None
    ratios: Dict[str, float] = field(default_factory=dict)

    def delta(self, refined: "NormReport") -> Dict[str, float]:
        """relative change of every norm under grid refinement"""
        changes = {}
        for name in ("y_norm", "x_norm", "nt_max_norm", "sup_l2_norm", "y_star_norm", "l2_norm"):
            before, after = getattr(self, name), getattr(refined, name)
            changes[name] = abs(after - before) / max(abs(before), np.finfo(float).tiny)
        return changes


def _ratio(numerator: float, denominator: float) -> float:
    return numerator / denominator if denominator > 0 else 0.0


def y_x_norms(f: Trajectory, n_theta: Optional[int] = None,
              square_fn_norm: Optional[float] = None) -> NormReport:
    """quadrature of the Y, X, Y* and L2(dt) norms from cell averages"""
    grid = f.grid
    squared = f.norms(pointwise=False) ** 2
    widths, nodes = grid.widths, grid.nodes
    y2 = float(np.sum(squared * np.minimum(nodes, 1.0) * widths))
    l2 = float(np.sum(squared * widths))
    y_star2 = float(np.sum(squared * np.maximum(1.0 / nodes, 1.0) * widths))
    tail = float(np.sum((squared * widths)[nodes >= 1.0]))
    nt = nt_maximal(f, n_theta)
    x2 = nt.norm ** 2 + tail
    report = NormReport(
        y_norm=float(np.sqrt(y2)),
        x_norm=float(np.sqrt(x2)),
        nt_max_norm=nt.norm,
        sup_l2_norm=float(np.sqrt(local_l2_sup(f))),
        y_star_norm=float(np.sqrt(y_star2)),
        l2_norm=float(np.sqrt(l2)),
        square_fn_norm=square_fn_norm,
    )
    report.ratios = {
        "l2_over_y": _ratio(report.l2_norm, report.y_norm),
        "x_over_l2": _ratio(report.x_norm, report.l2_norm),
        "ystar_over_x": _ratio(report.y_star_norm, report.x_norm),
        "sup_l2_over_nt": _ratio(report.sup_l2_norm, report.nt_max_norm),
    }
    return report


@dataclass
class TraceRateReport:
    """fit of ||u_r - u_1|| <= C (1 - r)"""
    constant: float
    exponent: float
    radii: np.ndarray
    distances: np.ndarray


def trace_rate(solution: BVPSolution, r_min: float = 0.5) -> TraceRateReport:
    u = solution.u
    boundary = u.values[:, -1, :]
    inside = (u.radii >= r_min) & (u.radii < 1.0)
    radii = u.radii[inside]
    distances = np.array([
        np.sqrt(TWO_PI * np.mean(np.sum(np.abs(u.values[:, i, :] - boundary) ** 2, axis=0)))
        for i in np.nonzero(inside)[0]
    ])
    gaps = 1.0 - radii
    constant = float(np.max(distances / gaps, initial=0.0))
    usable = distances > 0
    exponent = float(np.polyfit(np.log(gaps[usable]), np.log(distances[usable]), 1)[0]) \
        if np.count_nonzero(usable) >= 3 else 1.0
    return TraceRateReport(constant, exponent, radii, distances)


@dataclass
class ReverseHolderReport:
    """(avg_B |grad u|^p)^{1/p} / (avg_2B |grad u|^2)^{1/2} over interior balls"""
    ratio: float
    p: float
    ratios: np.ndarray
    centers: List[tuple]


def reverse_holder_ratio(solution: BVPSolution, p: float = REVERSE_HOLDER_P, ball_radius: float = 0.1,
                         n_r: int = 48, centers: Optional[Sequence[tuple]] = None) -> ReverseHolderReport:
    if centers is None:
        centers = [(r, theta) for r in (0.3, 0.5, 0.7) for theta in np.arange(8) * np.pi / 4]
    radii = np.linspace(1.0 / n_r, 1.0, n_r)
    _, grad, _ = solution.evaluate(radii)
    magnitude = np.sqrt(np.sum(np.abs(grad.values) ** 2, axis=0))
    R, T = np.meshgrid(grad.radii, grad.angles, indexing="ij")
    X, Y = R * np.cos(T), R * np.sin(T)
    ratios = []
    for r_c, theta_c in centers:
        distance = np.hypot(X - r_c * np.cos(theta_c), Y - r_c * np.sin(theta_c))
        ball = distance < ball_radius
        dilated = distance < 2 * ball_radius
        if not ball.any():
            continue
        upper = (np.sum(R[ball] * magnitude[ball] ** p) / np.sum(R[ball])) ** (1.0 / p)
        lower = np.sqrt(np.sum(R[dilated] * magnitude[dilated] ** 2) / np.sum(R[dilated]))
        ratios.append(_ratio(upper, lower))
    ratios = np.array(ratios)
    return ReverseHolderReport(float(np.max(ratios, initial=0.0)), p, ratios, list(centers))


@dataclass
class AprioriReport:
    """observed constant in ||N u||^2 <= C (int |grad u|^2 (1 - r) + |int u_1|^2)"""
    constant: float
    nt_norm_squared: float
    gradient_norm_squared: float
    mean_term: float


def apriori_constant(solution: BVPSolution, n_theta: Optional[int] = None) -> AprioriReport:
    nt = nt_maximal(solution.u, n_theta)
    grad = solution.grad
    energy = TWO_PI * np.mean(np.sum(np.abs(grad.values) ** 2, axis=0), axis=1)
    gradient = float(trapezoid(energy * (1.0 - grad.radii) * grad.radii, grad.radii))
    boundary = solution.u.values[:, -1, :]
    mean_term = float(np.sum(np.abs(TWO_PI * boundary.mean(axis=1)) ** 2))
    right = gradient + mean_term
    constant = _ratio(nt.norm ** 2, right)
    logger.info(f"a priori constant {constant:.4e} (nt {nt.norm ** 2:.3e}, energy {gradient:.3e})")
    return AprioriReport(constant, nt.norm ** 2, gradient, mean_term)
