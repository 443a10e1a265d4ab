"""
geometric time grid t = ln(1/r), cell-average trajectories and exact product-integration weights
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from ..core.errors import DimensionMismatchError, QuadratureError
from ..core.fields import BoundarySection

logger = logging.getLogger(__name__)

DEFAULT_Q = 2.0 ** (-0.25)
SERIES_CUTOFF = 0.5


def phi(mu: np.ndarray, h: np.ndarray) -> np.ndarray:
    """int_0^h e^{-mu s} ds = -expm1(-mu h) / mu, equal to h at mu = 0"""
    mu, h = np.broadcast_arrays(np.asarray(mu, dtype=complex), np.asarray(h, dtype=complex))
    out = np.array(h, dtype=complex)
    nonzero = mu != 0
    out[nonzero] = -np.expm1(-mu[nonzero] * h[nonzero]) / mu[nonzero]
    return out


def phi_self(mu: np.ndarray, h: np.ndarray) -> np.ndarray:
    """(1/h) int_0^h phi(mu, s) ds = (h - phi(mu, h)) / (h mu), by series for small |mu h|"""
    mu, h = np.broadcast_arrays(np.asarray(mu, dtype=complex), np.asarray(h, dtype=complex))
    z = mu * h
    small = np.abs(z) < SERIES_CUTOFF
    out = np.empty(z.shape, dtype=complex)
    zs = -z[small]
    series = np.zeros(zs.shape, dtype=complex)
    term = np.full(zs.shape, 0.5, dtype=complex)
    for n in range(18):
        series += term
        term = term * zs / (n + 3)
    out[small] = h[small] * series
    big = ~small
    out[big] = (h[big] - phi(mu[big], h[big])) / (h[big] * mu[big])
    return out


@dataclass(eq=False)
class TimeGrid:
    """nodes t_j (ascending) inside cells [e_j, e_{j+1}], e_0 = 0, e_j = sqrt(t_{j-1} t_j)"""
    nodes: np.ndarray
    edges: np.ndarray
    q: float = DEFAULT_Q

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.edges = np.asarray(self.edges, dtype=float)
        if self.edges.size != self.nodes.size + 1:
            raise DimensionMismatchError(f"{self.edges.size} edges for {self.nodes.size} nodes")
        if np.any(np.diff(self.nodes) <= 0) or np.any(np.diff(self.edges) <= 0):
            raise DimensionMismatchError("time grid must be strictly increasing")

    @classmethod
    def geometric(cls, t_max: float, q: float = DEFAULT_Q, t_min: float = 1e-4) -> "TimeGrid":
        """t_l = t_max q^l down to t_min"""
        if not 0.0 < q < 1.0:
            raise ValueError(f"grid ratio must lie in (0, 1), got {q}")
        count = int(np.floor(np.log(t_min / t_max) / np.log(q))) + 1
        nodes = t_max * q ** np.arange(max(count, 2))[::-1]
        edges = np.empty(nodes.size + 1)
        edges[0] = 0.0
        edges[1:-1] = np.sqrt(nodes[1:] * nodes[:-1])
        edges[-1] = nodes[-1] / np.sqrt(q)
        logger.info(f"time grid with {nodes.size} nodes on [{nodes[0]:.2e}, {nodes[-1]:.2e}]")
        return cls(nodes, edges, q)

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def t_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def starts(self) -> np.ndarray:
        return self.edges[:-1]

    @property
    def ends(self) -> np.ndarray:
        return self.edges[1:]

    def dt_weights(self) -> np.ndarray:
        return self.widths

    def dt_over_t_weights(self) -> np.ndarray:
        return self.widths / self.nodes

    def cell_of(self, t: float) -> int:
        """index of the cell containing t (the last cell for t beyond the grid)"""
        return int(np.clip(np.searchsorted(self.edges, t, side="right") - 1, 0, self.size - 1))

    def refined(self) -> "TimeGrid":
        """grid with ratio sqrt(q) over the same range"""
        return TimeGrid.geometric(self.t_max, np.sqrt(self.q), float(self.nodes[0]))

    def same_as(self, times: np.ndarray) -> bool:
        times = np.sort(np.asarray(times, dtype=float))
        return times.size == self.size and bool(np.allclose(times, self.nodes, rtol=1e-12, atol=0.0))

    def check_times(self, times: np.ndarray) -> None:
        if not self.same_as(times):
            raise QuadratureError("discrepancy and trajectory live on different time grids")

    # product integration of e^{-|t - s| mu} against cell-constant data

    def semigroup_averages(self, mu: np.ndarray) -> np.ndarray:
        """(L, P) cell averages of e^{-t mu}"""
        a, h = self.starts[:, None], self.widths[:, None]
        return np.exp(-a * mu[None, :]) * phi(mu[None, :], h) / h

    def cell_weights(self, mu: np.ndarray, side: np.ndarray) -> np.ndarray:
        """(L, L, P): output cell i, input cell j; causal for side > 0, anticausal (negated) for side < 0"""
        a, b, h = self.starts, self.ends, self.widths
        mu = np.asarray(mu, dtype=complex)
        L, P = self.size, mu.size
        phis = phi(mu[None, :], h[:, None])  # (L, P)
        gap = a[:, None] - b[None, :]  # a_i - b_j, >= 0 for j < i
        weights = np.zeros((L, L, P), dtype=complex)
        lower = np.tril(np.ones((L, L), dtype=bool), -1)
        ii, jj = np.nonzero(lower)
        forward = np.exp(-gap[ii, jj, None] * mu[None, :]) * phis[ii] * phis[jj] / h[ii, None]
        right = side > 0
        weights[ii, jj] = np.where(right[None, :], forward, 0.0)
        # anticausal: output i, input j > i uses the mirrored pair
        weights[jj, ii] = np.where(right[None, :], 0.0, -np.exp(-gap[ii, jj, None] * mu[None, :])
                                   * phis[ii] * phis[jj] / h[jj, None])
        diagonal = phi_self(mu[None, :], h[:, None])
        idx = np.arange(L)
        weights[idx, idx] = np.where(right[None, :], diagonal, -diagonal)
        return weights

    def point_weights(self, t: float, mu: np.ndarray, side: np.ndarray) -> np.ndarray:
        """(L, P) weights of the kernel integral evaluated at the single time t"""
        a, b, h = self.starts, self.ends, self.widths
        mu = np.asarray(mu, dtype=complex)
        c = self.cell_of(t)
        weights = np.zeros((self.size, mu.size), dtype=complex)
        right = side > 0
        for j in range(self.size):
            if j < c:
                w = np.exp(-(t - b[j]) * mu) * phi(mu, h[j])
                weights[j] = np.where(right, w, 0.0)
            elif j > c:
                w = -np.exp(-(a[j] - t) * mu) * phi(mu, h[j])
                weights[j] = np.where(right, 0.0, w)
            else:
                forward = phi(mu, max(t - a[j], 0.0))
                backward = -phi(mu, max(b[j] - t, 0.0))
                weights[j] = np.where(right, forward, backward)
        return weights


class TrajectoryKind(Enum):
    """which unknown a trajectory carries"""
    CONORMAL_F = "conormal_f"
    POTENTIAL_V = "potential_v"


@dataclass(eq=False)
class Trajectory:
    """boundary-section valued function of t, stored as cell averages with optional node values"""
    grid: TimeGrid
    m: int
    K: int
    averages: np.ndarray  # (L, dim)
    kind: TrajectoryKind = TrajectoryKind.CONORMAL_F
    node_values: Optional[np.ndarray] = None  # (L, dim) point values at the nodes
    initial: Optional[np.ndarray] = None  # point value at t = 0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.averages = np.asarray(self.averages, dtype=complex)
        dim = 2 * self.m * (2 * self.K + 1)
        if self.averages.shape != (self.grid.size, dim):
            raise DimensionMismatchError(
                f"trajectory of shape {self.averages.shape}, expected {(self.grid.size, dim)}"
            )

    @property
    def dim(self) -> int:
        return self.averages.shape[1]

    @classmethod
    def zeros(cls, grid: TimeGrid, m: int, K: int, kind: TrajectoryKind = TrajectoryKind.CONORMAL_F) -> "Trajectory":
        return cls(grid, m, K, np.zeros((grid.size, 2 * m * (2 * K + 1)), dtype=complex), kind)

    def section(self, i: int, pointwise: bool = True) -> BoundarySection:
        source = self.node_values if pointwise and self.node_values is not None else self.averages
        return BoundarySection.from_vector(self.m, self.K, source[i])

    def sections(self, pointwise: bool = True) -> List[BoundarySection]:
        return [self.section(i, pointwise) for i in range(self.grid.size)]

    def boundary(self) -> BoundarySection:
        if self.initial is None:
            raise QuadratureError("trajectory carries no t = 0 value")
        return BoundarySection.from_vector(self.m, self.K, self.initial)

    def norms(self, pointwise: bool = False) -> np.ndarray:
        """||f_t||_2 per node"""
        source = self.node_values if pointwise and self.node_values is not None else self.averages
        return np.sqrt(2.0 * np.pi) * np.linalg.norm(source, axis=1)

    def mean_residual(self) -> float:
        """largest k = 0 coefficient relative to the trajectory size"""
        width = 2 * self.K + 1
        means = self.averages[:, [c * width + self.K for c in range(2 * self.m)]]
        scale = max(float(np.max(np.abs(self.averages), initial=0.0)), np.finfo(float).tiny)
        return float(np.max(np.abs(means), initial=0.0) / scale)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        return Trajectory(
            self.grid, self.m, self.K, self.averages - other.averages, self.kind,
            None if self.node_values is None or other.node_values is None else self.node_values - other.node_values,
            None if self.initial is None or other.initial is None else self.initial - other.initial,
        )
