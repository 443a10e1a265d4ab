"""
discretized modified carleson norm of a discrepancy
"""

import logging
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import maximum_filter1d

from .coefficients import Discrepancy
from .fields import TWO_PI, grid_angles

logger = logging.getLogger(__name__)

# whitney regions W(t, x) = {(s, y): |y - x| < C1 t, t / C0 < s < C0 t}
WHITNEY_C0 = 2.0
WHITNEY_C1 = 0.5
MIN_ARC_LEVEL = 2


def log_weights(times: np.ndarray) -> np.ndarray:
    """dt/t quadrature weights of sorted times (midpoint cells in log t)"""
    times = np.asarray(times, dtype=float)
    if times.size == 1:
        return np.ones(1)
    log_t = np.log(times)
    edges = np.empty(times.size + 1)
    edges[1:-1] = 0.5 * (log_t[1:] + log_t[:-1])
    edges[0] = log_t[0] - 0.5 * (log_t[1] - log_t[0])
    edges[-1] = log_t[-1] + 0.5 * (log_t[-1] - log_t[-2])
    return np.diff(edges)


def pointwise_magnitude(E: Discrepancy, n_theta: int) -> np.ndarray:
    """|E_t(theta)| (spectral norm) on sorted times x uniform angles"""
    order = np.argsort(E.times)
    return np.array([
        np.linalg.norm(E.samples[i].values(n_theta), ord=2, axis=(1, 2)) for i in order
    ])


def whitney_sup(values: np.ndarray, times: np.ndarray,
                c0: float = WHITNEY_C0, c1: float = WHITNEY_C1) -> np.ndarray:
    """sup of values (time x angle) over the whitney region of every grid point"""
    values = np.asarray(values, dtype=float)
    n = values.shape[1]
    dtheta = TWO_PI / n
    angular = np.empty_like(values)
    for ell, t in enumerate(times):
        half = int(np.floor(c1 * t / dtheta))
        half = min(half, n // 2)
        angular[ell] = maximum_filter1d(values[ell], size=2 * half + 1, mode="wrap")
    result = np.empty_like(values)
    for ell, t in enumerate(times):
        window = (times > t / c0) & (times < c0 * t)
        window[ell] = True
        result[ell] = np.max(angular[window], axis=0)
    return result


def carleson_box_averages(sup_values: np.ndarray, times: np.ndarray) -> np.ndarray:
    """box averages (1/|Q|) int_{T(Q)} W^2 dtheta dt/t over dyadic arcs, one per arc level"""
    n = sup_values.shape[1]
    angles = grid_angles(n)
    dtheta = TWO_PI / n
    weights = log_weights(times)
    squared = sup_values ** 2
    averages = []
    level = MIN_ARC_LEVEL
    while True:
        rho = 2.0 ** (-level)
        if rho < dtheta:
            break
        in_box = times < rho
        column = (weights[in_box, None] * squared[in_box]).sum(axis=0)
        best = 0.0
        for center in np.arange(0.0, TWO_PI, rho):
            distance = np.abs((angles - center + np.pi) % TWO_PI - np.pi)
            arc = distance < rho
            if not arc.any():
                continue
            best = max(best, float(column[arc].mean()))
        averages.append(best)
        level += 1
    return np.array(averages)


def _truncated_sup(magnitude: np.ndarray, times: np.ndarray, tau: Optional[float]) -> np.ndarray:
    """whitney sup of chi_{t<tau} |E| (the cutoff comes before the sup)"""
    if tau is not None:
        magnitude = np.where((times < tau)[:, None], magnitude, 0.0)
    return whitney_sup(magnitude, times)


def carleson_norm(E: Discrepancy, n_theta: int = 64, tau: Optional[float] = None) -> float:
    """modified carleson norm of E, or of chi_{t<tau} E when tau is given"""
    if E.is_zero():
        if tau is None:
            E.carleson_norm = 0.0
        return 0.0
    times = np.sort(E.times)
    averages = carleson_box_averages(_truncated_sup(pointwise_magnitude(E, n_theta), times, tau), times)
    value = float(np.sqrt(np.max(averages, initial=0.0)))
    if tau is None:
        E.carleson_norm = value
        logger.info(f"carleson norm {value:.4e} over {averages.size} arc levels")
    return value


def truncated_carleson_norms(E: Discrepancy, taus: Sequence[float], n_theta: int = 64) -> np.ndarray:
    """||chi_{t<tau} E||_C for each tau"""
    if E.is_zero():
        return np.zeros(len(taus))
    times = np.sort(E.times)
    magnitude = pointwise_magnitude(E, n_theta)
    return np.array([
        np.sqrt(np.max(carleson_box_averages(_truncated_sup(magnitude, times, tau), times), initial=0.0))
        for tau in taus
    ])
