"""
independent second-order finite-difference solver for div A grad u = 0 in polar coordinates
"""

import logging
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import spsolve

from ..core.coefficients import CoefficientField, RadialCoefficient
from ..core.errors import DegenerateCoefficientError, DimensionMismatchError, IllPosednessError
from ..core.fields import TWO_PI, PolarGridFunction, grid_angles, synthesize_array
from ..solver.bvp import BVPSolution

logger = logging.getLogger(__name__)

REAL_TOL = 1e-10

Datum = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]


def _coefficient_function(A: Union[RadialCoefficient, CoefficientField]):
    if isinstance(A, CoefficientField):
        return lambda r, theta: A.evaluate(theta)
    return A.evaluate


def _boundary_values(phi: Datum, angles: np.ndarray) -> np.ndarray:
    if callable(phi):
        return np.asarray(phi(angles), dtype=float)
    coeffs = np.atleast_2d(np.asarray(phi, dtype=complex))
    if coeffs.shape[0] != 1:
        raise DimensionMismatchError("the finite-difference oracle solves scalar equations only")
    values = synthesize_array(coeffs, angles.size)[0]
    if np.max(np.abs(values.imag)) > REAL_TOL * max(np.max(np.abs(values)), 1.0):
        raise DimensionMismatchError("the finite-difference oracle needs a real datum")
    return values.real


def _real_blocks(func, r: float, angles: np.ndarray) -> np.ndarray:
    values = np.asarray(func(r, angles), dtype=complex)
    if values.shape[1:] != (2, 2):
        raise DimensionMismatchError("the finite-difference oracle solves scalar equations only")
    if np.max(np.abs(values.imag)) > REAL_TOL:
        raise DegenerateCoefficientError(f"coefficients are not real at r={r:.3f}")
    values = values.real
    symmetric = 0.5 * (values + values.transpose(0, 2, 1))
    lowest = np.linalg.eigvalsh(symmetric)[:, 0]
    if np.min(lowest) <= 0:
        angle = float(angles[int(np.argmin(lowest))])
        raise DegenerateCoefficientError(
            f"coefficients are not pointwise elliptic at r={r:.3f}", angle=angle, radius=r
        )
    return values


def fd_oracle(A: Union[RadialCoefficient, CoefficientField], phi: Datum,
              n_r: int = 64, n_theta: int = 128) -> PolarGridFunction:
    """
    conservative five-point scheme with cross terms for (1/r) d_r(r F_r) + (1/r) d_theta F_theta = 0,
    F = A (d_r u, d_theta u / r) in the (radial, angular) frame; one unknown sits at the center
    """
    if n_r < 2:
        raise DimensionMismatchError("the finite-difference oracle needs at least two rings")
    func = _coefficient_function(A)
    dr = 1.0 / n_r
    dth = TWO_PI / n_theta
    radii = dr * np.arange(n_r + 1)
    angles = grid_angles(n_theta)
    half_angles = angles + 0.5 * dth
    g = _boundary_values(phi, angles)

    # unknowns: center (0), rings i = 1..n_r-1; ring n_r is the datum
    def index(i, j):
        return 1 + (i - 1) * n_theta + np.mod(j, n_theta)

    size = 1 + (n_r - 1) * n_theta
    rows, cols, vals = [], [], []
    rhs = np.zeros(size)
    j = np.arange(n_theta)

    def add(row, i, jj, value):
        """couple row to node (i, jj), moving known values to the right side"""
        value = np.broadcast_to(value, row.shape)
        if i == 0:
            rows.append(row)
            cols.append(np.zeros_like(row))
            vals.append(value)
        elif i == n_r:
            np.add.at(rhs, row, -value * g[np.mod(jj, n_theta)])
        else:
            rows.append(row)
            cols.append(index(i, jj))
            vals.append(value)

    for i in range(1, n_r):
        r = radii[i]
        row = index(i, j)
        outer = _real_blocks(func, r + 0.5 * dr, angles)
        inner = _real_blocks(func, r - 0.5 * dr, angles)
        side = _real_blocks(func, r, half_angles)
        side_minus = np.roll(side, 1, axis=0)
        r_out, r_in = r + 0.5 * dr, r - 0.5 * dr

        # d_r (r F_r) / dr
        for face, blocks, sign, neighbour in ((r_out, outer, 1.0, i + 1), (r_in, inner, -1.0, i - 1)):
            a_rr = blocks[:, 0, 0] * face / dr ** 2
            add(row, neighbour, j, a_rr)
            add(row, i, j, -a_rr)
            # cross term a_rt d_theta u / r at the radial face, averaged over both rings
            a_rt = sign * blocks[:, 0, 1] / (4.0 * dth * dr)
            for ring in (i, neighbour):
                add(row, ring, j + 1, a_rt)
                add(row, ring, j - 1, -a_rt)

        # d_theta F_theta / dtheta
        for blocks, sign, step in ((side, 1.0, 1), (side_minus, -1.0, -1)):
            a_tt = blocks[:, 1, 1] / (r * dth ** 2)
            add(row, i, j + step, a_tt)
            add(row, i, j, -a_tt)
            # cross term a_tr d_r u at the angular face
            a_tr = sign * blocks[:, 1, 0] / (4.0 * dr * dth)
            for column in (j, j + step):
                add(row, i + 1, column, a_tr)
                add(row, i - 1, column, -a_tr)

    # flux balance over the central cell of radius dr / 2
    center = _real_blocks(func, 0.5 * dr, angles)
    weight = 0.5 * center[:, 0, 0] * dth
    rows.append(np.zeros(n_theta, dtype=int))
    cols.append(index(1, j))
    vals.append(weight)
    rows.append(np.zeros(1, dtype=int))
    cols.append(np.zeros(1, dtype=int))
    vals.append(np.array([-weight.sum()]))

    matrix = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    ).tocsr()
    solution = spsolve(matrix, rhs)
    if not np.all(np.isfinite(solution)):
        raise IllPosednessError("finite-difference system is singular or indefinite")
    logger.info(f"finite-difference oracle on {n_r} x {n_theta} grid, center value {solution[0]:.6e}")

    values = np.empty((1, n_r, n_theta))
    values[0, :-1] = solution[1:].reshape(n_r - 1, n_theta)
    values[0, -1] = g
    return PolarGridFunction(radii[1:], angles, values, "u")


@dataclass
class OracleComparison:
    """spectral solution against the finite-difference oracle on the oracle grid"""
    relative_l2: float
    max_abs: float
    n_r: int
    n_theta: int


def compare_with_oracle(solution: BVPSolution, oracle: PolarGridFunction) -> OracleComparison:
    """relative L2 (area measure) and max difference of u"""
    u, _, _ = solution.evaluate(oracle.radii, oracle.angles.size)
    difference = np.abs(u.values[0] - oracle.values[0]) ** 2
    reference = np.abs(oracle.values[0]) ** 2
    weights = oracle.radii[:, None]
    relative = float(np.sqrt(np.sum(weights * difference) / max(np.sum(weights * reference), np.finfo(float).tiny)))
    return OracleComparison(relative, u.max_abs_difference(oracle), oracle.radii.size, oracle.angles.size)
