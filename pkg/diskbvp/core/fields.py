"""
boundary sections on the unit circle and their fourier algebra
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from .errors import DimensionMismatchError, GridResolutionError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


def mode_range(K: int) -> np.ndarray:
    """fourier modes -K..K in storage order"""
    return np.arange(-K, K + 1)


def grid_angles(n: int) -> np.ndarray:
    """uniform angles theta_j = 2 pi j / n"""
    return TWO_PI * np.arange(n) / n


def synthesize_array(coeffs: np.ndarray, n: int) -> np.ndarray:
    """evaluate trigonometric polynomials (last axis = modes -K..K) at n uniform angles"""
    coeffs = np.asarray(coeffs, dtype=complex)
    K = (coeffs.shape[-1] - 1) // 2
    if n < 2 * K + 1:
        raise GridResolutionError(
            f"grid of {n} points cannot resolve {2 * K + 1} modes", gridsize=n, K=K
        )
    buffer = np.zeros(coeffs.shape[:-1] + (n,), dtype=complex)
    buffer[..., mode_range(K) % n] = coeffs
    return np.fft.ifft(buffer, axis=-1) * n


def analyze_array(values: np.ndarray, K: int) -> np.ndarray:
    """fourier coefficients -K..K of samples on a uniform grid (last axis)"""
    values = np.asarray(values, dtype=complex)
    n = values.shape[-1]
    if n < 2 * K + 1:
        raise GridResolutionError(
            f"{n} samples cannot determine {2 * K + 1} modes", gridsize=n, K=K
        )
    spectrum = np.fft.fft(values, axis=-1) / n
    return spectrum[..., mode_range(K) % n]


def dealiased_size(K: int, factor: int = 2) -> int:
    """grid length that keeps products of two K-band series alias free"""
    return factor * (2 * K + 1)


@dataclass(frozen=True, eq=False)
class BoundarySection:
    """C^{2m}-valued section on the circle stored as truncated fourier coefficients"""
    m: int
    K: int
    coeffs: np.ndarray  # (2m, 2K+1), normal components first

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex, copy=True)
        if self.m < 1 or self.K < 0:
            raise DimensionMismatchError(f"invalid section size m={self.m}, K={self.K}")
        expected = (2 * self.m, 2 * self.K + 1)
        if coeffs.shape != expected:
            raise DimensionMismatchError(
                f"coefficient array has shape {coeffs.shape}, expected {expected}",
                shape=list(coeffs.shape),
            )
        if not np.all(np.isfinite(coeffs)):
            raise DimensionMismatchError("section has non-finite coefficients")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def dim(self) -> int:
        return 2 * self.m * (2 * self.K + 1)

    @property
    def modes(self) -> np.ndarray:
        return mode_range(self.K)

    @property
    def normal(self) -> np.ndarray:
        return self.coeffs[: self.m]

    @property
    def tangential(self) -> np.ndarray:
        return self.coeffs[self.m:]

    def vector(self) -> np.ndarray:
        """stacked coefficient vector, component-major"""
        return self.coeffs.reshape(-1).copy()

    @classmethod
    def from_vector(cls, m: int, K: int, vector: np.ndarray) -> "BoundarySection":
        vector = np.asarray(vector)
        if vector.size != 2 * m * (2 * K + 1):
            raise DimensionMismatchError(
                f"vector of length {vector.size} does not fit m={m}, K={K}"
            )
        return cls(m, K, vector.reshape(2 * m, 2 * K + 1))

    @classmethod
    def zeros(cls, m: int, K: int) -> "BoundarySection":
        return cls(m, K, np.zeros((2 * m, 2 * K + 1), dtype=complex))

    @classmethod
    def constant(cls, values: Sequence[complex], K: int) -> "BoundarySection":
        """constant section (an element of the null space of D)"""
        values = np.asarray(values, dtype=complex)
        if values.size % 2:
            raise DimensionMismatchError("constant section needs an even number of components")
        coeffs = np.zeros((values.size, 2 * K + 1), dtype=complex)
        coeffs[:, K] = values
        return cls(values.size // 2, K, coeffs)

    @classmethod
    def single_mode(cls, m: int, K: int, component: int, k: int, value: complex = 1.0) -> "BoundarySection":
        if abs(k) > K:
            raise DimensionMismatchError(f"mode {k} outside truncation K={K}")
        coeffs = np.zeros((2 * m, 2 * K + 1), dtype=complex)
        coeffs[component, k + K] = value
        return cls(m, K, coeffs)

    @classmethod
    def random(cls, m: int, K: int, rng: np.random.Generator, real: bool = False,
               mean_zero: bool = False, decay: float = 0.0) -> "BoundarySection":
        """random section, optionally real valued, mean zero or with e^{-decay|k|} profile"""
        shape = (2 * m, 2 * K + 1)
        coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        coeffs *= np.exp(-decay * np.abs(mode_range(K)))[None, :]
        if real:
            coeffs = 0.5 * (coeffs + np.conj(coeffs[:, ::-1]))
        if mean_zero:
            coeffs[:, K] = 0.0
        return cls(m, K, coeffs)

    def is_real(self, tol: float = 1e-12) -> bool:
        """conjugate symmetry coeffs(c,-k) = conj(coeffs(c,k))"""
        mirror = np.conj(self.coeffs[:, ::-1])
        return bool(np.max(np.abs(self.coeffs - mirror), initial=0.0) <= tol * max(1.0, self.max_abs()))

    def real_part(self) -> "BoundarySection":
        """section whose grid values are the real parts of this one's"""
        return self.with_coeffs(0.5 * (self.coeffs + np.conj(self.coeffs[:, ::-1])))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs), initial=0.0))

    def with_coeffs(self, coeffs: np.ndarray) -> "BoundarySection":
        return BoundarySection(self.m, self.K, coeffs)

    def _check_compatible(self, other: "BoundarySection") -> None:
        if (self.m, self.K) != (other.m, other.K):
            raise DimensionMismatchError(
                f"sections of size (m={self.m}, K={self.K}) and (m={other.m}, K={other.K})"
            )

    def __add__(self, other: "BoundarySection") -> "BoundarySection":
        self._check_compatible(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "BoundarySection") -> "BoundarySection":
        self._check_compatible(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __neg__(self) -> "BoundarySection":
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar: complex) -> "BoundarySection":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__


def synthesize(f: BoundarySection, gridsize: int) -> np.ndarray:
    """grid values (2m, gridsize) of a section at uniform angles"""
    return synthesize_array(f.coeffs, gridsize)


def analyze(values: np.ndarray, K: int) -> BoundarySection:
    """section from grid values (2m, n) truncated to modes -K..K"""
    values = np.atleast_2d(values)
    if values.shape[0] % 2:
        raise DimensionMismatchError("grid values need an even number of components")
    return BoundarySection(values.shape[0] // 2, K, analyze_array(values, K))


def project_H(f: BoundarySection) -> BoundarySection:
    """orthogonal projection onto mean-zero sections (the range of D)"""
    coeffs = np.array(f.coeffs)
    coeffs[:, f.K] = 0.0
    return f.with_coeffs(coeffs)


def inner_product(f: BoundarySection, g: BoundarySection) -> complex:
    """L2 pairing with the non-normalized arc length measure"""
    f._check_compatible(g)
    return complex(TWO_PI * np.vdot(g.coeffs, f.coeffs))


def norm(f: BoundarySection) -> float:
    return float(np.sqrt(TWO_PI) * np.linalg.norm(f.coeffs))


def N_plus(f: BoundarySection) -> BoundarySection:
    """keeps the tangential part"""
    coeffs = np.array(f.coeffs)
    coeffs[: f.m] = 0.0
    return f.with_coeffs(coeffs)


def N_minus(f: BoundarySection) -> BoundarySection:
    """keeps the normal part"""
    coeffs = np.array(f.coeffs)
    coeffs[f.m:] = 0.0
    return f.with_coeffs(coeffs)


def apply_N(f: BoundarySection) -> BoundarySection:
    return N_plus(f) - N_minus(f)


def derivative(f: BoundarySection) -> BoundarySection:
    """tangential derivative, componentwise"""
    return f.with_coeffs(f.coeffs * (1j * f.modes)[None, :])


def antiderivative(f: BoundarySection) -> BoundarySection:
    """mean-zero inverse of the tangential derivative on mean-zero sections"""
    k = f.modes.astype(float)
    factor = np.zeros(k.shape, dtype=complex)
    nonzero = k != 0
    factor[nonzero] = 1.0 / (1j * k[nonzero])
    return f.with_coeffs(f.coeffs * factor[None, :])


def multiply_sections(entries: np.ndarray, f: BoundarySection) -> BoundarySection:
    """pointwise product of a matrix field (2m, 2m, modes) with a section, re-truncated to f.K"""
    entries = np.asarray(entries, dtype=complex)
    if entries.shape[0] != 2 * f.m or entries.shape[1] != 2 * f.m:
        raise DimensionMismatchError(
            f"matrix field of size {entries.shape[:2]} cannot act on m={f.m} sections"
        )
    Kb = (entries.shape[-1] - 1) // 2
    n = dealiased_size(max(Kb, f.K))
    product = np.einsum("abn,bn->an", synthesize_array(entries, n), synthesize(f, n))
    return BoundarySection(f.m, f.K, analyze_array(product, f.K))


@dataclass(eq=False)
class PolarGridFunction:
    """samples on a polar grid: values indexed by (component, radius, angle)"""
    radii: np.ndarray
    angles: np.ndarray
    values: np.ndarray
    label: str = "u"  # u, grad or conjugate

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.angles = np.asarray(self.angles, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 3 or self.values.shape[1:] != (self.radii.size, self.angles.size):
            raise DimensionMismatchError(
                f"values of shape {self.values.shape} do not match "
                f"{self.radii.size} radii and {self.angles.size} angles"
            )
        if np.any(self.radii <= 0) or np.any(self.radii > 1.0 + 1e-14):
            raise DimensionMismatchError("radii must lie in (0, 1]")
        if np.any(np.diff(self.radii) <= 0):
            raise DimensionMismatchError("radii must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise DimensionMismatchError(f"non-finite samples in polar grid '{self.label}'")

    @property
    def n_components(self) -> int:
        return self.values.shape[0]

    def component(self, c: int) -> np.ndarray:
        return self.values[c]

    def max_abs_difference(self, other: Union["PolarGridFunction", np.ndarray]) -> float:
        other_values = other.values if isinstance(other, PolarGridFunction) else np.asarray(other)
        return float(np.max(np.abs(self.values - other_values)))

    def to_frame(self, components: Optional[Sequence[int]] = None) -> pd.DataFrame:
        """long-format table with columns r, theta, component, re, im"""
        components = range(self.n_components) if components is None else components
        frames = []
        R, T = np.meshgrid(self.radii, self.angles, indexing="ij")
        for c in components:
            frames.append(pd.DataFrame({
                "r": R.ravel(),
                "theta": T.ravel(),
                "component": c,
                "re": self.values[c].real.ravel(),
                "im": self.values[c].imag.ravel(),
            }))
        return pd.concat(frames, ignore_index=True)


def galerkin_matrix(entries: np.ndarray, K: int) -> np.ndarray:
    """block-toeplitz matrix of pointwise multiplication on modes |k| <= K"""
    entries = np.asarray(entries, dtype=complex)
    rows, cols, width = entries.shape
    Kb = (width - 1) // 2
    k = mode_range(K)
    diff = k[:, None] - k[None, :]
    inside = np.abs(diff) <= Kb
    blocks = np.zeros((rows, cols, 2 * K + 1, 2 * K + 1), dtype=complex)
    blocks[:, :, inside] = entries[:, :, diff[inside] + Kb]
    return blocks.transpose(0, 2, 1, 3).reshape(rows * (2 * K + 1), cols * (2 * K + 1))
