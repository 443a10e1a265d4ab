"""
error hierarchy for the disk boundary value problem toolkit
"""

from typing import Any, Dict, Optional


class DiskBVPError(ValueError):
    """base error carrying module provenance and structured details"""

    module = "diskbvp"

    def __init__(self, message: str, module: Optional[str] = None, **details: Any):
        super().__init__(message)
        self.message = message
        if module is not None:
            self.module = module
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        """structured form used by the cli error report"""
        return {
            "module": self.module,
            "error": type(self).__name__,
            "message": self.message,
            "details": {k: _plain(v) for k, v in self.details.items()},
        }


def _plain(value: Any) -> Any:
    # numpy scalars and arrays are not json serializable
    if hasattr(value, "tolist"):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


class DimensionMismatchError(DiskBVPError):
    """sections or operators of incompatible sizes"""
    module = "fourier-fields"


class GridResolutionError(DiskBVPError):
    """sampling grid too coarse for the requested truncation"""
    module = "fourier-fields"


class DegenerateCoefficientError(DiskBVPError):
    """pointwise singular coefficient block or jacobian"""
    module = "coefficient-algebra"


class ConditioningError(DiskBVPError):
    """ill-conditioned splitting solve"""
    module = "boundary-operators"


class NearSingularError(DiskBVPError):
    """resolvent requested too close to the spectrum"""
    module = "boundary-operators"


class SpectralGapError(DiskBVPError):
    """eigenvalue too close to the imaginary axis for the calculus"""
    module = "functional-calculus"


class QuadratureError(DiskBVPError):
    """quadrature did not converge or grids do not match"""
    module = "functional-calculus"


class HardyProjectionError(DiskBVPError):
    """datum outside the positive hardy subspace"""
    module = "bvp-solver"


class IllPosednessError(DiskBVPError):
    """boundary map is rank deficient"""
    module = "bvp-solver"


class InvertibilityError(DiskBVPError):
    """I - S_A could not be inverted"""
    module = "bvp-solver"


class DataSpaceError(DiskBVPError):
    """boundary datum outside the admissible data space"""
    module = "bvp-solver"


class ConfigError(DiskBVPError):
    """malformed run configuration"""
    module = "cli"
