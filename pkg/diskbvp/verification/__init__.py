"""
norms, the finite-difference oracle and the verification battery
"""

from .battery import CheckRegistry, identity_battery, registry
from .norms import nt_maximal, y_x_norms
from .oracle import compare_with_oracle, fd_oracle

__all__ = [
    "CheckRegistry",
    "identity_battery",
    "registry",
    "nt_maximal",
    "y_x_norms",
    "compare_with_oracle",
    "fd_oracle",
]
