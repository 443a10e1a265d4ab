"""
diskbvp - spectral boundary value problems for divergence form systems on the unit disk
"""

__version__ = "0.1.0"

from .api.types import ProblemKind, Suite
from .solver.bvp import BVPSolution, solve_dirichlet, solve_neumann, solve_regularity

__all__ = [
    "ProblemKind",
    "Suite",
    "BVPSolution",
    "solve_dirichlet",
    "solve_neumann",
    "solve_regularity",
]
