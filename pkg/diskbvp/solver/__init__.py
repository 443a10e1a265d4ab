"""
conormal gradient ODE: time grid, integral operators, hardy projections and boundary value solves
"""

from .bvp import BVPSolution, SOLVERS, conjugate_pair, semigroup_family, solve_dirichlet, solve_neumann, solve_regularity
from .hardy import SolverContext, SolverSettings, perturbed_hardy, wellposedness_map
from .integral import ConormalIntegrals, solve_conormal
from .timegrid import TimeGrid, Trajectory

__all__ = [
    "BVPSolution",
    "SOLVERS",
    "conjugate_pair",
    "semigroup_family",
    "solve_dirichlet",
    "solve_neumann",
    "solve_regularity",
    "SolverContext",
    "SolverSettings",
    "perturbed_hardy",
    "wellposedness_map",
    "ConormalIntegrals",
    "solve_conormal",
    "TimeGrid",
    "Trajectory",
]
