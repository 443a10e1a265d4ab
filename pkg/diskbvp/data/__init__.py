"""
sample coefficients and data, json and csv artifacts
"""

from .samples import cosine_diagonal, identity_coefficient, random_accretive
from .serialization import load_coefficient, load_datum, write_csv, write_json

__all__ = [
    "cosine_diagonal",
    "identity_coefficient",
    "random_accretive",
    "load_coefficient",
    "load_datum",
    "write_csv",
    "write_json",
]
