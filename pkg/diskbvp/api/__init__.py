"""
run configuration and shared report types
"""

from .config import RunConfig, config_hash, load_config
from .types import CheckResult, Ledger, ProblemKind, RunResult, SolveReport, SolveStatus, Suite

__all__ = [
    "RunConfig",
    "config_hash",
    "load_config",
    "CheckResult",
    "Ledger",
    "ProblemKind",
    "RunResult",
    "SolveReport",
    "SolveStatus",
    "Suite",
]
