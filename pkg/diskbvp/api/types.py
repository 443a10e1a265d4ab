"""
shared enums and report structures
"""

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional

ARTIFACT_VERSION = "1.0"


class ProblemKind(Enum):
    """boundary value problem"""
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    REGULARITY = "regularity"


class SolveStatus(Enum):
    """how I - S_A was inverted"""
    TRIVIAL = "trivial"  # zero discrepancy
    ITERATIVE = "iterative"
    DENSE = "dense"
    KRYLOV = "krylov"
    SINGULAR = "singular"


class Suite(Enum):
    """verification suites"""
    IDENTITIES = "identities"
    NORMS = "norms"
    ORACLE = "oracle"


@dataclass
class SolveReport:
    """outcome of solving (I - S_A) f = rhs"""
    status: SolveStatus
    iterations: int = 0
    residual: float = 0.0
    spectral_radius: Optional[float] = None
    small_carleson_verified: bool = False
    notes: List[str] = field(default_factory=list)


@dataclass
class CheckResult:
    """one line of the verification ledger"""
    suite: str
    name: str
    passed: bool
    observed: float
    tolerance: float
    description: str = ""
    seed: Optional[int] = None
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass
class Ledger:
    """machine-readable verification outcome"""
    suites: List[str]
    results: List[CheckResult] = field(default_factory=list)
    seed: int = 0
    started: datetime = field(default_factory=datetime.now)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict[str, Any]:
        return {
            "suites": self.suites,
            "seed": self.seed,
            "passed": self.passed,
            "failures": len(self.failures),
            "results": [
                {
                    "suite": r.suite,
                    "name": r.name,
                    "passed": r.passed,
                    "observed": r.observed,
                    "tolerance": r.tolerance,
                    "description": r.description,
                    "seed": r.seed,
                    "details": r.details,
                }
                for r in self.results
            ],
        }


@dataclass
class RunResult:
    """outcome of a cli pipeline"""
    success: bool
    files: List[str] = field(default_factory=list)
    message: Optional[str] = None
