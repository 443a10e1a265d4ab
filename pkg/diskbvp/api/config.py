"""
run configuration: validated flat json, config hash and solver settings
"""

import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..core.errors import ConfigError
from ..solver.hardy import CARLESON_THRESHOLD, SolverSettings
from ..solver.timegrid import DEFAULT_Q

logger = logging.getLogger(__name__)

THREADS_VARIABLE = "DISKBVP_THREADS"
BLAS_VARIABLES = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


class RunConfig(BaseModel):
    """parameters of one cli run"""
    model_config = ConfigDict(extra="forbid")

    m: int = Field(1, ge=1)
    K: int = Field(8, ge=0)
    coeff_K: Optional[int] = None  # default 4K
    sigma: float = 0.0
    q: float = DEFAULT_Q
    t_max: Optional[float] = None  # default from decay_tol
    t_min: float = 1e-4
    decay_tol: float = 1e-12
    gap_tol: float = 1e-8
    iteration_tol: float = 1e-10
    max_iterations: int = Field(500, ge=1)
    cond_limit: float = 1e8
    carleson_threshold: float = Field(CARLESON_THRESHOLD, ge=0.0)
    carleson_override: bool = False
    n_theta: int = 64
    coefficient: Optional[str] = None  # path, identity when missing
    datum: Optional[str] = None  # path, cos theta when missing
    output_dir: str = "diskbvp_output"
    seed: int = 0
    samples: int = Field(5, ge=1)
    epsilon: float = Field(0.05, ge=0.0)

    @field_validator("t_min", "decay_tol", "gap_tol", "iteration_tol", "cond_limit")
    @classmethod
    def _positive(cls, value: float) -> float:
        if value <= 0:
            raise ValueError("must be positive")
        return value

    @field_validator("t_max")
    @classmethod
    def _positive_horizon(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and value <= 0:
            raise ValueError("must be positive")
        return value

    @field_validator("q")
    @classmethod
    def _ratio(cls, value: float) -> float:
        if not 0.0 < value < 1.0:
            raise ValueError("grid ratio must lie in (0, 1)")
        return value

    @model_validator(mode="after")
    def _resolution(self) -> "RunConfig":
        if self.coeff_K is None:
            self.coeff_K = 4 * self.K
        if self.coeff_K < self.K:
            raise ValueError(f"coeff_K={self.coeff_K} must be at least K={self.K}")
        if self.n_theta < 2 * self.K + 1:
            raise ValueError(f"n_theta={self.n_theta} cannot resolve 2K+1={2 * self.K + 1} modes")
        if self.t_max is not None and self.t_max <= self.t_min:
            raise ValueError("t_max must exceed t_min")
        return self

    def solver_settings(self, method: str = "auto") -> SolverSettings:
        return SolverSettings(
            q=self.q, t_max=self.t_max, t_min=self.t_min, decay_tol=self.decay_tol,
            gap_tol=self.gap_tol, iteration_tol=self.iteration_tol,
            max_iterations=self.max_iterations, cond_limit=self.cond_limit, method=method,
            carleson_threshold=self.carleson_threshold, carleson_override=self.carleson_override,
        )


def _field_path(error: dict) -> str:
    return ".".join(str(part) for part in error["loc"]) or "config"


def validate_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = _field_path(first)
        raise ConfigError(f"invalid field '{field}': {first['msg']}", field=field) from exc


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """read a flat json config; defaults when no path is given"""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}", field="path")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed json at line {exc.lineno}: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a json object", line=1)
    nested = [key for key, value in data.items() if isinstance(value, (dict, list))]
    if nested:
        raise ConfigError(f"config must be flat, '{nested[0]}' is nested", field=nested[0])
    config = validate_config(data)
    logger.info(f"loaded config {path} ({config_hash(config)})")
    return config


def config_hash(config: RunConfig) -> str:
    """sha-256 of the canonical json, 16 hex digits"""
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def apply_thread_limit() -> Optional[int]:
    """copy DISKBVP_THREADS into the blas thread variables"""
    value = os.environ.get(THREADS_VARIABLE)
    if value is None:
        return None
    try:
        threads = int(value)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_VARIABLE} must be an integer, got '{value}'", field=THREADS_VARIABLE) from exc
    if threads < 1:
        raise ConfigError(f"{THREADS_VARIABLE} must be positive", field=THREADS_VARIABLE)
    for name in BLAS_VARIABLES:
        os.environ[name] = str(threads)
    logger.info(f"limited blas to {threads} threads")
    return threads
