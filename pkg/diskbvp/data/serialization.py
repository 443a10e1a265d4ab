"""
versioned json documents and 17-digit csv tables for sections, coefficients and reports
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from ..api.types import ARTIFACT_VERSION, Ledger
from ..core.coefficients import CoefficientField, accretivity_garding
from ..core.errors import ConfigError, DimensionMismatchError
from ..core.fields import BoundarySection, analyze_array, grid_angles, synthesize
from ..core.operators import SpectrumReport
from .samples import cosine_datum

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"

PathLike = Union[str, Path]


def _pairs(values: np.ndarray) -> list:
    """complex array -> nested [re, im] lists"""
    values = np.asarray(values, dtype=complex)
    return np.stack([values.real, values.imag], axis=-1).tolist()


def _complex(values: Any, ndim: int) -> np.ndarray:
    """nested [re, im] lists (or plain reals) -> complex array with ndim axes"""
    array = np.asarray(values, dtype=float)
    if array.ndim == ndim + 1 and array.shape[-1] == 2:
        return array[..., 0] + 1j * array[..., 1]
    return array.astype(complex)


def section_to_dict(f: BoundarySection) -> Dict[str, Any]:
    return {"m": f.m, "K": f.K, "components": _pairs(f.coeffs)}


def section_from_dict(data: Dict[str, Any]) -> BoundarySection:
    coeffs = _complex(data["components"], 2)
    section = BoundarySection(int(data["m"]), int(data["K"]), coeffs)
    return section


def coefficient_to_dict(A: CoefficientField) -> Dict[str, Any]:
    return {
        "m": A.m,
        "K": A.K,
        "entries": _pairs(A.entries),
        "kappa_garding": A.kappa_garding,
        "kappa_pointwise": A.kappa_pointwise,
        "truncation_residual": A.truncation_residual,
    }


def coefficient_from_dict(data: Dict[str, Any], K: Optional[int] = None) -> CoefficientField:
    """entries, a constant matrix or grid samples (n, 2m, 2m) analyzed to K modes"""
    if "entries" in data:
        entries = _complex(data["entries"], 3)
        field = CoefficientField(int(data.get("m", entries.shape[0] // 2)), (entries.shape[-1] - 1) // 2, entries)
    elif "constant" in data:
        field = CoefficientField.constant(_complex(data["constant"], 2), K or 0)
    elif "samples" in data:
        samples = _complex(data["samples"], 3)
        if "n_theta" in data and samples.shape[0] != int(data["n_theta"]):
            raise DimensionMismatchError(f"{samples.shape[0]} samples but n_theta={data['n_theta']}")
        field = CoefficientField.from_values(samples, K if K is not None else (samples.shape[0] - 1) // 4)
    else:
        raise ConfigError("coefficient file needs 'entries', 'constant' or 'samples'", field="coefficient")
    if K is not None and field.K != K and "entries" in data:
        field = field.with_K(max(field.K, K))
    accretivity_garding(field)
    return field


def document(kind: str, payload: Dict[str, Any], config_hash: Optional[str] = None) -> Dict[str, Any]:
    return {"artifact_version": ARTIFACT_VERSION, "config_hash": config_hash, "kind": kind, **payload}


def write_json(path: PathLike, kind: str, payload: Dict[str, Any], config_hash: Optional[str] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(document(kind, payload, config_hash), handle, indent=2, default=_default)
    logger.info(f"wrote {kind} to {path}")
    return path


def _default(value: Any) -> Any:
    if isinstance(value, (np.integer, np.floating)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"cannot serialize {type(value).__name__}")


def read_json(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed json in {path} at line {exc.lineno}: {exc.msg}", line=exc.lineno) from exc


def write_csv(path: PathLike, frame: pd.DataFrame, config_hash: Optional[str] = None) -> Path:
    """csv with a '# artifact_version=..., config_hash=...' first line"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"# artifact_version={ARTIFACT_VERSION}, config_hash={config_hash}\n")
        frame.to_csv(handle, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"wrote {len(frame)} rows to {path}")
    return path


def read_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, comment="#")


def section_frame(f: BoundarySection, n_theta: int) -> pd.DataFrame:
    """grid samples of a section: theta, component, re, im"""
    values = synthesize(f, n_theta)
    angles = grid_angles(n_theta)
    return pd.concat([
        pd.DataFrame({"theta": angles, "component": c, "re": values[c].real, "im": values[c].imag})
        for c in range(values.shape[0])
    ], ignore_index=True)


def spectrum_frame(report: SpectrumReport) -> pd.DataFrame:
    eigenvalues = report.restricted if report.restricted is not None else report.eigenvalues
    return pd.DataFrame({
        "re": eigenvalues.real,
        "im": eigenvalues.imag,
        "in_region": np.asarray(report.in_region, dtype=bool),
    })


def ledger_frame(ledger: Ledger) -> pd.DataFrame:
    return pd.DataFrame([
        {"suite": r.suite, "name": r.name, "passed": r.passed, "observed": r.observed, "tolerance": r.tolerance}
        for r in ledger.results
    ], columns=["suite", "name", "passed", "observed", "tolerance"])


def load_coefficient(path: Optional[PathLike], m: int, K: int) -> CoefficientField:
    """coefficient file, or the identity when no path is given"""
    if path is None:
        field = CoefficientField.identity(m, 0)
        accretivity_garding(field)
        return field
    field = coefficient_from_dict(read_json(path), K)
    if field.m != m:
        raise DimensionMismatchError(f"coefficient file has m={field.m}, config has m={m}")
    logger.info(f"loaded coefficients from {path} (K={field.K})")
    return field


def load_datum(path: Optional[PathLike], m: int, K: int) -> np.ndarray:
    """(m, 2K+1) datum coefficients from a json section, json samples or a csv of grid samples"""
    if path is None:
        return cosine_datum(m, K)
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return _load_csv_datum(path, m, K)
    data = read_json(path)
    if "components" in data:
        coeffs = np.atleast_2d(_complex(data["components"], 2))
        if coeffs.shape[0] != m:
            raise DimensionMismatchError(f"datum has {coeffs.shape[0]} components, config has m={m}")
        return _resized(coeffs, K)
    if "samples" in data:
        samples = np.atleast_2d(_complex(data["samples"], 2))
        return analyze_array(samples, K)
    raise ConfigError("datum file needs 'components' or 'samples'", field="datum")


def _load_csv_datum(path: Path, m: int, K: int) -> np.ndarray:
    frame = read_csv(path)
    missing = {"theta", "component", "re"} - set(frame.columns)
    if missing:
        raise ConfigError(f"datum csv lacks columns {sorted(missing)}", field="datum")
    rows = []
    for c in range(m):
        part = frame[frame["component"] == c].sort_values("theta")
        values = part["re"].to_numpy() + 1j * (part["im"].to_numpy() if "im" in part else 0.0)
        rows.append(values)
    return analyze_array(np.array(rows), K)


def _resized(coeffs: np.ndarray, K: int) -> np.ndarray:
    width = coeffs.shape[-1]
    source_K = (width - 1) // 2
    result = np.zeros((coeffs.shape[0], 2 * K + 1), dtype=complex)
    common = min(K, source_K)
    result[:, K - common:K + common + 1] = coeffs[:, source_K - common:source_K + common + 1]
    return result
