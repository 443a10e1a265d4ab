"""
unit tests for run configuration and artifact serialization
"""

import json
import os

import numpy as np
import pandas as pd
import pytest

from diskbvp.api.config import RunConfig, apply_thread_limit, config_hash, load_config, validate_config
from diskbvp.api.types import ARTIFACT_VERSION, CheckResult, Ledger
from diskbvp.core.errors import ConfigError, DimensionMismatchError
from diskbvp.core.fields import BoundarySection, grid_angles
from diskbvp.data.samples import cosine_datum
from diskbvp.data.serialization import (
    coefficient_from_dict,
    coefficient_to_dict,
    ledger_frame,
    load_coefficient,
    load_datum,
    read_csv,
    read_json,
    section_frame,
    section_from_dict,
    section_to_dict,
    write_csv,
    write_json,
)


class TestRunConfig:
    """test defaults, validation and hashing"""

    def test_defaults(self):
        config = RunConfig()
        assert config.K == 8
        assert config.coeff_K == 32
        assert config.output_dir == "diskbvp_output"

    def test_resolution_checks(self):
        with pytest.raises(ConfigError):
            validate_config({"K": 40, "n_theta": 64})
        with pytest.raises(ConfigError):
            validate_config({"K": 8, "coeff_K": 4})

    def test_error_names_field(self):
        with pytest.raises(ConfigError) as excinfo:
            validate_config({"samples": 0})
        assert excinfo.value.details["field"] == "samples"

    def test_load_defaults(self):
        assert load_config(None) == RunConfig()

    def test_load_file(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"K": 5, "sigma": 0.5}), encoding="utf-8")
        config = load_config(path)
        assert config.K == 5
        assert config.coeff_K == 20
        assert config.sigma == 0.5

    def test_malformed_file_reports_line(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("{\n  \"K\": 5,\n  oops\n}", encoding="utf-8")
        with pytest.raises(ConfigError) as excinfo:
            load_config(path)
        assert excinfo.value.details["line"] == 3

    def test_array_rejected(self, tmp_path):
        path = tmp_path / "run.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_hash_is_stable(self):
        assert config_hash(RunConfig()) == config_hash(RunConfig())
        assert config_hash(RunConfig(K=4)) != config_hash(RunConfig())
        assert len(config_hash(RunConfig())) == 16

    def test_solver_settings(self):
        settings = RunConfig(q=0.5, max_iterations=7).solver_settings("dense")
        assert settings.q == 0.5
        assert settings.max_iterations == 7
        assert settings.method == "dense"

    def test_carleson_settings(self):
        settings = RunConfig(carleson_threshold=0.1, carleson_override=True).solver_settings()
        assert settings.carleson_threshold == 0.1
        assert settings.carleson_override is True
        with pytest.raises(ConfigError):
            validate_config({"carleson_threshold": -1.0})

    def test_thread_limit(self, monkeypatch):
        monkeypatch.delenv("DISKBVP_THREADS", raising=False)
        assert apply_thread_limit() is None
        monkeypatch.setenv("DISKBVP_THREADS", "2")
        for name in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            monkeypatch.setenv(name, "1")
        assert apply_thread_limit() == 2
        assert os.environ["OMP_NUM_THREADS"] == "2"
        monkeypatch.setenv("DISKBVP_THREADS", "many")
        with pytest.raises(ConfigError):
            apply_thread_limit()


class TestDocuments:
    """test json and csv artifacts"""

    def test_json_envelope(self, tmp_path):
        path = write_json(tmp_path / "a" / "doc.json", "sample", {"value": np.float64(1.5), "z": 1 + 2j}, "abc")
        document = read_json(path)
        assert document["artifact_version"] == ARTIFACT_VERSION
        assert document["config_hash"] == "abc"
        assert document["kind"] == "sample"
        assert document["value"] == 1.5
        assert document["z"] == [1.0, 2.0]

    def test_complex_arrays(self, tmp_path):
        path = write_json(tmp_path / "doc.json", "sample", {"coeffs": np.array([1j, 2.0])})
        assert read_json(path)["coeffs"] == [[0.0, 1.0], [2.0, 0.0]]

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{", encoding="utf-8")
        with pytest.raises(ConfigError):
            read_json(path)

    def test_csv_header_and_precision(self, tmp_path):
        frame = pd.DataFrame({"x": [1.0 / 3.0]})
        path = write_csv(tmp_path / "table.csv", frame, "abc")
        first = path.read_text(encoding="utf-8").splitlines()[0]
        assert first == f"# artifact_version={ARTIFACT_VERSION}, config_hash=abc"
        assert read_csv(path)["x"][0] == 1.0 / 3.0

    def test_section_frame(self):
        frame = section_frame(BoundarySection.constant([1.0, 0.0], 2), 8)
        assert len(frame) == 16
        assert np.allclose(frame[frame["component"] == 0]["re"], 1.0)

    def test_ledger_frame(self):
        ledger = Ledger(["norms"], [CheckResult("norms", "sample", True, 0.1, 1.0)])
        frame = ledger_frame(ledger)
        assert list(frame.columns) == ["suite", "name", "passed", "observed", "tolerance"]
        assert frame["passed"].tolist() == [True]


class TestInputs:
    """test coefficient and datum files"""

    def test_section_dict(self, rng):
        f = BoundarySection.random(1, 3, rng)
        assert np.allclose(section_from_dict(json.loads(json.dumps(section_to_dict(f)))).coeffs, f.coeffs)

    def test_coefficient_dict(self, accretive):
        data = json.loads(json.dumps(coefficient_to_dict(accretive), default=float))
        assert np.allclose(coefficient_from_dict(data).entries, accretive.entries)

    def test_constant_coefficient(self):
        A = coefficient_from_dict({"constant": [[2.0, 0.0], [0.0, 1.0]]}, K=3)
        assert A.K == 3
        assert A.kappa_garding == pytest.approx(1.0)

    def test_sampled_coefficient(self):
        theta = grid_angles(16)
        samples = np.array([np.diag([1.0 + 0.3 * np.cos(t), 1.0]) for t in theta])
        A = coefficient_from_dict({"samples": samples.tolist(), "n_theta": 16}, K=2)
        assert A.entries[0, 0, 3] == pytest.approx(0.15)

    def test_sample_count_checked(self):
        with pytest.raises(DimensionMismatchError):
            coefficient_from_dict({"samples": np.zeros((4, 2, 2)).tolist(), "n_theta": 8})

    def test_unknown_coefficient_layout(self):
        with pytest.raises(ConfigError):
            coefficient_from_dict({"matrix": [[1.0]]})

    def test_identity_default(self):
        A = load_coefficient(None, 1, 4)
        assert np.allclose(A.entries[:, :, 0], np.eye(2))

    def test_coefficient_size_checked(self, tmp_path):
        path = tmp_path / "coeff.json"
        path.write_text(json.dumps({"constant": np.eye(4).tolist()}), encoding="utf-8")
        with pytest.raises(DimensionMismatchError):
            load_coefficient(path, 1, 2)

    def test_default_datum(self):
        assert np.array_equal(load_datum(None, 1, 3), cosine_datum(1, 3))

    def test_json_datum_is_resized(self, tmp_path):
        path = tmp_path / "datum.json"
        path.write_text(json.dumps({"components": [[0.0, 1.0, 0.0]]}), encoding="utf-8")
        datum = load_datum(path, 1, 2)
        assert datum.shape == (1, 5)
        assert datum[0, 2] == 1.0

    def test_csv_datum(self, tmp_path):
        theta = grid_angles(16)
        frame = pd.DataFrame({"theta": theta, "component": 0, "re": np.cos(theta), "im": 0.0})
        path = write_csv(tmp_path / "datum.csv", frame)
        assert np.allclose(load_datum(path, 1, 3), cosine_datum(1, 3), atol=1e-14)

    def test_csv_datum_columns(self, tmp_path):
        path = write_csv(tmp_path / "datum.csv", pd.DataFrame({"theta": [0.0], "value": [1.0]}))
        with pytest.raises(ConfigError):
            load_datum(path, 1, 3)
