"""
tests for the command line interface
"""

import json

import pytest
from typer.testing import CliRunner

from diskbvp import __version__
from diskbvp.api.types import RunResult, Suite
from diskbvp.cli import interface
from diskbvp.cli.interface import app, run
from diskbvp.data.serialization import read_csv
from diskbvp.verification import battery
from diskbvp.verification.battery import Check, CheckMetadata, Observation

runner = CliRunner()


@pytest.fixture
def config_file(tmp_path):
    """small flat run configuration"""
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"K": 3, "samples": 1, "output_dir": str(tmp_path / "out")}), encoding="utf-8")
    return path


def _write(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


class TestBasicCommands:
    """test commands without numerical work"""

    def test_version(self):
        result = runner.invoke(app, ["version"])
        assert result.exit_code == 0
        assert __version__ in result.stdout

    def test_init_config(self, tmp_path):
        path = tmp_path / "nested" / "diskbvp.json"
        result = runner.invoke(app, ["init-config", str(path)])
        assert result.exit_code == 0
        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["K"] == 8
        assert data["coeff_K"] == 32

    def test_run_returns_status(self):
        assert run(["version"]) == 0


class TestConfigErrors:
    """test usage errors exit with status 2"""

    def test_missing_file(self, tmp_path):
        result = runner.invoke(app, ["transform", "--config", str(tmp_path / "missing.json")])
        assert result.exit_code == 2

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{\"K\": 3,", encoding="utf-8")
        assert runner.invoke(app, ["transform", "--config", str(path)]).exit_code == 2

    def test_nested_config(self, tmp_path):
        path = _write(tmp_path / "nested.json", {"solver": {"q": 0.5}})
        assert runner.invoke(app, ["transform", "--config", str(path)]).exit_code == 2

    def test_invalid_value(self, tmp_path):
        path = _write(tmp_path / "bad.json", {"q": 1.5})
        assert runner.invoke(app, ["spectrum", "--config", str(path)]).exit_code == 2

    def test_unknown_key(self, tmp_path):
        path = _write(tmp_path / "extra.json", {"resolution": 4})
        assert runner.invoke(app, ["spectrum", "--config", str(path)]).exit_code == 2


class TestPipelines:
    """test the numerical commands end to end"""

    def test_transform(self, config_file, tmp_path):
        result = runner.invoke(app, ["transform", "--config", str(config_file)])
        assert result.exit_code == 0
        document = json.loads((tmp_path / "out" / "transform.json").read_text(encoding="utf-8"))
        assert document["kind"] == "transform"
        assert document["constants"]["kappa_pointwise"] == pytest.approx(1.0)
        assert document["config_hash"]

    def test_degenerate_coefficients(self, config_file, tmp_path):
        """test a singular normal block writes error.json and exits 1"""
        coeff = _write(tmp_path / "singular.json", {"constant": [[0.0, 1.0], [-1.0, 1.0]]})
        result = runner.invoke(app, ["transform", "--config", str(config_file), "--coeff", str(coeff)])
        assert result.exit_code == 1
        report = json.loads((tmp_path / "out" / "error.json").read_text(encoding="utf-8"))
        assert report["error"] == "DegenerateCoefficientError"

    def test_spectrum(self, config_file, tmp_path):
        result = runner.invoke(app, ["spectrum", "--config", str(config_file)])
        assert result.exit_code == 0
        csv_path = tmp_path / "out" / "spectrum.csv"
        assert csv_path.read_text(encoding="utf-8").startswith("# artifact_version=")
        assert len(read_csv(csv_path)) == 4 * 3

    def test_solve(self, config_file, tmp_path):
        result = runner.invoke(app, ["solve", "--config", str(config_file), "--K", "4"])
        assert result.exit_code == 0
        document = json.loads((tmp_path / "out" / "solution.json").read_text(encoding="utf-8"))
        assert document["K"] == 4
        assert document["diagnostics"]["trace_error"] < 1e-10
        frame = read_csv(tmp_path / "out" / "u.csv")
        assert list(frame.columns) == ["r", "theta", "component", "re", "im"]

    def test_solve_neumann(self, config_file, tmp_path):
        result = runner.invoke(app, ["solve", "--config", str(config_file), "--problem", "neumann"])
        assert result.exit_code == 0
        assert (tmp_path / "out" / "grad.csv").exists()

    def test_compare_oracle(self, config_file, tmp_path):
        result = runner.invoke(app, ["compare-oracle", "--config", str(config_file), "--n-r", "16", "--n-theta", "32"])
        assert result.exit_code == 0
        document = json.loads((tmp_path / "out" / "oracle.json").read_text(encoding="utf-8"))
        assert document["relative_l2"] < 1e-2


class TestVerify:
    """test the verify command against a stubbed registry"""

    @pytest.fixture
    def stub_registry(self, monkeypatch):
        checks = {}
        monkeypatch.setattr(battery.registry, "checks", checks)
        return checks

    def _register(self, checks, value):
        check = Check(CheckMetadata("stub", Suite.IDENTITIES, "stub check", 1e-6), lambda config, rng: Observation(value))
        checks[check.check_id] = check

    def test_passing_ledger(self, stub_registry, config_file, tmp_path):
        self._register(stub_registry, 0.0)
        result = runner.invoke(app, ["verify", "--config", str(config_file), "--suite", "identities"])
        assert result.exit_code == 0
        ledger = json.loads((tmp_path / "out" / "ledger.json").read_text(encoding="utf-8"))
        assert ledger["passed"] is True
        assert ledger["suites"] == ["identities"]

    def test_failing_ledger(self, stub_registry, config_file, tmp_path):
        self._register(stub_registry, 1.0)
        result = runner.invoke(app, ["verify", "--config", str(config_file), "--suite", "identities"])
        assert result.exit_code == 1
        assert len(read_csv(tmp_path / "out" / "ledger.csv")) == 1

    @pytest.mark.parametrize("success, style", [(True, "green"), (False, "red")])
    def test_summary_style(self, monkeypatch, success, style):
        """test the closing summary is red when the run failed"""
        printed = []
        monkeypatch.setattr(interface.console, "print", lambda text, *args, **kwargs: printed.append(text))
        interface._report(RunResult(success, ["ledger.json"], message="0/1 checks passed"))
        assert printed[0] == f"[{style}]0/1 checks passed[/{style}]"
        assert printed[1] == "  ledger.json"
