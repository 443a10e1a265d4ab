"""
command line interface for transforms, spectra, boundary value solves and verification
"""

import json
import logging
from contextlib import contextmanager
from pathlib import Path
from typing import Any, List, Optional, Sequence

import click
import numpy as np
import typer
from rich.console import Console
from rich.logging import RichHandler
from rich.panel import Panel
from rich.table import Table

from .. import __version__
from ..api.config import RunConfig, apply_thread_limit, config_hash, load_config, validate_config
from ..api.types import ARTIFACT_VERSION, ProblemKind, RunResult, Suite
from ..core.coefficients import accretivity_pointwise, conjugate_coefficients, hat_transform
from ..core.errors import ConfigError, DiskBVPError
from ..core.operators import assemble_D0, spectrum
from ..data.serialization import (
    coefficient_to_dict, ledger_frame, load_coefficient, load_datum, spectrum_frame, write_csv, write_json,
)
from ..solver.bvp import SOLVERS
from ..verification.battery import identity_battery
from ..verification.oracle import compare_with_oracle, fd_oracle

logger = logging.getLogger(__name__)

console = Console()
app = typer.Typer(help="Spectral boundary value problems for div A grad u = 0 on the unit disk")


@app.callback()
def configure(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log pipeline stages")):
    """install the console log handler"""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=console, show_path=False)],
        force=True,
    )
    try:
        apply_thread_limit()
    except ConfigError as exc:
        _usage_error(exc)


def _usage_error(exc: ConfigError):
    logger.error(f"configuration error: {exc.message}")
    console.print(f"[red]configuration error: {exc.message}[/red]")
    raise typer.Exit(2)


def _config(path: Optional[Path], **overrides: Any) -> RunConfig:
    """config file (or defaults) with command line overrides applied"""
    try:
        config = load_config(path)
        changes = {k: v for k, v in overrides.items() if v is not None}
        if changes:
            data = config.model_dump()
            if "K" in changes and data["coeff_K"] == 4 * data["K"]:
                data["coeff_K"] = None  # follow the new K
            config = validate_config({**data, **changes})
    except ConfigError as exc:
        _usage_error(exc)
    logger.info(f"config {config_hash(config)}, artifact version {ARTIFACT_VERSION}")
    return config


@contextmanager
def _guarded(config: RunConfig):
    """numerical failures -> error.json and exit 1, bad inputs -> exit 2"""
    try:
        yield
    except ConfigError as exc:
        _usage_error(exc)
    except DiskBVPError as exc:
        logger.error(f"{exc.module}: {exc.message}")
        report = exc.to_dict()
        path = write_json(Path(config.output_dir) / "error.json", "error", report, config_hash(config))
        console.print(Panel(f"[red]{type(exc).__name__}[/red]: {exc.message}\nsee {path}", title="failure"))
        raise typer.Exit(1)


def _report(result: RunResult) -> None:
    style = "green" if result.success else "red"
    console.print(f"[{style}]{result.message}[/{style}]")
    for name in result.files:
        console.print(f"  {name}")


@app.command()
def transform(
    coeff: Optional[Path] = typer.Option(None, "--coeff", "-c", help="Coefficient JSON file"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="Run configuration JSON"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
):
    """write A-hat, the conjugate coefficients and accretivity constants"""
    config = _config(config_path, coefficient=str(coeff) if coeff else None, output_dir=str(out) if out else None)
    digest = config_hash(config)
    with _guarded(config):
        A = load_coefficient(config.coefficient, config.m, config.coeff_K)
        accretivity_pointwise(A)
        hat = hat_transform(A)
        conjugate = conjugate_coefficients(A)
        involution = float(np.max(np.abs(hat_transform(hat).values() - A.values())))
        path = write_json(Path(config.output_dir) / "transform.json", "transform", {
            "coefficient": coefficient_to_dict(A),
            "hat": coefficient_to_dict(hat),
            "conjugate": coefficient_to_dict(conjugate),
            "constants": {
                "kappa_garding": A.kappa_garding,
                "kappa_pointwise": A.kappa_pointwise,
                "involution_residual": involution,
            },
        }, digest)
    _report(RunResult(True, [str(path)], message=f"transformed coefficients (m={A.m}, K={A.K})"))


@app.command("spectrum")
def spectrum_command(
    coeff: Optional[Path] = typer.Option(None, "--coeff", "-c", help="Coefficient JSON file"),
    sigma: Optional[float] = typer.Option(None, "--sigma", help="Shift of the generator"),
    tilde: bool = typer.Option(False, "--tilde", help="Use D_0-tilde instead of D_0"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="Run configuration JSON"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
):
    """eigenvalues of D_0 with the fitted hyperbolic region"""
    config = _config(config_path, coefficient=str(coeff) if coeff else None, sigma=sigma,
                     output_dir=str(out) if out else None)
    digest = config_hash(config)
    with _guarded(config):
        B0 = hat_transform(load_coefficient(config.coefficient, config.m, config.coeff_K))
        D0, D0_tilde = assemble_D0(B0, config.sigma, config.K)
        report = spectrum(D0_tilde if tilde else D0)
        output = Path(config.output_dir)
        files = [
            write_csv(output / "spectrum.csv", spectrum_frame(report), digest),
            write_json(output / "spectrum.json", "spectrum", report.summary(), digest),
        ]

    table = Table(title="Spectrum")
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", style="white")
    for name, value in report.summary().items():
        table.add_row(name, f"{value:.6g}" if isinstance(value, float) else str(value))
    console.print(table)
    _report(RunResult(True, [str(f) for f in files], message=f"{report.eigenvalues.size} eigenvalues"))


@app.command()
def solve(
    problem: ProblemKind = typer.Option(ProblemKind.DIRICHLET, "--problem", "-p", help="Boundary value problem"),
    coeff: Optional[Path] = typer.Option(None, "--coeff", "-c", help="Coefficient JSON file"),
    datum: Optional[Path] = typer.Option(None, "--datum", "-d", help="Boundary datum (JSON or CSV)"),
    sigma: Optional[float] = typer.Option(None, "--sigma", help="Override sigma (0 is the disk)"),
    K: Optional[int] = typer.Option(None, "--K", "-K", help="Fourier truncation"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="Run configuration JSON"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
):
    """solve one boundary value problem and write u, grad u and the conjugate"""
    config = _config(config_path, coefficient=str(coeff) if coeff else None, datum=str(datum) if datum else None,
                     sigma=sigma, K=K, output_dir=str(out) if out else None)
    digest = config_hash(config)
    with _guarded(config):
        A = load_coefficient(config.coefficient, config.m, config.coeff_K)
        phi = load_datum(config.datum, config.m, config.K)
        settings = config.solver_settings()
        solution = SOLVERS[problem](phi, A, K=config.K, sigma=config.sigma, settings=settings,
                                    n_theta=config.n_theta)
        output = Path(config.output_dir)
        files = [write_json(output / "solution.json", "solution", {
            "problem": problem.value,
            "m": solution.m,
            "K": solution.K,
            "sigma": config.sigma,
            "datum": solution.datum,
            "boundary_u": solution.trace_u1.coeffs,
            "boundary_gradient": solution.trace_g1.coeffs,
            "diagnostics": solution.diagnostics,
        }, digest)]
        for grid in (solution.u, solution.grad, solution.conjugate):
            files.append(write_csv(output / f"{grid.label}.csv", grid.to_frame(), digest))

    table = Table(title=f"{problem.value.title()} Solve")
    table.add_column("Diagnostic", style="cyan")
    table.add_column("Value", style="white")
    for name, value in solution.diagnostics.items():
        table.add_row(name, f"{value:.4e}" if isinstance(value, float) else str(value))
    console.print(table)
    _report(RunResult(True, [str(f) for f in files], message=f"{problem.value} problem solved"))


@app.command()
def verify(
    suite: List[Suite] = typer.Option(list(Suite), "--suite", "-s", help="Suites to run"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="Run configuration JSON"),
    workers: int = typer.Option(1, "--workers", "-w", min=1, help="Concurrent checks"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
):
    """run the verification battery and write the ledger"""
    config = _config(config_path, output_dir=str(out) if out else None)
    digest = config_hash(config)
    with _guarded(config):
        ledger = identity_battery(config, suite, workers)
        output = Path(config.output_dir)
        files = [
            write_json(output / "ledger.json", "ledger", ledger.to_dict(), digest),
            write_csv(output / "ledger.csv", ledger_frame(ledger), digest),
        ]

    table = Table(title="Verification Ledger")
    table.add_column("Suite", style="cyan")
    table.add_column("Check", style="white")
    table.add_column("Observed", style="blue")
    table.add_column("Tolerance", style="blue")
    table.add_column("Status")
    for result in ledger.results:
        status = "[green]pass[/green]" if result.passed else "[red]FAIL[/red]"
        table.add_row(result.suite, result.name, f"{result.observed:.3e}", f"{result.tolerance:.1e}", status)
    console.print(table)
    _report(RunResult(ledger.passed, [str(f) for f in files],
                      message=f"{len(ledger.results) - len(ledger.failures)}/{len(ledger.results)} checks passed"))
    if not ledger.passed:
        for failure in ledger.failures:
            console.print(f"[red]failed: {failure.suite}.{failure.name} (seed {failure.seed})[/red]")
        raise typer.Exit(1)


@app.command("compare-oracle")
def compare_oracle(
    coeff: Optional[Path] = typer.Option(None, "--coeff", "-c", help="Coefficient JSON file"),
    datum: Optional[Path] = typer.Option(None, "--datum", "-d", help="Boundary datum (JSON or CSV)"),
    n_r: int = typer.Option(64, "--n-r", min=2, help="Oracle rings"),
    n_theta: int = typer.Option(128, "--n-theta", min=8, help="Oracle angles"),
    config_path: Optional[Path] = typer.Option(None, "--config", help="Run configuration JSON"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Output directory"),
):
    """dirichlet solve against the finite-difference oracle"""
    config = _config(config_path, coefficient=str(coeff) if coeff else None, datum=str(datum) if datum else None,
                     output_dir=str(out) if out else None)
    digest = config_hash(config)
    with _guarded(config):
        A = load_coefficient(config.coefficient, 1, config.coeff_K)
        phi = load_datum(config.datum, 1, config.K)
        solution = SOLVERS[ProblemKind.DIRICHLET](phi, A, K=config.K, settings=config.solver_settings())
        oracle = fd_oracle(A, phi, n_r, n_theta)
        comparison = compare_with_oracle(solution, oracle)
        output = Path(config.output_dir)
        files = [
            write_json(output / "oracle.json", "oracle", {
                "relative_l2": comparison.relative_l2,
                "max_abs": comparison.max_abs,
                "n_r": n_r,
                "n_theta": n_theta,
            }, digest),
            write_csv(output / "oracle.csv", oracle.to_frame(), digest),
        ]
    console.print(Panel(
        f"relative L2 {comparison.relative_l2:.3e}\nmax abs {comparison.max_abs:.3e}",
        title=f"Oracle {n_r} x {n_theta}",
    ))
    _report(RunResult(True, [str(f) for f in files], message="oracle comparison written"))


@app.command("init-config")
def init_config(
    path: Path = typer.Argument(Path("diskbvp.json"), help="Where to write the configuration"),
):
    """write the default run configuration"""
    config = RunConfig()
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config.model_dump(), indent=2) + "\n", encoding="utf-8")
    console.print(f"[green]wrote default configuration ({config_hash(config)}) to {path}[/green]")


@app.command()
def version():
    """print the package and artifact versions"""
    console.print(f"diskbvp {__version__} (artifact version {ARTIFACT_VERSION})")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """run the cli on argv and return the exit status"""
    command = typer.main.get_command(app)
    try:
        result = command.main(args=list(argv) if argv is not None else None, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.exceptions.Abort:
        return 1
    return result if isinstance(result, int) else 0


def main():
    """main entry point for the CLI"""
    raise SystemExit(run())


if __name__ == "__main__":
    main()
