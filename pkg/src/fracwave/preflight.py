"""Preflight checks of run configurations before any solver starts."""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from fracwave.config import CaseConfig, RateWindow, SweepConfig
from fracwave.errors import FracwaveError
from fracwave.log import LOG_ENV_VAR
from fracwave.spectral_pde import required_grid_factor


@dataclass
class CheckResult:
    """Result of a single preflight check."""

    name: str
    passed: bool
    message: str
    fix_instruction: Optional[str] = None


def check_problem(alpha: float, gamma: float, p: float, a: float = 1.0, b: float = 1.0) -> CheckResult:
    """Orders and coefficients within the solvable range."""
    problems = []
    if not (1.0 < alpha <= 2.0):
        problems.append(f"alpha={alpha} is outside (1, 2]")
    if gamma <= 0:
        problems.append(f"gamma={gamma} must be positive")
    if p <= 1:
        problems.append(f"p={p} must exceed 1")
    if a < 0 or b < 0:
        problems.append("a and b must be nonnegative")
    if problems:
        return CheckResult(
            name="Problem",
            passed=False,
            message="; ".join(problems),
            fix_instruction="Set 1 < alpha <= 2, gamma > 0, p > 1 and a, b >= 0 in the 'problem' section.",
        )
    return CheckResult(name="Problem", passed=True, message=f"alpha={alpha:g} gamma={gamma:g} p={p:g}")


def check_mesh(config: CaseConfig) -> CheckResult:
    """Horizon, base resolution and threshold."""
    mesh = config.mesh
    if mesh.horizon <= 0:
        return CheckResult(
            name="Mesh", passed=False, message=f"horizon={mesh.horizon} must be positive",
            fix_instruction="Set mesh.horizon to a positive time.",
        )
    if mesh.base_n < 8:
        return CheckResult(
            name="Mesh", passed=False, message=f"base_n={mesh.base_n} is too coarse",
            fix_instruction="Use at least 8 base steps (the default is 256).",
        )
    if mesh.threshold is not None and mesh.threshold <= 1.0:
        return CheckResult(
            name="Mesh", passed=False, message=f"threshold={mesh.threshold} must exceed 1",
            fix_instruction="Leave mesh.threshold unset to use 1e6 times the data size.",
        )
    return CheckResult(name="Mesh", passed=True, message=f"T={mesh.horizon:g}, N={mesh.base_n}")


def check_domain(config: CaseConfig) -> CheckResult:
    """Spectral domain and de-aliasing margin for the pde solver."""
    domain = config.domain
    if domain.dimension not in (1, 2) or domain.modes < 1:
        return CheckResult(
            name="Domain", passed=False,
            message=f"dimension={domain.dimension}, modes={domain.modes} is not a valid sine basis",
            fix_instruction="Use dimension 1 or 2 and at least one mode.",
        )
    needed = required_grid_factor(config.problem.p)
    if config.solver == "pde" and domain.grid_factor < needed:
        return CheckResult(
            name="Domain", passed=False,
            message=f"grid_factor={domain.grid_factor} aliases |u|^p for p={config.problem.p:g}",
            fix_instruction=f"Set domain.grid_factor to at least {needed}.",
        )
    return CheckResult(name="Domain", passed=True, message=f"{domain.dimension}D, K={domain.modes}")


def check_test_exponent(config: CaseConfig) -> CheckResult:
    """Test-function exponent large enough for the explicit constants."""
    problem = config.problem
    if config.l is None or problem.p <= 1:
        return CheckResult(name="Test exponent", passed=True, message="default")
    needed = problem.p * (problem.alpha + problem.gamma) / (problem.p - 1.0)
    if config.l < needed:
        return CheckResult(
            name="Test exponent", passed=False, message=f"l={config.l} is below {needed:.4g}",
            fix_instruction="Raise l or remove it to use the default.",
        )
    return CheckResult(name="Test exponent", passed=True, message=f"l={config.l}")


def check_rate_windows(windows: List[RateWindow], horizon: float) -> CheckResult:
    """Fit windows inside (0, horizon] with valid options."""
    for w in windows:
        if not (0 < w.t_lo < w.t_hi <= horizon):
            return CheckResult(
                name="Rate windows", passed=False,
                message=f"window [{w.t_lo:g}, {w.t_hi:g}] is not inside (0, {horizon:g}]",
                fix_instruction="Choose 0 < t_lo < t_hi <= mesh.horizon.",
            )
        if w.beta < 0 or w.along not in ("all", "minima"):
            return CheckResult(
                name="Rate windows", passed=False,
                message=f"beta={w.beta:g}, along={w.along!r} is not supported",
                fix_instruction="Use beta >= 0 and along 'all' or 'minima'.",
            )
    return CheckResult(name="Rate windows", passed=True, message=f"{len(windows)} window(s)")


def check_output(out: Optional[Path]) -> CheckResult:
    """Output directory exists and is writable."""
    if out is None:
        return CheckResult(name="Output", passed=True, message="console only")
    parent = Path(out).expanduser().resolve().parent
    if not parent.is_dir():
        return CheckResult(
            name="Output", passed=False, message=f"directory {parent} does not exist",
            fix_instruction=f"Create it first:\n\n    mkdir -p {parent}",
        )
    if not os.access(parent, os.W_OK):
        return CheckResult(
            name="Output", passed=False, message=f"directory {parent} is not writable",
            fix_instruction="Pick another --out location.",
        )
    return CheckResult(name="Output", passed=True, message=str(out))


def check_log_level() -> CheckResult:
    """FRACWAVE_LOG names a known level."""
    load_dotenv()
    raw = os.getenv(LOG_ENV_VAR)
    if raw is None or isinstance(logging.getLevelName(raw.strip().upper()), int):
        return CheckResult(name="Logging", passed=True, message=raw or "warning")
    return CheckResult(
        name="Logging", passed=False, message=f"{LOG_ENV_VAR}={raw!r} is not a log level",
        fix_instruction=f"Set {LOG_ENV_VAR} to debug, info, warning or error.",
    )


def case_checks(config: CaseConfig, out: Optional[Path] = None) -> List[CheckResult]:
    p = config.problem
    return [
        check_problem(p.alpha, p.gamma, p.p, p.a, p.b),
        check_mesh(config),
        check_domain(config),
        check_test_exponent(config),
        check_rate_windows(config.rate_windows, config.mesh.horizon),
        check_output(out),
        check_log_level(),
    ]


def sweep_checks(config: SweepConfig, out: Optional[Path] = None) -> List[CheckResult]:
    results = []
    bad = [
        (a, g, p) for a in config.alphas for g in config.gammas for p in config.ps
        if not check_problem(a, g, p).passed
    ]
    if bad:
        a, g, p = bad[0]
        results.append(CheckResult(
            name="Grid", passed=False,
            message=f"{len(bad)} cell(s) invalid, first: alpha={a:g} gamma={g:g} p={p:g}",
            fix_instruction="Keep alphas in (1, 2], gammas > 0 and ps > 1.",
        ))
    else:
        cells = len(config.alphas) * len(config.gammas) * len(config.ps) * len(config.scales)
        results.append(CheckResult(name="Grid", passed=True, message=f"{cells} cell(s)"))
    if config.alphas and config.gammas and config.ps and config.scales:
        try:
            template = config.case_for(config.alphas[0], config.gammas[0], config.ps[0], config.scales[0])
        except FracwaveError as e:
            results.append(CheckResult(
                name="Template", passed=False, message=str(e),
                fix_instruction="Fix the 'template' section of the sweep config.",
            ))
        else:
            results.extend([check_mesh(template), check_domain(template)])
    results.extend([check_output(out), check_log_level()])
    return results


def run_preflight(results: List[CheckResult], console: Optional[Console] = None) -> bool:
    """Display check results.

    Returns True if all checks pass, False otherwise.
    """
    if console is None:
        console = Console()

    if all(r.passed for r in results):
        return True

    table = Table(title="Setup Checklist", show_lines=True, title_style="bold")
    table.add_column("Check", style="bold", width=16)
    table.add_column("Status", width=6)
    table.add_column("Details")

    for r in results:
        status = "[green]OK[/green]" if r.passed else "[red]FAIL[/red]"
        detail = r.message
        if not r.passed and r.fix_instruction:
            detail += f"\n\n[yellow]How to fix:[/yellow]\n{r.fix_instruction}"
        table.add_row(r.name, status, detail)

    console.print(Panel(table, border_style="red", title="[red]Invalid Configuration[/red]"))
    console.print(
        "\n[yellow]Fix the issues above and try again.[/yellow]\n"
        "[dim]Tip: --skip-checks runs without these checks.[/dim]\n"
    )
    return False
