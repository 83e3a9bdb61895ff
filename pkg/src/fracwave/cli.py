"""Command-line front end for the fractional diffusion-wave lab."""

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from fracwave import __version__
from fracwave.blowup_lab import LabRunner, MomentData, calibrate_constants, remark_criterion
from fracwave.config import (
    CaseConfig,
    DomainConfig,
    InitialData,
    MeshConfig,
    ProblemConfig,
    RateWindow,
    default_threads,
    load_case,
    load_sweep,
)
from fracwave.errors import ConfigurationError, error_document, exit_code
from fracwave.export import manifest, write_json, write_phase_table, write_snapshots, write_trajectory
from fracwave.fode import ScalarIVP, detect_blowup, estimate_rate, integrated_memory
from fracwave.log import configure_logging, get_logger
from fracwave.mlf import MLParams, ml_asymptotic_tail, ml_eval
from fracwave.preflight import CheckResult, case_checks, check_log_level, check_output, run_preflight, sweep_checks
from fracwave.spectral_pde import (
    DEFAULT_GRID_FACTOR,
    SpectralDomain,
    SpectralField,
    detect_blowup_mild,
    eigenfunctional,
    operator_decay_probe,
)

console = Console()
logger = get_logger(__name__)


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=str, default=None, help="Output file (CSV or JSON depending on command)")
    common.add_argument("--threads", type=int, default=None, help="Advisory parallelism cap (default: FRACWAVE_THREADS or 1)")
    common.add_argument("--seed", type=int, default=None, help="Seed for random initial data (recorded in manifests)")
    common.add_argument("--skip-checks", action="store_true", default=False, help="Skip preflight configuration checks")
    return common


def _problem_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, required=True, help="Caputo order in (1, 2]")
    parser.add_argument("--gamma", type=float, required=True, help="Memory order (> 0)")
    parser.add_argument("--p", type=float, required=True, help="Power of the nonlinearity (> 1)")
    parser.add_argument("--a", type=float, default=1.0, help="Linear coefficient (default: 1)")
    parser.add_argument("--b", type=float, default=1.0, help="Nonlinear coefficient (default: 1)")


def build_parser() -> argparse.ArgumentParser:
    """Build the CLI argument parser."""
    parser = _Parser(
        prog="fracwave",
        description="Numerical lab for time-fractional diffusion-wave equations with nonlinear memory.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    common = _common()

    mlf = sub.add_parser("mlf", parents=[common], help="Evaluate the Mittag-Leffler function")
    mlf.add_argument("--alpha", type=float, required=True)
    mlf.add_argument("--beta", type=float, default=1.0)
    mlf.add_argument("--z", type=float, required=True, help="Real part of the argument")
    mlf.add_argument("--z-imag", type=float, default=0.0, help="Imaginary part of the argument")
    mlf.add_argument("--tol", type=float, default=1e-12)
    mlf.add_argument("--no-explicit", action="store_true", help="Disable closed forms")
    mlf.add_argument("--terms", type=int, default=None, help="Also report the N-term asymptotic tail")

    fode = sub.add_parser("fode", parents=[common], help="Blow-up study of the scalar problem")
    _problem_args(fode)
    fode.add_argument("--w0", type=float, required=True)
    fode.add_argument("--w1", type=float, default=0.0)
    fode.add_argument("--horizon", type=float, required=True)
    fode.add_argument("--n", type=int, default=256, help="Base mesh size (refined to 2N and 4N)")
    fode.add_argument("--threshold", type=float, default=None)
    fode.add_argument("--rate-window", type=float, nargs=2, metavar=("T_LO", "T_HI"), default=None)
    fode.add_argument("--rate-beta", type=float, default=0.0)

    pde = sub.add_parser("pde", parents=[common], help="Mild solution on (0, pi) or (0, pi)^2")
    pde.add_argument("--config", type=str, default=None, help="Case config JSON (solver 'pde')")
    pde.add_argument("--alpha", type=float, default=None)
    pde.add_argument("--gamma", type=float, default=None)
    pde.add_argument("--p", type=float, default=None)
    pde.add_argument("--horizon", type=float, default=1.0)
    pde.add_argument("--n", type=int, default=256)
    pde.add_argument("--modes", type=int, default=128)
    pde.add_argument("--dimension", type=int, default=1, choices=[1, 2])
    pde.add_argument("--amplitude", type=float, default=1.0, help="u0 = amplitude * sin(x)")
    pde.add_argument("--random-modes", type=int, default=0)
    pde.add_argument("--snapshot-times", type=float, nargs="*", default=None)

    probe = sub.add_parser("probe", parents=[common], help="Decay exponents of the solution operators")
    probe.add_argument("--alpha", type=float, required=True)
    probe.add_argument("--gamma", type=float, required=True)
    probe.add_argument("--modes", type=int, default=16)
    probe.add_argument("--t-min", type=float, default=10.0)
    probe.add_argument("--t-max", type=float, default=1000.0)
    probe.add_argument("--points", type=int, default=25)
    probe.add_argument("--random-modes", type=int, default=0)

    sweep = sub.add_parser("sweep", parents=[common], help="Phase table over a parameter grid")
    sweep.add_argument("--config", type=str, required=True)

    case = sub.add_parser("case", parents=[common], help="Classify and simulate one configured case")
    case.add_argument("--config", type=str, required=True)

    calibrate = sub.add_parser("calibrate", parents=[common], help="Explicit constants of the a-priori inequality")
    _problem_args(calibrate)
    calibrate.add_argument("--l", type=int, default=None)
    calibrate.add_argument("--horizon", type=float, default=None, help="Evaluate the blow-up criterion at T")
    calibrate.add_argument("--m0", type=float, default=0.0)
    calibrate.add_argument("--m1", type=float, default=0.0)
    return parser


# -- helpers -----------------------------------------------------------------

def _out(args: argparse.Namespace) -> Optional[Path]:
    return Path(args.out).expanduser() if args.out else None


def _threads(args: argparse.Namespace) -> int:
    return max(1, args.threads) if args.threads else default_threads()


def _preflight(args: argparse.Namespace, results: List[CheckResult]) -> bool:
    if args.skip_checks:
        return True
    return run_preflight(results, console=console)


def _fmt(value: Any) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _kv_table(title: str, rows: Dict[str, Any]) -> Table:
    table = Table(title=title, show_header=False, title_style="bold")
    table.add_column("Field", style="bold")
    table.add_column("Value")
    for key, value in rows.items():
        table.add_row(key, _fmt(value))
    return table


def _problem_config(args: argparse.Namespace) -> ProblemConfig:
    return ProblemConfig(alpha=args.alpha, gamma=args.gamma, p=args.p, a=args.a, b=args.b)


# -- subcommands -------------------------------------------------------------

def cmd_mlf(args: argparse.Namespace) -> int:
    out = _out(args)
    if not _preflight(args, [check_output(out), check_log_level()]):
        return 1
    z = complex(args.z, args.z_imag) if args.z_imag else args.z
    params = MLParams(alpha=args.alpha, beta=args.beta, z=z)
    value = ml_eval(params, tol=args.tol, use_explicit=not args.no_explicit)
    result: Dict[str, Any] = {
        "value": value.value,
        "branch": value.branch,
        "est_error": value.est_error,
    }
    if args.terms is not None:
        tail = ml_asymptotic_tail(params, args.terms)
        result.update(tail_value=tail.value, tail_est_error=tail.est_error)
    shown = {k: (str(v) if isinstance(v, complex) else v) for k, v in result.items()}
    console.print(_kv_table(f"E_{{{args.alpha:g},{args.beta:g}}}({z})", shown))
    if out:
        write_json(out, manifest("mlf", {"alpha": args.alpha, "beta": args.beta, "z": str(z), "tol": args.tol}, shown))
    return 0


def cmd_fode(args: argparse.Namespace) -> int:
    out = _out(args)
    config = CaseConfig(
        problem=_problem_config(args),
        mesh=MeshConfig(horizon=args.horizon, base_n=args.n, threshold=args.threshold),
        rate_windows=[RateWindow(t_lo=args.rate_window[0], t_hi=args.rate_window[1], beta=args.rate_beta)]
        if args.rate_window else [],
    )
    if not _preflight(args, case_checks(config, out)):
        return 1
    ivp = ScalarIVP(params=config.problem.to_params(), w0=args.w0, w1=args.w1)
    with console.status("Refining threshold crossings..."):
        outcome = detect_blowup(ivp, args.horizon, args.n, args.threshold, max_workers=min(3, _threads(args)))
    result: Dict[str, Any] = {
        "status": outcome.status,
        "t_star": outcome.t_star_estimate,
        "refinement": [{"N": n, "crossing": c} for n, c in outcome.refinement_history],
    }
    rows = {"status": outcome.status, "T*": outcome.t_star_estimate}
    for n, c in outcome.refinement_history:
        rows[f"crossing (N={n})"] = c
    for window in config.rate_windows if not outcome.blew_up else []:
        fit = estimate_rate(outcome, window.beta, (window.t_lo, window.t_hi))
        result["rate"] = {"exponent": fit.exponent, "width": fit.width, "points": fit.points}
        rows["rate exponent"] = fit.exponent
    border = "red" if outcome.blew_up else "green"
    console.print(Panel(_kv_table("Scalar problem", rows), border_style=border))
    if out:
        write_trajectory(out, outcome, integrated_memory(outcome).values)
        write_json(out.with_suffix(".json"), manifest("fode", {**config.to_dict(), "w0": args.w0, "w1": args.w1}, result))
    return 0


def _pde_config(args: argparse.Namespace) -> CaseConfig:
    if args.config:
        config = load_case(Path(args.config))
        config.solver = "pde"
        if args.seed is not None:
            config.seed = args.seed
        return config
    if args.alpha is None or args.gamma is None or args.p is None:
        raise ConfigurationError("pde needs --config or all of --alpha, --gamma, --p")
    first = [1] * args.dimension
    return CaseConfig(
        problem=ProblemConfig(alpha=args.alpha, gamma=args.gamma, p=args.p),
        solver="pde",
        mesh=MeshConfig(horizon=args.horizon, base_n=args.n),
        domain=DomainConfig(dimension=args.dimension, modes=args.modes, grid_factor=DEFAULT_GRID_FACTOR),
        initial=InitialData(u0=[first + [args.amplitude]], random_modes=args.random_modes),
        seed=args.seed,
    )


def cmd_pde(args: argparse.Namespace) -> int:
    out = _out(args)
    config = _pde_config(args)
    if not _preflight(args, case_checks(config, out)):
        return 1
    params = config.problem.to_params()
    domain = config.domain.to_domain()
    u0, u1 = config.initial.fields(domain, seed=config.seed)
    with console.status("Solving mild problem on 3 meshes..."):
        outcome = detect_blowup_mild(
            u0, u1, params, config.mesh.horizon, config.mesh.base_n, config.mesh.threshold,
            max_workers=min(3, _threads(args)),
        )
    report = eigenfunctional(outcome)
    result = {
        "status": outcome.status,
        "t_star": outcome.t_star_estimate,
        "refinement": [{"N": n, "crossing": c} for n, c in outcome.refinement_history],
        "final_sup_norm": float(outcome.sup_norm.values[-1]),
        "jensen_holds": report.jensen_holds,
    }
    rows = {
        "status": outcome.status,
        "T*": outcome.t_star_estimate,
        "final sup-norm": result["final_sup_norm"],
        "Jensen inequality": "holds" if report.jensen_holds else "violated",
    }
    console.print(Panel(_kv_table("Mild solution", rows), border_style="red" if outcome.blew_up else "green"))
    if out:
        end = float(outcome.mesh.nodes[-1])
        times = args.snapshot_times if args.snapshot_times else [0.0, 0.5 * end, end]
        write_snapshots(out, outcome, times)
        write_json(out.with_suffix(".json"), manifest("pde", config.to_dict(), result, seed=config.seed))
    return 0


def cmd_probe(args: argparse.Namespace) -> int:
    out = _out(args)
    if not _preflight(args, [check_output(out), check_log_level()]):
        return 1
    domain = SpectralDomain(dimension=1, modes=args.modes)
    if args.random_modes:
        u0, _ = InitialData(u0=[], random_modes=args.random_modes).fields(domain, seed=args.seed)
    else:
        u0 = SpectralField.single_mode(domain, [1], amplitude=0.5)
    times = np.logspace(math.log10(args.t_min), math.log10(args.t_max), args.points)
    probe = operator_decay_probe(u0, args.alpha, args.gamma, times)
    table = Table(title="Operator decay", title_style="bold")
    table.add_column("Operator", style="bold")
    table.add_column("Fitted")
    table.add_column("Expected")
    table.add_row("P(t)", _fmt(probe.p_exponent), _fmt(-args.alpha))
    table.add_row("I^1 P(t)", _fmt(probe.ip_exponent), _fmt(-(args.alpha - 1.0)))
    table.add_row("memory", _fmt(probe.memory_exponent), _fmt(-(1.0 - args.gamma)))
    console.print(table)
    if out:
        write_json(out, manifest(
            "probe",
            {"alpha": args.alpha, "gamma": args.gamma, "modes": args.modes, "times": times},
            {"p": probe.p_exponent, "ip": probe.ip_exponent, "memory": probe.memory_exponent},
            seed=args.seed,
        ))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    out = _out(args)
    config = load_sweep(Path(args.config))
    if not _preflight(args, sweep_checks(config, out)):
        return 1
    with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console) as progress:
        task = progress.add_task("Sweeping...", total=None)

        def on_progress(current: int, total: int, text: str):
            progress.update(task, description=f"[{current}/{total}] {text}")

        rows = LabRunner(max_workers=_threads(args), on_progress=on_progress).sweep(config)
        progress.update(task, description="[green]Done![/green]")

    table = Table(title="Phase table", title_style="bold")
    for column in ("alpha", "gamma", "p", "scale", "prediction", "observed", "t_star", "agreement"):
        table.add_column(column)
    for row in rows:
        table.add_row(*(_fmt(row[c]) for c in ("alpha", "gamma", "p", "scale", "prediction", "observed", "t_star", "agreement")))
    console.print(table)
    if out:
        write_phase_table(out, rows)
    return 0


def cmd_case(args: argparse.Namespace) -> int:
    out = _out(args)
    config = load_case(Path(args.config))
    if args.seed is not None:
        config.seed = args.seed
    if not _preflight(args, case_checks(config, out)):
        return 1
    report = LabRunner(max_workers=_threads(args)).run_case(config)
    rows = {
        "prediction": report.prediction.verdict,
        "case": report.prediction.theorem_case,
        "observed": report.observed,
        "T*": report.t_star,
        "agreement": report.agreement,
    }
    console.print(Panel(_kv_table("Regime case", rows), border_style="blue"))
    if out:
        write_json(out, manifest("case", config.to_dict(), report.to_dict(), seed=config.seed))
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    out = _out(args)
    config = CaseConfig(problem=_problem_config(args), l=args.l)
    if not _preflight(args, case_checks(config, out)):
        return 1
    params = config.problem.to_params()
    constants = calibrate_constants(params, args.l)
    rows: Dict[str, Any] = {"K1": constants.K1, "K2": constants.K2, "l": constants.l}
    rows.update(constants.derivation_trace)
    result: Dict[str, Any] = constants.to_dict()
    if args.horizon is not None:
        holds = remark_criterion(args.horizon, MomentData(m0=args.m0, m1=args.m1), constants, params)
        rows[f"blow-up before T={args.horizon:g}"] = holds
        result["criterion"] = {"T": args.horizon, "m0": args.m0, "m1": args.m1, "holds": holds}
    console.print(_kv_table("A-priori constants", rows))
    if out:
        write_json(out, manifest("calibrate", config.to_dict(), result))
    return 0


COMMANDS = {
    "mlf": cmd_mlf,
    "fode": cmd_fode,
    "pde": cmd_pde,
    "probe": cmd_probe,
    "sweep": cmd_sweep,
    "case": cmd_case,
    "calibrate": cmd_calibrate,
}


def _report_error(exc: BaseException) -> int:
    code = exit_code(exc)
    title = "Numerical failure" if code == 2 else "Invalid input"
    console.print(Panel(f"[bold red]{title}[/bold red]\n\n{exc}", title="[red]Error[/red]", border_style="red"))
    sys.stderr.write(json.dumps(error_document(exc), sort_keys=True) + "\n")
    return code


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """Run one subcommand and return its exit status (0 ok, 1 invalid input, 2 numerical failure)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    configure_logging()
    try:
        return COMMANDS[args.command](args)
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted. Exiting.[/yellow]")
        return 130
    except Exception as e:
        logger.debug("command %s failed", args.command, exc_info=True)
        return _report_error(e)


def main():
    """Main CLI entry point."""
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
