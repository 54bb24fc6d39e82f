"""
Command-line entry point

    python -m src.cli scenario base
    python -m src.cli sweep --param cost_referral --values 0.25,0.3
    python -m src.cli validate --skip-abm

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence
(reported but not fatal with --lenient), 4 acceptance failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from src.abm.compare import compare_abm_ode
from src.cli.config_loader import ScenarioConfig, load_config
from src.cli.runner import run_scenario, schedule_frame, sweep, sweep2d
from src.cli.scenarios import get_scenario, list_scenarios, scenario_names
from src.cli.validate import validate
from src.integrate.rk4 import integrate, profit
from src.model.types import ControlSchedule
from src.optimize.nlp import nlp_solve
from src.optimize.strategy import classify
from src.optimize.switch_times import optimize_switch_times
from src.pmp.lemmas import LemmaTolerances, verify_lemmas
from src.pmp.sweep import fbs_solve
from src.utils.config import Config
from src.utils.exceptions import AcceptanceFailure, ConfigError, IncentiveError, SolverError
from src.utils.io import read_csv, write_csv
from src.utils.logging_setup import setup_logging

logger = logging.getLogger(__name__)


def _banner(title: str):
    print("=" * 60)
    print(title)
    print("=" * 60)


def _floats(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got '{text}'") from exc


def _ints(text: str) -> List[int]:
    try:
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated integers, got '{text}'") from exc


def _config(args: argparse.Namespace, name: Optional[str] = None) -> ScenarioConfig:
    """Scenario from --config, a scenario name or the base scenario, with flag overrides"""
    if args.config:
        config = load_config(Path(args.config))
    else:
        config = get_scenario(name or "base")
    solver = getattr(args, "solver", None)
    return config.with_solver(
        seed=args.seed,
        dt=args.dt,
        control_dt=args.control_dt,
        nlp_starts=args.starts,
        switch_starts=args.starts,
        solver=solver,
    )


def _out_dir(args: argparse.Namespace, default: str) -> Path:
    return Path(args.out) if args.out else Config.OUTPUT_DIR / default


def _schedule(args: argparse.Namespace, config: ScenarioConfig) -> ControlSchedule:
    """Schedule from --schedule CSV (t, u_k, v_k columns) or constant --u/--v"""
    s = config.solver
    n_classes = len(config.network.degrees)
    if args.schedule:
        path = Path(args.schedule)
        if not path.is_file():
            raise ConfigError(f"schedule file not found: {path}")
        frame = read_csv(path)
        try:
            u = np.column_stack([frame[f"u_{k + 1}"].to_numpy() for k in range(n_classes)])
            v = np.column_stack([frame[f"v_{k + 1}"].to_numpy() for k in range(n_classes)])
        except KeyError as exc:
            raise ConfigError(f"{path} lacks column {exc} for {n_classes} class(es)") from exc
        sched = ControlSchedule(s.control_dt, u, v)
    else:
        sched = ControlSchedule.constant(n_classes, config.model.horizon, s.control_dt, args.u, args.v)
    sched.check_horizon(config.model.horizon)
    return sched


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _config(args)
    x0, net, params = config.build()
    sched = _schedule(args, config)
    traj = integrate(x0, sched, net, params, config.solver.dt)
    value = profit(traj, net)
    out = _out_dir(args, "simulate")
    traj.write_csv(out / "trajectory.csv", {"scenario": config.name, "profit": f"{value:.12g}"})

    _banner(f"Simulation: {config.name}")
    print(f"Profit: {value:.12g}")
    print(f"Customers at T: {traj.aggregate(net)[-1, 1]:.6f}")
    print(f"Output: {out / 'trajectory.csv'}")
    return 0


def cmd_pmp(args: argparse.Namespace) -> int:
    config = _config(args)
    x0, net, params = config.build()
    s = config.solver
    fbs = fbs_solve(x0, net, params, dt=s.dt, control_dt=s.control_dt)
    lemmas = verify_lemmas(fbs.trajectory, fbs.costates, params, LemmaTolerances(h_constancy=args.h_tol))
    label = classify(fbs.schedule, s.control_dt)

    out = _out_dir(args, "pmp")
    header = {"scenario": config.name, "solver": "fbs", "status": fbs.status}
    fbs.trajectory.write_csv(out / "trajectory.csv", header)
    fbs.costates.write_csv(out / "costate.csv", header)
    write_csv(schedule_frame(fbs.schedule), out / "schedule.csv",
              dict(header, profit=f"{fbs.profit:.12g}", label=label))
    write_csv(lemmas.to_frame(), out / "lemmas.csv", header)

    _banner(f"Forward-backward sweep: {config.name}")
    print(f"Profit: {fbs.profit:.12g}  label: {label}  status: {fbs.status} ({fbs.iterations} iterations)")
    for check in lemmas.checks:
        print(f"  {'PASS' if check.passed else 'FAIL'}  {check.name:<22} worst={check.worst:.3g}")
    if not fbs.converged and not args.lenient:
        raise SolverError(f"forward-backward sweep did not converge in {fbs.iterations} iterations")
    return 0


def _optimizer(args: argparse.Namespace, which: str) -> int:
    config = _config(args)
    x0, net, params = config.build()
    s = config.solver
    if which == "switch-opt":
        result = optimize_switch_times(x0, net, params, starts=s.switch_starts, seed=s.seed,
                                       dt=s.dt, control_dt=s.control_dt)
    else:
        result = nlp_solve(x0, net, params, starts=s.nlp_starts, seed=s.seed, dt=s.dt,
                           control_dt=s.control_dt, verify_gradient=args.check_gradient)

    out = _out_dir(args, which)
    result.write_csv(out / "schedule.csv")
    traj = integrate(x0, result.schedule, net, params, s.dt)
    traj.write_csv(out / "trajectory.csv", {"scenario": config.name, "solver": result.solver, "seed": s.seed})

    _banner(f"{which}: {config.name}")
    print(result.summary_line())
    if not args.lenient and result.status not in ("converged", "baseline"):
        raise SolverError(f"{which} ended with status {result.status}")
    if not args.lenient and result.diagnostics.get("gradient_ok") is False:
        raise SolverError("adjoint gradient disagrees with finite differences")
    return 0


def cmd_abm(args: argparse.Namespace) -> int:
    config = _config(args)
    x0, net, params = config.build()
    sched = _schedule(args, config)
    report = compare_abm_ode(net, params, sched, populations=_ints(args.populations),
                             replicas=args.replicas, seed=config.solver.seed, x0=x0, workers=args.workers)
    out = _out_dir(args, "abm")
    report.write_csv(out / "convergence.csv")

    _banner(f"Agent-based check: {config.name}")
    print(report.table.to_string(index=False))
    print(f"Monotone convergence: {report.monotone}")
    for flag in report.flags:
        print(f"  flagged: {flag}")
    return 0


def cmd_scenario(args: argparse.Namespace) -> int:
    if args.name == "list":
        _banner("Named scenarios")
        print(list_scenarios().to_string(index=False))
        return 0
    config = _config(args, args.name)
    output = run_scenario(config, _out_dir(args, config.name), strict=not args.lenient)

    _banner(f"Scenario: {config.name}")
    print(output.summary_line())
    for kind, path in output.files.items():
        print(f"  {kind:<11} {path}")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _config(args)
    table = sweep(config, args.param, _floats(args.values), workers=args.workers)
    path = write_csv(table, _out_dir(args, "sweep") / f"sweep_{args.param.replace('.', '_')}.csv",
                     {"scenario": config.name, "seed": config.solver.seed})
    _banner(f"Sweep of {args.param}: {config.name}")
    print(table.to_string(index=False) if len(table) else "(no values)")
    print(f"Output: {path}")
    return 0


def cmd_sweep2d(args: argparse.Namespace) -> int:
    config = _config(args)
    table = sweep2d(config, _floats(args.c_values), _floats(args.c2_values), workers=args.workers)
    path = write_csv(table, _out_dir(args, "sweep") / "sweep2d_payouts.csv",
                     {"scenario": config.name, "seed": config.solver.seed})
    _banner(f"Pay-out grid: {config.name}")
    print(table.to_string(index=False) if len(table) else "(no values)")
    print(f"Output: {path}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else Config.SEED
    starts = args.starts
    report = validate(
        skip_abm=args.skip_abm,
        h_tol=args.h_tol,
        seed=seed,
        nlp_starts=starts or Config.NLP_STARTS,
        switch_starts=starts or Config.SWITCH_STARTS,
        skip_figures=args.skip_figures,
        workers=args.workers,
    )
    path = report.write_csv(_out_dir(args, "validate") / "validation.csv", seed)

    _banner("Acceptance suite")
    for check in report.checks:
        print(f"  {'PASS' if check.passed else 'FAIL'}  [{check.category}] {check.name}  {check.detail}")
    if report.skipped:
        print(f"Skipped: {', '.join(report.skipped)}")
    print(f"Output: {path}")
    if not report.passed:
        raise AcceptanceFailure(
            f"{len(report.failures)} check(s) failed in: {', '.join(report.failed_categories())}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Scenario INI file")
    common.add_argument("--seed", type=int, help="Base seed")
    common.add_argument("--out", help=f"Output directory (default {Config.OUTPUT_DIR}/<command>)")
    common.add_argument("--dt", type=float, help="Internal integration step")
    common.add_argument("--control-dt", type=float, help="Control grid step")
    common.add_argument("--starts", type=int, help="Multi-start count")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING, ...")
    common.add_argument("--lenient", action="store_true",
                        help="Report solver non-convergence without exiting 3")
    common.add_argument("--workers", type=int, default=Config.WORKERS, help="Worker processes")

    schedule = argparse.ArgumentParser(add_help=False)
    schedule.add_argument("--u", type=float, default=0.0, help="Constant referral control")
    schedule.add_argument("--v", type=float, default=0.0, help="Constant direct-incentive control")
    schedule.add_argument("--schedule", help="Schedule CSV with t, u_k, v_k columns")

    parser = argparse.ArgumentParser(
        prog="python -m src.cli",
        description="Timing of referral rewards and direct incentives on social networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common, schedule], help="Integrate under a schedule")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("pmp", parents=[common], help="Forward-backward sweep and maximum-principle checks")
    p.add_argument("--h-tol", type=float, default=LemmaTolerances().h_constancy,
                   help="Relative tolerance of the Hamiltonian constancy check")
    p.set_defaults(handler=cmd_pmp)

    p = sub.add_parser("switch-opt", parents=[common], help="Switching-time search")
    p.set_defaults(handler=lambda a: _optimizer(a, "switch-opt"))

    p = sub.add_parser("nlp", parents=[common], help="Direct transcription with projected gradient")
    p.add_argument("--check-gradient", action="store_true", help="Verify the adjoint gradient first")
    p.set_defaults(handler=lambda a: _optimizer(a, "nlp"))

    p = sub.add_parser("abm", parents=[common, schedule], help="Agent-based runs against the ODE")
    p.add_argument("--populations", default=",".join(str(n) for n in Config.ABM_POPULATIONS))
    p.add_argument("--replicas", type=int, default=Config.ABM_REPLICAS)
    p.set_defaults(handler=cmd_abm)

    p = sub.add_parser("scenario", parents=[common], help="Run a named scenario ('list' to show them)")
    p.add_argument("name", choices=scenario_names() + ["list"])
    p.add_argument("--solver", choices=["auto", "fbs", "switch", "nlp", "crosscheck"])
    p.set_defaults(handler=cmd_scenario)

    p = sub.add_parser("sweep", parents=[common], help="Optimize over values of one parameter")
    p.add_argument("--param", required=True, help="Field name, e.g. cost_referral or model.beta")
    p.add_argument("--values", default="", help="Comma-separated values")
    p.add_argument("--solver", choices=["auto", "fbs", "switch", "nlp"])
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("sweep2d", parents=[common], help="Optimize over the (c, c') pay-out grid")
    p.add_argument("--c-values", default="0.2,0.25,0.3", help="Referral pay-outs")
    p.add_argument("--c2-values", default="0.25,0.3,0.35", help="Direct-incentive pay-outs")
    p.add_argument("--solver", choices=["auto", "fbs", "switch", "nlp"])
    p.set_defaults(handler=cmd_sweep2d)

    p = sub.add_parser("validate", parents=[common], help="Run the acceptance suite")
    p.add_argument("--skip-abm", action="store_true", help="Skip graph sampling and agent-based runs")
    p.add_argument("--skip-figures", action="store_true", help="Skip solver agreement and figure patterns")
    p.add_argument("--h-tol", type=float, default=LemmaTolerances().h_constancy)
    p.set_defaults(handler=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        setup_logging(args.log_level)
    except ValueError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return ConfigError.exit_code

    try:
        Config.validate()
        return args.handler(args)
    except IncentiveError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"Error: {exc}", file=sys.stderr)
        return exc.exit_code
