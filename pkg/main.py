"""isork command line: run, convergence, compare, dump-config.

Exit codes: 0 success, 2 configuration error, 3 stage solver
non-convergence, 4 I/O error.
"""
import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from config import RunConfig, dump_config, load_config
from diagnostics import Recorder, RunSummary, TrajectoryRecord, convergence_study, summarize, write_csv
from errors import ConfigError, IsorkError, NonConvergence
from integrator import StageState, iterate_classical_rk4, iterate_gawlik, iterate_trajectory
from quadlie import AlgebraElement
from systems import IsospectralSystem, build_system
from tableau import BUILTINS, make_schedule

logger = logging.getLogger("isork")

BASELINES = ("isospectral-midpoint", "gawlik", "classical-rk4")
EXIT_IO = 4

# flag dest -> RunConfig field
CONFIG_FLAGS = ("system", "method", "custom_b", "h", "steps", "seed", "variant", "update_form", "solver_tol",
                "solver_max_iters", "root_fallback", "n", "N", "inertia", "init_scale", "rigid_init", "toda_init",
                "laplacian_mode", "out", "workers", "store")


def _comma_list(text: str) -> List[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--system", choices=["rigidbody", "toda", "zeitlin"])
    common.add_argument("--method")
    common.add_argument("--custom-b", dest="custom_b", type=_comma_list, help="comma list of SDIRK weights")
    common.add_argument("--h", type=float)
    common.add_argument("--steps", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--variant", choices=["left", "right"])
    common.add_argument("--update-form", dest="update_form", choices=["conjugation", "dcay"])
    common.add_argument("--solver-tol", dest="solver_tol", type=float)
    common.add_argument("--solver-max-iters", dest="solver_max_iters", type=int)
    common.add_argument("--no-root-fallback", dest="root_fallback", action="store_false", default=None,
                        help="fail a stage as soon as the fixed-point iteration does")
    common.add_argument("--n", type=int, help="Toda lattice size")
    common.add_argument("--N", dest="N", type=int, help="Zeitlin truncation")
    common.add_argument("--inertia", type=_comma_list)
    common.add_argument("--init-scale", dest="init_scale", type=float)
    common.add_argument("--rigid-init", dest="rigid_init", choices=["random", "tumbling"])
    common.add_argument("--toda-init", dest="toda_init", choices=["alternating", "random"])
    common.add_argument("--laplacian-mode", dest="laplacian_mode", choices=["inverse", "forward"])
    common.add_argument("--out")
    common.add_argument("--workers", type=int)
    common.add_argument("--store", action="store_true", default=None, help="record the run in the SQL ledger")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(prog="isork", description="Isospectral SDIRK experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate one trajectory and write a CSV")
    conv = sub.add_parser("convergence", parents=[common], help="self-convergence study")
    conv.add_argument("--h-list", dest="h_list", type=_comma_list, required=True)
    conv.add_argument("--t-final", dest="t_final", type=float, default=1.0)
    conv.add_argument("--reference-h", dest="reference_h", type=float)
    comp = sub.add_parser("compare", parents=[common], help="run several methods from the same initial data")
    comp.add_argument("--methods", type=_comma_list, required=True,
                      help=f"comma list from {', '.join(BASELINES)} or a tableau name")
    sub.add_parser("dump-config", parents=[common], help="print the effective configuration")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {k: getattr(args, k) for k in CONFIG_FLAGS if getattr(args, k, None) is not None}
    return load_config(args.config, overrides=overrides)


def system_for(cfg: RunConfig) -> IsospectralSystem:
    try:
        return build_system(cfg.system, n=cfg.n, N=cfg.N, inertia=cfg.inertia, rigid_init=cfg.rigid_init,
                            toda_init=cfg.toda_init, laplacian_mode=cfg.laplacian_mode)
    except ValueError as e:
        raise ConfigError(str(e), field="system") from None


def trajectory_for(method: str, cfg: RunConfig, system: IsospectralSystem, mu0: AlgebraElement
                   ) -> Iterator[Tuple[int, AlgebraElement, List[StageState]]]:
    if method == "gawlik":
        return iterate_gawlik(mu0, system, cfg.h, cfg.steps, cfg.stepper())
    if method == "classical-rk4":
        return iterate_classical_rk4(mu0, system, cfg.h, cfg.steps)
    if method == "isospectral-midpoint":
        method = "midpoint"
    if method != cfg.method:
        if method not in BUILTINS and method != "custom":
            raise ConfigError(f"unknown method '{method}'", field="methods")
        cfg = cfg.copy(update={"method": method})
    stepper = cfg.stepper()
    return iterate_trajectory(mu0, system, stepper, make_schedule(stepper.tableau, cfg.h), cfg.steps)


class RunOutcome:
    def __init__(self, method: str, records: List[TrajectoryRecord], stage_iters: List[int],
                 failure: Optional[NonConvergence] = None):
        self.method = method
        self.records = records
        self.stage_iters = stage_iters
        self.failure = failure

    @property
    def summary(self) -> Optional[RunSummary]:
        return summarize(self.records, self.stage_iters) if self.records else None


def execute(method: str, cfg: RunConfig, system: IsospectralSystem, mu0) -> RunOutcome:
    """Integrate and record; a stage solve failure ends the run with the records so far."""
    recorder = Recorder(mu0, system, cfg.h)
    records: List[TrajectoryRecord] = []
    stage_iters: List[int] = []
    try:
        for step, mu, stages in trajectory_for(method, cfg, system, mu0):
            records.append(recorder(step, mu, stages))
            stage_iters.extend(s.iters for s in stages)
    except NonConvergence as e:
        logger.error("%s: %s", method, e.detail)
        return RunOutcome(method, records, stage_iters, failure=e)
    return RunOutcome(method, records, stage_iters)


def _store(cfg: RunConfig, outcome: RunOutcome, csv_path: Path) -> None:
    from database import make_session
    from ledger import save_run

    session = make_session()
    try:
        run = save_run(session, cfg, outcome.summary, outcome.records, csv_path,
                       status="ok" if outcome.failure is None else "nonconvergence", method=outcome.method)
        print(f"Stored as run {run.id}")
    finally:
        session.close()


def _print_summary(method: str, outcome: RunOutcome, csv_path: Path) -> None:
    s = outcome.summary
    print(f"[{method}] wrote {len(outcome.records)} records to {csv_path}")
    if s is None:
        return
    print(f"  max spectral drift   {s.max_spectral_drift:.3e}")
    print(f"  max |energy drift|   {s.max_abs_energy_drift:.3e}  (final {s.final_energy_drift:.3e})")
    print(f"  max casimir drift    {s.max_casimir_drift:.3e}")
    if s.total_solver_iters:
        print(f"  solver iterations    {s.total_solver_iters} total, "
              f"{s.mean_iters_per_stage:.2f} mean / {s.max_iters_per_stage} max per stage")
    if outcome.failure is not None:
        print(f"  ABORTED: {outcome.failure.detail}")


def _finish(cfg: RunConfig, outcome: RunOutcome, csv_path: Path, n_casimirs: int) -> None:
    write_csv(outcome.records, csv_path, n_casimirs=n_casimirs)
    _print_summary(outcome.method, outcome, csv_path)
    if cfg.store:
        _store(cfg, outcome, csv_path)


def cmd_run(cfg: RunConfig) -> int:
    system = system_for(cfg)
    mu0 = system.initial_condition(cfg.seed, cfg.init_scale)
    outcome = execute(cfg.method, cfg, system, mu0)
    _finish(cfg, outcome, Path(cfg.out), len(system.casimir_orders))
    return 0 if outcome.failure is None else outcome.failure.exit_code


def cmd_convergence(cfg: RunConfig, h_list: Sequence[float], t_final: float,
                    reference_h: Optional[float] = None) -> int:
    if len(h_list) < 3:
        raise ConfigError("a convergence study needs at least 3 step sizes", field="h_list")
    h_list = sorted((float(h) for h in h_list), reverse=True)
    reference_h = reference_h or min(h_list) / 8
    system = system_for(cfg)
    mu0 = system.initial_condition(cfg.seed, cfg.init_scale)
    tableau = cfg.tableau()
    try:
        report = convergence_study(system, tableau, h_list, t_final, reference_h, mu0,
                                   cfg=cfg.stepper(), workers=cfg.workers)
    except ValueError as e:
        raise ConfigError(str(e), field="h_list") from None
    with open(cfg.out, "w") as f:
        f.write("h,error\n")
        for h, err in zip(report.h_values, report.errors):
            f.write(f"{h!r},{err!r}\n")
    for h, err in zip(report.h_values, report.errors):
        print(f"  h={h:<10g} error={err:.6e}")
    print(f"[{tableau.name}] fitted slope: {report.fitted_slope}")
    if not report.complete:
        print(f"  INCOMPLETE: {report.failure}")
        return NonConvergence.exit_code
    return 0


def cmd_compare(cfg: RunConfig, methods: Sequence[str]) -> int:
    if not methods:
        raise ConfigError("empty method list", field="methods")
    for m in methods:
        if m not in BASELINES and m not in BUILTINS and not (m == "custom" and cfg.custom_b):
            raise ConfigError(f"unknown method '{m}'", field="methods")
    duplicates = sorted({m for m in methods if methods.count(m) > 1})
    if duplicates:
        raise ConfigError(f"duplicate methods: {', '.join(duplicates)}", field="methods")
    system = system_for(cfg)
    mu0 = system.initial_condition(cfg.seed, cfg.init_scale)
    out = Path(cfg.out)

    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        outcomes: Dict[str, RunOutcome] = dict(zip(methods, pool.map(
            lambda m: execute(m, cfg, system, mu0), methods)))

    for m, outcome in outcomes.items():
        _finish(cfg, outcome, out.with_name(f"{out.stem}_{m}{out.suffix or '.csv'}"), len(system.casimir_orders))

    base = methods[0]
    base_drift = outcomes[base].summary.max_spectral_drift if outcomes[base].summary else float("nan")
    print(f"\n{'method':22s} {'max spectral drift':>20s} {'ratio to ' + base:>28s}")
    for m, outcome in outcomes.items():
        drift = outcome.summary.max_spectral_drift if outcome.summary else float("nan")
        ratio = drift / base_drift if base_drift > 0 else float("inf") if drift > 0 else 1.0
        print(f"{m:22s} {drift:20.3e} {ratio:28.3e}")
    failures = [o.failure for o in outcomes.values() if o.failure is not None]
    return failures[0].exit_code if failures else 0


def _configure_logging(verbose: bool) -> None:
    level = "INFO" if verbose else os.getenv("ISORK_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    _configure_logging(args.verbose)

    try:
        cfg = config_from_args(args)
        if args.command == "compare":
            return cmd_compare(cfg, args.methods)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "convergence":
            try:
                h_list = [float(h) for h in args.h_list]
            except ValueError:
                raise ConfigError(f"not a number list: {args.h_list}", field="h_list") from None
            return cmd_convergence(cfg, h_list, args.t_final, args.reference_h)
        print(dump_config(cfg), end="")
        return 0
    except IsorkError as e:
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
