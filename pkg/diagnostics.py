"""Conservation diagnostics, convergence studies and CSV time series."""
import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from errors import EigensolverFailure, NonConvergence
from integrator import StageState, StepperConfig, iterate_trajectory
from quadlie import AlgebraElement, Spectrum, dcay_inv, membership_residuals, spectrum
from systems import IsospectralSystem
from tableau import SdirkTableau, make_schedule

logger = logging.getLogger(__name__)

FIXED_COLUMNS = ("step", "t", "energy", "energy_drift", "spectral_drift")
TAIL_COLUMNS = ("solver_iters", "membership_residual")


class TrajectoryRecord(BaseModel):
    step: int
    t: float
    energy: float
    energy_drift: float
    spectral_drift: float
    casimir_values: List[float] = []
    solver_iters_total: int = 0
    membership_residual: float = 0.0
    # eigensolver failed; spectral_drift is NaN
    flagged: bool = False

    class Config:
        orm_mode = True


def spectral_distance(a: Spectrum, b: Spectrum) -> float:
    """Max |a_k - b_k| over canonically ordered spectra."""
    return float(np.max(np.abs(a - b))) if a.size else 0.0


class Recorder:
    """Computes TrajectoryRecords against a fixed initial state."""

    def __init__(self, mu0: AlgebraElement, system: IsospectralSystem, h: float):
        self.system = system
        self.h = h
        self.energy0 = system.H(mu0)
        self.spectrum0 = spectrum(mu0)

    def __call__(self, step: int, mu_n: AlgebraElement, stages: Sequence[StageState] = ()) -> TrajectoryRecord:
        energy = self.system.H(mu_n)
        flagged = False
        try:
            drift = spectral_distance(spectrum(mu_n), self.spectrum0)
        except EigensolverFailure as e:
            logger.warning("step %d: %s", step, e.detail)
            drift, flagged = math.nan, True
        return TrajectoryRecord(
            step=step,
            t=step * self.h,
            energy=energy,
            energy_drift=energy - self.energy0,
            spectral_drift=drift,
            casimir_values=self.system.casimirs(mu_n),
            solver_iters_total=sum(s.iters for s in stages),
            membership_residual=membership_residuals(mu_n, self.system.context)[1],
            flagged=flagged,
        )


def record(mu_n: AlgebraElement, mu0: AlgebraElement, system: IsospectralSystem,
           stage_stats: Sequence[StageState] = (), step: int = 0, h: float = 0.0) -> TrajectoryRecord:
    return Recorder(mu0, system, h)(step, mu_n, stage_stats)


def euler_poincare_residual(stages: Sequence[StageState], variant: str = "left") -> float:
    """Largest mismatch between consecutive stages of the discrete Euler-Poincare equations,

        dcay_inv(h_{i+1} B_{i+1}, mu_{c,i+1}) = dcay_inv(-h_i B_i, mu_{c,i}),

    with h negated for the right variant. `stages` is the flattened stage
    sequence of a trajectory.
    """
    sign = 1.0 if variant == "left" else -1.0
    worst = 0.0
    for prev, nxt in zip(stages, stages[1:]):
        forward = dcay_inv((-sign * prev.h) * prev.generator, prev.mu_stage)
        backward = dcay_inv((sign * nxt.h) * nxt.generator, nxt.mu_stage)
        worst = max(worst, float(np.linalg.norm(backward - forward)))
    return worst


class RunSummary(BaseModel):
    steps: int
    max_spectral_drift: float
    max_abs_energy_drift: float
    final_energy_drift: float
    final_spectral_drift: float
    max_casimir_drift: float
    total_solver_iters: int
    mean_iters_per_stage: float
    max_iters_per_stage: int


def summarize(records: Sequence[TrajectoryRecord], stage_iters: Sequence[int] = ()) -> RunSummary:
    """`stage_iters` holds the per-stage iteration counts; empty for explicit baselines."""
    if not records:
        raise ValueError("no records to summarize")
    first, last = records[0], records[-1]
    casimir_drift = 0.0
    for r in records:
        for c, c0 in zip(r.casimir_values, first.casimir_values):
            casimir_drift = max(casimir_drift, abs(c - c0) / max(1.0, abs(c0)))
    return RunSummary(
        steps=last.step,
        max_spectral_drift=max(r.spectral_drift for r in records),
        max_abs_energy_drift=max(abs(r.energy_drift) for r in records),
        final_energy_drift=last.energy_drift,
        final_spectral_drift=last.spectral_drift,
        max_casimir_drift=casimir_drift,
        total_solver_iters=sum(stage_iters),
        mean_iters_per_stage=float(np.mean(stage_iters)) if len(stage_iters) else 0.0,
        max_iters_per_stage=max(stage_iters, default=0),
    )


class ConvergenceReport(BaseModel):
    h_values: List[float]
    errors: List[float]
    fitted_slope: Optional[float] = None
    complete: bool = True
    failure: Optional[str] = None


def _steps_for(t_final: float, h: float) -> int:
    n = int(round(t_final / h))
    if n < 1 or abs(n * h - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError(f"t_final={t_final} is not an integer multiple of h={h}")
    return n


def _final_state(mu0, system, cfg, tableau, h, t_final):
    schedule = make_schedule(tableau, h)
    mu = mu0
    for _, mu, _ in iterate_trajectory(mu0, system, cfg, schedule, _steps_for(t_final, h)):
        pass
    return mu


def convergence_study(system: IsospectralSystem, tableau: SdirkTableau, h_list: Sequence[float],
                      t_final: float, reference_h: float, mu0: AlgebraElement,
                      cfg: Optional[StepperConfig] = None, workers: int = 1) -> ConvergenceReport:
    """Self-convergence: final-state Frobenius errors against a fine reference run.

    The slope of log(error) against log(h) estimates the order. A run that
    fails to converge yields a partial report with `complete` False.
    """
    h_list = [float(h) for h in h_list]
    if len(h_list) < 2:
        raise ValueError("need at least two step sizes")
    if any(b > a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("step sizes must be non-increasing")
    if reference_h > min(h_list) / 8:
        raise ValueError(f"reference_h={reference_h} must be <= min(h)/8 = {min(h_list) / 8}")
    for h in h_list + [reference_h]:
        _steps_for(t_final, h)
    cfg = (cfg or StepperConfig()).copy(update={"tableau": tableau})

    try:
        reference = _final_state(mu0, system, cfg, tableau, reference_h, t_final)
    except NonConvergence as e:
        return ConvergenceReport(h_values=[], errors=[], complete=False, failure=f"reference: {e.detail}")

    def run(h):
        return _final_state(mu0, system, cfg, tableau, h, t_final)

    finals = []
    failure = None
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [pool.submit(run, h) for h in h_list]
        for h, fut in zip(h_list, futures):
            try:
                finals.append(fut.result())
            except NonConvergence as e:
                failure = f"h={h}: {e.detail}"
                break

    errors = [float(np.linalg.norm(mu - reference)) for mu in finals]
    hs = h_list[:len(errors)]
    slope = None
    if len(errors) >= 2 and all(e > 0 for e in errors) and len(set(hs)) >= 2:
        slope = float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
    logger.info("convergence %s: slope %s over h=%s", tableau.name, slope, hs)
    return ConvergenceReport(h_values=hs, errors=errors, fitted_slope=slope,
                             complete=failure is None, failure=failure)


def csv_header(n_casimirs: int) -> List[str]:
    return [*FIXED_COLUMNS, *(f"casimir_{k + 2}" for k in range(n_casimirs)), *TAIL_COLUMNS]


def write_csv(records: Iterable[TrajectoryRecord], path, n_casimirs: Optional[int] = None) -> None:
    """Write records with shortest round-trip float formatting.

    `n_casimirs` fixes the header when `records` may be empty.
    """
    records = list(records)
    if n_casimirs is None:
        n_casimirs = len(records[0].casimir_values) if records else 0
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(csv_header(n_casimirs))
        for r in records:
            writer.writerow([r.step, repr(r.t), repr(r.energy), repr(r.energy_drift), repr(r.spectral_drift),
                             *(repr(c) for c in r.casimir_values), r.solver_iters_total,
                             repr(r.membership_residual)])


def read_csv(path) -> List[TrajectoryRecord]:
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    out = []
    for row in rows:
        casimir_keys = sorted((k for k in row if k.startswith("casimir_")), key=lambda k: int(k.split("_")[1]))
        spectral = float(row["spectral_drift"])
        out.append(TrajectoryRecord(
            step=int(row["step"]),
            t=float(row["t"]),
            energy=float(row["energy"]),
            energy_drift=float(row["energy_drift"]),
            spectral_drift=spectral,
            casimir_values=[float(row[k]) for k in casimir_keys],
            solver_iters_total=int(row["solver_iters"]),
            membership_residual=float(row["membership_residual"]),
            flagged=math.isnan(spectral),
        ))
    return out
