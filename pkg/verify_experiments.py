"""Long-running acceptance checks. Prints one PASS/FAIL line per check.

    python verify_experiments.py                 # everything
    python verify_experiments.py --only toda     # presets whose name contains 'toda'
    python verify_experiments.py --freeze-golden # (re)write the golden CSV
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from config import RunConfig
from diagnostics import convergence_study, write_csv
from integrator import CotangentState, StepperConfig, cotangent_sdirk_step, isospectral_sdirk_step
from main import execute, system_for
from systems import RigidBody, TodaExtended, ZeitlinSphere
from tableau import BUILTINS, builtin, make_schedule

MANIFEST = Path(__file__).with_name("manifest.json")

results = []

def report(name, ok, detail=""):
    results.append(ok)
    print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

def check_preset(preset):
    cfg = RunConfig(**preset["config"])
    system = system_for(cfg)
    mu0 = system.initial_condition(cfg.seed, cfg.init_scale)
    checks = preset["checks"]
    if preset["command"] == "run":
        outcome = execute(cfg.method, cfg, system, mu0)
        if outcome.failure is not None:
            report(preset["name"], False, outcome.failure.detail)
            return
        summary = outcome.summary
        for key, bound in checks.items():
            value = getattr(summary, key)
            report(f"{preset['name']}: {key}", value < bound, f"{value:.3e} < {bound:.0e}")
        if isinstance(system, TodaExtended):
            defect = max(system.lax_shape_defect(mu) for mu in _toda_states(cfg, system, mu0))
            print(f"      toda Lax-shape defect (reported only): {defect:.3e}")
        return

    base, other = (execute(m, cfg, system, mu0) for m in preset["methods"])
    ratio = other.summary.max_spectral_drift / max(base.summary.max_spectral_drift, np.finfo(float).tiny)
    report(f"{preset['name']}: drift ratio", ratio >= checks["min_drift_ratio"],
           f"{ratio:.3e} >= {checks['min_drift_ratio']:.0e}")
    drifts = np.array([r.spectral_drift for r in other.records])
    quarter = len(drifts) // 4
    report(f"{preset['name']}: {preset['methods'][1]} drift grows",
           drifts[-quarter:].max() > drifts[:quarter].max(),
           f"first quarter {drifts[:quarter].max():.3e}, last quarter {drifts[-quarter:].max():.3e}")

def _toda_states(cfg, system, mu0, every=500):
    stepper = cfg.stepper()
    schedule = make_schedule(stepper.tableau, cfg.h)
    mu = mu0
    for step in range(cfg.steps):
        mu, _ = isospectral_sdirk_step(mu, system, stepper, schedule)
        if step % every == 0:
            yield mu

def check_energy_oscillation():
    cfg = RunConfig(system="rigidbody", method="midpoint", h=0.01, steps=100000, seed=42)
    system = system_for(cfg)
    records = execute("midpoint", cfg, system, system.initial_condition(cfg.seed)).records
    t = np.array([r.t for r in records])
    drift = np.array([r.energy_drift for r in records])
    slope = np.polyfit(t, drift, 1)[0]
    amplitude = drift.max() - drift.min()
    report("midpoint energy: no secular trend", abs(slope) * t[-1] < 0.1 * amplitude,
           f"|slope|*T={abs(slope) * t[-1]:.3e}, amplitude={amplitude:.3e}")
    early = np.abs(drift[:1001]).max()
    report("midpoint energy: bounded", np.abs(drift).max() <= 10 * early,
           f"max={np.abs(drift).max():.3e}, first 1e3 steps={early:.3e}")
    for method in ("yoshida4", "suzuki4"):
        cfg = RunConfig(system="rigidbody", method=method, h=0.01, steps=10000, seed=42)
        s = execute(method, cfg, system, system.initial_condition(cfg.seed)).summary
        rel = s.max_abs_energy_drift / abs(records[0].energy)
        report(f"{method} relative energy drift", rel < 1e-9, f"{rel:.3e}")

def check_convergence_orders():
    system = RigidBody()
    mu0 = system.initial_condition(42)
    expected = {"midpoint": (2.0, 0.1), "sdirk2": (2.0, 0.1), "yoshida4": (4.0, 0.2), "suzuki4": (4.0, 0.2)}
    for name, (order, tol) in expected.items():
        rep = convergence_study(system, builtin(name), [0.1, 0.05, 0.025, 0.0125], 1.0, 0.0125 / 8, mu0)
        report(f"convergence order {name}", abs(rep.fitted_slope - order) <= tol,
               f"slope {rep.fitted_slope:.3f}, expected {order} +- {tol}")

def check_oracle_equivalence(steps=100):
    systems = [(RigidBody(), 0.05), (TodaExtended(4), 0.005), (ZeitlinSphere(9), 0.005)]
    for system, h in systems:
        mu0 = system.initial_condition(7)
        for name in BUILTINS:
            cfg = StepperConfig(tableau=builtin(name))
            schedule = make_schedule(cfg.tableau, h)
            mu, state, worst = mu0, CotangentState.lift(mu0), 0.0
            for _ in range(steps):
                mu, _ = isospectral_sdirk_step(mu, system, cfg, schedule)
                state = cotangent_sdirk_step(state, system, cfg, schedule)
                worst = max(worst, np.linalg.norm(state.momentum() - mu))
            report(f"oracle equivalence {system.name}/{name}", worst < 1e-10, f"{worst:.3e}")

def check_laplacian_spectrum():
    for N in (5, 9, 17):
        expected = np.concatenate([[l * (l + 1)] * (2 * l + 1) for l in range(1, N)])
        err = np.abs(ZeitlinSphere(N).laplacian_spectrum() - expected).max()
        report(f"zeitlin laplacian spectrum N={N}", err < 1e-10, f"{err:.3e}")

def check_rk4_obstruction():
    regimes = {
        # a random rigid body start can sit near a principal axis, where RK4 drift stays at roundoff
        "rigidbody": {"h": 0.05, "rigid_init": "tumbling", "init_scale": 5.0},
        "toda": {"h": 0.05},
        "zeitlin": {"h": 0.0025},
    }
    for system_name, regime in regimes.items():
        cfg = RunConfig(system=system_name, steps=10000, N=9, seed=42, **regime)
        system = system_for(cfg)
        records = execute("classical-rk4", cfg, system, system.initial_condition(cfg.seed)).records
        drifts = np.array([r.spectral_drift for r in records])
        report(f"rk4 spectral drift grows ({system_name})",
               drifts[-1] > 0 and drifts[-1000:].max() > drifts[1:1000].max(),
               f"early {drifts[1:1000].max():.3e}, late {drifts[-1000:].max():.3e}")

def freeze_golden(manifest):
    golden = manifest["golden"]
    cfg = RunConfig(**golden["config"])
    system = system_for(cfg)
    outcome = execute(cfg.method, cfg, system, system.initial_condition(cfg.seed))
    path = Path(__file__).with_name(golden["path"])
    path.parent.mkdir(exist_ok=True)
    write_csv(outcome.records, path, n_casimirs=len(system.casimir_orders))
    print(f"Golden CSV written to {path}")

if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--only", help="substring filter on check names")
    parser.add_argument("--freeze-golden", action="store_true")
    args = parser.parse_args()
    logging.basicConfig(level=logging.WARNING)

    manifest = json.loads(MANIFEST.read_text())
    if args.freeze_golden:
        freeze_golden(manifest)
        sys.exit(0)

    for preset in manifest["presets"]:
        if not args.only or args.only in preset["name"]:
            check_preset(preset)
    extra = {
        "energy": check_energy_oscillation,
        "convergence": check_convergence_orders,
        "oracle": check_oracle_equivalence,
        "laplacian": check_laplacian_spectrum,
        "rk4": check_rk4_obstruction,
    }
    for key, check in extra.items():
        if not args.only or args.only in key:
            check()

    print(f"\n{sum(results)}/{len(results)} checks passed")
    sys.exit(0 if all(results) else 1)
