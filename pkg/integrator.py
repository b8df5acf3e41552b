"""Isospectral SDIRK stepping on quadratic Lie algebras.

Each substep of size h_i leapfrogs from a half point to a stage point and on
to the next half point:

    mu_c = dcay(h_i B(mu_c), mu_prev)          (implicit, fixed-point solve)
    mu_r = cay(h_i B(mu_c)) mu_prev cay(h_i B(mu_c))^{-1}

The right-invariant variant is the same scheme with every h_i negated.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, validator
from scipy.optimize import root

from errors import NonConvergence
from quadlie import AlgebraElement, GroupElement, cayley, cayley_conjugate, dcay_inv
from systems import IsospectralSystem
from tableau import SdirkTableau, StepSchedule, builtin

logger = logging.getLogger(__name__)

# fixed-point sweeps whose residual grows past this multiple of the best one are diverging
DIVERGENCE_FACTOR = 1e4
ROOT_XTOL = 1e-15
ROOT_MAXFEV_PER_DIM = 50
# cotangent slopes that stop contracting below this, relative, sit on the roundoff floor
STALL_TOL = 1e-8

Variant = Literal["left", "right"]


class StepperConfig(BaseModel):
    variant: Variant = "left"
    update_form: Literal["conjugation", "dcay"] = "conjugation"
    solver_tol: float = 1e-13
    solver_max_iters: int = 200
    root_fallback: bool = True
    tableau: SdirkTableau = builtin("midpoint")
    # seed stage i >= 2 with the previous stage point instead of the half point
    extrapolate_guess: bool = False

    class Config:
        allow_mutation = False

    @validator("solver_tol")
    def _positive_tol(cls, v):
        if not v > 0:
            raise ValueError("solver_tol must be positive")
        return v

    @validator("solver_max_iters")
    def _at_least_one(cls, v):
        if v < 1:
            raise ValueError("solver_max_iters must be >= 1")
        return v

    @property
    def sign(self) -> float:
        return 1.0 if self.variant == "left" else -1.0


@dataclass(frozen=True)
class StageState:
    h: float
    mu_half: AlgebraElement
    mu_stage: AlgebraElement
    iters: int
    residual: float
    # B(mu_stage) at the accepted iterate
    generator: AlgebraElement


def _stage_residual(mu: np.ndarray, mu_prev: np.ndarray, hh: float,
                    system: IsospectralSystem) -> Tuple[np.ndarray, np.ndarray]:
    B = system.B(mu)
    Bmu = B @ mu
    return mu + hh * (mu @ B - Bmu) - (hh * hh) * (Bmu @ B) - mu_prev, B


def solve_stage(mu_prev: AlgebraElement, h_i: float, system: IsospectralSystem, cfg: StepperConfig,
                guess: Optional[AlgebraElement] = None) -> StageState:
    """Solve (Id - hh B(mu)) mu (Id + hh B(mu)) = mu_prev, hh = +-h_i/2, by fixed-point iteration.

    Each sweep evaluates B at the current iterate and subtracts the residual,
    which is the iteration mu <- mu_prev + hh [B, mu] + hh^2 B mu B. The
    iteration count is the number of residual evaluations. When the sweeps
    diverge or run out, a hybrid Powell root solve takes over unless
    cfg.root_fallback is off.
    """
    hh = cfg.sign * h_i / 2
    bound = cfg.solver_tol * (1.0 + np.linalg.norm(mu_prev))
    mu = mu_prev if guess is None else guess
    residual = best = np.inf
    k = 0
    for k in range(1, cfg.solver_max_iters + 1):
        r, B = _stage_residual(mu, mu_prev, hh, system)
        residual = float(np.linalg.norm(r))
        if residual <= bound:
            logger.debug("stage h=%.6g converged in %d iterations (residual %.3e)", h_i, k, residual)
            return StageState(h=h_i, mu_half=mu_prev, mu_stage=mu, iters=k, residual=residual, generator=B)
        if not np.isfinite(residual) or residual > DIVERGENCE_FACTOR * best:
            break
        best = min(best, residual)
        mu = mu - r
    if cfg.root_fallback:
        return _root_stage(mu_prev, h_i, hh, bound, system, spent=k)
    raise NonConvergence(k, residual)


def _root_stage(mu_prev: np.ndarray, h_i: float, hh: float, bound: float, system: IsospectralSystem,
                spent: int) -> StageState:
    # hybr works on real vectors; complex algebras are split into real and imaginary halves
    shape = mu_prev.shape
    split = np.iscomplexobj(mu_prev)

    def pack(m: np.ndarray) -> np.ndarray:
        return np.concatenate([m.real.ravel(), m.imag.ravel()]) if split else m.ravel()

    def unpack(x: np.ndarray) -> np.ndarray:
        if split:
            half = x.size // 2
            return (x[:half] + 1j * x[half:]).reshape(shape)
        return x.reshape(shape)

    def fun(x: np.ndarray) -> np.ndarray:
        return pack(_stage_residual(unpack(x), mu_prev, hh, system)[0])

    x0 = pack(mu_prev)
    sol = root(fun, x0, method="hybr", options={"xtol": ROOT_XTOL, "maxfev": ROOT_MAXFEV_PER_DIM * (x0.size + 1)})
    mu = unpack(sol.x)
    r, B = _stage_residual(mu, mu_prev, hh, system)
    residual = float(np.linalg.norm(r))
    iters = spent + int(sol.nfev)
    # the Cayley factors of hh B must stay invertible along the branch through mu_prev
    on_branch = bool(np.isfinite(residual)) and abs(hh) * np.linalg.norm(B, 2) < 1.0
    if residual <= bound and on_branch:
        logger.debug("stage h=%.6g converged by root solve after %d evaluations (residual %.3e)",
                     h_i, iters, residual)
        return StageState(h=h_i, mu_half=mu_prev, mu_stage=mu, iters=iters, residual=residual, generator=B)
    logger.debug("root solve for stage h=%.6g failed: %s (residual %.3e, on branch %s)",
                 h_i, sol.message, residual, on_branch)
    raise NonConvergence(iters, residual)


def _explicit_update(stage: StageState, cfg: StepperConfig) -> AlgebraElement:
    xi = (cfg.sign * stage.h) * stage.generator
    if cfg.update_form == "dcay":
        return dcay_inv(-xi, stage.mu_stage)
    return cayley_conjugate(xi, stage.mu_half)


def isospectral_sdirk_step(mu_n: AlgebraElement, system: IsospectralSystem, cfg: StepperConfig,
                           schedule: StepSchedule) -> Tuple[AlgebraElement, List[StageState]]:
    mu = mu_n
    stages: List[StageState] = []
    for h_i in schedule.substeps:
        guess = stages[-1].mu_stage if (cfg.extrapolate_guess and stages) else None
        stage = solve_stage(mu, h_i, system, cfg, guess=guess)
        stages.append(stage)
        mu = _explicit_update(stage, cfg)
    return mu, stages


def iterate_trajectory(mu0: AlgebraElement, system: IsospectralSystem, cfg: StepperConfig,
                       schedule: StepSchedule, n_steps: int
                       ) -> Iterator[Tuple[int, AlgebraElement, List[StageState]]]:
    """Yield (step, mu_step, stages) for step = 0..n_steps; step 0 has no stages."""
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    mu = mu0
    yield 0, mu, []
    for step in range(1, n_steps + 1):
        try:
            mu, stages = isospectral_sdirk_step(mu, system, cfg, schedule)
        except NonConvergence as e:
            raise e.at_step(step) from e
        yield step, mu, stages


def run_trajectory(mu0: AlgebraElement, system: IsospectralSystem, cfg: StepperConfig,
                   schedule: StepSchedule, n_steps: int) -> List[Tuple[AlgebraElement, List[StageState]]]:
    return [(mu, stages) for _, mu, stages in iterate_trajectory(mu0, system, cfg, schedule, n_steps)]


def reconstruct_group(g_n: GroupElement, stages: Sequence[StageState], variant: Variant = "left") -> GroupElement:
    """Advance the group variable through one step's stages.

    Left: g <- g cay(h_i B_i^dagger). Right: g <- cay(h_i B_i^dagger) g.
    """
    g = g_n
    for stage in stages:
        Q = cayley(stage.h * stage.generator.conj().T)
        g = g @ Q if variant == "left" else Q @ g
    return g


@dataclass(frozen=True)
class CotangentState:
    """A point (g, p) of the cotangent bundle in matrix coordinates."""

    g: GroupElement
    p: np.ndarray

    @classmethod
    def lift(cls, mu0: AlgebraElement) -> "CotangentState":
        return cls(g=np.eye(mu0.shape[0], dtype=mu0.dtype), p=mu0.copy())

    def momentum(self, variant: Variant = "left") -> AlgebraElement:
        if variant == "left":
            return self.g.conj().T @ self.p
        return self.p @ self.g.conj().T


@dataclass(frozen=True)
class CotangentStage:
    g_stage: GroupElement
    p_stage: np.ndarray
    next: CotangentState
    iters: int
    residual: float


def cotangent_stage(state: CotangentState, h_i: float, system: IsospectralSystem,
                    cfg: StepperConfig) -> CotangentStage:
    """One implicit midpoint substep on (g, p) for g' = g B^dagger, p' = -p B (left)
    or g' = B^dagger g, p' = -B p (right), with B = B(momentum).

    Solved as a fixed point in the slopes (k_g, k_p). The stage point is
    rebuilt from the final slopes so it is exactly the mean of the two
    adjacent points. As g grows the attainable residual floor grows with it,
    so an iteration that stops contracting below STALL_TOL is accepted too.
    """
    g, p = state.g, state.p
    k_g = np.zeros_like(g)
    k_p = np.zeros_like(p)
    half = h_i / 2
    residual = previous = np.inf
    for k in range(1, cfg.solver_max_iters + 1):
        g_c = g + half * k_g
        p_c = p + half * k_p
        B = system.B(CotangentState(g_c, p_c).momentum(cfg.variant))
        Bh = B.conj().T
        if cfg.variant == "left":
            new_g, new_p = g_c @ Bh, -(p_c @ B)
        else:
            new_g, new_p = Bh @ g_c, -(B @ p_c)
        residual = float(np.hypot(np.linalg.norm(new_g - k_g), np.linalg.norm(new_p - k_p)))
        k_g, k_p = new_g, new_p
        scale = np.hypot(np.linalg.norm(k_g), np.linalg.norm(k_p))
        stalled = residual >= previous and residual <= STALL_TOL * (1.0 + scale)
        if residual <= cfg.solver_tol * (1.0 + scale) or stalled:
            nxt = CotangentState(g=g + h_i * k_g, p=p + h_i * k_p)
            return CotangentStage(g_stage=g + half * k_g, p_stage=p + half * k_p, next=nxt,
                                  iters=k, residual=residual)
        if not np.isfinite(residual):
            break
        previous = residual
    raise NonConvergence(cfg.solver_max_iters, residual)


def cotangent_sdirk_step(state: CotangentState, system: IsospectralSystem, cfg: StepperConfig,
                         schedule: StepSchedule) -> CotangentState:
    for h_i in schedule.substeps:
        state = cotangent_stage(state, h_i, system, cfg).next
    return state


def gawlik_step(mu_tilde: AlgebraElement, h: float, system: IsospectralSystem,
                cfg: Optional[StepperConfig] = None) -> AlgebraElement:
    """Implicit half-step update dcay_inv(h B(m'), m') = dcay_inv(-h B(m), m). Not isospectral."""
    cfg = cfg or StepperConfig()
    if cfg.variant != "left":
        cfg = cfg.copy(update={"variant": "left"})
    rhs = dcay_inv(-h * system.B(mu_tilde), mu_tilde)
    return solve_stage(rhs, h, system, cfg).mu_stage


def iterate_gawlik(mu0: AlgebraElement, system: IsospectralSystem, h: float, n_steps: int,
                   cfg: Optional[StepperConfig] = None) -> Iterator[Tuple[int, AlgebraElement, List[StageState]]]:
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    mu = mu0
    yield 0, mu, []
    for step in range(1, n_steps + 1):
        try:
            mu = gawlik_step(mu, h, system, cfg)
        except NonConvergence as e:
            raise e.at_step(step) from e
        yield step, mu, []


def classical_rk4_step(mu: AlgebraElement, h: float, system: IsospectralSystem) -> AlgebraElement:
    k1 = system.rhs(mu)
    k2 = system.rhs(mu + (h / 2) * k1)
    k3 = system.rhs(mu + (h / 2) * k2)
    k4 = system.rhs(mu + h * k3)
    return mu + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def iterate_classical_rk4(mu0: AlgebraElement, system: IsospectralSystem, h: float,
                          n_steps: int) -> Iterator[Tuple[int, AlgebraElement, List[StageState]]]:
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    mu = mu0
    yield 0, mu, []
    for step in range(1, n_steps + 1):
        mu = classical_rk4_step(mu, h, system)
        yield step, mu, []
