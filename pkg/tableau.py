"""Symplectic DIRK tableaux.

An s-stage SDIRK with weights b has A[i][j] = b_j for j < i and
A[i][i] = b_i / 2, so it is fully described by b. Equivalently it is the
composition of s implicit midpoint steps of sizes h * b_i.
"""
from dataclasses import dataclass
from itertools import accumulate
from typing import Dict, List, Sequence, Tuple

from pydantic import BaseModel, validator

from errors import TableauError

# parse_custom and the model validator accept |sum(b) - 1| up to this.
CONSISTENCY_TOL = 1e-10
ORDER4_TOL = 1e-12


class SdirkTableau(BaseModel):
    name: str
    b: Tuple[float, ...]

    class Config:
        allow_mutation = False

    @validator("b")
    def _consistent(cls, b):
        if len(b) == 0:
            raise ValueError("tableau needs at least one weight")
        if any(w == 0.0 for w in b):
            raise ValueError("zero weights are not allowed")
        if abs(sum(b) - 1.0) > CONSISTENCY_TOL:
            raise ValueError(f"weights must sum to 1, got {sum(b)!r}")
        return b

    @property
    def s(self) -> int:
        return len(self.b)

    def butcher_matrix(self) -> List[List[float]]:
        return [[self.b[j] if j < i else (self.b[i] / 2 if j == i else 0.0) for j in range(self.s)]
                for i in range(self.s)]


@dataclass(frozen=True)
class StepSchedule:
    """Substep sizes h_i = h b_i, half points r_i and stage offsets c_i (fractions of h)."""

    h: float
    substeps: Tuple[float, ...]
    r: Tuple[float, ...]
    c: Tuple[float, ...]

    def time_reversed(self) -> "StepSchedule":
        """Adjoint schedule: same fractions, negated substeps."""
        return StepSchedule(h=-self.h, substeps=tuple(-hi for hi in self.substeps), r=self.r, c=self.c)


def make_schedule(t: SdirkTableau, h: float) -> StepSchedule:
    if not h > 0:
        raise ValueError(f"step size must be positive, got {h!r}")
    r = [0.0] + list(accumulate(t.b))
    # consistency makes r_s = 1; pin it so the last half point is the full step
    r[-1] = 1.0
    c = tuple(r[i] + t.b[i] / 2 for i in range(t.s))
    return StepSchedule(h=h, substeps=tuple(h * bi for bi in t.b), r=tuple(r), c=c)


def order_conditions(t: SdirkTableau) -> Tuple[float, float]:
    """(|sum b - 1|, |sum b^3|); both vanish for 4th order symmetric compositions."""
    return abs(sum(t.b) - 1.0), abs(sum(bi ** 3 for bi in t.b))


def is_order4_candidate(t: SdirkTableau) -> bool:
    first, third = order_conditions(t)
    return first <= ORDER4_TOL and third <= ORDER4_TOL


def _yoshida4() -> Tuple[float, ...]:
    w1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
    w0 = 1.0 - 2.0 * w1
    return (w1, w0, w1)


def _suzuki4() -> Tuple[float, ...]:
    v = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
    w = 1.0 - 4.0 * v
    return (v, v, w, v, v)


BUILTINS: Dict[str, Tuple[float, ...]] = {
    "midpoint": (1.0,),
    "sdirk2": (0.5, 0.5),
    "yoshida4": _yoshida4(),
    "suzuki4": _suzuki4(),
}


def builtin(name: str) -> SdirkTableau:
    if name not in BUILTINS:
        raise TableauError(f"unknown tableau '{name}' (known: {', '.join(sorted(BUILTINS))})")
    return SdirkTableau(name=name, b=BUILTINS[name])


def parse_custom(b: Sequence[float], name: str = "custom") -> SdirkTableau:
    weights = tuple(float(w) for w in b)
    if not weights:
        raise TableauError("custom tableau needs at least one weight")
    if any(w == 0.0 for w in weights):
        raise TableauError(f"custom tableau has a zero weight: {list(weights)}")
    total = sum(weights)
    if abs(total - 1.0) > CONSISTENCY_TOL:
        raise TableauError(f"custom weights sum to {total!r}, expected 1")
    return SdirkTableau(name=name, b=weights)
