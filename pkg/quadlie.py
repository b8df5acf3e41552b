"""Dense matrix primitives and the Cayley transform on quadratic Lie groups.

A quadratic group is {g : g^dagger J g = J}; its algebra is
{xi : J xi + xi^dagger J = 0}. Matrices are plain numpy arrays; the
QuadraticStructure they belong to is carried by whoever owns them.
"""
import logging
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, validator
from scipy.linalg import lu_factor, lu_solve

from errors import DimensionMismatch, EigensolverFailure, SingularFactorError

logger = logging.getLogger(__name__)

Scalar = Union[float, complex]
AlgebraElement = npt.NDArray[np.inexact]
GroupElement = npt.NDArray[np.inexact]
Spectrum = npt.NDArray[np.complexfloating]

# Real parts are compared at this many decimals (relative to the spectral
# radius) when putting a spectrum in canonical order.
CANONICAL_DECIMALS = 10


class QuadraticStructure(BaseModel):
    n: int
    J: np.ndarray
    traceless: bool = False
    is_complex: bool = False
    # False for gl(n): no quadratic constraint at all.
    quadratic: bool = True

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("J", pre=True)
    def _as_square(cls, v, values):
        J = np.array(v)
        n = values.get("n")
        if J.shape != (n, n):
            raise ValueError(f"J must be {n}x{n}, got shape {J.shape}")
        J.setflags(write=False)
        return J

    @validator("J")
    def _invertible_hermitian_or_skew(cls, J):
        if np.linalg.matrix_rank(J) < J.shape[0]:
            raise ValueError("J must be invertible")
        Jh = J.conj().T
        if not (np.allclose(Jh, J) or np.allclose(Jh, -J)):
            raise ValueError("J must satisfy J^dagger = +J or -J")
        return J

    @property
    def dtype(self):
        return np.complex128 if self.is_complex else np.float64

    def identity(self) -> np.ndarray:
        return np.eye(self.n, dtype=self.dtype)

    @classmethod
    def orthogonal(cls, n: int) -> "QuadraticStructure":
        return cls(n=n, J=np.eye(n))

    @classmethod
    def unitary(cls, n: int, traceless: bool = True) -> "QuadraticStructure":
        return cls(n=n, J=np.eye(n), traceless=traceless, is_complex=True)

    @classmethod
    def symplectic(cls, m: int) -> "QuadraticStructure":
        I = np.eye(m)
        Z = np.zeros((m, m))
        return cls(n=2 * m, J=np.block([[Z, I], [-I, Z]]))

    @classmethod
    def general_linear(cls, n: int) -> "QuadraticStructure":
        return cls(n=n, J=np.eye(n), quadratic=False)


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {a.shape}")
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")


def _factor(m: np.ndarray):
    lu, piv = lu_factor(m, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if not np.all(np.isfinite(pivots)) or pivots.min() <= m.shape[0] * np.finfo(float).eps * max(pivots.max(), 1.0):
        raise SingularFactorError("Cayley factor is singular; reduce the step size")
    return lu, piv


def _cayley_factors(xi: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    I = np.eye(xi.shape[0], dtype=xi.dtype)
    half = 0.5 * xi
    return I - half, I + half


def commutator(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    _check_pair(a, b)
    return a @ b - b @ a


def frobenius_pairing(a: AlgebraElement, b: AlgebraElement) -> Scalar:
    """tr(a^dagger b)."""
    _check_pair(a, b)
    return np.vdot(a, b).item()


def cayley(xi: AlgebraElement) -> GroupElement:
    """(Id - xi/2)^{-1} (Id + xi/2)."""
    minus, plus = _cayley_factors(xi)
    return lu_solve(_factor(minus), plus, check_finite=False)


def dcay(xi: AlgebraElement, eta: AlgebraElement) -> AlgebraElement:
    """Right trivialized tangent of cay: (Id - xi/2)^{-1} eta (Id + xi/2)^{-1}."""
    _check_pair(xi, eta)
    minus, plus = _cayley_factors(xi)
    left = lu_solve(_factor(minus), eta, check_finite=False)
    # X (Id + xi/2)^{-1} solved as (Id + xi/2)^T X'^T = X^T
    return lu_solve(_factor(plus), left.T, trans=1, check_finite=False).T


def dcay_inv(xi: AlgebraElement, eta: AlgebraElement) -> AlgebraElement:
    """(Id - xi/2) eta (Id + xi/2)."""
    _check_pair(xi, eta)
    minus, plus = _cayley_factors(xi)
    return minus @ eta @ plus


def cayley_conjugate(xi: AlgebraElement, mu: AlgebraElement) -> AlgebraElement:
    """cay(xi) mu cay(xi)^{-1} using solves against the two factors only."""
    _check_pair(xi, mu)
    minus, plus = _cayley_factors(xi)
    minus_lu = _factor(minus)
    plus_lu = _factor(plus)
    # cay(xi) = minus^{-1} plus, cay(xi)^{-1} = plus^{-1} minus
    left = lu_solve(minus_lu, plus @ mu, check_finite=False)
    right = lu_solve(plus_lu, left.T, trans=1, check_finite=False).T
    return right @ minus


def canonical_order(values: np.ndarray) -> Spectrum:
    values = np.asarray(values, dtype=np.complex128)
    if values.size == 0:
        return values
    radius = max(float(np.max(np.abs(values))), 1.0)
    real_key = np.round(values.real / radius, CANONICAL_DECIMALS)
    # lexsort sorts by the last key first
    order = np.lexsort((values.imag, real_key))
    return values[order]


def spectrum(a: AlgebraElement) -> Spectrum:
    """Eigenvalues in canonical order: real part ascending, then imaginary part."""
    if not np.all(np.isfinite(a)):
        raise EigensolverFailure("matrix has non-finite entries")
    try:
        values = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as e:
        raise EigensolverFailure(f"eigensolver did not converge: {e}") from e
    return canonical_order(values)


def project_to_algebra(x: np.ndarray, context: QuadraticStructure) -> AlgebraElement:
    if context.quadratic:
        if np.array_equal(context.J, np.eye(context.n)):
            x = 0.5 * (x - x.conj().T)
        else:
            # xi = (x - J^{-1} x^dagger J) / 2 lies in the algebra for unitary J
            x = 0.5 * (x - np.linalg.solve(context.J, x.conj().T @ context.J))
    if context.traceless:
        x = x - (np.trace(x) / context.n) * np.eye(context.n, dtype=x.dtype)
    return x


def random_algebra_element(context: QuadraticStructure, seed: int, scale: float = 1.0) -> AlgebraElement:
    """Seeded element with entries drawn uniformly from [-1, 1] before projection.

    Uses numpy's PCG64 stream (`default_rng`), which is stable across platforms.
    """
    rng = np.random.default_rng(seed)
    n = context.n
    x = rng.uniform(-1.0, 1.0, size=(n, n))
    if context.is_complex:
        x = x + 1j * rng.uniform(-1.0, 1.0, size=(n, n))
    return scale * project_to_algebra(x, context)


def membership_residuals(x: np.ndarray, context: QuadraticStructure) -> Tuple[float, float]:
    """Frobenius norms of x^dagger J x - J and J x + x^dagger J.

    For traceless contexts the algebra residual also carries |tr x|. A
    general_linear context imposes nothing and both residuals are zero.
    """
    if x.shape != (context.n, context.n):
        raise DimensionMismatch(f"expected {context.n}x{context.n}, got {x.shape}")
    if not context.quadratic:
        algebra = abs(np.trace(x)) if context.traceless else 0.0
        return 0.0, float(algebra)
    J = context.J
    xh = x.conj().T
    group = np.linalg.norm(xh @ J @ x - J)
    algebra = np.linalg.norm(J @ x + xh @ J)
    if context.traceless:
        algebra = np.hypot(algebra, abs(np.trace(x)))
    return float(group), float(algebra)
