"""Benchmark isospectral Lie-Poisson systems: rigid body, extended Toda lattice, Zeitlin on S^2.

Every system evolves mu' = [B(mu), mu] with B(mu) = grad H(mu)^dagger, the
gradient taken with respect to the real pairing Re tr(a^dagger b). With that
convention dH/dt = Re tr(X [X, mu]) = 0 for X = grad H^dagger, on any
matrix algebra, so the same code serves real and complex systems.
"""
import abc
import logging
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh

from quadlie import (
    AlgebraElement,
    QuadraticStructure,
    commutator,
    membership_residuals,
    random_algebra_element,
)

logger = logging.getLogger(__name__)

# Casimir components that should vanish, relative, above this are worth a warning.
IMAG_RESIDUAL_WARN = 1e-8


def casimirs(W: AlgebraElement, orders: Sequence[int]) -> List[float]:
    """Real parts of tr(W^k) for each requested k."""
    return [float(v.real) for v in _trace_powers(W, orders)]


def skew_hermitian_casimirs(W: AlgebraElement, orders: Sequence[int]) -> List[float]:
    """tr(W^k) for skew-Hermitian W: real for even k, purely imaginary for odd k.

    Returns the component that carries information, Re for even and Im for odd orders.
    """
    return [float(v.real if k % 2 == 0 else v.imag) for k, v in zip(orders, _trace_powers(W, orders))]


def skew_hermitian_residual(W: AlgebraElement, orders: Sequence[int]) -> float:
    """Largest relative size of the component of tr(W^k) that vanishes on skew-Hermitian W."""
    values = _trace_powers(W, orders)
    if not values:
        return 0.0
    return max(abs(v.imag if k % 2 == 0 else v.real) / max(1.0, abs(v)) for k, v in zip(orders, values))


def _trace_powers(W: np.ndarray, orders: Sequence[int]) -> List[complex]:
    if not orders:
        return []
    top = max(orders)
    powers = {}
    P = np.eye(W.shape[0], dtype=W.dtype)
    for k in range(1, top + 1):
        P = P @ W
        powers[k] = complex(np.trace(P))
    return [powers[k] for k in orders]


class IsospectralSystem(abc.ABC):
    name: str
    context: QuadraticStructure
    casimir_orders: Tuple[int, ...] = ()

    @property
    def n(self) -> int:
        return self.context.n

    @abc.abstractmethod
    def gradient(self, mu: AlgebraElement) -> AlgebraElement:
        """grad H(mu) under the pairing Re tr(a^dagger b), restricted to the algebra."""

    @abc.abstractmethod
    def H(self, mu: AlgebraElement) -> float:
        ...

    @abc.abstractmethod
    def initial_condition(self, seed: int, scale: float = 1.0) -> AlgebraElement:
        ...

    def B(self, mu: AlgebraElement) -> AlgebraElement:
        return self.gradient(mu).conj().T

    def rhs(self, mu: AlgebraElement) -> AlgebraElement:
        return commutator(self.B(mu), mu)

    def casimirs(self, mu: AlgebraElement) -> List[float]:
        return casimirs(mu, self.casimir_orders)

    def is_admissible(self, mu: AlgebraElement, tol: float = 1e-10) -> bool:
        return membership_residuals(mu, self.context)[1] <= tol * (1.0 + np.linalg.norm(mu))


class RigidBody(IsospectralSystem):
    """Euler's equations on so(3)*: H(W) = 1/2 <I^{-1} W, W>."""

    name = "rigidbody"
    casimir_orders = (2,)

    def __init__(self, inertia: Sequence[float] = (1.0, 2.0, 3.0), init: Literal["random", "tumbling"] = "random"):
        inertia = np.asarray(inertia, dtype=float)
        if inertia.shape == (3,):
            inertia = np.diag(inertia)
        elif inertia.shape == (9,):
            inertia = inertia.reshape(3, 3)
        if inertia.shape != (3, 3):
            raise ValueError(f"inertia must be 3 moments or a 3x3 matrix, got shape {inertia.shape}")
        if not np.allclose(inertia, inertia.T):
            raise ValueError("inertia must be symmetric")
        try:
            self._inertia_factor = cho_factor(inertia)
        except np.linalg.LinAlgError as e:
            raise ValueError("inertia must be positive definite") from e
        self.inertia = inertia
        self.init = init
        self.context = QuadraticStructure.orthogonal(3)

    def _inertia_inv_times(self, W: np.ndarray) -> np.ndarray:
        return cho_solve(self._inertia_factor, W, check_finite=False)

    def gradient(self, W):
        # Frobenius gradient of 1/2 tr(W^T I^{-1} W) is I^{-1} W; keep its skew part
        G = self._inertia_inv_times(W)
        return 0.5 * (G - G.T)

    def H(self, W):
        return 0.5 * float(np.vdot(self._inertia_inv_times(W), W).real)

    def casimirs(self, W):
        # |W|_F^2 = -tr(W^2) on so(3)
        return [float(np.vdot(W, W).real)]

    def initial_condition(self, seed, scale=1.0):
        if self.init == "tumbling":
            # angular momentum along (1, 1, 1), away from every principal axis; seed unused
            w = scale / np.sqrt(3.0)
            return np.array([[0.0, -w, w], [w, 0.0, -w], [-w, w, 0.0]])
        return random_algebra_element(self.context, seed, scale)


def toda_lax_matrices(a: Sequence[float], b: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Periodic Toda Lax pair: symmetric L and skew-symmetric B(L)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"a and b must have equal length, got {a.size} and {b.size}")
    n = a.size
    if n < 3:
        raise ValueError(f"periodic Toda lattice needs n >= 3, got {n}")
    L = np.diag(a)
    B = np.zeros((n, n))
    for i in range(n - 1):
        L[i, i + 1] = L[i + 1, i] = b[i]
        B[i, i + 1] = b[i]
        B[i + 1, i] = -b[i]
    L[0, n - 1] = L[n - 1, 0] = b[n - 1]
    B[0, n - 1] = -b[n - 1]
    B[n - 1, 0] = b[n - 1]
    return L, B


def _toda_sign_mask(n: int) -> np.ndarray:
    S = np.zeros((n, n))
    for i in range(n - 1):
        S[i, i + 1] = 1.0
        S[i + 1, i] = -1.0
    S[0, n - 1] = -1.0
    S[n - 1, 0] = 1.0
    return S


class TodaExtended(IsospectralSystem):
    """Periodic Toda lattice extended to a Lie-Poisson system on gl(n).

    H~(W) = -tr(W^T T(W)) + 2 tr(W^2), where T(W) keeps the periodic
    off-diagonal entries of W with the signs of the Toda generator.
    """

    name = "toda"

    def __init__(self, n: int = 4, init: Literal["alternating", "random"] = "alternating"):
        if n < 3:
            raise ValueError(f"periodic Toda lattice needs n >= 3, got {n}")
        self.context = QuadraticStructure.general_linear(n)
        self.casimir_orders = tuple(range(2, n + 1))
        self.init = init
        self._mask = _toda_sign_mask(n)

    def lax_generator(self, W: AlgebraElement) -> AlgebraElement:
        """T(W): the Toda generator B(L) read off an arbitrary gl(n) matrix."""
        return self._mask * W

    def H(self, W):
        return float(-np.sum(self._mask * W * W) + 2.0 * np.trace(W @ W))

    def gradient(self, W):
        return -2.0 * self._mask * W + 4.0 * W.T

    def lax_shape_defect(self, W: AlgebraElement) -> float:
        """Distance of W from the symmetric periodic tridiagonal shape."""
        outside = W * (self._mask == 0) - np.diag(np.diag(W))
        return float(np.hypot(np.linalg.norm(W - W.T), np.linalg.norm(outside)))

    def initial_condition(self, seed=0, scale=1.0):
        n = self.n
        if self.init == "alternating":
            signs = np.array([(-1.0) ** i for i in range(1, n + 1)])
            a, b = signs, signs
        else:
            rng = np.random.default_rng(seed)
            a = rng.uniform(-1.0, 1.0, n)
            b = rng.uniform(-1.0, 1.0, n)
        L, _ = toda_lax_matrices(scale * a, scale * b)
        return L


def zeitlin_spin_generators(N: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Skew-Hermitian spin-(N-1)/2 generators with [S1, S2] = S3 cyclically.

    S1 = i J1, S2 = -i J2, S3 = i J3 for the Hermitian spin matrices J_k.
    """
    if N < 2:
        raise ValueError(f"need N >= 2, got {N}")
    s = (N - 1) / 2.0
    m = s - np.arange(N)
    J3 = np.diag(m)
    Jplus = np.zeros((N, N))
    for a in range(1, N):
        Jplus[a - 1, a] = np.sqrt(s * (s + 1) - m[a] * (m[a] + 1))
    Jminus = Jplus.T
    S1 = 0.5j * (Jplus + Jminus)
    S2 = 0.5 * (Jminus - Jplus) + 0j
    S3 = 1j * J3
    return S1, S2, S3


class ZeitlinSphere(IsospectralSystem):
    """Zeitlin's su(N) model of the barotropic vorticity equation on S^2.

    W' = [B(W), W] with H(W) = N^{3/2}/2 <Delta^{-1} W, W>. The Laplacian is
    Delta(W) = -sum_k [S_k, [S_k, W]], with eigenvalues l(l+1), l = 1..N-1,
    on traceless matrices.
    """

    name = "zeitlin"

    def __init__(self, N: int = 17, laplacian_mode: Literal["inverse", "forward"] = "inverse",
                 casimir_orders: Sequence[int] = (2, 3, 4, 5)):
        self.N = N
        self.context = QuadraticStructure.unitary(N, traceless=True)
        self.casimir_orders = tuple(casimir_orders)
        self.laplacian_mode = laplacian_mode
        self.scale = float(N) ** 1.5
        self.generators = zeitlin_spin_generators(N)
        self._operator = self._assemble_operator()
        evals, evecs = eigh(self._operator)
        self._evals = evals
        # only the identity direction (l = 0) has a zero eigenvalue; the next one is 2
        inv = np.where(evals > 0.5, 1.0 / np.where(evals > 0.5, evals, 1.0), 0.0)
        self._inverse = (evecs * inv) @ evecs.T
        logger.debug("zeitlin N=%d: laplacian assembled, smallest nonzero eigenvalue %.6f", N, evals[1])

    def _assemble_operator(self) -> np.ndarray:
        N = self.N
        op = np.empty((N * N, N * N))
        E = np.zeros((N, N), dtype=complex)
        for k in range(N * N):
            i, j = divmod(k, N)
            E[i, j] = 1.0
            op[:, k] = self.laplacian(E).real.ravel()
            E[i, j] = 0.0
        return 0.5 * (op + op.T)

    def laplacian(self, W: AlgebraElement) -> AlgebraElement:
        out = np.zeros_like(W, dtype=complex)
        for S in self.generators:
            inner = S @ W - W @ S
            out -= S @ inner - inner @ S
        return out

    def _apply(self, op: np.ndarray, W: np.ndarray) -> np.ndarray:
        N = self.N
        parts = op @ np.stack([W.real.ravel(), np.imag(W).ravel()], axis=1)
        return (parts[:, 0] + 1j * parts[:, 1]).reshape(N, N)

    def laplacian_inv(self, W: AlgebraElement, tol: float = 1e-10) -> AlgebraElement:
        trace = np.trace(W)
        if abs(trace) > tol * (1.0 + np.linalg.norm(W)):
            raise ValueError(f"inverse Laplacian needs a traceless matrix, got trace {trace}")
        return self._apply(self._inverse, W)

    def _stream(self, W: np.ndarray) -> np.ndarray:
        # stage iterates and dcay updates leave su(N) by O(h^2) in the trace; drop it
        W = W - (np.trace(W) / self.N) * np.eye(self.N)
        return self._apply(self._inverse, W)

    def laplacian_spectrum(self) -> np.ndarray:
        """Operator eigenvalues on the traceless subspace, ascending."""
        return np.sort(self._evals)[1:]

    def gradient(self, W):
        return self.scale * self._stream(W)

    def B(self, W):
        if self.laplacian_mode == "forward":
            return (self.scale * self.laplacian(W)).conj().T
        return self.gradient(W).conj().T

    def H(self, W):
        return 0.5 * self.scale * float(np.vdot(self._stream(W), W).real)

    def casimirs(self, W):
        residual = skew_hermitian_residual(W, self.casimir_orders)
        if residual > IMAG_RESIDUAL_WARN:
            logger.warning("casimir residual off the skew-hermitian phase %.3e exceeds %.0e", residual,
                           IMAG_RESIDUAL_WARN)
        return skew_hermitian_casimirs(W, self.casimir_orders)

    def initial_condition(self, seed, scale=1.0):
        W = random_algebra_element(self.context, seed, 1.0)
        return scale * W / np.linalg.norm(W)


def build_system(name: str, n: int = 4, N: int = 17, inertia: Optional[Sequence[float]] = None,
                 rigid_init: str = "random", toda_init: str = "alternating", laplacian_mode: str = "inverse"
                 ) -> IsospectralSystem:
    if name == "rigidbody":
        return RigidBody(inertia if inertia is not None else (1.0, 2.0, 3.0), init=rigid_init)
    if name == "toda":
        return TodaExtended(n, init=toda_init)
    if name == "zeitlin":
        return ZeitlinSphere(N, laplacian_mode=laplacian_mode)
    raise ValueError(f"unknown system '{name}'")
