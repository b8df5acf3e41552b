import numpy as np
import pytest

from errors import DimensionMismatch, EigensolverFailure, SingularFactorError
from quadlie import (
    QuadraticStructure,
    cayley,
    cayley_conjugate,
    commutator,
    dcay,
    dcay_inv,
    frobenius_pairing,
    membership_residuals,
    random_algebra_element,
    spectrum,
)

ROT = np.array([[0.0, 1.0], [-1.0, 0.0]])


def contexts():
    for n in range(2, 11):
        yield QuadraticStructure.orthogonal(n), 1.0
        yield QuadraticStructure.unitary(n, traceless=n % 2 == 0), 1.0
    for m in (1, 2, 3):
        yield QuadraticStructure.symplectic(m), 0.3


CONTEXTS = list(contexts())


def test_commutator_examples():
    a = np.diag([1.0, -1.0])
    b = np.array([[0.0, 1.0], [0.0, 0.0]])
    np.testing.assert_array_equal(commutator(a, b), [[0.0, 2.0], [0.0, 0.0]])
    np.testing.assert_array_equal(commutator(a, a), np.zeros((2, 2)))

    rng = np.random.default_rng(0)
    x, y = rng.standard_normal((2, 5, 5))
    np.testing.assert_allclose(commutator(x, y) + commutator(y, x), 0.0, atol=1e-14)


def test_commutator_rejects_mismatched_shapes():
    with pytest.raises(DimensionMismatch):
        commutator(np.eye(2), np.eye(3))
    with pytest.raises(ValueError):
        commutator(np.ones((2, 3)), np.ones((2, 3)))


def test_frobenius_pairing():
    assert frobenius_pairing(np.eye(3), np.eye(3)) == 3
    assert frobenius_pairing(ROT, 2 * ROT) == pytest.approx(4.0)
    x = np.array([[1 + 2j, 0], [3, -1j]])
    val = frobenius_pairing(x, x)
    assert val.real == pytest.approx(np.linalg.norm(x) ** 2)
    assert abs(val.imag) == 0


def test_cayley_examples():
    np.testing.assert_array_equal(cayley(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(cayley(2 * ROT), ROT, atol=1e-14)


def test_cayley_singular_factor():
    with pytest.raises(SingularFactorError):
        cayley(2 * np.eye(3))


def test_dcay_inv_example():
    np.testing.assert_allclose(dcay_inv(ROT, ROT), [[0.0, 1.25], [-1.25, 0.0]], atol=1e-15)
    eta = np.arange(4.0).reshape(2, 2)
    np.testing.assert_array_equal(dcay_inv(np.zeros((2, 2)), eta), eta)
    np.testing.assert_array_equal(dcay(np.zeros((2, 2)), eta), eta)


@pytest.mark.parametrize("context,scale", CONTEXTS)
def test_cayley_maps_algebra_into_group(context, scale):
    xi = random_algebra_element(context, seed=context.n, scale=scale)
    g = cayley(xi)
    group, _ = membership_residuals(g, context)
    assert group < 1e-12
    np.testing.assert_allclose(g @ cayley(-xi), np.eye(context.n), atol=1e-12)


@pytest.mark.parametrize("context,scale", CONTEXTS)
def test_dcay_identities(context, scale):
    xi = random_algebra_element(context, seed=1, scale=scale)
    eta = random_algebra_element(context, seed=2)
    np.testing.assert_allclose(dcay(xi, dcay_inv(xi, eta)), eta, atol=1e-12)
    np.testing.assert_allclose(dcay_inv(xi, dcay(xi, eta)), eta, atol=1e-12)

    # dcay_xi = Ad_cay(xi) o dcay_{-xi}
    g = cayley(xi)
    np.testing.assert_allclose(dcay(xi, eta), g @ dcay(-xi, eta) @ np.linalg.inv(g), atol=1e-12)

    I = np.eye(context.n)
    minus, plus = I - xi / 2, I + xi / 2
    np.testing.assert_allclose(minus @ plus, plus @ minus, atol=1e-13)


def test_cayley_conjugate_matches_explicit_inverse():
    context = QuadraticStructure.unitary(4)
    xi = random_algebra_element(context, seed=5)
    mu = random_algebra_element(context, seed=6)
    g = cayley(xi)
    np.testing.assert_allclose(cayley_conjugate(xi, mu), g @ mu @ np.linalg.inv(g), atol=1e-13)


def test_spectrum_canonical_order():
    np.testing.assert_allclose(spectrum(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])
    np.testing.assert_allclose(spectrum(ROT), [-1j, 1j], atol=1e-15)


def test_spectrum_similarity_invariant():
    context = QuadraticStructure.orthogonal(6)
    a = random_algebra_element(context, seed=11)
    rng = np.random.default_rng(3)
    Q = np.eye(6) + 0.1 * rng.standard_normal((6, 6))
    np.testing.assert_allclose(spectrum(Q @ a @ np.linalg.inv(Q)), spectrum(a), atol=1e-10)


def test_spectrum_rejects_non_finite():
    with pytest.raises(EigensolverFailure):
        spectrum(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_random_algebra_element():
    context = QuadraticStructure.unitary(5)
    a = random_algebra_element(context, seed=42)
    np.testing.assert_array_equal(a, random_algebra_element(context, seed=42))
    _, algebra = membership_residuals(a, context)
    assert algebra < 1e-14
    assert abs(np.trace(a)) < 1e-14
    np.testing.assert_array_equal(random_algebra_element(context, seed=42, scale=0.0), np.zeros((5, 5)))

    sp = QuadraticStructure.symplectic(2)
    assert membership_residuals(random_algebra_element(sp, seed=1), sp)[1] < 1e-14


def test_membership_residuals():
    context = QuadraticStructure.orthogonal(3)
    group, algebra = membership_residuals(np.eye(3), context)
    assert group == 0.0
    assert algebra == pytest.approx(np.linalg.norm(2 * np.eye(3)))

    gl = QuadraticStructure.general_linear(3)
    assert membership_residuals(np.arange(9.0).reshape(3, 3), gl) == (0.0, 0.0)

    with pytest.raises(DimensionMismatch):
        membership_residuals(np.eye(2), context)


def test_quadratic_structure_validation():
    with pytest.raises(ValueError):
        QuadraticStructure(n=2, J=np.zeros((2, 2)))
    with pytest.raises(ValueError):
        QuadraticStructure(n=2, J=np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        QuadraticStructure(n=3, J=np.eye(2))
    sp = QuadraticStructure.symplectic(2)
    np.testing.assert_array_equal(sp.J.T, -sp.J)
