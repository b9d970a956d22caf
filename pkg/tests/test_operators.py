import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonfilter import operators as ops


def test_annihilation_dim1_is_zero():
    np.testing.assert_array_equal(ops.annihilation(1), np.zeros((1, 1)))


def test_annihilation_entries():
    a = ops.annihilation(4)
    assert a[2, 3] == pytest.approx(np.sqrt(3.0))
    assert a[0, 1] == pytest.approx(1.0)
    # strictly upper-bidiagonal
    assert np.count_nonzero(a) == 3


def test_annihilation_rejects_bad_dim():
    with pytest.raises(ValueError):
        ops.annihilation(0)


def test_creation_raises_vacuum():
    adag = ops.creation(2)
    np.testing.assert_allclose(adag @ ops.fock_ket(2, 0), ops.fock_ket(2, 1))


def test_creation_is_adjoint_of_annihilation():
    np.testing.assert_array_equal(ops.creation(5), ops.adjoint(ops.annihilation(5)))


def test_number_op_diagonal():
    np.testing.assert_array_equal(ops.number_op(3), np.diag([0.0, 1.0, 2.0]))
    np.testing.assert_array_equal(ops.number_op(2), np.diag([0.0, 1.0]))


def test_number_op_equals_adag_a():
    n = ops.creation(4) @ ops.annihilation(4)
    np.testing.assert_allclose(ops.number_op(4), n, atol=1e-14)


def test_commutator_truncation_artifact():
    # [a, a^dag] = diag(1, ..., 1, -(D-1)) in a D-level truncation
    comm = ops.commutator(ops.annihilation(4), ops.creation(4))
    np.testing.assert_allclose(comm, np.diag([1.0, 1.0, 1.0, -3.0]), atol=1e-14)


def test_commutator_identity_vanishes():
    x = ops.annihilation(3) + 2.0 * ops.number_op(3)
    np.testing.assert_array_equal(ops.commutator(ops.identity(3), x), np.zeros((3, 3)))


def test_commutator_n_with_a():
    # [n, a] = -a on the retained levels
    n, a = ops.number_op(3), ops.annihilation(3)
    np.testing.assert_allclose(ops.commutator(n, a), -a, atol=1e-14)


def test_commutator_shape_mismatch():
    with pytest.raises(ValueError):
        ops.commutator(ops.annihilation(2), ops.annihilation(3))


def test_fock_ket_bounds():
    np.testing.assert_array_equal(ops.fock_ket(3, 2), [0, 0, 1])
    with pytest.raises(ValueError):
        ops.fock_ket(2, 2)
    with pytest.raises(ValueError):
        ops.fock_ket(2, -1)


def test_expectation_eigenstate():
    assert ops.expectation(ops.fock_ket(2, 1), ops.number_op(2)) == pytest.approx(1.0)


def test_expectation_superposition():
    psi = (ops.fock_ket(2, 0) + ops.fock_ket(2, 1)) / np.sqrt(2.0)
    x = ops.annihilation(2) + ops.creation(2)
    assert ops.expectation(psi, x) == pytest.approx(1.0)


def test_expectation_shape_mismatch():
    with pytest.raises(ValueError):
        ops.expectation(ops.fock_ket(2, 0), ops.number_op(3))


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=2, max_value=5), st.integers(min_value=0, max_value=2**32 - 1))
def test_expectation_real_for_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi /= np.linalg.norm(psi)
    m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    herm = m + ops.adjoint(m)
    val = ops.expectation(psi, herm)
    assert abs(val.imag) <= 1e-12
