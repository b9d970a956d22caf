"""Truncated Fock-space operator algebra.

Dense complex matrices on the levels |0>, ..., |D-1>.  All experiments in
this package use very small truncations (D = 2 by default, D <= 5 in the
robustness tests), so everything is plain dense numpy.

Note the truncation artifact: [a, a^dag] equals the identity on the first
D-1 levels but -(D-1) at the top diagonal entry.  Physics runs restrict to
states with no support on the top level, where the algebra is exact.
"""

from __future__ import annotations

import numpy as np


def annihilation(dim: int) -> np.ndarray:
    """Annihilation operator ``a`` with entries a[i, i+1] = sqrt(i+1).

    Parameters
    ----------
    dim : int
        Fock truncation D >= 1.
    """
    if dim < 1:
        raise ValueError(f"Fock dimension must be >= 1, got {dim}")
    return np.diag(np.sqrt(np.arange(1.0, dim)), k=1).astype(np.complex128)


def creation(dim: int) -> np.ndarray:
    """Creation operator ``a^dag``, the adjoint of :func:`annihilation`."""
    return adjoint(annihilation(dim))


def number_op(dim: int) -> np.ndarray:
    """Number operator n = a^dag a = diag(0, 1, ..., dim-1)."""
    if dim < 1:
        raise ValueError(f"Fock dimension must be >= 1, got {dim}")
    return np.diag(np.arange(dim, dtype=np.complex128))


def identity(dim: int) -> np.ndarray:
    if dim < 1:
        raise ValueError(f"Fock dimension must be >= 1, got {dim}")
    return np.eye(dim, dtype=np.complex128)


def adjoint(m: np.ndarray) -> np.ndarray:
    """Hermitian transpose."""
    return np.asarray(m).conj().T


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """[A, B] = AB - BA for square matrices of equal dimension."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch in commutator: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def fock_ket(dim: int, n: int) -> np.ndarray:
    """Basis ket |n> in a D-dimensional truncation."""
    if dim < 1:
        raise ValueError(f"Fock dimension must be >= 1, got {dim}")
    if not 0 <= n < dim:
        raise ValueError(f"level {n} outside truncation D={dim}")
    ket = np.zeros(dim, dtype=np.complex128)
    ket[n] = 1.0
    return ket


def expectation(psi: np.ndarray, x: np.ndarray) -> complex:
    """<psi| X |psi> for a ket ``psi`` and operator ``X``."""
    psi = np.asarray(psi)
    x = np.asarray(x)
    if x.shape != (psi.shape[0], psi.shape[0]):
        raise ValueError(
            f"shape mismatch in expectation: ket dim {psi.shape[0]}, operator {x.shape}"
        )
    return complex(np.vdot(psi, x @ psi))
