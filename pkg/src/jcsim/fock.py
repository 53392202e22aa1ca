"""Truncated Fock space of one cavity mode tensored with a two-level atom.

Basis ordering: the flat index of ``|n, s>`` is ``2*n + (0 if s == '+' else 1)``,
so the photon number is the slow index and every operator of the form
``P ⊗ C`` is ``np.kron(P, C)`` with ``C`` a 2x2 matrix acting on the atom.
``s = '+'`` is the ``sigma_3 = +1`` level.
"""

from functools import lru_cache
from typing import NamedTuple

import numpy as np

SIGNS = ("+", "-")

_PAULI = {
    "1": np.array([[0, 1], [1, 0]], dtype=complex),
    "3": np.array([[1, 0], [0, -1]], dtype=complex),
    "+": np.array([[0, 1], [0, 0]], dtype=complex),
    "-": np.array([[0, 0], [1, 0]], dtype=complex),
}


class BasisIndex(NamedTuple):
    n: int
    s: str


def _check_level(nu: int) -> int:
    if isinstance(nu, bool) or int(nu) != nu or nu < 1:
        raise ValueError(f"truncation level must be an integer >= 1, got {nu!r}")
    return int(nu)


def dimension(nu: int) -> int:
    return 2 * (_check_level(nu) + 1)


def flat_index(n: int, s: str, nu: int) -> int:
    """Position of ``|n, s>`` in the flat basis of ``X_nu``."""
    if s not in SIGNS:
        raise ValueError(f"atomic level must be '+' or '-', got {s!r}")
    if not 0 <= n <= nu:
        raise ValueError(f"photon number {n} outside 0..{nu}")
    return 2 * n + SIGNS.index(s)


def basis_index(k: int, nu: int) -> BasisIndex:
    if not 0 <= k < dimension(nu):
        raise ValueError(f"flat index {k} outside 0..{dimension(nu) - 1}")
    return BasisIndex(k // 2, SIGNS[k % 2])


def basis_vector(n: int, s: str, nu: int) -> np.ndarray:
    v = np.zeros(dimension(nu), dtype=complex)
    v[flat_index(n, s, nu)] = 1.0
    return v


@lru_cache(maxsize=None)
def _photon_lowering(nu: int) -> np.ndarray:
    a = np.diag(np.sqrt(np.arange(1, nu + 1, dtype=float)), k=1).astype(complex)
    a.flags.writeable = False
    return a


def _readonly(m: np.ndarray) -> np.ndarray:
    m.flags.writeable = False
    return m


@lru_cache(maxsize=None)
def annihilation(nu: int) -> np.ndarray:
    """Truncated annihilation operator ``a_nu ⊗ I``.

    ``a_nu`` is the restriction of ``a`` to photon levels ``0..nu``, which is
    an invariant subspace, so no entries are dropped.
    """
    nu = _check_level(nu)
    return _readonly(np.kron(_photon_lowering(nu), np.eye(2)))


@lru_cache(maxsize=None)
def creation(nu: int) -> np.ndarray:
    """Adjoint of :func:`annihilation`; it sends the top level ``|nu, s>`` to 0."""
    return _readonly(annihilation(nu).conj().T.copy())


@lru_cache(maxsize=None)
def number(nu: int) -> np.ndarray:
    nu = _check_level(nu)
    n = np.repeat(np.arange(nu + 1, dtype=float), 2)
    return _readonly(np.diag(n).astype(complex))


@lru_cache(maxsize=None)
def identity(nu: int) -> np.ndarray:
    return _readonly(np.eye(dimension(nu), dtype=complex))


def pauli(which: str, nu: int) -> np.ndarray:
    """``I ⊗ sigma`` for ``which`` in ``{'1', '3', '+', '-'}``.

    ``sigma_+`` has its single 1 in the upper-right corner and maps ``s_-`` to
    ``s_+``.
    """
    key = str(which)
    if key not in _PAULI:
        raise ValueError(f"unknown Pauli matrix {which!r}; expected one of 1, 3, +, -")
    nu = _check_level(nu)
    return np.kron(np.eye(nu + 1), _PAULI[key])


def pauli2(which: str) -> np.ndarray:
    """The bare 2x2 atomic matrix."""
    return _PAULI[str(which)].copy()


@lru_cache(maxsize=None)
def _photon_monomial(nu: int, l: int, lp: int) -> np.ndarray:
    a = _photon_lowering(nu)
    ad = a.T
    m = np.linalg.matrix_power(ad, l) @ np.linalg.matrix_power(a, lp)
    return _readonly(m)


def monomial(nu: int, l: int, lp: int, coeff) -> np.ndarray:
    """Normal-ordered term ``(a_nu^dag)^l (a_nu)^lp ⊗ coeff``.

    The powers are taken of the truncated matrices, so the result is the
    truncated polynomial, not a truncation of the full-space product.
    """
    nu = _check_level(nu)
    if l < 0 or lp < 0:
        raise ValueError(f"monomial powers must be >= 0, got ({l}, {lp})")
    c = np.asarray(coeff, dtype=complex)
    if c.shape != (2, 2):
        raise ValueError(f"monomial coefficient must be 2x2, got shape {c.shape}")
    return np.kron(_photon_monomial(nu, int(l), int(lp)), c)


def top_level_projector(nu: int) -> np.ndarray:
    """Projector onto photon level ``nu`` (both atomic levels)."""
    nu = _check_level(nu)
    p = np.zeros(nu + 1)
    p[nu] = 1.0
    return np.kron(np.diag(p), np.eye(2)).astype(complex)


def photon_shift(nu: int) -> np.ndarray:
    """Matrix of (row photon number) - (column photon number)."""
    n = np.repeat(np.arange(_check_level(nu) + 1), 2)
    return n[:, None] - n[None, :]
