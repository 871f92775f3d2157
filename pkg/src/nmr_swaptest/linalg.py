"""Dense complex-matrix kernel for registers of at most three spin-1/2 nuclei.

Everything here is a thin, tolerance-aware layer over numpy. Matrices are
plain ``numpy.ndarray`` objects of complex dtype; nothing is mutated in place.
"""
from __future__ import annotations

from functools import reduce
from typing import Iterable, Sequence

import numpy as np

DEFAULT_TOL = 1e-12
MAX_SPINS = 3

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


class DimensionError(ValueError):
    """Raised when matrix shapes do not fit together."""

    def __init__(self, what: str, expected, actual):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected {expected}, got {actual}")


def as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionError("matrix rank", 2, m.ndim)
    return m


def _require_square(m: np.ndarray, what: str = "square matrix") -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(what, "n x n", m.shape)


def kron(a, b) -> np.ndarray:
    """Kronecker product; ``(a⊗b)[i*p + k, j*q + l] = a[i, j] * b[k, l]``."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(mats: Iterable) -> np.ndarray:
    return reduce(kron, mats)


def dag(a) -> np.ndarray:
    return np.conj(np.asarray(a, dtype=complex)).T


def allclose(a, b, tol: float = DEFAULT_TOL) -> bool:
    """Entrywise absolute comparison."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return False
    return bool(np.max(np.abs(a - b), initial=0.0) <= tol)


def partial_trace(rho, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every subsystem not listed in ``keep``.

    Parameters
    ----------
    rho : array_like
        Square operator on the tensor product of subsystems of size ``dims``.
    dims : sequence of int
        Subsystem dimensions, most significant first (kron order).
    keep : iterable of int
        Indices of subsystems to retain, in any order; output follows the
        original subsystem ordering.

    Returns
    -------
    numpy.ndarray
        Reduced operator of size ``prod(dims[k] for k in keep)``.
    """
    rho = np.asarray(rho, dtype=complex)
    _require_square(rho)
    dims = [int(d) for d in dims]
    total = int(np.prod(dims))
    if total != rho.shape[0]:
        raise DimensionError("partial_trace dimension", total, rho.shape[0])
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise DimensionError("partial_trace keep set", "non-empty", "empty")
    n = len(dims)
    if keep[0] < 0 or keep[-1] >= n:
        raise DimensionError("partial_trace subsystem index", f"0..{n - 1}", keep)

    traced = [k for k in range(n) if k not in keep]
    t = rho.reshape(dims + dims)
    # contract row/col axes of each traced subsystem, highest first so indices stay valid
    for k in sorted(traced, reverse=True):
        nk = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + nk)
    d = int(np.prod([dims[k] for k in keep]))
    return t.reshape(d, d)


def expectation(obs, rho) -> complex:
    """Return ``Tr(obs @ rho)``."""
    obs = np.asarray(obs, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    _require_square(obs)
    _require_square(rho)
    if obs.shape != rho.shape:
        raise DimensionError("expectation operand shapes", obs.shape, rho.shape)
    # Tr(AB) = sum_ij A_ij B_ji
    return complex(np.sum(obs * rho.T))


def is_hermitian(a, tol: float = DEFAULT_TOL) -> bool:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return bool(np.max(np.abs(a - dag(a)), initial=0.0) <= tol)


def check_unitary(u, tol: float = DEFAULT_TOL) -> bool:
    """True iff ``max|u†u - I| <= tol``."""
    u = np.asarray(u, dtype=complex)
    _require_square(u)
    dev = dag(u) @ u - np.eye(u.shape[0])
    return bool(np.max(np.abs(dev)) <= tol)


def commutator(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return a @ b - b @ a


def embed(op, site: int, n: int) -> np.ndarray:
    """Place a single-spin operator on ``site`` of an ``n``-spin register."""
    if not 0 <= site < n:
        raise DimensionError("spin index", f"0..{n - 1}", site)
    mats = [ID2] * n
    mats[site] = np.asarray(op, dtype=complex)
    return kron_all(mats)


def spin_ops(n: int) -> dict[str, list[np.ndarray]]:
    """Cartesian spin operators ``I_a = sigma_a / 2`` for each of ``n`` spins."""
    return {
        "x": [embed(SIGMA_X / 2, k, n) for k in range(n)],
        "y": [embed(SIGMA_Y / 2, k, n) for k in range(n)],
        "z": [embed(SIGMA_Z / 2, k, n) for k in range(n)],
    }


def n_spins_of(rho) -> int:
    m = np.asarray(rho)
    _require_square(m, "density matrix")
    dim = m.shape[0]
    n = int(round(np.log2(dim)))
    if 2 ** n != dim or n > MAX_SPINS or n < 1:
        raise DimensionError("register dimension", "2, 4 or 8", dim)
    return n
