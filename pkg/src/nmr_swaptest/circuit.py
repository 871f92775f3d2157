"""Exact execution of the Hadamard / controlled-swap / Hadamard network.

Qubit order is (control, first target, second target), most significant first.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .linalg import ID2, kron_all, partial_trace


class InvalidStateError(ValueError):
    pass


HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def ry(angle_deg: float) -> np.ndarray:
    """Single-spin rotation ``exp(-i angle I_y)``."""
    h = np.radians(angle_deg) / 2
    return np.array([[np.cos(h), -np.sin(h)], [np.sin(h), np.cos(h)]], dtype=complex)


@dataclass(frozen=True)
class QubitState:
    """Pure qubit ``cos(θ/2)|0> - e^{iφ} sin(θ/2)|1>`` with angles in degrees."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= 180.0:
            raise InvalidStateError(f"theta must lie in [0, 180] degrees, got {self.theta}")
        if not 0.0 <= self.phi < 360.0:
            raise InvalidStateError(f"phi must lie in [0, 360) degrees, got {self.phi}")

    @property
    def amplitudes(self) -> np.ndarray:
        return make_state(self.theta, self.phi)


def make_state(theta: float, phi: float) -> np.ndarray:
    if not 0.0 <= theta <= 180.0:
        raise InvalidStateError(f"theta must lie in [0, 180] degrees, got {theta}")
    if not 0.0 <= phi < 360.0:
        raise InvalidStateError(f"phi must lie in [0, 360) degrees, got {phi}")
    t = np.radians(theta) / 2
    return np.array([np.cos(t), -np.exp(1j * np.radians(phi)) * np.sin(t)])


def _amps(state) -> np.ndarray:
    if isinstance(state, QubitState):
        return state.amplitudes
    return np.asarray(state, dtype=complex)


def fidelity_exact(psi1, psi2) -> float:
    """``|<psi1|psi2>|^2``."""
    a, b = _amps(psi1), _amps(psi2)
    return float(abs(np.vdot(a, b)) ** 2)


def fredkin_unitary() -> np.ndarray:
    """Controlled swap of qubits 1 and 2, controlled by qubit 0."""
    u = np.eye(8, dtype=complex)
    u[[5, 6]] = u[[6, 5]]  # |101> <-> |110>
    return u


@lru_cache(maxsize=None)
def _network(hadamard: str) -> np.ndarray:
    if hadamard == "standard":
        first, last = HADAMARD, HADAMARD
    elif hadamard == "pulse":
        # R_y(90) then R_-y(90); the latter is Z·H, which leaves populations alone
        first, last = ry(90.0), ry(-90.0)
    else:
        raise ValueError(f"unknown hadamard variant {hadamard!r}")
    h1 = kron_all([first, ID2, ID2])
    h2 = kron_all([last, ID2, ID2])
    u = h2 @ fredkin_unitary() @ h1
    u.setflags(write=False)
    return u


def network_unitary(hadamard: str = "standard") -> np.ndarray:
    return _network(hadamard).copy()


@dataclass
class CircuitResult:
    final_state: np.ndarray
    reduced_q1: np.ndarray
    fidelity_circuit: float


def run_network(psi1, psi2, hadamard: str = "standard") -> CircuitResult:
    """Run the swap-test network on ``|0>|psi1>|psi2>``.

    ``hadamard='pulse'`` swaps the two Hadamards for R_y(90)/R_-y(90), the
    form used at pulse level.
    """
    psi = np.kron(np.kron([1.0, 0.0], _amps(psi1)), _amps(psi2))
    out = _network(hadamard) @ psi
    rho = np.outer(out, out.conj())
    red = partial_trace(rho, [2, 2, 2], keep=[0])
    f = float(np.real(red[0, 0] - red[1, 1]))
    return CircuitResult(out, red, f)


def network_fidelities(psi1s, psi2s, hadamard: str = "standard") -> np.ndarray:
    """Batched :func:`run_network`; entries are :class:`QubitState` or amplitude pairs."""
    a = np.array([_amps(s) for s in psi1s], dtype=complex).reshape(-1, 2)
    b = np.array([_amps(s) for s in psi2s], dtype=complex).reshape(-1, 2)
    psi = np.zeros((a.shape[0], 8), dtype=complex)
    psi[:, :4] = np.einsum("ni,nj->nij", a, b).reshape(-1, 4)
    out = psi @ _network(hadamard).T
    p0 = np.sum(np.abs(out[:, :4]) ** 2, axis=1)
    p1 = np.sum(np.abs(out[:, 4:]) ** 2, axis=1)
    return p0 - p1


def swap_test_state(psi1, psi2) -> np.ndarray:
    """Closed-form output ½|0>(|ab>+|ba>) + ½|1>(|ab>-|ba>)."""
    a, b = _amps(psi1), _amps(psi2)
    ab, ba = np.kron(a, b), np.kron(b, a)
    return np.concatenate([(ab + ba) / 2, (ab - ba) / 2])


def random_states(rng: np.random.Generator, n: int) -> list:
    """Haar-random :class:`QubitState` samples."""
    theta = np.degrees(np.arccos(1 - 2 * rng.random(n)))
    phi = 360.0 * rng.random(n)
    return [QubitState(float(min(t, 180.0)), float(p % 360.0)) for t, p in zip(theta, phi)]
