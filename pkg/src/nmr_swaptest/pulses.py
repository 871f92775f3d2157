"""Pulse-level propagation of deviation density matrices.

Pulses are instantaneous ideal rotations; their durations only feed the
relaxation bookkeeping. Free evolution happens during ``delay`` events.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .circuit import QubitState, fredkin_unitary
from .linalg import DimensionError, dag, embed, n_spins_of
from .spins import SpinSystem, hamiltonian, po_basis, po_coefficients, po_recompose

KINDS = ("rf_pulse", "transition_pulse", "delay", "gradient")


class PulseError(ValueError):
    pass


# ---------------------------------------------------------------- events

@dataclass(frozen=True)
class PulseEvent:
    kind: str
    target: object = None  # spin index, (p, q) basis-index pair, or None
    angle: float = 0.0  # degrees
    phase: float = 0.0  # degrees from +x towards +y
    duration: float = 0.0  # seconds

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PulseError(f"unknown event kind {self.kind!r}")
        if self.duration < 0:
            raise PulseError(f"negative duration {self.duration}")
        if self.kind == "rf_pulse" and not isinstance(self.target, (int, np.integer)):
            raise PulseError(f"rf_pulse needs an integer spin target, got {self.target!r}")
        if self.kind == "transition_pulse":
            p, q = self.target
            object.__setattr__(self, "target", (int(p), int(q)))
            _flip_bit(p, q)


def rf(spin, angle, phase, duration=0.0):
    return PulseEvent("rf_pulse", int(spin), float(angle), float(phase), float(duration))


def tp(pair, angle, phase, duration=0.0):
    return PulseEvent("transition_pulse", tuple(pair), float(angle), float(phase), float(duration))


def delay(duration):
    return PulseEvent("delay", None, 0.0, 0.0, float(duration))


def gradient(duration=0.0):
    return PulseEvent("gradient", None, 0.0, 0.0, float(duration))


@dataclass(frozen=True)
class PulseSequence:
    events: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))

    @property
    def total_duration(self) -> float:
        return float(sum(e.duration for e in self.events))

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.events + other.events)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def to_text(self, n_spins: int = 3) -> str:
        lines = []
        for e in self.events:
            if e.kind == "rf_pulse":
                tgt = str(e.target)
            elif e.kind == "transition_pulse":
                tgt = "-".join(format(x, f"0{n_spins}b") for x in e.target)
            else:
                tgt = "-"
            lines.append(f"{e.kind} {tgt} {e.angle!r} {e.phase!r} {e.duration!r}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "PulseSequence":
        events = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 5:
                raise PulseError(f"line {lineno}: expected 5 fields, got {len(parts)}")
            kind, tgt, angle, phase, dur = parts
            if kind == "rf_pulse":
                target = int(tgt)
            elif kind == "transition_pulse":
                a, b = tgt.split("-")
                target = (int(a, 2), int(b, 2))
            else:
                target = None
            try:
                events.append(PulseEvent(kind, target, float(angle), float(phase), float(dur)))
            except (TypeError, ValueError) as exc:
                raise PulseError(f"line {lineno}: {exc}") from None
        return cls(tuple(events))


# ---------------------------------------------------------------- unitaries

def _flip_bit(p: int, q: int) -> int:
    diff = int(p) ^ int(q)
    if diff == 0 or diff & (diff - 1):
        raise PulseError(f"transition {p:b}<->{q:b} must differ in exactly one spin")
    return diff


def rf_unitary(spin: int, angle: float, phase: float, n: int = 3) -> np.ndarray:
    """``exp(-i angle (cos(phase) I_x + sin(phase) I_y))`` on one spin."""
    if not 0 <= spin < n:
        raise PulseError(f"spin index {spin} outside 0..{n - 1}")
    h = np.radians(angle) / 2
    ph = np.radians(phase)
    u = np.array([[np.cos(h), -1j * np.sin(h) * np.exp(-1j * ph)],
                  [-1j * np.sin(h) * np.exp(1j * ph), np.cos(h)]])
    return embed(u, spin, n)


def transition_unitary(pair, angle: float, phase: float, n: int = 3) -> np.ndarray:
    """Rotation confined to the two-level subspace of ``pair``.

    The member whose flipped spin is up (|0>) plays the role of the
    fictitious spin's |0>; identity acts on every other basis state.
    """
    p, q = (int(x) for x in pair)
    dim = 2 ** n
    if not (0 <= p < dim and 0 <= q < dim):
        raise PulseError(f"transition {pair} outside a {dim}-level register")
    bit = _flip_bit(p, q)
    lo, hi = (p, q) if not p & bit else (q, p)
    h = np.radians(angle) / 2
    ph = np.radians(phase)
    u = np.eye(dim, dtype=complex)
    u[lo, lo] = u[hi, hi] = np.cos(h)
    u[hi, lo] = -1j * np.sin(h) * np.exp(1j * ph)
    u[lo, hi] = -1j * np.sin(h) * np.exp(-1j * ph)
    return u


def evolution_unitary(t: float, sys: SpinSystem) -> np.ndarray:
    if t < 0:
        raise PulseError(f"negative evolution time {t}")
    return np.diag(np.exp(-1j * np.real(np.diag(hamiltonian(sys))) * t))


def event_unitary(event: PulseEvent, sys: SpinSystem, flip_error: float = 0.0) -> np.ndarray:
    n = sys.n_spins
    scale = 1.0 + flip_error
    if event.kind == "rf_pulse":
        return rf_unitary(event.target, event.angle * scale, event.phase, n)
    if event.kind == "transition_pulse":
        return transition_unitary(event.target, event.angle * scale, event.phase, n)
    if event.kind == "delay":
        return evolution_unitary(event.duration, sys)
    raise PulseError("gradient events are not unitary")


def compose_unitary(seq: PulseSequence | Iterable[PulseEvent], sys: SpinSystem,
                    flip_error: float = 0.0) -> np.ndarray:
    """Product of the coherent events' propagators, later events on the left."""
    u = np.eye(sys.dim, dtype=complex)
    for e in seq:
        u = event_unitary(e, sys, flip_error) @ u
    return u


# ---------------------------------------------------------------- state maps

def _conj(u, rho):
    return u @ rho @ dag(u)


def _check(rho, sys):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (sys.dim, sys.dim):
        raise DimensionError("density matrix", (sys.dim, sys.dim), rho.shape)
    return rho


def apply_rf(rho, spin: int, angle: float, phase: float, sys: SpinSystem | None = None):
    rho = np.asarray(rho, dtype=complex)
    n = sys.n_spins if sys is not None else n_spins_of(rho)
    return _conj(rf_unitary(spin, angle, phase, n), rho)


def apply_transition_pulse(rho, transition, angle: float, phase: float):
    rho = np.asarray(rho, dtype=complex)
    return _conj(transition_unitary(transition, angle, phase, n_spins_of(rho)), rho)


def free_evolution(rho, t: float, sys: SpinSystem):
    """``rho -> exp(-iHt) rho exp(iHt)``; elementwise since H is diagonal."""
    if t < 0:
        raise PulseError(f"negative evolution time {t}")
    rho = _check(rho, sys)
    e = np.real(np.diag(hamiltonian(sys)))
    return rho * np.exp(-1j * np.subtract.outer(e, e) * t)


@lru_cache(maxsize=None)
def _coherence_orders(n: int) -> np.ndarray:
    ones = np.array([bin(s).count("1") for s in range(2 ** n)])
    return np.subtract.outer(ones, ones)


def gradient_crush(rho, keep_zero_quantum: bool = False):
    """Dephase coherences.

    By default every off-diagonal element is removed. With
    ``keep_zero_quantum`` only elements of non-zero total coherence order are.
    """
    rho = np.asarray(rho, dtype=complex)
    if keep_zero_quantum:
        mask = _coherence_orders(n_spins_of(rho)) == 0
    else:
        mask = np.eye(rho.shape[0], dtype=bool)
    return np.where(mask, rho, 0)


def relaxation_factors(t: float, sys: SpinSystem) -> np.ndarray:
    """Per-product-operator damping: T2 for each transverse factor, T1 for each Iz."""
    comps = po_basis(sys.n_spins)[1]
    e2 = np.exp(-t / np.array(sys.t2))
    e1 = np.exp(-t / np.array(sys.t1))
    out = np.ones(len(comps))
    for i, cs in enumerate(comps):
        for k, c in enumerate(cs):
            if c in "xy":
                out[i] *= e2[k]
            elif c == "z":
                out[i] *= e1[k]
    return out


def relax(rho, t: float, sys: SpinSystem):
    """Phenomenological relaxation of the deviation matrix over ``t`` seconds.

    Longitudinal terms decay to zero rather than to thermal equilibrium, and
    the identity component (the trace) is untouched.
    """
    if t < 0:
        raise PulseError(f"negative relaxation time {t}")
    rho = _check(rho, sys)
    if t == 0:
        return rho.copy()
    c = po_coefficients(rho) * relaxation_factors(t, sys)
    return po_recompose(c, sys.n_spins)


def run_sequence(rho, seq: PulseSequence, sys: SpinSystem, noise_on: bool = False,
                 flip_error: float = 0.0, keep_zero_quantum: bool = False):
    """Fold the events over ``rho``; with ``noise_on`` each event is followed by relaxation."""
    rho = _check(rho, sys)
    for e in seq:
        if e.kind == "gradient":
            rho = gradient_crush(rho, keep_zero_quantum)
        elif e.kind == "delay":
            rho = free_evolution(rho, e.duration, sys)
        else:
            rho = _conj(event_unitary(e, sys, flip_error), rho)
        if noise_on and e.duration > 0:
            rho = relax(rho, e.duration, sys)
    return rho


# ---------------------------------------------------------------- the experiment's sequences

@dataclass(frozen=True)
class Timings:
    """Event durations in seconds and the target length of the whole experiment."""

    rf: float = 5e-3
    transition: float = 20e-3
    gradient: float = 1e-3
    total: float = 0.3


# Transition ladder |101> <-> |111> <-> |110> inside the control-on block.
FREDKIN_TRANSITIONS = ((0b101, 0b111), (0b110, 0b111), (0b101, 0b111))
# With these phases the three π pulses give CSWAP times diag phases that depend
# only on the control and the first target: (1, 1, i, i) on |100>,|101>,|110>,|111>.
FREDKIN_PHASES = (0.0, 90.0, 270.0)


def _z_rotation(spin: int, angle: float, dur: float) -> list:
    """``exp(-i angle Iz)`` as x(90) · y(-angle) · -x(90) composite."""
    angle = (angle + 180.0) % 360.0 - 180.0
    y_phase = 270.0 if angle > 0 else 90.0
    return [rf(spin, 90.0, 0.0, dur), rf(spin, abs(angle), y_phase, dur),
            rf(spin, 90.0, 180.0, dur)]


def coupling_delay(sys: SpinSystem) -> float:
    """Delay giving the control / first-target Iz Iz phase the Fredkin block needs."""
    j = sys.j[0, 1]
    if j == 0:
        raise PulseError("control/first-target coupling J01 is zero; cannot build the Fredkin block")
    return (1.0 / (4.0 * j)) % (2.0 / abs(j))


def fredkin_sequence(sys: SpinSystem | None = None, timings: Timings | None = None) -> PulseSequence:
    """Controlled swap from three transition-selective π pulses plus phase repair.

    After TP1-TP3 the control-on block carries a phase ``i`` on states with the
    first target down. A J-coupling delay between control and first target
    (second target refocused by a pair of π pulses) converts that into a phase
    acting on the targets alone, and a composite z rotation on the control
    removes what remains. The composed propagator equals CSWAP times a diagonal
    phase that is identical in both control branches.
    """
    sys = sys or SpinSystem()
    tm = timings or Timings()
    events = [tp(pair, 180.0, ph, tm.transition)
              for pair, ph in zip(FREDKIN_TRANSITIONS, FREDKIN_PHASES)]
    tau = coupling_delay(sys)
    events += [delay(tau / 2), rf(2, 180.0, 0.0, tm.rf), delay(tau / 2), rf(2, 180.0, 0.0, tm.rf)]

    # control z angle from the residual phase between the two control branches
    d = compose_unitary(events, sys) @ fredkin_unitary().T
    rel = d[4, 4] / d[0, 0]
    events += _z_rotation(0, -float(np.degrees(np.angle(rel))), tm.rf)
    return PulseSequence(tuple(events))


def preparation_sequence(psi1: QubitState, psi2: QubitState,
                         timings: Timings | None = None) -> PulseSequence:
    """Selective pulses taking |0> to ``cos(θ/2)|0> - e^{iφ} sin(θ/2)|1>`` on spins 1 and 2."""
    tm = timings or Timings()
    return PulseSequence((rf(1, psi1.theta, (psi1.phi - 90.0) % 360.0, tm.rf),
                          rf(2, psi2.theta, (psi2.phi - 90.0) % 360.0, tm.rf)))


def network_sequence(sys: SpinSystem | None = None, timings: Timings | None = None) -> PulseSequence:
    """R_y(90) on the control, Fredkin block, R_-y(90) on the control."""
    tm = timings or Timings()
    return (PulseSequence((rf(0, 90.0, 90.0, tm.rf),))
            + fredkin_sequence(sys, tm)
            + PulseSequence((rf(0, 90.0, 270.0, tm.rf),)))


def reading_events(timings: Timings | None = None, settle: float = 0.0) -> PulseSequence:
    """Gradient, optional z-storage delay, then 90_y on the control."""
    tm = timings or Timings()
    ev = [gradient(tm.gradient)]
    if settle > 0:
        ev.append(delay(settle))
    ev.append(rf(0, 90.0, 90.0, tm.rf))
    return PulseSequence(tuple(ev))


def settle_delay(sys: SpinSystem | None = None, timings: Timings | None = None) -> float:
    """Storage delay that brings preparation + network + readout up to ``timings.total``."""
    tm = timings or Timings()
    dummy = QubitState(0.0, 0.0)
    busy = (preparation_sequence(dummy, dummy, tm) + network_sequence(sys, tm)
            + reading_events(tm)).total_duration
    return max(0.0, tm.total - busy)


def full_sequence(psi1: QubitState, psi2: QubitState, sys: SpinSystem | None = None,
                  timings: Timings | None = None) -> PulseSequence:
    tm = timings or Timings()
    return (preparation_sequence(psi1, psi2, tm) + network_sequence(sys, tm)
            + reading_events(tm, settle_delay(sys, tm)))
