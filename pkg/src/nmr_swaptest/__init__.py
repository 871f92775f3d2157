"""Density-matrix and pulse-level simulation of an NMR swap-test fidelity measurement."""

from .circuit import QubitState, fidelity_exact, fredkin_unitary, make_state, run_network
from .experiment import ExperimentSpec, calibrate, run_experiment, run_sweep, summarize
from .pulses import PulseEvent, PulseSequence, Timings, fredkin_sequence, run_sequence
from .spins import SpinSystem, hamiltonian, pseudo_pure_000

__all__ = [
    "QubitState", "fidelity_exact", "fredkin_unitary", "make_state", "run_network",
    "ExperimentSpec", "calibrate", "run_experiment", "run_sweep", "summarize",
    "PulseEvent", "PulseSequence", "Timings", "fredkin_sequence", "run_sequence",
    "SpinSystem", "hamiltonian", "pseudo_pure_000",
]
