import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmr_swaptest import circuit as cc
from nmr_swaptest.linalg import check_unitary

angles = st.tuples(st.floats(0, 180), st.floats(0, 359.999))


class TestStates:
    def test_basis_states(self):
        assert np.allclose(cc.make_state(0, 0), [1, 0])
        assert np.allclose(cc.make_state(180, 0), [0, -1])

    def test_phase_convention(self):
        assert np.allclose(cc.make_state(90, 90), np.array([1, -1j]) / np.sqrt(2))

    @pytest.mark.parametrize("theta, phi", [(-1, 0), (181, 0), (0, 360), (0, -0.1), (np.nan, 0)])
    def test_invalid(self, theta, phi):
        with pytest.raises(cc.InvalidStateError):
            cc.QubitState(theta, phi)

    def test_random_states_normalised(self, rng):
        for s in cc.random_states(rng, 50):
            assert abs(np.linalg.norm(s.amplitudes) - 1) < 1e-12


class TestFidelity:
    @pytest.mark.parametrize("t1, p1, t2, p2, expected", [
        (0, 0, 0, 0, 1.0),
        (0, 0, 180, 0, 0.0),
        (90, 0, 0, 0, 0.5),
        (90, 0, 90, 180, 0.0),
        (90, 0, 90, 90, 0.5),
    ])
    def test_known_values(self, t1, p1, t2, p2, expected):
        f = cc.fidelity_exact(cc.QubitState(t1, p1), cc.QubitState(t2, p2))
        assert abs(f - expected) < 1e-12

    @settings(max_examples=300, deadline=None)
    @given(a=angles, b=angles)
    def test_circuit_matches_overlap(self, a, b):
        s1, s2 = cc.QubitState(*a), cc.QubitState(*b)
        res = cc.run_network(s1, s2)
        assert abs(res.fidelity_circuit - cc.fidelity_exact(s1, s2)) < 1e-12

    @settings(max_examples=100, deadline=None)
    @given(a=angles, b=angles)
    def test_pulse_hadamard_variant_agrees(self, a, b):
        s1, s2 = cc.QubitState(*a), cc.QubitState(*b)
        f1 = cc.run_network(s1, s2).fidelity_circuit
        f2 = cc.run_network(s1, s2, hadamard="pulse").fidelity_circuit
        assert abs(f1 - f2) < 1e-12

    def test_reduced_state_and_closed_form(self, rng):
        for s1, s2 in zip(cc.random_states(rng, 20), cc.random_states(rng, 20)):
            res = cc.run_network(s1, s2)
            assert np.allclose(res.final_state, cc.swap_test_state(s1, s2), atol=1e-12)
            assert abs(np.trace(res.reduced_q1) - 1) < 1e-12

    def test_batched_matches_single(self, rng):
        a, b = cc.random_states(rng, 30), cc.random_states(rng, 30)
        batch = cc.network_fidelities(a, b)
        single = [cc.run_network(x, y).fidelity_circuit for x, y in zip(a, b)]
        assert np.allclose(batch, single, atol=1e-13)

    def test_unknown_hadamard(self):
        with pytest.raises(ValueError):
            cc.network_unitary("nope")


class TestFredkin:
    def test_swaps_targets_when_control_set(self):
        f = cc.fredkin_unitary()
        assert check_unitary(f)
        assert f[6, 5] == 1 and f[5, 6] == 1
        assert np.array_equal(f[:5, :5], np.eye(5))

    def test_involution(self):
        f = cc.fredkin_unitary()
        assert np.array_equal(f @ f, np.eye(8))
