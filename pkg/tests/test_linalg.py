import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nmr_swaptest import linalg as la
from conftest import random_density


class TestKron:
    def test_pauli_products(self):
        zz = la.kron(la.SIGMA_Z, la.SIGMA_Z)
        assert np.allclose(np.diag(zz), [1, -1, -1, 1])

    def test_kron_all_order(self):
        a = np.array([[1, 0], [0, 0]])
        b = np.array([[0, 0], [0, 1]])
        out = la.kron_all([a, b, a])
        # |0 1 0> is basis index 2
        assert out[2, 2] == 1 and np.count_nonzero(out) == 1

    def test_embed_matches_kron(self):
        op = la.embed(la.SIGMA_X, 1, 3)
        assert np.array_equal(op, la.kron_all([la.ID2, la.SIGMA_X, la.ID2]))

    def test_embed_bad_site(self):
        with pytest.raises(ValueError):
            la.embed(la.SIGMA_X, 3, 3)


class TestPartialTrace:
    def test_product_state(self, rng):
        a, b, c = (random_density(rng, 2) for _ in range(3))
        rho = la.kron_all([a, b, c])
        assert la.allclose(la.partial_trace(rho, [2, 2, 2], [0]), a)
        assert la.allclose(la.partial_trace(rho, [2, 2, 2], [1, 2]), la.kron(b, c))
        assert la.allclose(la.partial_trace(rho, [2, 2, 2], [0, 2]), la.kron(a, c))

    def test_bell_state_is_maximally_mixed(self):
        psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        red = la.partial_trace(np.outer(psi, psi.conj()), [2, 2], [1])
        assert la.allclose(red, np.eye(2) / 2)

    def test_dimension_mismatch(self):
        with pytest.raises(la.DimensionError):
            la.partial_trace(np.eye(8), [2, 2], [0])

    def test_empty_keep(self):
        with pytest.raises(ValueError):
            la.partial_trace(np.eye(4), [2, 2], [])

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), keep=st.sampled_from([(0,), (1,), (2,), (0, 1), (1, 2)]))
    def test_trace_and_hermiticity_preserved(self, seed, keep):
        rho = random_density(np.random.default_rng(seed), 8)
        red = la.partial_trace(rho, [2, 2, 2], keep)
        assert abs(np.trace(red) - 1) < 1e-12
        assert la.is_hermitian(red)


class TestHelpers:
    def test_dag_and_commutator(self):
        assert la.allclose(la.commutator(la.SIGMA_X, la.SIGMA_Y), 2j * la.SIGMA_Z)
        assert la.allclose(la.dag(la.SIGMA_Y), la.SIGMA_Y)

    def test_check_unitary(self):
        assert la.check_unitary(la.SIGMA_X)
        assert not la.check_unitary(2 * la.SIGMA_X)

    def test_is_hermitian_rejects(self):
        assert not la.is_hermitian(np.array([[0, 1], [0, 0]]))

    def test_expectation(self, rng):
        rho = random_density(rng, 4)
        obs = la.kron(la.SIGMA_Z, la.ID2)
        assert abs(la.expectation(obs, rho) - np.trace(obs @ rho)) < 1e-12

    def test_spin_ops_are_half_paulis(self):
        ops = la.spin_ops(2)
        assert la.allclose(ops["z"][0], la.kron(la.SIGMA_Z, la.ID2) / 2)
        assert la.allclose(la.commutator(ops["x"][1], ops["y"][1]), 1j * ops["z"][1])

    def test_n_spins_of(self):
        assert la.n_spins_of(np.eye(8)) == 3
        with pytest.raises(la.DimensionError):
            la.n_spins_of(np.eye(16))
        with pytest.raises(la.DimensionError):
            la.n_spins_of(np.ones((2, 4)))

    def test_allclose_shape_mismatch(self):
        assert not la.allclose(np.eye(2), np.eye(4))
