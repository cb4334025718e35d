import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from phasemem.energy import hopfield_energy
from phasemem.errors import ConfigurationError
from phasemem.phase import (CouplingMatrix, NetworkTopology, integrate_step, integrate_trace, kuramoto_rhs,
                            wrap_phase)

from conftest import STORED_PATTERNS, fd_grad, random_symmetric


class TestTopology:
    def test_flat_mask_all_off_diagonal(self):
        t = NetworkTopology.flat(4)
        assert t.n_oscillators == 4
        assert np.array_equal(t.coupling_mask, ~np.eye(4, dtype=bool))
        assert t.inputs == (0, 1) and t.outputs == (2, 3) and t.hidden == ()

    def test_layered_is_bipartite_between_neighbours(self):
        t = NetworkTopology.layered([2, 4, 2])
        m = t.coupling_mask
        assert t.n_oscillators == 8
        assert not m[:2, :2].any() and not m[2:6, 2:6].any() and not m[6:, 6:].any()
        assert m[:2, 2:6].all() and m[2:6, 6:].all()
        assert not m[:2, 6:].any()
        assert t.inputs == (0, 1) and t.outputs == (6, 7) and t.hidden == (2, 3, 4, 5)

    def test_rejects_asymmetric_mask(self):
        m = np.zeros((3, 3), bool)
        m[0, 1] = True
        with pytest.raises(ConfigurationError):
            NetworkTopology((3,), m, (0,), (2,))

    def test_rejects_bad_sizes(self):
        with pytest.raises(ConfigurationError):
            NetworkTopology.layered([2, 0, 2])
        with pytest.raises(ConfigurationError):
            NetworkTopology.flat(1)

    def test_masked_pairs(self):
        t = NetworkTopology.flat(3, 1)
        assert t.masked_pairs() == [(0, 1), (0, 2), (1, 2)]
        assert len(t.masked_pairs(symmetric=False)) == 6


class TestCouplingMatrix:
    def test_invariants_enforced(self):
        t = NetworkTopology.flat(3, 1)
        with pytest.raises(ConfigurationError):
            CouplingMatrix(np.eye(3), t.coupling_mask)
        k = np.zeros((3, 3))
        k[0, 1] = 0.5
        with pytest.raises(ConfigurationError):
            CouplingMatrix(k, t.coupling_mask, symmetric=True)
        assert CouplingMatrix(k, t.coupling_mask, symmetric=False).k[0, 1] == 0.5
        lay = NetworkTopology.layered([1, 1, 1])
        k = np.zeros((3, 3))
        k[0, 2] = k[2, 0] = 1.0
        with pytest.raises(ConfigurationError):
            CouplingMatrix.for_topology(k, lay)

    def test_random_uniform_respects_range_and_mask(self, rng):
        t = NetworkTopology.layered([2, 4, 2])
        k = CouplingMatrix.random_uniform(t, -0.25, 0.25, rng)
        assert np.all(np.abs(k.k) <= 0.25)
        assert np.all(k.k[~t.coupling_mask] == 0)
        assert np.array_equal(k.k, k.k.T)

    def test_immutable(self, rng):
        k = CouplingMatrix.zeros(NetworkTopology.flat(4))
        with pytest.raises(ValueError):
            k.k[0, 1] = 1.0


class TestRhs:
    def test_two_oscillator_example(self):
        v = kuramoto_rhs([0.0, np.pi / 2], [[0, 1], [1, 0]], [0.0, 0.0])
        np.testing.assert_allclose(v, [1.0, -1.0], atol=1e-15)

    def test_zero_coupling_gives_frequencies(self, rng):
        dw = rng.normal(size=5)
        np.testing.assert_array_equal(kuramoto_rhs(rng.uniform(-3, 3, 5), np.zeros((5, 5)), dw), dw)

    @pytest.mark.parametrize("p", STORED_PATTERNS)
    def test_stored_pattern_is_fixed_point(self, p, two_pattern_k):
        phi = np.where(p > 0, 0.0, np.pi)
        assert np.max(np.abs(kuramoto_rhs(phi, two_pattern_k))) < 1e-15

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            kuramoto_rhs([0, 1, 2], np.zeros((2, 2)))
        with pytest.raises(ConfigurationError):
            kuramoto_rhs([0, 1], np.zeros((2, 2)), [1, 2, 3])

    def test_batched_matches_loop(self, rng):
        k = random_symmetric(4, rng)
        phis = rng.uniform(-np.pi, np.pi, (3, 4))
        np.testing.assert_allclose(kuramoto_rhs(phis, k), [kuramoto_rhs(p, k) for p in phis])

    @settings(max_examples=50, deadline=None)
    @given(n=st.sampled_from([2, 4, 8]), seed=st.integers(0, 2**32 - 1))
    def test_gradient_flow_identity(self, n, seed):
        rng = np.random.default_rng(seed)
        k = random_symmetric(n, rng)
        phi = rng.uniform(-np.pi, np.pi, n)
        g = fd_grad(lambda x: hopfield_energy(x, k), phi)
        assert np.max(np.abs(kuramoto_rhs(phi, k) + g)) <= 1e-6

    @settings(max_examples=30, deadline=None)
    @given(c=st.floats(-100, 100), seed=st.integers(0, 2**32 - 1))
    def test_translation_invariance(self, c, seed):
        rng = np.random.default_rng(seed)
        k = random_symmetric(5, rng)
        phi = rng.uniform(-np.pi, np.pi, 5)
        np.testing.assert_allclose(kuramoto_rhs(phi + c, k), kuramoto_rhs(phi, k), atol=1e-11)


class TestIntegration:
    def test_euler_step(self):
        out = integrate_step([0.0, np.pi / 2], [[0, 1], [1, 0]], None, 0.001)
        np.testing.assert_allclose(out - [0, np.pi / 2], [0.001, -0.001], atol=1e-15)

    def test_free_rotation(self):
        out = integrate_step([0.3, 0.0], np.zeros((2, 2)), [1.0, 0.0], 0.5)
        assert out[0] == 0.8 and out[1] == 0.0

    def test_rejects_nonpositive_dt(self):
        with pytest.raises(ConfigurationError):
            integrate_step([0, 0], np.zeros((2, 2)), None, 0.0)
        with pytest.raises(ConfigurationError):
            integrate_step([0, 0], np.zeros((2, 2)), None, 0.1, method="leapfrog")

    def test_rk4_beats_euler(self, rng):
        k = random_symmetric(4, rng)
        phi0 = rng.uniform(-np.pi, np.pi, 4)
        dw = rng.normal(scale=0.2, size=4)
        _, ref = integrate_trace(phi0, k, dw, 1.0, 1e-4, method="rk4")
        _, eu = integrate_trace(phi0, k, dw, 1.0, 1e-2)
        _, rk = integrate_trace(phi0, k, dw, 1.0, 1e-2, method="rk4")
        err_eu = np.abs(eu[-1] - ref[-1]).max()
        err_rk = np.abs(rk[-1] - ref[-1]).max()
        assert err_rk < err_eu / 100

    def test_sample_count_and_first_sample(self, rng):
        phi0 = rng.uniform(size=3)
        t, ph = integrate_trace(phi0, np.zeros((3, 3)), None, 1.0, 0.001, 100)
        assert ph.shape == (11, 3) and t.size == 11
        np.testing.assert_array_equal(ph[0], phi0)
        np.testing.assert_allclose(t[-1], 1.0)

    def test_deterministic(self, rng):
        k = random_symmetric(4, rng)
        phi0 = rng.uniform(size=4)
        a = integrate_trace(phi0, k, None, 0.5, 1e-3, 7)[1]
        b = integrate_trace(phi0, k, None, 0.5, 1e-3, 7)[1]
        assert a.tobytes() == b.tobytes()

    def test_locks_to_rest(self, rng):
        k = np.abs(random_symmetric(4, rng)) + 0.2 * ~np.eye(4, dtype=bool)
        _, ph = integrate_trace(rng.uniform(-np.pi, np.pi, 4), k, None, 60.0, 1e-2, 100)
        assert np.linalg.norm(kuramoto_rhs(ph[-1], k)) < 1e-6

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            integrate_trace([0, 0], np.zeros((2, 2)), None, 0.0001, 0.001)
        with pytest.raises(ConfigurationError):
            integrate_trace([0, 0], np.zeros((2, 2)), None, 1.0, 0.001, 0)


def test_wrap_phase_range():
    x = np.array([-np.pi, np.pi, 3 * np.pi, 0.1, -7.0])
    w = wrap_phase(x)
    assert np.all(w >= -np.pi) and np.all(w < np.pi)
    np.testing.assert_allclose(np.cos(w), np.cos(x), atol=1e-12)
    assert wrap_phase(np.pi) == -np.pi
