"""Simulator: kernel backends, randomness contract, divergence handling."""

import numpy as np
import pytest

from netid import (ExcitationSpec, NetworkModel, RationalTF,
                   SimulationDiverged, active_backend, impulse_response,
                   simulate, simulate_inputs)
from netid.kernels import HAVE_NUMBA

from conftest import make_two_node_loop

BACKENDS = ["numpy"] + (["numba"] if HAVE_NUMBA else [])


class TestKernelBasics:
    def test_no_edges_passthrough(self):
        m = NetworkModel(2, {})
        r = np.arange(10.0).reshape(2, 5)
        rec = simulate_inputs(m, r)
        assert np.array_equal(rec.w, r)

    def test_chain_is_pure_delay(self, two_node_chain):
        r = np.zeros((2, 6))
        r[0, 0] = 1.0
        rec = simulate_inputs(two_node_chain, r)
        assert np.array_equal(rec.w[0], r[0])
        assert np.array_equal(rec.w[1], np.array([0, 1, 0, 0, 0, 0.0]))

    def test_feedthrough_loop_solved_exactly(self):
        # static gains 0.5 each way: w = (I - D0)^-1 r at every sample
        m = NetworkModel(2, {(1, 2): RationalTF([0.5]),
                             (2, 1): RationalTF([0.5])})
        r = np.zeros((2, 3))
        r[0, 0] = 1.0
        rec = simulate_inputs(m, r)
        assert np.allclose(rec.w[:, 0], [4.0 / 3.0, 2.0 / 3.0])
        assert np.allclose(rec.w[:, 1:], 0.0)

    def test_rational_edge_recursion(self):
        # G21 = 0.3 q^-1 / (1 - 0.5 q^-1): w2(t) = 0.5 w2(t-1) + 0.3 w1(t-1)
        m = NetworkModel(2, {(2, 1): RationalTF([0.0, 0.3], [1.0, -0.5])})
        r = np.zeros((2, 5))
        r[0, 0] = 1.0
        rec = simulate_inputs(m, r)
        assert np.allclose(rec.w[1], [0.0, 0.3, 0.15, 0.075, 0.0375])

    def test_input_shape_validation(self, two_node_chain):
        with pytest.raises(ValueError, match="must be"):
            simulate_inputs(two_node_chain, np.zeros((3, 4)))
        with pytest.raises(ValueError, match="shape"):
            simulate_inputs(two_node_chain, np.zeros((2, 4)),
                            v=np.zeros((2, 3)))


class TestBackends:
    @pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")
    def test_backends_agree_on_case_study(self, case_study):
        spec = ExcitationSpec(range(1, 21), N=400, seed=42)
        w_numba = simulate(case_study, spec, backend="numba").w
        w_numpy = simulate(case_study, spec, backend="numpy").w
        assert np.allclose(w_numba, w_numpy, rtol=0, atol=1e-12)

    @pytest.mark.parametrize("backend", BACKENDS)
    def test_seed_determinism_bit_exact(self, case_study, backend):
        spec = ExcitationSpec([3, 4, 5], N=300, seed=7)
        rec1 = simulate(case_study, spec, backend=backend)
        rec2 = simulate(case_study, spec, backend=backend)
        assert np.array_equal(rec1.w, rec2.w)
        assert np.array_equal(rec1.r, rec2.r)
        assert np.array_equal(rec1.v, rec2.v)

    def test_unknown_backend_rejected(self, two_node_chain):
        with pytest.raises(ValueError, match="backend"):
            simulate_inputs(two_node_chain, np.zeros((2, 3)), backend="cuda")

    def test_env_selection(self, monkeypatch):
        monkeypatch.setenv("NETID_BACKEND", "numpy")
        assert active_backend() == "numpy"
        monkeypatch.setenv("NETID_BACKEND", "torch")
        with pytest.raises(ValueError, match="NETID_BACKEND"):
            active_backend()


class TestRandomnessContract:
    def test_documented_draw_order(self, case_study):
        spec = ExcitationSpec([3, 4], N=50, seed=123, r_variance=2.0,
                              v_variance=0.5)
        rec = simulate(case_study, spec)
        rng = np.random.default_rng(123)
        r_full = rng.standard_normal((20, 50)) * np.sqrt(2.0)
        v = rng.standard_normal((20, 50)) * np.sqrt(0.5)
        expect_r = np.zeros_like(r_full)
        expect_r[[2, 3]] = r_full[[2, 3]]
        assert np.array_equal(rec.r, expect_r)
        assert np.array_equal(rec.v, v)

    def test_excitation_realization_independent_of_excited_set(self, case_study):
        a = simulate(case_study, ExcitationSpec([3], N=40, seed=9))
        b = simulate(case_study, ExcitationSpec([3, 4, 5], N=40, seed=9))
        assert np.array_equal(a.node_excitation(3), b.node_excitation(3))
        assert np.array_equal(a.v, b.v)

    def test_unexcited_rows_zero(self, case_study):
        rec = simulate(case_study, ExcitationSpec([3], N=30, seed=1))
        assert np.all(rec.r[[0, 1, 4]] == 0.0)
        assert np.any(rec.r[2] != 0.0)

    def test_excited_node_out_of_range(self, two_node_chain):
        with pytest.raises(ValueError, match="excited node"):
            simulate(two_node_chain, ExcitationSpec([5], N=10, seed=0))


class TestDivergence:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_unstable_loop_raises_with_sample_index(self, backend):
        m = make_two_node_loop(10.0, 10.0)  # loop gain 100 per revolution
        r = np.zeros((2, 2000))
        r[0, 0] = 1.0
        with pytest.raises(SimulationDiverged, match="sample") as exc:
            simulate_inputs(m, r, backend=backend)
        assert 0 < exc.value.sample < 2000

    def test_stable_loop_does_not_raise(self):
        m = make_two_node_loop(0.5, 0.5)
        rec = simulate(m, ExcitationSpec([1, 2], N=500, seed=0))
        assert np.all(np.isfinite(rec.w))


class TestImpulseResponse:
    def test_chain_impulse(self, two_node_chain):
        h = impulse_response(two_node_chain, 1, 5)
        assert h.shape == (2, 5)
        assert np.array_equal(h[0], [1, 0, 0, 0, 0.0])
        assert np.array_equal(h[1], [0, 1, 0, 0, 0.0])

    def test_loop_impulse_matches_geometric_series(self):
        m = make_two_node_loop(0.5, 0.5)
        h = impulse_response(m, 1, 8)
        # w1 from r1: 1/(1 - 0.25 q^-2) => 1, 0, 0.25, 0, 0.0625, ...
        assert np.allclose(h[0], [1, 0, 0.25, 0, 0.0625, 0, 0.015625, 0])

    def test_bad_node(self, two_node_chain):
        with pytest.raises(ValueError):
            impulse_response(two_node_chain, 3, 4)
