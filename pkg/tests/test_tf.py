"""Polynomial and rational transfer-function arithmetic."""

import numpy as np
import pytest

from netid import FreqGrid, PolyQ, RationalTF, is_stable, tf_arith, tf_eval


class TestPolyQ:
    def test_trailing_zeros_stripped(self):
        assert PolyQ([1.0, 2.0, 0.0, 0.0]).coeffs == (1.0, 2.0)

    def test_zero_polynomial_is_canonical(self):
        assert PolyQ([0.0, 0.0]).coeffs == (0.0,)
        assert PolyQ([0.0]).is_zero
        assert PolyQ([0.0]).degree == 0

    def test_degree(self):
        assert PolyQ([3.0, 0.0, 2.0]).degree == 2

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            PolyQ([1.0, np.inf])
        with pytest.raises(ValueError):
            PolyQ([np.nan])

    def test_evaluation_matches_polyval(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            coeffs = rng.normal(size=rng.integers(1, 6))
            p = PolyQ(coeffs)
            x = rng.normal(size=7) + 1j * rng.normal(size=7)
            expected = np.polyval(np.trim_zeros(coeffs, "b")[::-1]
                                  if np.any(coeffs) else [0.0], x)
            assert np.allclose(p(x), expected, atol=1e-12)

    def test_arithmetic_matches_convolution(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            a = rng.normal(size=rng.integers(1, 5))
            b = rng.normal(size=rng.integers(1, 5))
            pa, pb = PolyQ(a), PolyQ(b)
            x = rng.normal(size=5) + 1j * rng.normal(size=5)
            assert np.allclose((pa + pb)(x), pa(x) + pb(x), atol=1e-12)
            assert np.allclose((pa - pb)(x), pa(x) - pb(x), atol=1e-12)
            assert np.allclose((pa * pb)(x), pa(x) * pb(x), atol=1e-11)


class TestRationalTF:
    def test_denominator_normalized_to_unit_constant(self):
        tf = RationalTF([0.0, 1.0], [2.0, 1.0])
        assert tf.den.coeffs[0] == 1.0
        assert tf.num.coeffs == (0.0, 0.5)
        assert tf.den.coeffs == (1.0, 0.5)

    def test_zero_denominator_constant_rejected(self):
        with pytest.raises(ValueError):
            RationalTF([1.0], [0.0, 1.0])

    def test_relative_degree_and_feedthrough(self):
        assert RationalTF([0.0, 0.0, 2.0]).relative_degree == 2
        assert RationalTF([0.5, 1.0]).relative_degree == 0
        assert RationalTF([0.0]).relative_degree is None
        assert RationalTF([0.25, 1.0]).feedthrough() == 0.25
        assert RationalTF([0.0, 1.0]).feedthrough() == 0.0

    def test_poles_in_z_plane(self):
        # den 1 - 0.5 q^-1 => pole z = 0.5
        assert np.allclose(RationalTF([1.0], [1.0, -0.5]).poles(), [0.5])
        assert RationalTF([1.0]).poles().size == 0

    def test_eval_conjugate_symmetry(self):
        tf = RationalTF([0.0, -0.3, 0.8], [1.0, -0.2, 0.05])
        om = np.linspace(0.1, np.pi - 0.1, 9)
        assert np.allclose(tf.eval_at(2 * np.pi - om), np.conj(tf.eval_at(om)))

    def test_eval_at_omega_zero_is_coefficient_sum_ratio(self):
        tf = RationalTF([0.0, -0.3, 0.8], [1.0, 0.1])
        assert np.isclose(tf.eval_at(0.0), 0.5 / 1.1)

    def test_pole_on_unit_circle_raises(self):
        tf = RationalTF([1.0], [1.0, -1.0])  # den vanishes at x = 1 (omega 0)
        with pytest.raises(ValueError, match="pole on the unit circle"):
            tf.eval_at(np.array([0.0, 1.0]))

    def test_arithmetic_consistent_with_pointwise_values(self):
        rng = np.random.default_rng(7)
        om = np.linspace(0, 2 * np.pi, 11, endpoint=False)
        for _ in range(20):
            a = RationalTF(rng.normal(size=3), [1.0, *rng.normal(size=2) * 0.2])
            b = RationalTF(rng.normal(size=2), [1.0, *rng.normal(size=1) * 0.2])
            va, vb = a.eval_at(om), b.eval_at(om)
            assert np.allclose((a + b).eval_at(om), va + vb, atol=1e-10)
            assert np.allclose((a - b).eval_at(om), va - vb, atol=1e-10)
            assert np.allclose((a * b).eval_at(om), va * vb, atol=1e-10)

    def test_module_level_wrappers(self):
        a = RationalTF([0.0, 1.0])
        b = RationalTF([1.0])
        om = np.array([0.3, 1.2])
        assert np.allclose(tf_eval(a, om), a.eval_at(om))
        assert np.allclose(tf_arith(a, b, "add").eval_at(om),
                           a.eval_at(om) + b.eval_at(om))
        assert np.allclose(tf_arith(a, b, "mul").eval_at(om), a.eval_at(om))
        assert np.allclose(tf_arith(a, b, "sub").eval_at(om),
                           a.eval_at(om) - 1.0)
        with pytest.raises(ValueError):
            tf_arith(a, b, "div")


class TestStability:
    def test_stable_pole_inside_circle(self):
        assert is_stable(RationalTF([1.0], [1.0, -0.5]))

    def test_unstable_pole_outside_circle(self):
        assert not is_stable(RationalTF([1.0], [1.0, -1.2]))

    def test_pole_on_circle_is_not_stable(self):
        assert not is_stable(RationalTF([1.0], [1.0, -1.0]))

    def test_fir_always_stable(self):
        assert is_stable(RationalTF([0.0, -0.3, 0.8]))


class TestFreqGrid:
    def test_uniform_includes_zero_and_spacing(self):
        g = FreqGrid.uniform(100)
        om = g.as_array()
        assert len(g) == 100
        assert om[0] == 0.0
        assert np.allclose(np.diff(om), 2 * np.pi / 100)
        assert om[-1] < 2 * np.pi

    def test_rejects_non_increasing(self):
        with pytest.raises(ValueError):
            FreqGrid([0.0, 0.0, 1.0])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            FreqGrid([-0.1, 1.0])
        with pytest.raises(ValueError):
            FreqGrid([0.0, 2 * np.pi])

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            FreqGrid.uniform(0)
