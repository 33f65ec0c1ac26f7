"""Vector algebra: frozen examples plus randomized structural properties."""

import numpy as np
import pytest

from fedsim.params import ParamVector, average, l1_distance, weighted_sum


def pv(*values):
    return ParamVector(np.array(values, dtype=np.float64))


class TestParamVector:
    def test_rejects_nan_and_inf(self):
        with pytest.raises(ValueError, match="non-finite"):
            pv(1.0, float("nan"))
        with pytest.raises(ValueError, match="non-finite"):
            pv(float("inf"), 0.0)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            ParamVector(np.array([], dtype=np.float64))

    def test_values_are_read_only(self):
        v = pv(1.0, 2.0)
        with pytest.raises(ValueError):
            v.values[0] = 5.0

    def test_dim(self):
        assert pv(1, 2, 3).dim == 3


class TestL1Distance:
    def test_identity_is_zero(self):
        assert l1_distance(pv(1, 2), pv(1, 2)) == 0.0

    def test_distance_to_origin(self):
        assert l1_distance(pv(0, 0, 0), pv(1, -2, 3)) == 6.0

    def test_hand_computed(self):
        # |0.5 - (-0.5)| + |-1.5 - 1.5| = 1 + 3
        assert l1_distance(pv(0.5, -1.5), pv(-0.5, 1.5)) == 4.0

    def test_dim_mismatch_names_both(self):
        with pytest.raises(ValueError, match="2 vs 3"):
            l1_distance(pv(1, 2), pv(1, 2, 3))

    def test_symmetry_and_triangle_inequality(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            dim = int(rng.integers(1, 9))
            a, b, c = (ParamVector(rng.normal(size=dim)) for _ in range(3))
            assert l1_distance(a, b) == l1_distance(b, a)
            assert l1_distance(a, c) <= l1_distance(a, b) + l1_distance(b, c) + 1e-12


class TestAverage:
    def test_single_vector_identity(self):
        assert average([pv(2, 4)]).values.tolist() == [2.0, 4.0]

    def test_midpoint(self):
        assert average([pv(0, 0), pv(2, 2)]).values.tolist() == [1.0, 1.0]

    def test_hand_mean(self):
        assert average([pv(1, 2), pv(3, 4), pv(5, 6)]).values.tolist() == [3.0, 4.0]

    def test_empty_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            average([])

    def test_dim_mismatch_rejected(self):
        with pytest.raises(ValueError, match="mismatch"):
            average([pv(1, 2), pv(1, 2, 3)])


class TestWeightedSum:
    def test_uniform_weights_equal_mean(self):
        out = weighted_sum([pv(1, 1), pv(3, 3)], [0.5, 0.5])
        assert out.values.tolist() == [2.0, 2.0]

    def test_one_hot_selects_client(self):
        out = weighted_sum([pv(1, 0), pv(0, 1)], [1.0, 0.0])
        assert out.values.tolist() == [1.0, 0.0]

    def test_hand_combination(self):
        out = weighted_sum([pv(2, 4), pv(4, 8)], [0.25, 0.75])
        assert out.values.tolist() == [3.5, 7.0]

    def test_unnormalized_weights_report_sum(self):
        with pytest.raises(ValueError, match="0.75"):
            weighted_sum([pv(1), pv(2)], [0.5, 0.25])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="2 vectors but 1"):
            weighted_sum([pv(1), pv(2)], [1.0])

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            weighted_sum([pv(1), pv(2)], [1.5, -0.5])


class TestReductionProperties:
    def test_uniform_weighted_sum_matches_average(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            k = int(rng.integers(1, 7))
            dim = int(rng.integers(1, 9))
            vs = [ParamVector(rng.normal(size=dim)) for _ in range(k)]
            ws = weighted_sum(vs, [1.0 / k] * k)
            av = average(vs)
            np.testing.assert_allclose(ws.values, av.values, rtol=1e-12, atol=1e-15)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            k = int(rng.integers(2, 7))
            dim = int(rng.integers(1, 9))
            vs = [ParamVector(rng.normal(size=dim)) for _ in range(k)]
            alphas = rng.dirichlet(np.ones(k))
            perm = rng.permutation(k)
            base = weighted_sum(vs, list(alphas))
            shuffled = weighted_sum([vs[i] for i in perm], [float(alphas[i]) for i in perm])
            np.testing.assert_allclose(shuffled.values, base.values, rtol=1e-12, atol=1e-15)

    def test_output_dim_and_finiteness(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            k = int(rng.integers(1, 7))
            dim = int(rng.integers(1, 9))
            vs = [ParamVector(rng.normal(size=dim) * 1e6) for _ in range(k)]
            out = weighted_sum(vs, list(rng.dirichlet(np.ones(k))))
            assert out.dim == dim
            assert np.all(np.isfinite(out.values))
