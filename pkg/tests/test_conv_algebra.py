"""Sliding-patch operator algebra against nested-loop oracles."""

import numpy as np
import pytest

from convdict.conv_algebra import (
    correlation_matrix,
    learning_dictionary,
    swap_matrix,
    unvectorize_lex,
    valid_correlate,
    vectorize_lex,
)
from convdict.errors import DimensionError


def corr_loops(x, f):
    a0, a1 = f.shape
    h, w = x.shape[0] - a0 + 1, x.shape[1] - a1 + 1
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            out[i, j] = np.sum(x[i : i + a0, j : j + a1] * f)
    return out


class TestVectorize:
    def test_row_major_order(self):
        np.testing.assert_array_equal(
            vectorize_lex([[1, 2], [3, 4]]), [1.0, 2.0, 3.0, 4.0]
        )

    def test_single_entry(self):
        np.testing.assert_array_equal(vectorize_lex([[7]]), [7.0])

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        p = rng.normal(size=(3, 3))
        np.testing.assert_array_equal(unvectorize_lex(vectorize_lex(p), 3, 3), p)

    def test_bad_length_rejected(self):
        with pytest.raises(DimensionError):
            unvectorize_lex(np.zeros(5), 2, 3)

    def test_non_2d_rejected(self):
        with pytest.raises(DimensionError):
            vectorize_lex(np.zeros(4))


class TestValidCorrelate:
    def test_unit_filter_is_identity(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(4, 4))
        np.testing.assert_array_equal(valid_correlate(x, [[1.0]]), x)

    def test_constant_sums(self):
        out = valid_correlate(np.ones((3, 3)), np.ones((2, 2)))
        np.testing.assert_array_equal(out, np.full((2, 2), 4.0))

    def test_matches_loops(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(5, 5))
        f = rng.normal(size=(3, 3))
        np.testing.assert_allclose(valid_correlate(x, f), corr_loops(x, f), atol=1e-12)

    def test_oversized_filter_rejected(self):
        with pytest.raises(DimensionError):
            valid_correlate(np.zeros((2, 2)), np.zeros((3, 3)))


class TestLearningDictionary:
    def test_single_window_is_vectorized_source(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        d = learning_dictionary(x, 2)
        assert d.data.shape == (1, 4)
        np.testing.assert_array_equal(d.data[0], vectorize_lex(x))

    def test_shape(self):
        d = learning_dictionary(np.zeros((6, 6)), 3)
        assert d.data.shape == (16, 9)
        assert d.n_positions == 16

    def test_product_equals_correlation(self):
        # the defining identity: D vec(f) = vec(x corr f)
        rng = np.random.default_rng(3)
        for c, a in ((3, 2), (5, 3), (7, 4)):
            x = rng.normal(size=(c, c))
            f = rng.normal(size=(a, a))
            d = learning_dictionary(x, a)
            np.testing.assert_allclose(
                d.data @ vectorize_lex(f),
                vectorize_lex(corr_loops(x, f)),
                atol=1e-12,
            )

    def test_full_size_filter_gives_self_inner_product(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(4, 4))
        d = learning_dictionary(x, 4)
        got = d.data @ vectorize_lex(x)
        np.testing.assert_allclose(got, [np.sum(x * x)], atol=1e-12)

    def test_linear_in_source(self):
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=(2, 5, 5))
        da = learning_dictionary(2.0 * x + 3.0 * y, 3)
        db = learning_dictionary(x, 3)
        dc = learning_dictionary(y, 3)
        np.testing.assert_allclose(da.data, 2.0 * db.data + 3.0 * dc.data, atol=1e-12)

    def test_rejects_nonsquare_source(self):
        with pytest.raises(DimensionError):
            learning_dictionary(np.zeros((3, 4)), 2)

    def test_rejects_oversized_filter(self):
        with pytest.raises(DimensionError):
            learning_dictionary(np.zeros((3, 3)), 4)

    def test_scaled_keeps_geometry(self):
        d = learning_dictionary(np.ones((4, 4)), 2)
        s = d.scaled(0.5)
        assert (s.source_size, s.filter_size) == (4, 2)
        np.testing.assert_array_equal(s.data, 0.5 * d.data)


class TestCorrelationMatrix:
    def test_applies_filter_to_any_grid(self):
        rng = np.random.default_rng(6)
        for n, a in ((4, 2), (6, 3), (5, 1)):
            f = rng.normal(size=(a, a))
            mat = correlation_matrix(f, n)
            assert mat.shape == ((n - a + 1) ** 2, n * n)
            g = rng.normal(size=(n, n))
            np.testing.assert_allclose(
                mat @ vectorize_lex(g), vectorize_lex(corr_loops(g, f)), atol=1e-12
            )

    def test_unit_filter_is_identity(self):
        np.testing.assert_array_equal(correlation_matrix([[1.0]], 3), np.eye(9))

    def test_grid_too_small(self):
        with pytest.raises(DimensionError):
            correlation_matrix(np.zeros((3, 3)), 2)


class TestSwapMatrix:
    def test_cascade_reassociation(self):
        # x corr f0 corr f1 computed as X(f1) W(x) vec(f0)
        rng = np.random.default_rng(7)
        e, a = 5, 2
        x = rng.normal(size=(e, e))
        f0 = rng.normal(size=(a, a))
        f1 = rng.normal(size=(a, a))
        two_step = corr_loops(corr_loops(x, f0), f1)
        got = swap_matrix(f1, e) @ learning_dictionary(x, a).data @ vectorize_lex(f0)
        np.testing.assert_allclose(got, vectorize_lex(two_step), atol=1e-10)

    def test_cascade_commutes(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(7, 7))
        f0 = rng.normal(size=(2, 2))
        f1 = rng.normal(size=(2, 2))
        ab = corr_loops(corr_loops(x, f0), f1)
        ba = corr_loops(corr_loops(x, f1), f0)
        np.testing.assert_allclose(ab, ba, atol=1e-10)

    def test_zero_filter_gives_zero_matrix(self):
        assert not np.any(swap_matrix(np.zeros((2, 2)), 6))

    def test_source_too_small_for_two_passes(self):
        with pytest.raises(DimensionError):
            swap_matrix(np.zeros((3, 3)), 4)


def test_random_sweep_of_all_three_identities():
    """Small seeded version of the full equivalence sweep."""
    rng = np.random.default_rng(9)
    for _ in range(40):
        a = int(rng.integers(2, 4))
        e = int(rng.integers(2 * a - 1, 10))
        x = rng.normal(size=(e, e))
        f0 = rng.normal(size=(a, a))
        f1 = rng.normal(size=(a, a))
        d = learning_dictionary(x, a)
        assert (
            np.max(np.abs(d.data @ vectorize_lex(f0) - vectorize_lex(corr_loops(x, f0))))
            < 1e-10
        )
        lhs = swap_matrix(f1, e) @ d.data @ vectorize_lex(f0)
        rhs = vectorize_lex(corr_loops(corr_loops(x, f0), f1))
        assert np.max(np.abs(lhs - rhs)) < 1e-10
        swapped = swap_matrix(f0, e) @ d.data @ vectorize_lex(f1)
        assert np.max(np.abs(lhs - swapped)) < 1e-10
