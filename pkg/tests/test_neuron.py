"""Single-neuron and cascaded training rules.

The load-bearing claim is trajectory equality between the raw descent
step and its soft-form rewrite, which holds while iterates stay
entrywise nonnegative.  Tests pin both the equality inside that regime
and the genuine divergence outside it.
"""

import numpy as np
import pytest

from convdict.conv_algebra import learning_dictionary, vectorize_lex
from convdict.errors import DimensionError
from convdict.neuron import (
    CascadePair,
    NeuronFilter,
    adaptive_bias,
    cascade_forward,
    cascade_soft_form_step,
    cascade_step,
    composed_dictionary,
    equivalent_filter,
    gd_step,
    initial_state,
    mse_and_gradient,
    neuron_forward,
    paired_divergence,
    soft_form_step,
    spectral_scaled,
    train_neuron,
)
from convdict.proximal import soft_nn, spectral_norm
from convdict.sr.synth import edge_image


def corr_loops(x, f):
    a0, a1 = f.shape
    h, w = x.shape[0] - a0 + 1, x.shape[1] - a1 + 1
    out = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            out[i, j] = np.sum(x[i : i + a0, j : j + a1] * f)
    return out


def random_problem(seed, c=8, a=3, scale=True):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(c, c))
    d = learning_dictionary(x, a)
    if scale:
        d = spectral_scaled(d)
    f_true = rng.uniform(0.1, 0.9, size=a * a)
    t = soft_nn(d.data @ f_true, 0.05)
    return d, t, rng


class TestForward:
    def test_selector_filter_samples_column(self):
        d, _, _ = random_problem(0)
        f = np.zeros(9)
        f[4] = 1.0
        out = neuron_forward(d, NeuronFilter(f, 0.0))
        np.testing.assert_allclose(out, np.maximum(d.data[:, 4], 0.0))

    def test_huge_threshold_kills_response(self):
        d, _, _ = random_problem(1)
        out = neuron_forward(d, NeuronFilter(np.ones(9), 1e9))
        assert not np.any(out)

    def test_matches_correlation_oracle(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 1, size=(7, 7))
        f = rng.normal(size=(3, 3))
        d = learning_dictionary(x, 3)
        got = neuron_forward(d, NeuronFilter(vectorize_lex(f), 0.1))
        want = soft_nn(vectorize_lex(corr_loops(x, f)), 0.1)
        np.testing.assert_allclose(got, want, atol=1e-12)

    def test_width_mismatch_rejected(self):
        d, _, _ = random_problem(3)
        with pytest.raises(DimensionError):
            neuron_forward(d, NeuronFilter(np.ones(4), 0.0))


class TestGradient:
    def test_perfect_fit_has_zero_gradient(self):
        d, _, rng = random_problem(4)
        f = NeuronFilter(rng.uniform(0.1, 0.9, size=9), 0.05)
        t = neuron_forward(d, f)
        mse, grad = mse_and_gradient(d, f, t)
        assert mse == 0.0
        np.testing.assert_allclose(grad, 0.0, atol=1e-14)

    def test_dead_neuron_feeds_back_full_target(self):
        d, t, _ = random_problem(5)
        f = NeuronFilter(np.ones(9), 1e9)
        _, grad = mse_and_gradient(d, f, t)
        np.testing.assert_allclose(grad, -(d.data.T @ t), atol=1e-12)

    def test_matches_finite_differences_when_fully_active(self):
        # away from the kink the rule is the true mse gradient
        d, _, rng = random_problem(6)
        f0 = rng.uniform(0.3, 0.9, size=9)
        bias = 0.01
        t = rng.uniform(0.0, 1.0, size=d.data.shape[0])
        assert np.min(d.data @ f0) > bias + 0.01  # strictly active everywhere
        _, grad = mse_and_gradient(d, NeuronFilter(f0, bias), t)
        h = 1e-6
        fd = np.zeros(9)
        for i in range(9):
            fp, fm = f0.copy(), f0.copy()
            fp[i] += h
            fm[i] -= h
            mp, _ = mse_and_gradient(d, NeuronFilter(fp, bias), t)
            mm, _ = mse_and_gradient(d, NeuronFilter(fm, bias), t)
            fd[i] = (mp - mm) / (2 * h)
        np.testing.assert_allclose(grad, fd, atol=1e-6)

    def test_target_length_checked(self):
        d, _, _ = random_problem(7)
        with pytest.raises(DimensionError):
            mse_and_gradient(d, NeuronFilter(np.ones(9), 0.0), np.ones(3))


class TestDescentStep:
    def test_fixed_point_when_gradient_vanishes(self):
        d, _, rng = random_problem(8)
        f = rng.uniform(0.1, 0.9, size=9)
        state = initial_state(f, 0.05)
        t = neuron_forward(d, state.filter)
        new = gd_step(state, d, t)
        np.testing.assert_array_equal(new.filter.coeffs, f)
        assert new.iteration == 1
        assert new.mse_history == (0.0,)

    def test_scalar_case_by_hand(self):
        # d=2, f=0.5, b=0.3, t=1: response 0.7, new f = 0.5 + 2*0.3 = 1.1
        d = np.array([[2.0]])
        state = gd_step(initial_state([0.5], 0.3), d, [1.0])
        assert state.filter.coeffs[0] == pytest.approx(1.1)
        assert state.mse_history[0] == pytest.approx(0.045)

    def test_mse_decreases_under_spectral_scaling(self):
        d, t, _ = random_problem(9)
        state = train_neuron(d, t, np.zeros(9), 0.05, 100)
        hist = np.array(state.mse_history)
        assert np.all(np.diff(hist) <= 1e-12)

    def test_zero_threshold_run_lands_on_ridge_solution(self):
        # positive data keeps responses active, so the rule is plain
        # least-squares descent and the endpoint is the unregularized solve
        rng = np.random.default_rng(10)
        x = rng.uniform(0.0, 1.0, size=(8, 8))
        d = spectral_scaled(learning_dictionary(x, 3))
        t = d.data @ rng.uniform(0.1, 0.9, size=9)
        state = train_neuron(d, t, np.zeros(9), 0.0, 3000)
        np.testing.assert_allclose(
            state.filter.coeffs, equivalent_filter(d, t, 0.0), atol=1e-4
        )


class TestAdaptiveBias:
    def test_all_active_branch(self):
        d, _, rng = random_problem(11)
        f = NeuronFilter(rng.uniform(0.3, 0.9, size=9), 0.01)
        assert np.min(d.data @ f.coeffs) > f.bias
        np.testing.assert_allclose(
            adaptive_bias(d, f),
            -(d.data.T @ np.full(d.data.shape[0], f.bias)),
            atol=1e-12,
        )

    def test_all_dead_branch(self):
        d, _, rng = random_problem(12)
        f = NeuronFilter(rng.uniform(0.1, 0.5, size=9), 1e3)
        np.testing.assert_allclose(
            adaptive_bias(d, f), -(d.data.T @ (d.data @ f.coeffs)), atol=1e-12
        )

    def test_mixed_rows_assembled_per_row(self):
        d, _, rng = random_problem(13)
        f = NeuronFilter(rng.uniform(0.1, 0.9, size=9), 0.0)
        z = d.data @ f.coeffs
        bias = float(np.median(z))  # guarantees both branches occur
        f = NeuronFilter(f.coeffs, bias)
        rows = np.where(z > bias, bias, z)
        np.testing.assert_allclose(adaptive_bias(d, f), -(d.data.T @ rows), atol=1e-12)


class TestSoftFormEquality:
    def test_single_step_equality(self):
        d, t, _ = random_problem(14)
        a = gd_step(initial_state(np.zeros(9), 0.05), d, t)
        b = soft_form_step(initial_state(np.zeros(9), 0.05), d, t)
        np.testing.assert_allclose(a.filter.coeffs, b.filter.coeffs, atol=1e-12)

    def test_zero_start_zero_target(self):
        d, _, _ = random_problem(15)
        t = np.zeros(d.data.shape[0])
        a = gd_step(initial_state(np.zeros(9), 0.1), d, t)
        b = soft_form_step(initial_state(np.zeros(9), 0.1), d, t)
        np.testing.assert_array_equal(a.filter.coeffs, np.zeros(9))
        np.testing.assert_array_equal(b.filter.coeffs, np.zeros(9))

    def test_long_paired_trajectories_agree(self):
        for seed in (0, 1):
            rng = np.random.default_rng(seed)
            x = rng.uniform(0.0, 1.0, size=(8, 8))
            d = learning_dictionary(x, 3)
            t = soft_nn(
                spectral_scaled(d).data @ rng.uniform(0.1, 0.9, size=9), 0.05
            )
            worst, nonneg = paired_divergence(d, t, np.zeros(9), 0.05, 200)
            assert nonneg
            assert worst < 1e-10

    def test_forms_part_ways_outside_nonnegative_regime(self):
        # signed data pushes an iterate negative; the shrinkage then clamps
        rng = np.random.default_rng(16)
        d = spectral_scaled(rng.normal(size=(16, 9)))
        t = rng.normal(size=16)
        worst, nonneg = paired_divergence(d, t, np.zeros(9), 0.05, 10, scale=False)
        assert not nonneg
        assert worst > 1e-6


class TestEquivalentFilter:
    def test_reproduces_target_in_row_space(self):
        rng = np.random.default_rng(17)
        q, _ = np.linalg.qr(rng.normal(size=(16, 9)))
        d = q  # orthonormal columns
        f_any = rng.normal(size=9)
        t = d @ f_any
        fe = equivalent_filter(d, t, 0.0)
        np.testing.assert_allclose(d @ fe, t, atol=1e-10)

    def test_target_orthogonal_to_dictionary_scores_zero(self):
        rng = np.random.default_rng(18)
        d = rng.normal(size=(12, 4))
        raw = rng.normal(size=12)
        t = raw - d @ np.linalg.lstsq(d, raw, rcond=None)[0]
        assert np.max(np.abs(d.T @ t)) < 1e-10
        np.testing.assert_allclose(equivalent_filter(d, t, 1e-3), 0.0, atol=1e-8)

    def test_noise_patch_better_conditioned_than_smooth_edge(self):
        rng = np.random.default_rng(19)
        noisy = learning_dictionary(rng.uniform(0, 1, size=(8, 8)), 3).data
        smooth = learning_dictionary(edge_image(8, 30.0, soft=1.5), 3).data
        cond = lambda m: np.linalg.cond(m.T @ m)
        assert cond(noisy) * 100.0 < cond(smooth)


class TestCascade:
    def make_pair(self, seed, e=7, a=2, scale=0.25):
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.0, 1.0, size=(e, e)) * scale
        f0 = NeuronFilter(rng.uniform(0.05, 0.3, size=a * a), 0.02)
        f1 = NeuronFilter(rng.uniform(0.05, 0.3, size=a * a), 0.02)
        return CascadePair(f0, f1, e), x, rng

    def test_size_chain_checked(self):
        with pytest.raises(DimensionError):
            CascadePair(NeuronFilter(np.ones(9), 0.0), NeuronFilter(np.ones(9), 0.0), 4)

    def test_forward_matches_two_stage_oracle(self):
        pair, x, _ = self.make_pair(20)
        mid, out = cascade_forward(pair, x)
        a = pair.first_size
        mid_want = soft_nn(corr_loops(x, pair.first.coeffs.reshape(a, a)), pair.first.bias)
        np.testing.assert_allclose(mid, vectorize_lex(mid_want), atol=1e-12)
        out_want = soft_nn(
            corr_loops(mid_want, pair.second.coeffs.reshape(a, a)), pair.second.bias
        )
        np.testing.assert_allclose(out, vectorize_lex(out_want), atol=1e-12)

    def test_composed_dictionary_is_linear_cascade(self):
        pair, x, rng = self.make_pair(21)
        d0 = learning_dictionary(x, pair.first_size)
        p = composed_dictionary(pair.second, d0)
        f = rng.normal(size=pair.first.coeffs.size)
        a = pair.first_size
        want = corr_loops(corr_loops(x, f.reshape(a, a)), pair.second.coeffs.reshape(a, a))
        np.testing.assert_allclose(p @ f, vectorize_lex(want), atol=1e-12)

    def test_zero_second_filter_gives_zero_composition(self):
        pair, x, _ = self.make_pair(22)
        d0 = learning_dictionary(x, pair.first_size)
        zero = NeuronFilter(np.zeros(pair.second.coeffs.size), 0.0)
        assert not np.any(composed_dictionary(zero, d0))

    def test_unit_second_filter_reduces_to_single_neuron(self):
        rng = np.random.default_rng(23)
        x = rng.uniform(0.0, 1.0, size=(6, 6)) * 0.3
        f0 = NeuronFilter(rng.uniform(0.05, 0.3, size=4), 0.02)
        unit = NeuronFilter(np.array([1.0]), 0.0)
        pair = CascadePair(f0, unit, 6)
        _, out = cascade_forward(pair, x)
        t = out + 0.02
        stepped = cascade_step(pair, x, t)
        d0 = learning_dictionary(x, 2)
        single = gd_step(initial_state(f0.coeffs, f0.bias), d0, t)
        np.testing.assert_allclose(
            stepped.first.coeffs, single.filter.coeffs, atol=1e-12
        )

    def test_soft_form_twin_agrees_in_regime(self):
        for seed in (24, 25, 26):
            pair_a, x, _ = self.make_pair(seed)
            pair_b = pair_a
            _, out = cascade_forward(pair_a, x)
            t = out + 0.0125
            for _ in range(150):
                pair_a = cascade_step(pair_a, x, t)
                pair_b = cascade_soft_form_step(pair_b, x, t)
                assert np.min(pair_a.first.coeffs) >= 0  # regime guard
            assert (
                np.max(np.abs(pair_a.first.coeffs - pair_b.first.coeffs)) < 1e-10
            )
            np.testing.assert_allclose(
                pair_a.second.coeffs, pair_b.second.coeffs, atol=1e-12
            )
