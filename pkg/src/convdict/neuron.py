"""Training a thresholded correlation neuron as a dictionary problem.

A neuron holds an a x a filter f and scalar threshold b.  Its response
to a c x c superpatch x is soft_nn(D f, b) where D is the sliding-patch
dictionary of x, so one forward pass is a matrix-vector product followed
by one-sided shrinkage.

`gd_step` applies the raw mse descent rule

    f_next = f + D'(t - soft_nn(D f, b)),

which treats the shrinkage slope as unity; on rows at or below the
threshold the residual contribution is the full target, matching the
two-branch form of the rule.  `soft_form_step` reproduces the same next
filter as a single shrinkage with a state-dependent threshold
(`adaptive_bias`), valid whenever the raw update stays entrywise
nonnegative; with nonnegative data that is the typical regime.

The cascade functions extend the same algebra across two stacked
neurons by composing the correlation matrix of the later filter with
the dictionary of the earlier layer.
"""

from dataclasses import dataclass

import numpy as np

from .conv_algebra import LearningDictionary, correlation_matrix, learning_dictionary
from .errors import DimensionError
from .proximal import landweber_solve, soft_nn, spectral_norm

__all__ = [
    "NeuronFilter",
    "TrainState",
    "initial_state",
    "neuron_forward",
    "mse_and_gradient",
    "gd_step",
    "adaptive_bias",
    "soft_form_step",
    "spectral_scaled",
    "train_neuron",
    "paired_divergence",
    "equivalent_filter",
    "CascadePair",
    "composed_dictionary",
    "cascade_forward",
    "cascade_step",
    "cascade_adaptive_bias",
    "cascade_soft_form_step",
]


@dataclass(frozen=True)
class NeuronFilter:
    """Filter coefficients (vectorized, length a^2) plus scalar threshold."""

    coeffs: np.ndarray
    bias: float

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 1:
            raise DimensionError(f"coefficients must be 1-D, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "bias", float(self.bias))


@dataclass(frozen=True)
class TrainState:
    """Filter state after `iteration` descent steps; one mse entry per step."""

    filter: NeuronFilter
    iteration: int
    mse_history: tuple


def initial_state(coeffs, bias):
    return TrainState(NeuronFilter(coeffs, bias), 0, ())


def _dict_data(d):
    if isinstance(d, LearningDictionary):
        return d.data
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2:
        raise DimensionError(f"dictionary must be 2-D, got shape {d.shape}")
    return d


def neuron_forward(d, f):
    """Neuron response soft_nn(D f.coeffs, f.bias)."""
    data = _dict_data(d)
    if data.shape[1] != f.coeffs.size:
        raise DimensionError(
            f"dictionary width {data.shape[1]} != filter length {f.coeffs.size}"
        )
    return soft_nn(data @ f.coeffs, f.bias)


def mse_and_gradient(d, f, t):
    """Mean squared error 0.5||t - out||^2 and the descent-rule gradient.

    The gradient is -D'(t - out) with out the thresholded response; its
    below-threshold rows therefore feed the full target back, which is
    what makes the two-branch update a single expression.  It coincides
    with the true mse gradient whenever every row is strictly above
    threshold.
    """
    data = _dict_data(d)
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (data.shape[0],):
        raise DimensionError(f"target length {t.size} != dictionary rows {data.shape[0]}")
    resid = t - neuron_forward(data, f)
    mse = 0.5 * float(resid @ resid)
    return mse, -(data.T @ resid)


def gd_step(state, d, t):
    """One raw descent step (unit step size); appends the pre-step mse."""
    mse, grad = mse_and_gradient(d, state.filter, t)
    new = NeuronFilter(state.filter.coeffs - grad, state.filter.bias)
    return TrainState(new, state.iteration + 1, state.mse_history + (mse,))


def adaptive_bias(d, f):
    """State-dependent threshold making one shrinkage equal a descent step.

    Row-wise assembly: rows above threshold contribute the threshold
    itself, rows at or below contribute their raw response, and the
    result is pulled back through the dictionary transpose with a sign
    flip.  All-active and all-dead states give -D'b and -D'D f.
    """
    data = _dict_data(d)
    z = data @ f.coeffs
    u = np.where(z > f.bias, f.bias, z)
    return -(data.T @ u)


def soft_form_step(state, d, t):
    """Descent step written as a single shrinkage with adaptive threshold.

    Computes soft_nn(f + D'(t - D f), b') with b' from `adaptive_bias`.
    Matches gd_step exactly while the updated filter stays entrywise
    nonnegative; outside that regime the shrinkage clamps at zero and
    the two rules genuinely part ways.
    """
    data = _dict_data(d)
    f = state.filter
    mse, _ = mse_and_gradient(data, f, t)
    t = np.asarray(t, dtype=np.float64)
    e = f.coeffs + data.T @ (t - data @ f.coeffs)
    bprime = adaptive_bias(data, f)
    new = NeuronFilter(soft_nn(e, bprime), f.bias)
    return TrainState(new, state.iteration + 1, state.mse_history + (mse,))


def spectral_scaled(d):
    """Dictionary divided by its spectral norm so raw steps cannot blow up."""
    if isinstance(d, LearningDictionary):
        s = spectral_norm(d.data)
        if s == 0.0:
            return d
        return d.scaled(1.0 / s)
    data = _dict_data(d)
    s = spectral_norm(data)
    return data if s == 0.0 else data / s


def train_neuron(d, t, f0, bias, iters, scale=False, soft_form=False):
    """Iterate gd_step (or soft_form_step) from a fresh state.

    With scale=True the dictionary is divided by its spectral norm
    first; raw unit steps on an unscaled ill-conditioned dictionary are
    expected to diverge.
    """
    if scale:
        d = spectral_scaled(d)
    step = soft_form_step if soft_form else gd_step
    state = initial_state(f0, bias)
    for _ in range(int(iters)):
        state = step(state, d, t)
    return state


def paired_divergence(d, t, f0, bias, iters, scale=True):
    """Max elementwise gap between the raw and soft-form trajectories.

    Also reports whether every soft-form iterate stayed nonnegative,
    the regime in which the two rules provably coincide.
    """
    if scale:
        d = spectral_scaled(d)
    a = initial_state(f0, bias)
    b = initial_state(f0, bias)
    worst = 0.0
    nonneg = True
    for _ in range(int(iters)):
        a = gd_step(a, d, t)
        b = soft_form_step(b, d, t)
        gap = float(np.max(np.abs(a.filter.coeffs - b.filter.coeffs)))
        worst = max(worst, gap)
        if np.min(a.filter.coeffs) < 0:
            nonneg = False
    return worst, nonneg


def equivalent_filter(d, t, lam):
    """Single linear filter with the same endpoint as converged training.

    Ridge solution of D f = t; lam > 0 keeps rank-deficient
    dictionaries solvable.
    """
    data = _dict_data(d)
    return landweber_solve(data, np.asarray(t, dtype=np.float64), lam)


@dataclass(frozen=True)
class CascadePair:
    """Two stacked neurons applied to an e x e superpatch.

    `first` (a0 x a0 vectorized) sees the raw patch, `second`
    (a1 x a1 vectorized) sees the first layer's c x c output patch,
    c = e - a0 + 1.  Requires e >= a0 + 2*a1 - 2 so the final grid is
    nonempty.
    """

    first: NeuronFilter
    second: NeuronFilter
    input_size: int

    def __post_init__(self):
        a0 = int(round(np.sqrt(self.first.coeffs.size)))
        a1 = int(round(np.sqrt(self.second.coeffs.size)))
        if a0 * a0 != self.first.coeffs.size or a1 * a1 != self.second.coeffs.size:
            raise DimensionError("cascade filters must vectorize square filters")
        if self.input_size - a0 + 1 < a1:
            raise DimensionError(
                f"input size {self.input_size} too small for {a0}/{a1} cascade"
            )

    @property
    def first_size(self):
        return int(round(np.sqrt(self.first.coeffs.size)))

    @property
    def second_size(self):
        return int(round(np.sqrt(self.second.coeffs.size)))

    @property
    def mid_size(self):
        return self.input_size - self.first_size + 1


def _cascade_dict(pair, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (pair.input_size, pair.input_size):
        raise DimensionError(
            f"superpatch shape {x.shape} != ({pair.input_size}, {pair.input_size})"
        )
    return learning_dictionary(x, pair.first_size)


def composed_dictionary(second_filter, first_dict):
    """Dictionary seen by the first filter once the second layer is fixed.

    Product of the second filter's correlation matrix on the mid grid
    with the first layer's sliding-patch dictionary.
    """
    data = _dict_data(first_dict)
    n = int(round(np.sqrt(data.shape[0])))
    if n * n != data.shape[0]:
        raise DimensionError("first dictionary rows must form a square grid")
    a1 = int(round(np.sqrt(second_filter.coeffs.size)))
    swap = correlation_matrix(second_filter.coeffs.reshape(a1, a1), n)
    return swap @ data


def cascade_forward(pair, x):
    """Forward pass; returns (mid response vector, final response vector)."""
    d0 = _cascade_dict(pair, x)
    mid = soft_nn(d0.data @ pair.first.coeffs, pair.first.bias)
    swap = correlation_matrix(
        pair.second.coeffs.reshape(pair.second_size, pair.second_size), pair.mid_size
    )
    out = soft_nn(swap @ mid, pair.second.bias)
    return mid, out


def cascade_step(pair, x, t):
    """One descent step on both filters, computed from the old pair.

    The first filter descends through the composed dictionary against
    the cascade output; the second descends by the single-neuron rule on
    the dictionary of the current mid patch.  Both use the slope-one
    convention of gd_step.
    """
    t = np.asarray(t, dtype=np.float64)
    d0 = _cascade_dict(pair, x)
    mid, out = cascade_forward(pair, x)
    composed = composed_dictionary(pair.second, d0)
    if t.shape != (composed.shape[0],):
        raise DimensionError(f"target length {t.size} != output size {composed.shape[0]}")
    new_first = NeuronFilter(
        pair.first.coeffs + composed.T @ (t - out), pair.first.bias
    )
    mid_patch = mid.reshape(pair.mid_size, pair.mid_size)
    d1 = learning_dictionary(mid_patch, pair.second_size)
    second_state = gd_step(initial_state(pair.second.coeffs, pair.second.bias), d1, t)
    return CascadePair(new_first, second_state.filter, pair.input_size)


def cascade_adaptive_bias(pair, x):
    """Adaptive threshold for the first filter's soft-form cascade step.

    Pulls the gap between the linear response P f and the true cascade
    output back through P transpose; reduces to
    -P'(swap(second) b0 + b1) when every row of both layers is active
    and to -P'P f when the output is dead.
    """
    d0 = _cascade_dict(pair, x)
    mid, out = cascade_forward(pair, x)
    composed = composed_dictionary(pair.second, d0)
    return composed.T @ (out - composed @ pair.first.coeffs)


def cascade_soft_form_step(pair, x, t):
    """Soft-form twin of cascade_step for the first filter.

    The second filter is updated identically in both forms; only the
    first filter's update is rewritten as a shrinkage.
    """
    t = np.asarray(t, dtype=np.float64)
    d0 = _cascade_dict(pair, x)
    mid, _ = cascade_forward(pair, x)
    composed = composed_dictionary(pair.second, d0)
    e = pair.first.coeffs + composed.T @ (t - composed @ pair.first.coeffs)
    bprime = cascade_adaptive_bias(pair, x)
    new_first = NeuronFilter(soft_nn(e, bprime), pair.first.bias)
    mid_patch = mid.reshape(pair.mid_size, pair.mid_size)
    d1 = learning_dictionary(mid_patch, pair.second_size)
    second_state = gd_step(initial_state(pair.second.coeffs, pair.second.bias), d1, t)
    return CascadePair(new_first, second_state.filter, pair.input_size)
