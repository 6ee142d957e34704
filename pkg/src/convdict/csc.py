"""Layered sparse coding: stability bounds and synthetic instances.

A layered model factors a signal through per-layer dictionaries,
y = D_1 x_1, x_{i-1} = D_i x_i, with each x_i sparse.  Given a noisy
observation g = y + n with ||n|| <= eps_0, `layered_soft_threshold`
estimates every layer by one shrinkage per layer.  The support-recovery
condition and error recursion implemented here are

    ||x_i||_0 < 1/2 + (|x_min| - 2 eps_{i-1}) / (2 mu |x_max|),
    eps_i = sqrt(||x_i||_0) (eps_{i-1} + mu (||x_i||_0 - 1) |x_max| + b_i),

with mu the max-mode mutual coherence of the layer dictionary.  Both
min-mode (smallest off-diagonal Gram magnitude) and max-mode (largest)
coherences are computed, since reporting code elsewhere in the package
tracks the min-mode statistic on trained layers.

Instance synthesis builds exact layered factorizations with controllable
coherence: intermediate-layer atoms on the support are given disjoint
blocks inside the parent support, so sparse stays sparse exactly, and
the remaining atoms are drawn as orthonormal-complement directions plus
tuned noise until the coherence target is met.
"""

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, PreconditionError, SynthesisError
from .proximal import soft_sym

__all__ = [
    "ReconstructionDictionary",
    "mutual_coherence",
    "welch_coherence_floor",
    "layered_soft_threshold",
    "sparsity_bound",
    "layer_error_bound",
    "CoherenceBound",
    "coherence_lower_bound",
    "CscInstance",
    "validate_instance",
    "synthesize_instance",
    "stability_biases",
    "LayerStability",
    "verify_stability",
]


@dataclass(frozen=True)
class ReconstructionDictionary:
    """Atoms as columns; `normalized` records whether columns were rescaled."""

    data: np.ndarray
    normalized: bool = False
    column_norms: np.ndarray = field(default=None, compare=False)

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2 or d.shape[1] < 1:
            raise DimensionError(f"dictionary must be 2-D, got shape {d.shape}")
        norms = np.linalg.norm(d, axis=0)
        if self.normalized:
            if np.any(norms == 0):
                raise PreconditionError("cannot normalize a zero atom")
            d = d / norms
        object.__setattr__(self, "data", d)
        object.__setattr__(self, "column_norms", norms)

    @property
    def n_atoms(self):
        return self.data.shape[1]


def from_filters(filters, normalized=False):
    """Stack equal-length 1-D filters as dictionary columns."""
    cols = [np.asarray(f, dtype=np.float64).ravel() for f in filters]
    lengths = {c.size for c in cols}
    if len(lengths) != 1:
        raise DimensionError(f"filters have mixed lengths {sorted(lengths)}")
    return ReconstructionDictionary(np.stack(cols, axis=1), normalized=normalized)


def _dict_data(d, normalized):
    if isinstance(d, ReconstructionDictionary):
        if d.normalized:
            return d.data
        data = d.data
    else:
        data = np.asarray(d, dtype=np.float64)
        if data.ndim != 2:
            raise DimensionError(f"dictionary must be 2-D, got shape {data.shape}")
    if normalized:
        norms = np.linalg.norm(data, axis=0)
        if np.any(norms == 0):
            raise PreconditionError("cannot normalize a zero atom")
        data = data / norms
    return data


def mutual_coherence(d, mode="max", normalized=True):
    """Extreme off-diagonal Gram magnitude of a dictionary.

    mode="max" is the standard worst-pair coherence used in the
    stability condition; mode="min" is the best-pair variant tracked in
    the layer reports.  With normalized=False raw inner products are
    used as-is.
    """
    if mode not in ("min", "max"):
        raise PreconditionError(f"mode must be 'min' or 'max', got {mode!r}")
    data = _dict_data(d, normalized)
    if data.shape[1] < 2:
        raise DimensionError("coherence needs at least two atoms")
    gram = np.abs(data.T @ data)
    off = gram[~np.eye(gram.shape[0], dtype=bool)]
    return float(off.min() if mode == "min" else off.max())


def welch_coherence_floor(dim, n_atoms):
    """Lowest max-mode coherence any dim x n_atoms dictionary can reach."""
    if n_atoms <= dim:
        return 0.0
    return float(np.sqrt((n_atoms - dim) / (dim * (n_atoms - 1))))


def layered_soft_threshold(g, dictionaries, biases):
    """Per-layer shrinkage estimates x_i = S_b(D_i' x_{i-1}), seeded by g."""
    g = np.asarray(g, dtype=np.float64)
    if len(dictionaries) != len(biases):
        raise DimensionError("one bias per layer required")
    estimates = []
    cur = g
    for d, b in zip(dictionaries, biases):
        data = _dict_data(d, normalized=False)
        if data.shape[0] != cur.size:
            raise DimensionError(
                f"layer dictionary {data.shape} incompatible with carrier of length {cur.size}"
            )
        cur = soft_sym(data.T @ cur, b)
        estimates.append(cur)
    return estimates


def sparsity_bound(mu, x_min, x_max, eps_prev):
    """Right-hand side of the support-recovery sparsity condition.

    Returns +inf for an orthogonal layer (mu = 0) with usable margin,
    -inf when the margin is already negative at mu = 0.
    """
    x_min, x_max = abs(float(x_min)), abs(float(x_max))
    if x_max == 0:
        raise PreconditionError("x_max must be nonzero")
    margin = x_min - 2.0 * float(eps_prev)
    if mu < 0:
        raise PreconditionError("coherence must be nonnegative")
    if mu == 0.0:
        if margin > 0:
            return np.inf
        if margin < 0:
            return -np.inf
        return 0.5
    return 0.5 + margin / (2.0 * mu * x_max)


def layer_error_bound(sparsity, eps_prev, mu, x_max, bias):
    """Propagated L2 error bound sqrt(s) (eps_prev + mu (s-1) |x_max| + b)."""
    s = int(sparsity)
    if s < 0:
        raise PreconditionError("sparsity must be nonnegative")
    return float(np.sqrt(s) * (eps_prev + mu * (s - 1) * abs(x_max) + bias))


class CoherenceBound(NamedTuple):
    value: float
    vacuous: bool


def coherence_lower_bound(eps_prev, eps_cur, x_norm):
    """Coherence floor (2 eps_prev - sqrt(eps_prev) - sqrt(eps_cur)) / ||x||_2.

    A nonpositive value is flagged vacuous (every coherence satisfies
    it).
    """
    if eps_prev < 0 or eps_cur < 0:
        raise PreconditionError("error bounds must be nonnegative")
    x_norm = float(x_norm)
    if x_norm <= 0:
        raise PreconditionError("||x||_2 must be positive")
    value = (2.0 * eps_prev - np.sqrt(eps_prev) - np.sqrt(eps_cur)) / x_norm
    return CoherenceBound(float(value), bool(value <= 0))


@dataclass(frozen=True)
class CscInstance:
    """One layered factorization with its noisy observation.

    representations[i] is x_{i+1}; signal is the clean y and observation
    the noisy g with ||g - y|| <= noise_bound.
    """

    dictionaries: tuple
    representations: tuple
    signal: np.ndarray
    observation: np.ndarray
    noise_bound: float

    @property
    def n_layers(self):
        return len(self.dictionaries)

    def sparsities(self):
        return [int(np.count_nonzero(x)) for x in self.representations]


def validate_instance(inst, tol=1e-10):
    """Check the layered factorization, unit atoms, and the noise budget."""
    carrier = inst.signal
    if len(inst.dictionaries) != len(inst.representations):
        raise DimensionError("one representation per dictionary required")
    for d, x in zip(inst.dictionaries, inst.representations):
        data = _dict_data(d, normalized=False)
        norms = np.linalg.norm(data, axis=0)
        if not np.allclose(norms, 1.0, atol=1e-8):
            return False
        if np.linalg.norm(carrier - data @ x) > tol * max(1.0, np.linalg.norm(carrier)):
            return False
        carrier = x
    noise = np.linalg.norm(inst.observation - inst.signal)
    return bool(noise <= inst.noise_bound + tol)


def _low_coherence_fill(rng, fixed, n_rows, n_new, target, attempts=40):
    """Columns orthogonal-ish to `fixed` and each other, with tuned noise.

    Starts from an orthonormal basis of the complement and mixes in
    Gaussian noise, shrinking the mixing weight until the full matrix
    meets the max-mode coherence target.
    """
    if n_new == 0:
        return np.zeros((n_rows, 0))
    if fixed.shape[1] + n_new > n_rows:
        raise SynthesisError(
            f"{fixed.shape[1] + n_new} atoms cannot be near-orthogonal in dimension {n_rows}"
        )
    base = np.concatenate([fixed, rng.normal(size=(n_rows, n_rows - fixed.shape[1]))], axis=1)
    q, _ = np.linalg.qr(base)
    comp = q[:, fixed.shape[1] : fixed.shape[1] + n_new]
    if target == 0.0:
        return comp
    rho = target * np.sqrt(n_rows) / 4.0
    for _ in range(attempts):
        noise = rng.normal(scale=1.0 / np.sqrt(n_rows), size=comp.shape)
        cand = comp + rho * noise
        cand /= np.linalg.norm(cand, axis=0)
        full = np.concatenate([fixed, cand], axis=1)
        if fixed.shape[1] + n_new >= 2 and mutual_coherence(full) <= target:
            return cand
        if fixed.shape[1] + n_new < 2:
            return cand
        rho *= 0.7
    raise SynthesisError("coherence target not met within the attempt budget")


def _partition_blocks(rng, coords, n_blocks):
    """Split coords into n_blocks nonempty groups, sizes as even as possible."""
    coords = list(coords)
    rng.shuffle(coords)
    sizes = np.full(n_blocks, len(coords) // n_blocks)
    sizes[: len(coords) % n_blocks] += 1
    blocks, at = [], 0
    for s in sizes:
        blocks.append(coords[at : at + int(s)])
        at += int(s)
    return blocks


def synthesize_instance(
    dims,
    sparsities,
    coherence_target,
    noise_bound,
    seed,
    value_range=(0.7, 1.0),
):
    """Draw a layered instance with exact sparsity and bounded coherence.

    dims lists carrier dimensions from the signal inward, so
    dims = [64, 48, 32] means a 64-dim signal, 48-dim first layer and
    32-dim second layer; layer i's dictionary is dims[i-1] x dims[i] and
    must be square or tall.  Sparsities must be non-increasing inward so
    support atoms can take disjoint blocks of the parent support.  The
    deepest coefficients get magnitudes in value_range with random
    signs; parent layers inherit block-scaled copies, keeping min/max
    magnitudes under control.  Raises SynthesisError when the target is
    below the achievable coherence floor or the attempt budget runs out.
    """
    dims = [int(v) for v in dims]
    sparsities = [int(s) for s in sparsities]
    if len(dims) < 2 or len(sparsities) != len(dims) - 1:
        raise SynthesisError(f"need one sparsity per layer, got {sparsities} for {dims}")
    n_layers = len(sparsities)
    if coherence_target < 0:
        raise SynthesisError("coherence target must be nonnegative")
    lo, hi = value_range
    if not 0 < lo <= hi:
        raise SynthesisError(f"invalid value range {value_range}")
    for i in range(1, len(dims)):
        if dims[i] > dims[i - 1]:
            raise SynthesisError(
                f"layer {i} dictionary would be wide ({dims[i - 1]}x{dims[i]}); "
                "coherence floor "
                f"{welch_coherence_floor(dims[i - 1], dims[i]):.4f} applies"
            )
        if coherence_target < welch_coherence_floor(dims[i - 1], dims[i]):
            raise SynthesisError("coherence target below the Welch floor")
    for i, s in enumerate(sparsities):
        if not 1 <= s <= dims[i + 1]:
            raise SynthesisError(f"sparsity {s} invalid for dimension {dims[i + 1]}")
        if i + 1 < n_layers and sparsities[i + 1] > s:
            raise SynthesisError("sparsities must be non-increasing with depth")

    rng = np.random.default_rng(seed)
    supports = [
        np.sort(rng.choice(dims[i + 1], size=sparsities[i], replace=False))
        for i in range(n_layers)
    ]
    # deepest representation: free magnitudes and signs
    deepest = np.zeros(dims[n_layers])
    deepest[supports[-1]] = rng.uniform(lo, hi, size=sparsities[-1]) * rng.choice(
        [-1.0, 1.0], size=sparsities[-1]
    )
    reps = [None] * n_layers
    reps[-1] = deepest
    dicts = [None] * n_layers
    # intermediate layers, deepest first: block-structured support atoms
    for i in range(n_layers - 1, 0, -1):
        n_rows, n_cols = dims[i], dims[i + 1]
        sup = supports[i]
        parent_sup = supports[i - 1]
        blocks = _partition_blocks(rng, parent_sup, len(sup))
        cols = np.zeros((n_rows, len(sup)))
        for j, block in enumerate(blocks):
            cols[block, j] = rng.choice([-1.0, 1.0], size=len(block)) / np.sqrt(len(block))
        d = np.zeros((n_rows, n_cols))
        d[:, sup] = cols
        off = np.setdiff1d(np.arange(n_cols), sup)
        d[:, off] = _low_coherence_fill(rng, cols, n_rows, len(off), coherence_target)
        if mutual_coherence(d) > max(coherence_target, 1e-12):
            raise SynthesisError("assembled layer exceeds the coherence target")
        dicts[i] = d
        reps[i - 1] = d @ reps[i]
    # outermost dictionary: all atoms from the low-coherence sampler
    n_rows, n_cols = dims[0], dims[1]
    empty = np.zeros((n_rows, 0))
    d0 = _low_coherence_fill(rng, empty, n_rows, n_cols, coherence_target)
    if n_cols >= 2 and mutual_coherence(d0) > max(coherence_target, 1e-12):
        raise SynthesisError("outer layer exceeds the coherence target")
    dicts[0] = d0
    signal = d0 @ reps[0]
    direction = rng.normal(size=dims[0])
    direction /= np.linalg.norm(direction)
    noise = direction * noise_bound * rng.uniform(0.5, 1.0)
    return CscInstance(
        dictionaries=tuple(dicts),
        representations=tuple(reps),
        signal=signal,
        observation=signal + noise,
        noise_bound=float(noise_bound),
    )


def stability_biases(inst, margin=0.1):
    """Per-layer thresholds sitting inside the provable recovery window.

    The window is [mu s |x_max| + eps_prev, |x_min| - mu (s-1) |x_max| -
    eps_prev); `margin` picks the interior point.  Returns (biases,
    epsilons) with epsilons[0] the observation noise bound.
    """
    biases = []
    epsilons = [float(inst.noise_bound)]
    for d, x in zip(inst.dictionaries, inst.representations):
        mu = mutual_coherence(d)
        nz = np.abs(x[x != 0])
        if nz.size == 0:
            raise PreconditionError("a layer representation is identically zero")
        s = nz.size
        x_max, x_min = float(nz.max()), float(nz.min())
        lower = mu * s * x_max + epsilons[-1]
        upper = x_min - mu * (s - 1) * x_max - epsilons[-1]
        b = lower + margin * max(upper - lower, 0.0)
        biases.append(b)
        epsilons.append(layer_error_bound(s, epsilons[-1], mu, x_max, b))
    return biases, epsilons


@dataclass(frozen=True)
class LayerStability:
    """One verification row: thresholds, condition, and recovery outcome."""

    layer: int
    coherence_max: float
    coherence_min: float
    sparsity: int
    condition_rhs: float
    condition_met: bool
    bias: float
    error_bound: float
    error_norm: float
    support_recovered: bool


def verify_stability(inst, biases=None, margin=0.1):
    """Run layered shrinkage on an instance and score it layer by layer.

    With biases=None the provable-window thresholds from
    `stability_biases` are used.  Each row reports whether the sparsity
    condition held (with max-mode coherence) and whether the estimate
    recovered the true support within the propagated error bound.
    """
    if biases is None:
        biases, _ = stability_biases(inst, margin=margin)
    estimates = layered_soft_threshold(inst.observation, inst.dictionaries, biases)
    rows = []
    eps_prev = float(inst.noise_bound)
    for i, (d, x, xh, b) in enumerate(
        zip(inst.dictionaries, inst.representations, estimates, biases)
    ):
        mu_max = mutual_coherence(d, mode="max")
        mu_min = mutual_coherence(d, mode="min")
        nz = np.abs(x[x != 0])
        s = nz.size
        rhs = sparsity_bound(mu_max, nz.min(), nz.max(), eps_prev)
        eps_cur = layer_error_bound(s, eps_prev, mu_max, nz.max(), b)
        rows.append(
            LayerStability(
                layer=i + 1,
                coherence_max=mu_max,
                coherence_min=mu_min,
                sparsity=s,
                condition_rhs=float(rhs),
                condition_met=bool(s < rhs),
                bias=float(b),
                error_bound=eps_cur,
                error_norm=float(np.linalg.norm(x - xh)),
                support_recovered=bool(
                    np.array_equal(np.flatnonzero(x), np.flatnonzero(xh))
                ),
            )
        )
        eps_prev = eps_cur
    return rows
