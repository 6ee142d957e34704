"""Evaluation and sweep drivers tying the network to the analysis tools.

`evaluate_net` scores a trained network patch by patch against the
bicubic-degraded inputs and reports per-layer dictionary coherences,
where layer L's dictionary has one column per output channel, the
flattened (cin * k * k) filter.  `depth_sweep` trains a grid of depths
on a corpus and finds the saturation depth, the smallest depth whose
mean PSNR is within a tolerance of the sweep's maximum.
"""

from dataclasses import dataclass, replace

import numpy as np

from ..csc import from_filters, mutual_coherence
from ..errors import PreconditionError, TrainingDiverged
from .data import make_sr_pairs
from .metrics import psnr
from .net import forward, init_net, receptive_field, train

__all__ = [
    "layer_coherence_report",
    "EvalReport",
    "evaluate_net",
    "train_on_corpus",
    "SweepCell",
    "depth_sweep",
    "depth_means",
    "saturation_depth",
]


def layer_coherence_report(net):
    """Per-layer (min-raw, min-norm, max-raw, max-norm) coherence rows.

    Layers with fewer than two output channels have no atom pair and
    report NaNs.
    """
    rows = []
    for w in net.weights:
        cols = [w[o].ravel() for o in range(w.shape[0])]
        if len(cols) < 2:
            rows.append((np.nan, np.nan, np.nan, np.nan))
            continue
        d = from_filters(cols)
        rows.append(
            (
                mutual_coherence(d, mode="min", normalized=False),
                mutual_coherence(d, mode="min", normalized=True),
                mutual_coherence(d, mode="max", normalized=False),
                mutual_coherence(d, mode="max", normalized=True),
            )
        )
    return rows


@dataclass(frozen=True)
class EvalReport:
    psnr_per_patch: np.ndarray
    mean_psnr: float
    layer_coherence: tuple


def evaluate_net(net, pairs):
    """PSNR of the network against targets over aligned pairs."""
    if not pairs:
        raise PreconditionError("no evaluation pairs supplied")
    scores = np.array([psnr(forward(net, inp), tgt) for inp, tgt in pairs])
    finite = scores[np.isfinite(scores)]
    mean = float(finite.mean()) if finite.size else np.inf
    return EvalReport(scores, mean, tuple(layer_coherence_report(net)))


def train_on_corpus(images, config, crop, stride, scale=2):
    """Build pairs at the config's receptive field and run training."""
    net = init_net(config)
    pairs = make_sr_pairs(images, crop, stride, receptive_field(net), scale)
    net, history = train(net, pairs, config)
    return net, pairs, history


@dataclass(frozen=True)
class SweepCell:
    depth: int
    seed: int
    mean_psnr: float
    status: str


def depth_means(cells):
    """Mean PSNR per depth over the surviving seeds, sorted by depth."""
    by_depth = {}
    for c in cells:
        if c.status == "ok":
            by_depth.setdefault(c.depth, []).append(c.mean_psnr)
    return [(d, float(np.mean(v))) for d, v in sorted(by_depth.items())]


def saturation_depth(cells, tol=0.05):
    """Smallest depth whose seed-mean PSNR is within tol dB of the best."""
    means = depth_means(cells)
    if not means:
        return None
    best = max(m for _, m in means)
    return min(d for d, m in means if m >= best - tol)


def depth_sweep(images, depths, seeds, base_config, crop, stride, scale=2, holdout=False):
    """Train every (depth, seed) cell on one corpus.

    With holdout=True training uses the even-index pairs and scoring the
    odd-index ones, so memorization of unlearnable content does not
    inflate deep cells.  A diverging cell is recorded with status
    "diverged" and the sweep continues; saturation is computed from the
    per-depth seed means of the surviving cells.
    """
    cells = []
    for depth in depths:
        for seed in seeds:
            config = replace(base_config, depth=int(depth), seed=int(seed))
            try:
                net = init_net(config)
                pairs = make_sr_pairs(images, crop, stride, receptive_field(net), scale)
                train_pairs = pairs[::2] if holdout else pairs
                eval_pairs = pairs[1::2] if holdout else pairs
                net, _ = train(net, train_pairs, config)
                report = evaluate_net(net, eval_pairs)
                cells.append(SweepCell(int(depth), int(seed), report.mean_psnr, "ok"))
            except TrainingDiverged:
                cells.append(SweepCell(int(depth), int(seed), float("nan"), "diverged"))
    return cells, depth_means(cells), saturation_depth(cells)
