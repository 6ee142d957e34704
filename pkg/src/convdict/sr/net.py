"""Small valid-convolution network for the superresolution experiments.

All convolutions are valid correlations; hidden layers apply the
one-sided shrinkage soft_nn(z, b) with a per-channel trainable
threshold, and the final layer is linear (threshold subtracted, no
clamp).  Three skip topologies:

- "none": plain chain;
- "global_residual": the center crop of the input is added to the
  output, so the stack learns a correction term;
- "symmetric_skips": hidden activation i is added (center-cropped) to
  the input of layer depth+1-i for i < depth/2, pairing early and late
  layers.

Training is plain SGD, batch size one, with a seeded shuffle per epoch.
Gradients are exact backpropagation; the shrinkage derivative is taken
as zero at its kink.
"""

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .. import _kernels
from ..errors import DimensionError, FormatError, PreconditionError, TrainingDiverged

__all__ = [
    "SKIP_MODES",
    "NetworkConfig",
    "ToyCnn",
    "init_net",
    "receptive_field",
    "forward",
    "loss_and_gradients",
    "train",
    "save_params",
    "load_params",
]

SKIP_MODES = ("none", "global_residual", "symmetric_skips")


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture plus training hyperparameters."""

    depth: int
    width: int
    kernel: int = 3
    skip_mode: str = "none"
    seed: int = 0
    learning_rate: float = 0.05
    epochs: int = 1
    init_scale: float = 1.0

    def __post_init__(self):
        if self.depth < 2:
            raise PreconditionError(f"depth must be at least 2, got {self.depth}")
        if self.width < 1:
            raise PreconditionError(f"width must be positive, got {self.width}")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise PreconditionError(f"kernel must be odd, got {self.kernel}")
        if self.skip_mode not in SKIP_MODES:
            raise PreconditionError(
                f"skip_mode must be one of {SKIP_MODES}, got {self.skip_mode!r}"
            )
        if self.learning_rate <= 0:
            raise PreconditionError("learning rate must be positive")
        if self.epochs < 0:
            raise PreconditionError("epochs must be nonnegative")
        if self.init_scale <= 0:
            raise PreconditionError("init scale must be positive")


@dataclass(frozen=True)
class ToyCnn:
    """Weights (cout, cin, k, k) and thresholds (cout,) per layer."""

    weights: tuple
    thresholds: tuple
    skip_mode: str = "none"

    @property
    def depth(self):
        return len(self.weights)

    @property
    def kernel(self):
        return self.weights[0].shape[2]


def _skip_pairs(depth):
    # activation i feeds the input of layer depth+1-i
    return [(i, depth + 1 - i) for i in range(1, (depth + 1) // 2)]


def init_net(config):
    """Gaussian He-scaled weights, zero thresholds, from the config seed.

    init_scale multiplies the He standard deviation; values well below 1
    recreate the attenuated-signal regime where plain deep stacks stop
    training and bypass paths make the difference.
    """
    rng = np.random.default_rng(config.seed)
    widths = [1] + [config.width] * (config.depth - 1) + [1]
    weights, thresholds = [], []
    for i in range(config.depth):
        cin, cout = widths[i], widths[i + 1]
        fan_in = cin * config.kernel * config.kernel
        std = config.init_scale * np.sqrt(2.0 / fan_in)
        w = rng.normal(scale=std, size=(cout, cin, config.kernel, config.kernel))
        weights.append(w)
        thresholds.append(np.zeros(cout))
    return ToyCnn(tuple(weights), tuple(thresholds), config.skip_mode)


def receptive_field(net):
    """Input-side context of one output pixel."""
    return net.depth * (net.kernel - 1) + 1


def _center_crop(x, h, w):
    dh, dw = x.shape[-2] - h, x.shape[-1] - w
    if dh < 0 or dw < 0 or dh % 2 or dw % 2:
        raise DimensionError(f"cannot center-crop {x.shape[-2:]} to {(h, w)}")
    return x[..., dh // 2 : dh // 2 + h, dw // 2 : dw // 2 + w]


def _forward_cache(net, img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise DimensionError(f"input image must be 2-D, got shape {img.shape}")
    if min(img.shape) < receptive_field(net):
        raise DimensionError(
            f"input {img.shape} smaller than receptive field {receptive_field(net)}"
        )
    skips = _skip_pairs(net.depth) if net.skip_mode == "symmetric_skips" else []
    incoming = {dst: src for src, dst in skips}
    acts = [img[None]]
    pres = []
    for layer in range(1, net.depth + 1):
        inp = acts[layer - 1]
        if layer in incoming:
            skip_act = acts[incoming[layer]]
            inp = inp + _center_crop(skip_act, inp.shape[1], inp.shape[2])
        z = _kernels.conv_forward(inp, net.weights[layer - 1])
        z = z - net.thresholds[layer - 1][:, None, None]
        pres.append(z)
        acts.append(np.maximum(z, 0.0) if layer < net.depth else z)
    out = acts[-1][0]
    if net.skip_mode == "global_residual":
        out = out + _center_crop(img, out.shape[0], out.shape[1])
    return out, acts, pres, incoming


def forward(net, img):
    """Network output for a single-channel image (2-D in, 2-D out)."""
    return _forward_cache(net, img)[0]


def loss_and_gradients(net, img, target):
    """Mean-squared-error loss and exact gradients for one sample.

    Returns (loss, weight_grads, threshold_grads) with gradients shaped
    like the parameters.
    """
    target = np.asarray(target, dtype=np.float64)
    out, acts, pres, incoming = _forward_cache(net, img)
    if out.shape != target.shape:
        raise DimensionError(f"output {out.shape} != target {target.shape}")
    diff = out - target
    loss = float(np.mean(diff * diff))
    g_out = (2.0 / diff.size) * diff
    grad_acts = [None] * (net.depth + 1)
    grad_acts[net.depth] = g_out[None]
    w_grads = [None] * net.depth
    b_grads = [None] * net.depth
    for layer in range(net.depth, 0, -1):
        gz = grad_acts[layer]
        if layer < net.depth:
            gz = gz * (pres[layer - 1] > 0.0)
        inp = acts[layer - 1]
        if layer in incoming:
            skip_act = acts[incoming[layer]]
            inp = inp + _center_crop(skip_act, inp.shape[1], inp.shape[2])
        w_grads[layer - 1] = _kernels.conv_grad_w(inp, gz)
        b_grads[layer - 1] = -np.sum(gz, axis=(1, 2))
        g_inp = _kernels.conv_grad_x(net.weights[layer - 1], gz)
        if grad_acts[layer - 1] is None:
            grad_acts[layer - 1] = g_inp
        else:
            grad_acts[layer - 1] = grad_acts[layer - 1] + g_inp
        if layer in incoming:
            src = incoming[layer]
            h, w = g_inp.shape[1], g_inp.shape[2]
            src_shape = acts[src].shape
            pad = np.zeros(src_shape)
            dh, dw = src_shape[1] - h, src_shape[2] - w
            pad[:, dh // 2 : dh // 2 + h, dw // 2 : dw // 2 + w] = g_inp
            if grad_acts[src] is None:
                grad_acts[src] = pad
            else:
                grad_acts[src] = grad_acts[src] + pad
    return loss, w_grads, b_grads


def _sgd_update(net, w_grads, b_grads, lr):
    weights = tuple(w - lr * g for w, g in zip(net.weights, w_grads))
    thresholds = tuple(b - lr * g for b, g in zip(net.thresholds, b_grads))
    return replace(net, weights=weights, thresholds=thresholds)


def train(net, pairs, config, loss_cap=1e6):
    """SGD over (input, target) pairs; returns (net, per-step losses).

    One seeded shuffle per epoch; a non-finite or capped loss raises
    TrainingDiverged with the history collected so far.
    """
    if not pairs:
        raise PreconditionError("no training pairs supplied")
    rng = np.random.default_rng(config.seed)
    history = []
    for _ in range(config.epochs):
        order = rng.permutation(len(pairs))
        for idx in order:
            img, target = pairs[idx]
            loss, w_grads, b_grads = loss_and_gradients(net, img, target)
            if not np.isfinite(loss) or loss > loss_cap:
                raise TrainingDiverged(
                    f"loss {loss} beyond cap {loss_cap}", history=history
                )
            net = _sgd_update(net, w_grads, b_grads, config.learning_rate)
            history.append(loss)
    return net, history


_MAGIC = b"TCNW"
_VERSION = 1


def save_params(path, net):
    """Serialize a network; fixed little-endian layout.

    Header: magic "TCNW", u32 version, u32 depth, u8 skip-mode index.
    Per layer: four u32 (cout, cin, kh, kw), then float64 weights in
    row-major order, then float64 thresholds.  All fields little-endian.
    """
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IIB", _VERSION, net.depth, SKIP_MODES.index(net.skip_mode)))
        for w, b in zip(net.weights, net.thresholds):
            fh.write(struct.pack("<IIII", *w.shape))
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_params(path):
    """Inverse of save_params; malformed files raise FormatError."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] != _MAGIC:
        raise FormatError(f"bad parameter file magic {buf[:4]!r}")
    try:
        version, depth, skip_idx = struct.unpack_from("<IIB", buf, 4)
    except struct.error as exc:
        raise FormatError("truncated parameter file header") from exc
    if version != _VERSION:
        raise FormatError(f"unsupported parameter file version {version}")
    if skip_idx >= len(SKIP_MODES):
        raise FormatError(f"unknown skip mode index {skip_idx}")
    pos = 4 + struct.calcsize("<IIB")
    weights, thresholds = [], []
    for _ in range(depth):
        try:
            cout, cin, kh, kw = struct.unpack_from("<IIII", buf, pos)
        except struct.error as exc:
            raise FormatError("truncated parameter file layer header") from exc
        pos += 16
        n_w, n_b = cout * cin * kh * kw, cout
        need = (n_w + n_b) * 8
        if len(buf) < pos + need:
            raise FormatError("truncated parameter file payload")
        w = np.frombuffer(buf, dtype="<f8", count=n_w, offset=pos).reshape(cout, cin, kh, kw)
        pos += n_w * 8
        b = np.frombuffer(buf, dtype="<f8", count=n_b, offset=pos)
        pos += n_b * 8
        weights.append(w.astype(np.float64))
        thresholds.append(b.astype(np.float64))
    if pos != len(buf):
        raise FormatError("trailing bytes in parameter file")
    return ToyCnn(tuple(weights), tuple(thresholds), SKIP_MODES[skip_idx])
