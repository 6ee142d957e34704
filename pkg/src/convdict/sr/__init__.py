"""Desk-scale superresolution experiment stack."""

from .bicubic import bicubic_resize
from .data import degrade, extract_pairs, make_sr_pairs
from .experiment import (
    EvalReport,
    SweepCell,
    depth_sweep,
    evaluate_net,
    layer_coherence_report,
    saturation_depth,
    train_on_corpus,
)
from .metrics import psnr, welch_t
from .net import (
    SKIP_MODES,
    NetworkConfig,
    ToyCnn,
    forward,
    init_net,
    load_params,
    loss_and_gradients,
    receptive_field,
    save_params,
    train,
)
from .pgm import load_pgm, save_pgm

__all__ = [
    "bicubic_resize",
    "degrade",
    "extract_pairs",
    "make_sr_pairs",
    "EvalReport",
    "SweepCell",
    "depth_sweep",
    "evaluate_net",
    "layer_coherence_report",
    "saturation_depth",
    "train_on_corpus",
    "psnr",
    "welch_t",
    "SKIP_MODES",
    "NetworkConfig",
    "ToyCnn",
    "forward",
    "init_net",
    "load_params",
    "loss_and_gradients",
    "receptive_field",
    "save_params",
    "train",
    "load_pgm",
    "save_pgm",
]
