"""convdict: a workbench for convolution seen as dictionary algebra.

Sliding-patch operator algebra, shrinkage solvers, thresholded-neuron
training, layered sparse-coding stability checks, a directional
coherency splitter, and a desk-scale superresolution experiment stack.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .conv_algebra import (
    LearningDictionary,
    correlation_matrix,
    learning_dictionary,
    swap_matrix,
    unvectorize_lex,
    valid_correlate,
    vectorize_lex,
)
from .csc import (
    CscInstance,
    ReconstructionDictionary,
    coherence_lower_bound,
    layer_error_bound,
    layered_soft_threshold,
    mutual_coherence,
    sparsity_bound,
    synthesize_instance,
    verify_stability,
)
from .coherency import CoherencyScore, partition_corpus, patch_gradients, spatial_coherency
from .neuron import (
    CascadePair,
    NeuronFilter,
    TrainState,
    adaptive_bias,
    cascade_forward,
    cascade_step,
    cascade_soft_form_step,
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
from .proximal import (
    Basis,
    IstReport,
    basis_soft_threshold,
    canonical_basis,
    dct_basis,
    ist_solve,
    ist_solve_basis,
    landweber_solve,
    soft_nn,
    soft_sym,
    spectral_norm,
)

__version__ = "0.1.0"
