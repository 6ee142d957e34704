"""NumPy implementations of the hot correlation kernels.

Fallback backend used when the compiled extension is unavailable.  All
functions expect C-contiguous float64 input (the package-level wrappers
take care of coercion) and return newly allocated arrays.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def corr2d(x, f):
    # valid correlation of a single 2-D array with a single filter
    win = sliding_window_view(x, f.shape)
    return np.einsum("ijuv,uv->ij", win, f)


def conv_forward(x, w):
    # x: (cin, h, w), w: (cout, cin, k, k) -> (cout, h-k+1, w-k+1)
    win = sliding_window_view(x, w.shape[2:], axis=(1, 2))
    return np.einsum("ihwuv,oiuv->ohw", win, w)


def conv_grad_w(x, gy):
    # gradient of conv_forward wrt w given upstream gradient gy
    win = sliding_window_view(x, gy.shape[1:], axis=(1, 2))
    return np.einsum("iuvhw,ohw->oiuv", win, gy)


def conv_grad_x(w, gy):
    # gradient of conv_forward wrt x: full correlation with flipped filters
    k1, k2 = w.shape[2], w.shape[3]
    gyp = np.pad(gy, ((0, 0), (k1 - 1, k1 - 1), (k2 - 1, k2 - 1)))
    win = sliding_window_view(gyp, (k1, k2), axis=(1, 2))
    return np.einsum("ohwuv,oiuv->ihw", win, w[:, :, ::-1, ::-1])
