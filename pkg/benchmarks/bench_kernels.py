"""Timing comparison between the compiled kernels and the NumPy fallback.

Run directly:

    python3 benchmarks/bench_kernels.py [--repeat N]

Times the four hot-path primitives on shapes close to what training
actually sees (small filters, patch-sized inputs) plus one larger image
case, and prints a table with the per-call ratio.  Agreement is checked
before timing so a broken backend never posts a time.
"""

import argparse
import time

import numpy as np

from convdict._kernels import _pykern

try:
    from convdict._kernels import _ckern
except ImportError:
    _ckern = None


CASES = [
    ("corr2d 32x32 k3", "corr2d", lambda r: (r.normal(size=(32, 32)), r.normal(size=(3, 3)))),
    ("corr2d 256x256 k5", "corr2d", lambda r: (r.normal(size=(256, 256)), r.normal(size=(5, 5)))),
    ("forward 8ch 28px", "conv_forward", lambda r: (r.normal(size=(8, 28, 28)), r.normal(size=(8, 8, 3, 3)))),
    ("grad_w 8ch 28px", "conv_grad_w", lambda r: (r.normal(size=(8, 28, 28)), r.normal(size=(8, 26, 26)))),
    ("grad_x 8ch 26px", "conv_grad_x", lambda r: (r.normal(size=(8, 8, 3, 3)), r.normal(size=(8, 26, 26)))),
]


def time_call(fn, args, repeat):
    fn(*args)  # warm up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20, help="timing repeats per case")
    args = parser.parse_args()

    if _ckern is None:
        print("compiled backend not built; timing the NumPy fallback only")
    rng = np.random.default_rng(0)
    rows = []
    for label, name, make in CASES:
        call_args = make(rng)
        py_fn = getattr(_pykern, name)
        t_py = time_call(py_fn, call_args, args.repeat)
        if _ckern is not None:
            c_fn = getattr(_ckern, name)
            gap = np.max(np.abs(c_fn(*call_args) - py_fn(*call_args)))
            assert gap < 1e-12, f"{label}: backends disagree by {gap:.2e}"
            t_c = time_call(c_fn, call_args, args.repeat)
            rows.append((label, t_py, t_c, t_py / t_c))
        else:
            rows.append((label, t_py, None, None))

    print(f"{'case':22s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}")
    for label, t_py, t_c, ratio in rows:
        if t_c is None:
            print(f"{label:22s} {t_py * 1e6:9.1f}u {'-':>10s} {'-':>8s}")
        else:
            print(f"{label:22s} {t_py * 1e6:9.1f}u {t_c * 1e6:9.1f}u {ratio:7.1f}x")


if __name__ == "__main__":
    main()
