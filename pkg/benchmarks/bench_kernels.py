"""Compare the compiled kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from multibeam import _kernels_py

try:
    from multibeam import _kernels
except ImportError:
    _kernels = None


def cases():
    obj = np.array([1.0, 0.3, -0.2, 2.0, 0.4, 0.1])
    cons = np.array([[0.5, 0.2, 0.1, 1.5, 0.3, -0.2], [0.8, -0.4, 0.3, 1.2, 0.1, 0.2]])
    thr = np.array([0.3, 0.5])
    return {
        "ratio_grid_argmax (2e5 phases, 2 constraints)":
            ("ratio_grid_argmax", (obj, cons, thr, 200_000)),
        "toeplitz_sums (N_I=4096, M=16)": ("toeplitz_sums", (-0.2, 1e-4 / 3, 4096, 0.5, 16)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the numpy timings are shown")
    print(f"{'kernel':48s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for label, (name, call_args) in cases().items():
        t_py = min(timeit.repeat(lambda: getattr(_kernels_py, name)(*call_args),
                                 number=1, repeat=args.repeat)) * 1e3
        if _kernels is None:
            print(f"{label:48s} {t_py:10.2f} {'-':>10s} {'-':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: getattr(_kernels, name)(*call_args),
                                 number=1, repeat=args.repeat)) * 1e3
        print(f"{label:48s} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
