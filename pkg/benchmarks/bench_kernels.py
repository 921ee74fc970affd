"""Time the compiled and numpy backends of the three hot loops.

Usage: python3 benchmarks/bench_kernels.py [--repeat R]
"""

import argparse
import timeit

import numpy as np

from fracspec import _kernels, _pykernels
from fracspec.fractional import caputo_weights

try:
    from fracspec import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    n = 2048
    g = rng.standard_normal((4, n))
    conv, far = caputo_weights(n, 0.5)
    f = rng.standard_normal((64, 1024))
    steps, cols = 512, 4096
    # |decay| < 1 as for exp(-dt L) with Re L > 0
    decay = np.exp(-rng.uniform(0, 5, cols) + 1j * rng.uniform(-1, 1, cols))
    w = 1e-3 * (rng.standard_normal(cols) + 1j * rng.standard_normal(cols))
    forcing = rng.standard_normal((steps, cols)) + 0j
    return {
        "caputo_rows (4 x 2048)": lambda impl: _kernels.caputo_rows(g, conv, far, impl=impl),
        "shifted_difference_rows (64 x 1024, m=2)":
            lambda impl: _kernels.shifted_difference_rows(f, 7.3, 2, impl=impl),
        "duhamel_march (512 steps x 4096)":
            lambda impl: _kernels.duhamel_march(decay, w, w, forcing, impl=impl),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = [("python", _pykernels)] + ([("cython", _ckernels)] if _ckernels else [])
    print(f"{'kernel':44s} " + " ".join(f"{name:>12s}" for name, _ in impls) + "   speedup")
    for label, fn in cases(np.random.default_rng(0)).items():
        times = [min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat))
                 for _, impl in impls]
        speed = f"{times[0] / times[-1]:8.1f}x" if len(times) > 1 else ""
        print(f"{label:44s} " + " ".join(f"{t * 1e3:10.2f}ms" for t in times) + "  " + speed)


if __name__ == "__main__":
    main()
