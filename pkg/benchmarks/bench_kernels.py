"""Compare the compiled kernels with the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from wnil import kernels
from wnil.grid import GridFunction, ball_family
from wnil.maximal import hl_maximal


def best_of(fn, repeat):
    out = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t)
    return min(out)


def cases(rng):
    src = rng.normal(size=(256, 256))
    cy = rng.integers(20, 236, size=4000)
    cx = rng.integers(20, 236, size=4000)
    oy, ox = np.meshgrid(np.arange(-8, 9), np.arange(-8, 9), indexing="ij")
    oy, ox = oy.ravel(), ox.ravel()
    vals = rng.normal(size=cy.size)
    ids = np.arange(cy.size, dtype=np.int64)
    w = rng.uniform(size=oy.size)
    f1 = rng.normal(size=(1, 4096))
    st1 = rng.normal(size=(1, 2 * 4096 - 1))
    g = GridFunction.from_function(lambda x, y: np.exp(-8 * (x * x + y * y)), (-1.0, -1.0), (1.0, 1.0), 1 / 64)
    fam = ball_family((g.lo, g.hi), g.h)

    def scatter(impl):
        dst = np.full(src.shape, -np.inf)
        arg = np.full(src.shape, -1, dtype=np.int64)
        kernels.scatter_max(dst, arg, cy, cx, oy, ox, vals, ids, impl=impl)

    return {
        "stencil_sum": lambda impl: kernels.stencil_sum(src, cy, cx, oy, ox, impl=impl),
        "scatter_max": scatter,
        "offset_sum": lambda impl: kernels.offset_sum(src, oy, ox, w, impl=impl),
        "toeplitz": lambda impl: kernels.toeplitz(f1, st1, impl=impl),
        "hl_maximal": lambda impl: hl_maximal(g, fam, impl=impl),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    py = kernels.backend("python")
    try:
        core = kernels.backend("compiled")
    except ImportError:
        core = None
        print("compiled extension not built; timing the fallback only")
    print(f"{'kernel':<12} {'compiled [s]':>13} {'python [s]':>11} {'speedup':>8}")
    for name, fn in cases(np.random.default_rng(0)).items():
        tp = best_of(lambda: fn(py), args.repeat)
        if core is None:
            print(f"{name:<12} {'-':>13} {tp:11.4f} {'-':>8}")
            continue
        tc = best_of(lambda: fn(core), args.repeat)
        print(f"{name:<12} {tc:13.4f} {tp:11.4f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
