"""Compare the numpy and numba kernel implementations.

Runs each kernel on representative table sizes and prints the best
wall-clock time per backend plus the speedup.  The numba functions are
called once before timing so JIT compilation is not measured.

Usage:
    python benchmarks/bench_kernels.py [--repeats N] [--scale N]
"""

import argparse
import time

import numpy as np

from homarkov import kernels


def build_inputs(scale):
    rng = np.random.default_rng(0)
    m = 4
    table = rng.uniform(size=m ** (scale + 1))
    table /= table.sum()
    rows = rng.uniform(0.01, 1.0, size=(m**3, m))
    rows /= rows.sum(axis=1, keepdims=True)

    gmap = np.array([0, 0, 1, 1], dtype=np.int64)

    p = rng.uniform(size=m**scale)
    p /= p.sum()
    q = rng.uniform(0.01, 1.0, size=m**scale)
    q /= q.sum()

    nx = 6
    alpha = rng.uniform(size=(3**8, nx))
    trans = rng.uniform(0.01, 1.0, size=(nx, nx))
    trans /= trans.sum(axis=1, keepdims=True)
    lmap = np.array([0, 0, 1, 1, 2, 2], dtype=np.int64)

    return {
        "extend_joint": (table, rows),
        "project_table": (table, gmap, m, 2, scale + 1),
        "kl_sum": (p, q, 1e-12),
        "lump_step": (alpha, trans, lmap, 3),
    }


def best_time(fn, args, repeats):
    fn(*args)  # warm (JIT compile / cache load on the numba side)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument(
        "--scale",
        type=int,
        default=9,
        help="tables have 4**(scale+1) entries",
    )
    args = parser.parse_args()

    inputs = build_inputs(args.scale)
    impls = {"numpy": kernels._NUMPY_IMPL}
    if kernels.HAS_NUMBA:
        impls["numba"] = kernels._NUMBA_IMPL
    else:
        print("numba not importable; timing the numpy backend only")

    print(f"active backend: {kernels.BACKEND}")
    print(f"table entries: {4 ** (args.scale + 1)}")
    header = f"{'kernel':<14}" + "".join(f"{name:>12}" for name in impls)
    if len(impls) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for kernel_name, kernel_args in inputs.items():
        times = [
            best_time(impl[kernel_name], kernel_args, args.repeats)
            for impl in impls.values()
        ]
        line = f"{kernel_name:<14}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        if len(times) == 2:
            line += f"{times[0] / times[1]:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
