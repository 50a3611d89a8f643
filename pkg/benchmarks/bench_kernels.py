"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--size N] [--repeat R]

Prints one line per kernel with the best-of-R wall time for each backend and
the speedup. Outputs are compared first so a fast wrong kernel cannot pass.
"""

import argparse
import timeit

import numpy as np

from hybriddp import kernels


def cases(size, seed=0):
    rng = np.random.default_rng(seed)
    domain = 1 << 16
    items = rng.integers(0, domain, size, dtype=np.uint64)
    rows = rng.integers(0, domain, size, dtype=np.uint64)
    uniforms = rng.random(size)
    bits = rng.integers(0, 2, size).astype(np.int8)
    vec = rng.normal(size=1 << 20)
    return {
        "fwht[2^20]": lambda impl: impl.fwht(vec.copy()),
        "parity_and": lambda impl: impl.parity_and(items, rows),
        "hadamard_encode": lambda impl: impl.hadamard_encode(items, rows, uniforms, 0.73),
        "signed_row_sums": lambda impl: impl.signed_row_sums(rows, bits, domain),
    }


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=2_000_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    if "compiled" not in kernels.BACKENDS:
        print("compiled extension not built; only the python backend is available")
    print(f"{'kernel':<18}{'python ms':>12}{'compiled ms':>14}{'speedup':>10}")
    for name, call in cases(args.size).items():
        times = {}
        results = {}
        for backend, impl in kernels.BACKENDS.items():
            results[backend] = call(impl)
            times[backend] = 1000 * min(timeit.repeat(lambda: call(impl), number=1, repeat=args.repeat))
        if "compiled" in results:
            a, b = results["python"], results["compiled"]
            if not np.allclose(a, b):
                raise SystemExit(f"{name}: backends disagree")
            speed = times["python"] / times["compiled"]
            print(f"{name:<18}{times['python']:>12.2f}{times['compiled']:>14.2f}{speed:>9.1f}x")
        else:
            print(f"{name:<18}{times['python']:>12.2f}{'-':>14}{'-':>10}")


if __name__ == "__main__":
    main()
