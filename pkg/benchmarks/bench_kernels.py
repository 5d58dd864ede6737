"""Compare the numba and numpy kernel paths on realistic token lengths.

Usage: python benchmarks/bench_kernels.py [--sizes 200,500,1000,2000]
"""

import argparse
import time

import numpy as np

from xlforge import kernels
from xlforge.metrics import TerConfig, rouge_l, ter


def bench(func, *args, warmup=True, repeat=3):
    if warmup:
        func(*args)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def random_ids(rng, n, vocab=500):
    return rng.integers(0, vocab, size=n).astype(np.int64)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="200,500,1000,2000")
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if not kernels.HAVE_NUMBA:
        print("numba not installed; only the numpy path is available")

    rng = np.random.default_rng(42)
    print(f"{'kernel':<14} {'n':>6} {'numpy':>12} {'numba':>12} {'speedup':>8}")
    for n in sizes:
        a = random_ids(rng, n)
        b = random_ids(rng, n)
        for label, func in (("lcs_length", kernels.lcs_length),
                            ("edit_distance", kernels.edit_distance)):
            timings = {}
            for backend in ("numpy", "numba") if kernels.HAVE_NUMBA else ("numpy",):
                kernels.use_backend(backend)
                timings[backend] = bench(func, a, b, repeat=args.repeat)
            numpy_t = timings["numpy"]
            numba_t = timings.get("numba")
            speedup = f"{numpy_t / numba_t:6.1f}x" if numba_t else "n/a"
            numba_s = f"{numba_t * 1e3:9.2f} ms" if numba_t else "      n/a"
            print(f"{label:<14} {n:>6} {numpy_t * 1e3:9.2f} ms {numba_s} {speedup:>8}")

    # end-to-end flavor: one long-document metric call per path
    words = [f"w{i}" for i in rng.integers(0, 800, size=1500)]
    shuffled = list(words)
    np.random.default_rng(1).shuffle(shuffled)
    for backend in ("numpy", "numba") if kernels.HAVE_NUMBA else ("numpy",):
        kernels.use_backend(backend)
        t_rouge = bench(lambda: rouge_l(shuffled, words))
        t_ter = bench(lambda: ter(shuffled, words, TerConfig(shifts_enabled=False)))
        print(f"rouge_l+ter on 1500-token docs [{backend}]: "
              f"rouge_l {t_rouge * 1e3:.2f} ms, ter {t_ter * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
