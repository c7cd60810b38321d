#!/usr/bin/env python3
"""Benchmark the octagon tight-closure kernels: compiled vs pure numpy.

    python benchmarks/bench_closure.py [--sizes 4,8,16,32] [--repeat 200]

The closure is the hot inner loop of the octagon domain (it runs before
every restriction, join, comparison and unlift), so this is the one kernel
worth compiling.  Also times one end-to-end analysis under each kernel.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def random_dbm(rng: np.random.Generator, n: int) -> np.ndarray:
    m = np.full((2 * n, 2 * n), np.inf)
    np.fill_diagonal(m, 0.0)
    for _ in range(3 * n):
        i, j = rng.integers(0, 2 * n, size=2)
        if i != j:
            c = float(rng.integers(-2, 9))
            m[i, j] = min(m[i, j], c)
            m[j ^ 1, i ^ 1] = m[i, j]
    return m


def bench_kernel(close, matrices, repeat: int) -> float:
    best = float("inf")
    for _ in range(3):
        t0 = time.perf_counter()
        for _ in range(repeat):
            for m in matrices:
                close(np.array(m))
        best = min(best, time.perf_counter() - t0)
    return best / (repeat * len(matrices))


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="4,8,16,32")
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()

    from concurrel.domains._closure_py import tight_close_inplace as pure

    try:
        from concurrel.domains._closure import tight_close_inplace as compiled
    except ImportError:
        compiled = None
        print("compiled kernel not built; showing the pure kernel only")

    rng = np.random.default_rng(7)
    print(f"{'n vars':>7} {'pure numpy':>12} {'compiled':>12} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        mats = [random_dbm(rng, n) for _ in range(10)]
        t_pure = bench_kernel(pure, mats, args.repeat)
        if compiled is None:
            print(f"{n:>7} {t_pure * 1e6:>10.1f}µs {'—':>12} {'—':>8}")
        else:
            t_fast = bench_kernel(compiled, mats, args.repeat)
            print(f"{n:>7} {t_pure * 1e6:>10.1f}µs {t_fast * 1e6:>10.1f}µs "
                  f"{t_pure / t_fast:>7.1f}x")

    # end-to-end: one clustered analysis under each kernel selection
    corpus = os.path.join(os.path.dirname(__file__), "..", "corpus", "intro_cluster.conc")
    code = (
        "import time; from concurrel.frontend import parse_program;"
        "from concurrel.analysis import run_analysis, preset;"
        f"p = parse_program(open({corpus!r}).read());"
        "t0 = time.perf_counter();"
        "[run_analysis(p, preset('clusters')) for _ in range(5)];"
        "print((time.perf_counter() - t0) / 5)"
    )
    for label, env in (("compiled", {}), ("pure", {"CONCURREL_PURE": "1"})):
        out = subprocess.run([sys.executable, "-c", code],
                             capture_output=True, text=True,
                             env={**os.environ, **env})
        if out.returncode == 0:
            print(f"end-to-end clusters analysis ({label} kernel): "
                  f"{float(out.stdout.strip()) * 1000:.1f} ms")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
