"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 32 128 512]

The first numba call of each kernel includes compilation and is timed
separately as ``compile``.
"""
import argparse
import time

import numpy as np

from hodgenet.kernels import numba_backend, numpy_backend


def _sym(n, rng):
    a = rng.standard_normal((n, n))
    return a + a.T


def _dist(n, rng):
    d = rng.uniform(1.0, 10.0, (n, n))
    d[rng.uniform(size=(n, n)) < 0.9] = np.inf
    np.fill_diagonal(d, 0.0)
    return np.minimum(d, d.T)


def _incircle_args(n, rng):
    xs, ys = rng.uniform(size=n), rng.uniform(size=n)
    tris = np.array([rng.choice(n, 3, replace=False) for _ in range(2 * n)], dtype=np.int64)
    alive = np.ones(len(tris), dtype=np.bool_)
    return tris, alive, xs, ys, 0.5, 0.5, 1e-12


# each case: (setup(n, rng) -> args, call(backend, args))
CASES = {
    "jacobi_eigh": (lambda n, rng: (_sym(min(n, 128), rng), 1e-10, 100), lambda be, a: be.jacobi_eigh(*a)),
    "tridiag_ql_eigh": (lambda n, rng: (_sym(n, rng), 60), lambda be, a: be.tridiag_ql_eigh(*a)),
    "floyd_warshall": (lambda n, rng: (_dist(min(n, 256), rng),), lambda be, a: be.floyd_warshall(a[0].copy())),
    "incircle_scan": (lambda n, rng: _incircle_args(n * 20, rng), lambda be, a: be.incircle_scan(*a)),
}


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[32, 128, 512])
    args = ap.parse_args()
    backends = [("numpy", numpy_backend)]
    if numba_backend is not None:
        backends.append(("numba", numba_backend))
    else:
        print("numba unavailable; timing numpy only")
    print(f"{'kernel':<16} {'n':>5} " + " ".join(f"{b:>10}" for b, _ in backends) + "   speedup")
    for name, (setup, call) in CASES.items():
        if numba_backend is not None:
            warm = setup(8, np.random.default_rng(0))
            t = time.perf_counter()
            call(numba_backend, warm)
            print(f"{name:<16} {'compile':>5} {'':>10} {time.perf_counter() - t:10.3f}s")
        for n in args.sizes:
            a = setup(n, np.random.default_rng(n))
            row = [best_of(lambda: call(be, a), args.repeat) for _, be in backends]
            speed = f"{row[0] / row[1]:8.1f}x" if len(row) > 1 else ""
            print(f"{name:<16} {n:>5} " + " ".join(f"{t * 1e3:8.2f}ms" for t in row) + f" {speed}")


if __name__ == "__main__":
    main()
