"""Compare the numba and pure-numpy kernels on representative workloads.

Usage: python benchmarks/bench_kernels.py [--repeat N] [--candidates M]

Each kernel runs once for warm-up (numba compilation), then the best of
``--repeat`` timings is reported along with the largest output difference
between the two backends.
"""
import argparse
import math
import time

import numpy as np

from isingchain import kernels


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def workloads(candidates):
    k = 2.0
    a = k * k - 1.0
    r0 = np.array([1.0, 0.0, 0.0])
    theta0 = np.zeros(candidates)
    rates = np.linspace(0.2, 1.5, candidates)
    ev = np.array([1.0, 0.0, 0.0])
    ks = np.array([6.0, 1.0, 3.5])
    u = 1.3 * np.sin(np.linspace(0.0, math.pi, 10001))
    x0 = np.zeros(6)
    x0[0] = 1.0
    return {
        "terminal_scan": lambda impl: impl(theta0, rates, a, k, r0, 1e-3, 6.0, ev, 1e-9),
        "geodesic_dense": lambda impl: impl(0.0, 0.8, a, k, r0, 1e-4, 20000),
        "chain_segment": lambda impl: impl(x0, ks, 1, u, 1e-4, 1),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--candidates", type=int, default=16, help="shooting parameters per scan")
    args = parser.parse_args()

    print(f"{'kernel':<16}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, run in workloads(args.candidates).items():
        nb, np_ = kernels.NUMBA[name], kernels.NUMPY[name]
        t_nb = best_of(lambda: run(nb), args.repeat)
        t_np = best_of(lambda: run(np_), args.repeat)
        out_nb, out_np = run(nb), run(np_)
        if isinstance(out_nb, tuple):
            diff = max(float(np.nanmax(np.abs(p - q))) for p, q in zip(out_nb, out_np))
        else:
            diff = float(np.max(np.abs(out_nb - out_np)))
        print(f"{name:<16}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x{diff:>14.3g}")


if __name__ == "__main__":
    main()
