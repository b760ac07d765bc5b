"""Timing comparison of the numba and numpy stencil backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from otflow import kernels
from otflow.construct import analyze_matrix, lattice_chart
from otflow.solver import geometry_of

PLASTIC = np.array([[0, 1, 0], [0, 0, 1], [1, 1, 0]], dtype=object)


def bench(fn, repeat):
    fn()  # warm up (jit compile, caches)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    structure = analyze_matrix(PLASTIC)
    backends = ["numpy"] + (["numba"] if kernels.numba_available() else [])
    print(f"{'grid':>14} {'kernel':>16} " + " ".join(f"{b:>12}" for b in backends)
          + ("      speedup" if len(backends) == 2 else ""))
    for n_u, n_f in ((8, 8), (16, 8), (16, 16), (32, 16)):
        chart = lattice_chart(structure, 1.0, n_u, n_f)
        geom = geometry_of(chart)
        rng = np.random.default_rng(0)
        phi = 1e-4 * rng.standard_normal(chart.shape)
        for label, call in (
            ("twisted_hessian", lambda b: kernels.twisted_hessian(phi, geom, backend=b)),
            ("rhs_core", lambda b: kernels.rhs_core(phi, geom, 1.0, 1.0, 0.0, backend=b)),
        ):
            times = [bench(lambda b=b: call(b), args.repeat) for b in backends]
            row = f"{n_u}x{n_f}^3".rjust(14) + f" {label:>16} "
            row += " ".join(f"{t * 1e3:10.3f}ms" for t in times)
            if len(times) == 2:
                row += f" {times[0] / times[1]:10.1f}x"
            print(row)


if __name__ == "__main__":
    main()
