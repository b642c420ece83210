"""Compare the compiled and numpy kernel backends on the simulator's hot loops.

    python3 benchmarks/bench_kernels.py [--n 96] [--repeat 5] [--pipeline]
"""

import argparse
import time

import numpy as np

from einmax import kernels
from einmax.weakfield import ConormalSourceSpec, GridSpec, simulate


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=96)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--pipeline", action="store_true", help="also time a short end-to-end simulation")
    args = ap.parse_args()

    n = args.n
    rng = np.random.default_rng(0)
    u0, u1, f = (np.ascontiguousarray(rng.standard_normal((4, n, n, n))) for _ in range(3))
    out = np.empty_like(u0)
    phis = [np.ascontiguousarray(rng.standard_normal((4, n, n, n))) for _ in range(3)]
    inv2h = np.full(3, 0.5 * (n - 1))

    backends = kernels.backends()
    if "cython" not in backends:
        print("compiled extension not built; only the numpy backend is available")
    rows = []
    for name, mod in backends.items():
        lf = best_of(lambda: mod.leapfrog_step(u0, u1, f, out, 0.25, 0.25, 0.25, 1e-4), args.repeat)
        st = best_of(lambda: mod.em_stress(*phis, 10.0, inv2h), args.repeat)
        rows.append((name, lf, st))
    print(f"grid {n}^3, 4 components, best of {args.repeat}")
    print(f"{'backend':8s} {'leapfrog [ms]':>14s} {'em_stress [ms]':>15s}")
    for name, lf, st in rows:
        print(f"{name:8s} {1e3 * lf:14.2f} {1e3 * st:15.2f}")
    if len(rows) == 2:
        print(f"speed-up  {rows[0][1] / rows[1][1]:13.2f}x {rows[0][2] / rows[1][2]:14.2f}x")

    if args.pipeline:
        grid = GridSpec.cube(n, steps=24)
        for name, mod in backends.items():
            t0 = time.perf_counter()
            simulate(ConormalSourceSpec(), grid, kernel=mod, gauge=False)
            print(f"simulate {n}^3 x 24 steps [{name}]: {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
