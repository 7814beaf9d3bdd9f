"""Time the numba and numpy backends on auction sweeps and full solves.

    python benchmarks/bench_kernels.py [--nodes 10] [--max-parents 3] [--repeat 5]
"""

import argparse
import time

import numpy as np

from marketbayes import kernels
from marketbayes.compiler import compile_network
from marketbayes.config import SolverConfig
from marketbayes.generate import random_moral_network
from marketbayes.solver import _arrays, initial_prices, solve


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=10)
    ap.add_argument("--max-parents", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--sweeps", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    econ = compile_network(random_moral_network(args.seed, args.nodes, args.max_parents))
    arrays = _arrays(econ)
    order = np.arange(1, econ.n_goods, dtype=np.int64)
    start = initial_prices(econ, SolverConfig())
    print(
        f"economy: {econ.n_goods} goods, {len(econ.consumers)} consumers, {len(econ.producers)} producers"
    )

    backends = ["numpy"] + (["numba"] if kernels.HAVE_NUMBA else [])
    sweep_t, final = {}, {}
    for b in backends:
        def run_sweeps(b=b):
            p = start.copy()
            for _ in range(args.sweeps):
                kernels.sweep(p, order, False, 1e-6, 1.0, 2.0, 1e-9, arrays, backend=b)
            final[b] = p

        run_sweeps()  # warm-up, includes JIT compilation for numba
        sweep_t[b] = best_of(run_sweeps, args.repeat)
        print(f"{b:>6}: {args.sweeps} sweeps {sweep_t[b] * 1e3:9.2f} ms  ({sweep_t[b] / args.sweeps * 1e6:8.1f} us/sweep)")

    if len(backends) == 2:
        diff = float(np.max(np.abs(final["numpy"] - final["numba"])))
        print(f"speedup numba/numpy: {sweep_t['numpy'] / sweep_t['numba']:.1f}x  (max price difference {diff:.1e})")

    # full solves go through the module-level backend; switch it per run
    saved = kernels.BACKEND
    try:
        for b in backends:
            kernels.BACKEND = b
            secs = best_of(lambda: solve(econ), max(1, args.repeat // 2))
            _, report = solve(econ)
            print(f"{b:>6}: solve {secs * 1e3:9.2f} ms  ({report.rounds_used} rounds, converged={report.converged})")
    finally:
        kernels.BACKEND = saved


if __name__ == "__main__":
    main()
