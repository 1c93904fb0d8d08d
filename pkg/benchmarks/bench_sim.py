"""Benchmark the simulation kernel backends on the 20-node case study.

Runs the identical per-sample recursion through the numba-jitted kernel and
the pure-numpy fallback, reports wall time per run and the speedup.  The
first jitted call compiles, so a warm-up run precedes timing.

Usage:
    python benchmarks/bench_sim.py [--samples 2000 10000 50000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from netid import ExcitationSpec, build_case_study, simulate
from netid.kernels import HAVE_NUMBA


def time_backend(model, spec, backend: str, repeats: int) -> float:
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        simulate(model, spec, backend=backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, nargs="+",
                        default=[2000, 10000, 50000],
                        help="sample counts to benchmark (default: %(default)s)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed repetitions, best-of (default: %(default)s)")
    parser.add_argument("--seed", type=int, default=0,
                        help="excitation seed (default: %(default)s)")
    args = parser.parse_args(argv)

    model = build_case_study()
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if HAVE_NUMBA:  # compile outside the timed region
        simulate(model, ExcitationSpec(range(1, model.L + 1), N=64,
                                       seed=args.seed), backend="numba")
    else:
        print("numba not installed; timing the numpy backend only")

    print(f"{'samples':>8}  " + "".join(f"{b + ' (s)':>12}" for b in backends)
          + ("  " + f"{'speedup':>8}" if HAVE_NUMBA else ""))
    for n in args.samples:
        spec = ExcitationSpec(range(1, model.L + 1), N=n, seed=args.seed)
        times = [time_backend(model, spec, b, args.repeats) for b in backends]
        row = f"{n:>8}  " + "".join(f"{t:>12.4f}" for t in times)
        if HAVE_NUMBA:
            row += f"  {times[0] / times[1]:>7.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
