"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Sizes mirror the Monte Carlo hot path: one replication tabulates every trip
of a 100,000 household population, and stratum moments run over 200,000
households.
"""
import argparse
import timeit

import numpy as np

from travelsample import _kernels_py

try:
    from travelsample import _kernels
except ImportError:
    _kernels = None


def cases(rng):
    n_hh, n_trips, n_cells = 100_000, 300_000, 36
    trip_household = np.sort(rng.integers(0, n_hh, n_trips)).astype(np.int64)
    trip_cell = rng.integers(0, n_cells, n_trips).astype(np.int64)
    trip_weight = np.ones(n_trips)
    chosen = rng.choice(n_hh, size=3_744, replace=False).astype(np.int64)
    mask = _kernels_py.sample_mask(chosen, n_hh)
    codes = rng.integers(0, 27, 200_000).astype(np.int64)
    values = rng.poisson(3.0, 200_000).astype(np.float64)
    return {
        "group_moments": ("group_moments", (codes, values, 27)),
        "tabulate_sampled": ("tabulate_sampled", (mask, trip_household, trip_cell, trip_weight, n_cells, 26.7)),
        "sample_mask": ("sample_mask", (chosen, n_hh)),
    }


def best_of(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    loops, _ = timer.autorange()
    return min(timer.repeat(repeat, loops)) / loops


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18}{'numpy (ms)':>12}{'cython (ms)':>13}{'speedup':>9}")
    for name, (attr, fargs) in cases(rng).items():
        py = best_of(getattr(_kernels_py, attr), fargs, args.repeat)
        if _kernels is None:
            print(f"{name:<18}{py * 1e3:>12.3f}{'n/a':>13}{'':>9}")
            continue
        cy = best_of(getattr(_kernels, attr), fargs, args.repeat)
        # both paths must agree before their timings mean anything
        a, b = getattr(_kernels_py, attr)(*fargs), getattr(_kernels, attr)(*fargs)
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            np.testing.assert_array_equal(x, y)
        print(f"{name:<18}{py * 1e3:>12.3f}{cy * 1e3:>13.3f}{py / cy:>8.1f}x")


if __name__ == "__main__":
    main()
