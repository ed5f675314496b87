"""Times the compiled binning kernels against the pure python fallback.

Run from a checkout with the package installed:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --sizes 10000 1000000 --repeat 9

Prints one row per (kernel, size) with the median wall time of each
implementation and the speedup.  The two implementations are also checked
against each other on every workload before timing, so a drifting kernel
fails loudly rather than producing a meaningless table.
"""

import argparse
import random
import statistics
import time
from array import array

from qualdash.aggregate import _ckernels, _pykernels
from qualdash.aggregate._kernels import BACKEND

EPOCH = 736695  # 2018-01-01
SPAN = 3 * 365


def make_workloads(rng, n):
    days = array("q", (EPOCH + rng.randrange(SPAN) for _ in range(n)))
    values = array("d", (rng.uniform(0.0, 50.0) for _ in range(n)))
    starts = array("q", (EPOCH + rng.randrange(SPAN) for _ in range(n)))
    ends = array("q", (s + rng.randrange(60) for s in starts))
    # monthly-ish edges across the span
    edges = array("q", range(EPOCH, EPOCH + SPAN + 30, 30))
    return {
        "count_by_bin": (days, edges),
        "sum_by_bin": (days, values, edges),
        "interval_days_by_bin": (starts, ends, edges),
    }


def check_agreement(workloads):
    for name, args in workloads.items():
        got = getattr(_ckernels, name)(*args)
        want = getattr(_pykernels, name)(*args)
        if name == "sum_by_bin":
            sums_c, counts_c = got
            sums_p, counts_p = want
            assert list(counts_c) == list(counts_p), name
            assert all(abs(a - b) < 1e-9
                       for a, b in zip(sums_c, sums_p)), name
        else:
            assert list(got) == list(want), name


def median_time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+",
                        default=[10_000, 100_000, 1_000_000])
    parser.add_argument("--repeat", type=int, default=7)
    parser.add_argument("--seed", type=int, default=7)
    opts = parser.parse_args()

    if BACKEND != "compiled":
        print("note: package dispatch is using the pure backend "
              "(QUALDASH_PURE_KERNELS set or extension missing); "
              "timing the extension module directly anyway")

    rng = random.Random(opts.seed)
    print(f"{'kernel':<22} {'n':>9} {'compiled':>12} {'pure':>12} "
          f"{'speedup':>8}")
    for n in opts.sizes:
        workloads = make_workloads(rng, n)
        check_agreement(workloads)
        for name, args in workloads.items():
            t_c = median_time(getattr(_ckernels, name), args, opts.repeat)
            t_p = median_time(getattr(_pykernels, name), args, opts.repeat)
            print(f"{name:<22} {n:>9} {t_c * 1e3:>10.2f}ms "
                  f"{t_p * 1e3:>10.2f}ms {t_p / t_c:>7.1f}x")


if __name__ == "__main__":
    main()
