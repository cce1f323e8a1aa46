"""Benchmark the subset-utility kernel: compiled extension vs numpy fallback.

Evaluates all ZF subsets up to a stream cap for a range of candidate-pool
sizes, the same batched-by-size pattern the exhaustive scheduler uses, and
reports throughput for each backend.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --sizes 12 24 48 --streams 3 --repeats 7
"""

import argparse
import time
from itertools import combinations

import numpy as np

from iasim._kernels import fallback, has_native

if has_native:
    from iasim._kernels import _zfkern as native
else:
    native = None


def make_problem(rng, n, dim):
    dirs = (rng.standard_normal((n, dim)) + 1j * rng.standard_normal((n, dim)))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    gram = dirs.conj() @ dirs.T
    gains = rng.exponential(30.0, n)
    weights = rng.uniform(0.05, 1.0, n)
    return gram, gains, weights


def subset_batches(n, s_max):
    """One int64 array per subset size, mirroring the scheduler's batching."""
    return [
        np.array(list(combinations(range(n), s)), dtype=np.int64)
        for s in range(1, s_max + 1)
    ]


def run_backend(impl, gram, gains, weights, batches, repeats):
    """Best-of-N wall time over the full batch list, plus the results."""
    out = None
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = [
            impl.subset_utilities(gram, gains, weights, idx,
                                  rate_cap=8.0, sinr_scale=1.0)
            for idx in batches
        ]
        best = min(best, time.perf_counter() - t0)
    return best, np.concatenate(out)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[12, 18, 24, 36],
                    help="candidate-pool sizes to benchmark")
    ap.add_argument("--streams", type=int, default=3,
                    help="max subset size (spatial streams)")
    ap.add_argument("--dim", type=int, default=3,
                    help="direction dimensionality")
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repetitions; best run is reported")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if native is None:
        print("compiled kernel not available on this interpreter; "
              "timing the numpy fallback only\n")

    header = f"{'pool':>5} {'rows':>8} {'fallback':>12} {'native':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))

    rng = np.random.default_rng(args.seed)
    for n in args.sizes:
        gram, gains, weights = make_problem(rng, n, args.dim)
        batches = subset_batches(n, args.streams)
        rows = sum(len(b) for b in batches)

        t_fb, u_fb = run_backend(fallback, gram, gains, weights, batches,
                                 args.repeats)
        fb_rate = f"{rows / t_fb:,.0f}/s"
        if native is None:
            print(f"{n:>5} {rows:>8} {fb_rate:>12} {'-':>12} {'-':>8}")
            continue

        t_nat, u_nat = run_backend(native, gram, gains, weights, batches,
                                   args.repeats)
        finite = np.isfinite(u_fb) & np.isfinite(u_nat)
        worst = float(np.max(np.abs(u_fb[finite] - u_nat[finite]), initial=0.0))
        if worst > 1e-6 or not np.array_equal(np.isfinite(u_fb), np.isfinite(u_nat)):
            raise SystemExit(f"backend disagreement at pool {n}: {worst:g}")
        print(f"{n:>5} {rows:>8} {fb_rate:>12} {rows / t_nat:>10,.0f}/s "
              f"{t_fb / t_nat:>7.1f}x")


if __name__ == "__main__":
    main()
