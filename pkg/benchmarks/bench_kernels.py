#!/usr/bin/env python3
"""Timing comparison of the compiled kernel core vs the pure-numpy backend.

Times the individual kernels, one full likelihood + all-block gradient
evaluation, and a short end-to-end sampling run, at a few problem sizes.

Usage: python benchmarks/bench_kernels.py [--sizes p,T ...] [--repeat N]
"""

import argparse
import time

import numpy as np

from outgraph import kernels
from outgraph.likelihood import Evaluation, LikelihoodContext
from outgraph.params import ModelState, ThresholdLevels
from outgraph.priors import PriorConfig
from outgraph.sampler import SamplerConfig, gibbs_run
from outgraph.spectral import BSplineBasis, whittle_transform


def _random_state(p, K, R, rng):
    return ModelState(
        L_raw=np.tril(rng.standard_normal((p, p)) * 0.3, k=-1),
        log_d=0.2 * rng.standard_normal(p),
        a_raw=0.3 * rng.standard_normal(p * (p - 1) // 2),
        thresholds=ThresholdLevels(0.05, 0.05),
        xi=0.5 * rng.standard_normal((p, R)),
        eta=0.5 * rng.standard_normal((K, R)),
    )


def time_call(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_eval(p, T, K, R, repeat):
    rng = np.random.default_rng(0)
    ctx = LikelihoodContext(whittle_transform(rng.standard_normal((p, T))), BSplineBasis(K))
    state = _random_state(p, K, R, rng)

    def full_eval():
        ev = Evaluation(state, ctx)
        for block in ("L_raw", "log_d", "xi", "eta"):
            ev.grad(block)
        return ev.loglik

    return time_call(full_eval, repeat)


def bench_sampler(p, T, iters=200):
    rng = np.random.default_rng(1)
    Y = rng.standard_normal((p, T))
    samp = SamplerConfig(
        total=iters, burnin=int(0.75 * iters), thin=1,
        spectral_only=iters // 10, full_at=int(0.4 * iters),
        shrink_start=iters // 5, truncate_at=int(0.6 * iters), seed=0,
    )
    t0 = time.perf_counter()
    gibbs_run(Y, PriorConfig(K=10, R=10), samp)
    return (time.perf_counter() - t0) / iters


def bench_kernels_micro(p, T, K, repeat):
    rng = np.random.default_rng(2)
    n_freq = T // 2 + 1
    V = rng.standard_normal((p, T))
    G = rng.uniform(0.3, 3.0, (p, n_freq))
    kmap = (np.arange(T) + 1) // 2
    counts = np.bincount(kmap).astype(float)
    kappa = rng.standard_normal((p, K))
    x = np.tril(rng.standard_normal((p, p)), -1)
    theta, rs = kernels.theta_rows(kappa)
    cases = {
        "smooth_threshold": lambda: kernels.smooth_threshold(x, 0.1, 1e-8),
        "whittle_terms": lambda: kernels.whittle_terms(V, G, kmap, counts),
        "whiten_columns": lambda: kernels.whiten_columns(V, G, kmap),
        "curve_grad": lambda: kernels.curve_grad(V, G, kmap, counts),
        "theta_rows": lambda: kernels.theta_rows(kappa),
        "kappa_chain": lambda: kernels.kappa_chain(kappa, theta, rs, theta),
    }
    return {name: time_call(fn, repeat) for name, fn in cases.items()}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", nargs="*", default=["10,100", "20,100", "20,400", "60,100"])
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--sampler-iters", type=int, default=200)
    args = parser.parse_args()

    if "compiled" not in kernels.available_backends():
        print("compiled backend unavailable; build the extension first "
              "(pip install -e . --no-build-isolation)")
    backends = kernels.available_backends()

    print(f"{'kernel':<18}{'p,T':<10}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for size in args.sizes:
        p, T = (int(v) for v in size.split(","))
        per_backend = {}
        for b in backends:
            kernels.use_backend(b)
            per_backend[b] = bench_kernels_micro(p, T, 10, args.repeat)
        for name in next(iter(per_backend.values())):
            times = [per_backend[b][name] for b in backends]
            ratio = times[-1] / times[0] if times[0] > 0 and len(times) > 1 else float("nan")
            print(
                f"{name:<18}{size:<10}"
                + "".join(f"{t * 1e6:>10.1f}us" for t in times)
                + f"{ratio:>9.2f}x"
            )

    print(f"\n{'full eval+grads':<18}{'p,T':<10}" + "".join(f"{b:>12}" for b in backends))
    for size in args.sizes:
        p, T = (int(v) for v in size.split(","))
        times = []
        for b in backends:
            kernels.use_backend(b)
            times.append(bench_eval(p, T, 10, 10, max(args.repeat // 4, 10)))
        ratio = times[-1] / times[0] if len(times) > 1 else float("nan")
        print(f"{'':<18}{size:<10}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
              + (f"   ({ratio:.2f}x compiled)" if len(times) > 1 else ""))

    print(f"\n{'sampler ms/iter':<18}{'p,T':<10}" + "".join(f"{b:>12}" for b in backends))
    for size in args.sizes:
        p, T = (int(v) for v in size.split(","))
        times = []
        for b in backends:
            kernels.use_backend(b)
            times.append(bench_sampler(p, T, args.sampler_iters))
        ratio = times[-1] / times[0] if len(times) > 1 else float("nan")
        print(f"{'':<18}{size:<10}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
              + (f"   ({ratio:.2f}x compiled)" if len(times) > 1 else ""))


if __name__ == "__main__":
    main()
