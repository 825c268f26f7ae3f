"""Benchmark: compiled kernels vs the pure-numpy fallback.

Times the fused news-trial loop (both backends consume identical
pre-drawn randomness, so the work is the same) and the simplex pivot
loop on the per-step ranking LP.

  python3 benchmarks/bench_backends.py [--users N] [--repeats K]
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np

from fairltr import _backend, _kernels_py
from fairltr.core import default_propensities
from fairltr.engine import draw_news_blocks, run_news_trial_kernel, run_trial_python
from fairltr.envs import build_news
from fairltr.estimators import merit_estimate
from fairltr.fairness import FairnessLedger
from fairltr.lp import build_ranking_lp, solve_ranking_lp
from fairltr.policies import make_policy
from fairltr import simplex


def bench_news_trial(users: int, repeats: int):
    env = build_news(30, 15, np.random.default_rng([9, 0]))
    exposure = default_propensities(30)
    p_neg_t = np.full(users, 0.5)
    rows = []
    for policy_name in ("naive", "fairco-imp"):
        blocks = draw_news_blocks(np.random.default_rng([9, 1]), users, 30)
        timings = {}
        if _backend.HAS_COMPILED:
            start = time.perf_counter()
            for _ in range(repeats):
                run_news_trial_kernel(env, policy_name, exposure, blocks, 100,
                                      p_neg_t, 0.01, 0.01)
            timings["compiled"] = (time.perf_counter() - start) / repeats
        start = time.perf_counter()
        for _ in range(repeats):
            policy = make_policy(policy_name, env.catalog, exposure,
                                 np.random.default_rng([9, 2]), lam=0.01)
            run_trial_python(env, policy, exposure, blocks, 100, p_neg_t=p_neg_t)
        timings["python"] = (time.perf_counter() - start) / repeats
        rows.append((f"news trial ({policy_name}, {users} users)", timings))
    return rows


def bench_simplex(repeats: int):
    env = build_news(10, 5, np.random.default_rng([4, 0]))
    exposure = default_propensities(10)
    ledger = FairnessLedger.zeros(env.catalog)
    rng = np.random.default_rng(3)
    relevance = rng.uniform(0.1, 0.9, 10)
    merit = merit_estimate(relevance, env.catalog, 0.01)
    lp = build_ranking_lp(relevance, ledger, merit, 0.1, exposure, env.catalog)

    timings = {}
    saved = simplex._backend.pivot_loop
    try:
        if _backend.HAS_COMPILED:
            simplex._backend.pivot_loop = _backend._compiled.pivot_loop
            start = time.perf_counter()
            for _ in range(repeats):
                solve_ranking_lp(lp)
            timings["compiled"] = (time.perf_counter() - start) / repeats
        simplex._backend.pivot_loop = _kernels_py.pivot_loop
        start = time.perf_counter()
        for _ in range(repeats):
            solve_ranking_lp(lp)
        timings["python"] = (time.perf_counter() - start) / repeats
    finally:
        simplex._backend.pivot_loop = saved
    return [("ranking LP solve (n=10)", timings)]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--users", type=int, default=3000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    print(f"active backend: {_backend.ACTIVE}")
    if not _backend.HAS_COMPILED:
        print("compiled kernels unavailable; timing the python fallback only")
    rows = bench_news_trial(args.users, args.repeats) + bench_simplex(args.repeats * 20)
    width = max(len(name) for name, _ in rows)
    print(f"{'benchmark'.ljust(width)}  {'compiled':>12}  {'python':>12}  {'speedup':>8}")
    for name, timings in rows:
        compiled = timings.get("compiled")
        python = timings["python"]
        compiled_text = f"{compiled * 1e3:9.2f} ms" if compiled else "        n/a"
        speedup = f"{python / compiled:7.1f}x" if compiled else "     n/a"
        print(f"{name.ljust(width)}  {compiled_text:>12}  {python * 1e3:9.2f} ms  {speedup:>8}")


if __name__ == "__main__":
    main()
