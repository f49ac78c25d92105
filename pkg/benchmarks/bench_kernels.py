#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-Python fallback.

The two hot paths are the greedy per-plant production simulation and the
equidistant piecewise-linear cost evaluation; both run once per annealing
move.  Usage:

    python benchmarks/bench_kernels.py [--steps 4000] [--repeats 200]

When numba is active the fallback is timed through each kernel's .py_func;
with OUTAGESCHED_NO_NUMBA=1 only the fallback is timed.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from outagesched import _kernels


def make_plant(T: int, K: int, rng):
    steps = np.linspace(0, T, 2 * K + 2).astype(np.int64)
    campaign_id = np.zeros(T, dtype=np.int64)
    outage_id = np.full(T, -1, dtype=np.int64)
    outage_first = np.zeros(K, dtype=np.int64)
    cam = 0
    for k in range(K):
        lo, hi = steps[2 * k + 1], steps[2 * k + 2]
        outage_id[lo:hi] = k
        outage_first[k] = lo
        campaign_id[lo:hi] = -1
        campaign_id[hi : steps[2 * k + 3] if 2 * k + 3 < len(steps) else T] = k + 1
        cam = k + 1
    n_cam = cam + 1
    pmax = rng.uniform(5, 15, T)
    pb_x = np.tile(np.array([0.0, 50.0]), K)
    pb_y = np.tile(np.array([0.4, 1.0]), K)
    args = dict(
        pmax_t=pmax,
        D=1.0,
        btol=1e-6,
        campaign_id=campaign_id,
        outage_id=outage_id,
        outage_first=outage_first,
        cyc_q=np.full(K, 0.8),
        cyc_qp=np.zeros(K),
        cyc_amax=np.full(K, 1e9),
        cyc_smax=np.full(K, 1e9),
        refuel=rng.uniform(200, 800, K),
        cam_bo=np.full(n_cam, 50.0),
        cam_pb_lo=np.repeat(np.arange(1, dtype=np.int64) * 2, n_cam)[:n_cam],
        cam_pb_hi=np.repeat(np.arange(1, dtype=np.int64) * 2 + 2, n_cam)[:n_cam],
        pb_x=pb_x,
        pb_y=pb_y,
    )
    return args


def time_fn(fn, *args, repeats: int) -> float:
    fn(*args)  # warmup / compile
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=4000)
    ap.add_argument("--repeats", type=int, default=200)
    args = ap.parse_args()

    rng = np.random.default_rng(7)
    T, K = args.steps, 5
    kw = make_plant(T, K, rng)
    p = np.zeros(T)
    x = np.zeros(T + 1)
    sim_args = (
        0, 1500.0, kw["pmax_t"], kw["D"], kw["btol"], kw["campaign_id"],
        kw["outage_id"], kw["outage_first"], kw["cyc_q"], kw["cyc_qp"],
        kw["cyc_amax"], kw["cyc_smax"], kw["refuel"], kw["cam_bo"],
        kw["cam_pb_lo"], kw["cam_pb_hi"], kw["pb_x"], kw["pb_y"], p, x,
    )

    B = 12
    F = np.sort(rng.uniform(0, 100, (T, B)))[:, ::-1].copy()
    xmax = np.full(T, 1000.0)
    int_size = xmax / (B - 1)
    p2 = rng.uniform(0, 1100, T)

    rows = []
    for name, fn, a in (
        ("greedy_simulate", _kernels.greedy_simulate, sim_args),
        ("pwl_eval_sum", _kernels.pwl_eval_sum, (F, int_size, xmax, p2)),
    ):
        jit = time_fn(fn, *a, repeats=args.repeats)
        fallback = _kernels.py_func(fn)
        if fallback is fn:
            rows.append((name, None, jit))
        else:
            py = time_fn(fallback, *a, repeats=max(1, args.repeats // 20))
            rows.append((name, py, jit))

    mode = "numba" if _kernels.USE_NUMBA else "pure python (fallback)"
    print(f"active path: {mode}; T={T}, repeats={args.repeats}")
    print(f"{'kernel':<18} {'python (ms)':>12} {'active (ms)':>12} {'speedup':>9}")
    for name, py, jit in rows:
        if py is None:
            print(f"{name:<18} {'-':>12} {jit * 1e3:>12.4f} {'-':>9}")
        else:
            print(f"{name:<18} {py * 1e3:>12.4f} {jit * 1e3:>12.4f} {py / jit:>8.1f}x")


if __name__ == "__main__":
    main()
