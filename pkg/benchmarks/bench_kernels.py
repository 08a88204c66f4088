#!/usr/bin/env python3
"""Benchmark the numba kernel lane against the pure-numpy fallback.

Kernel-level timings import both lanes side by side; the end-to-end row
re-runs this script in subprocesses with ERASOT_NO_NUMBA toggled, because the
lane is chosen at import time.

Usage: python benchmarks/bench_kernels.py [--end-to-end]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from erasot import _kernels_numba as lane_nb
from erasot import _kernels_numpy as lane_np


def _time(fn, *args, repeat=50, warmup=2):
    for _ in range(warmup):
        fn(*args)
    start = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - start) / repeat


def bench_kernels():
    rng = np.random.default_rng(0)
    rows = []

    n_in, n_out = 619, 470   # selector-pad extract at block length 2000
    seed_bits = rng.integers(0, 2, size=n_in + n_out - 1, dtype=np.uint8)
    x = rng.integers(0, 2, size=n_in, dtype=np.uint8)
    rows.append(("toeplitz_extract 470x619",
                 _time(lane_np.toeplitz_extract, seed_bits, x, n_out),
                 _time(lane_nb.toeplitz_extract, seed_bits, x, n_out, repeat=500)))

    xs = rng.integers(0, 2, size=1_000_000, dtype=np.uint8)
    u1, u2 = rng.random(xs.size), rng.random(xs.size)
    rows.append(("erase_cascade 1e6 symbols",
                 _time(lane_np.erase_cascade, xs, u1, u2, 0.5, 0.8, 2, repeat=20),
                 _time(lane_nb.erase_cascade, xs, u1, u2, 0.5, 0.8, 2, repeat=20)))

    pool = np.arange(1000, dtype=np.int64)
    uniforms = rng.random(235)
    rows.append(("partial_shuffle k=235 of 1000",
                 _time(lambda: lane_np.partial_shuffle(pool.copy(), uniforms)),
                 _time(lambda: lane_nb.partial_shuffle(pool.copy(), uniforms),
                       repeat=500)))

    tables = rng.integers(0, 16, size=(8, 1 << 16), dtype=np.uint32)
    positions = [tuple(sorted(rng.choice(16, 4, replace=False))) for _ in range(32)]
    grid = np.arange(1 << 16, dtype=np.int64)
    proj = np.zeros((32, 1 << 16), dtype=np.uint8)
    for s, pos in enumerate(positions):
        acc = np.zeros(1 << 16, dtype=np.int64)
        for k, p in enumerate(pos):
            acc |= ((grid >> p) & 1) << k
        proj[s] = acc
    rows.append(("map entropy scan 8x32 @ 2^16",
                 _time(lane_np.map_chunk_min_entropy, tables, proj, 16, 4, repeat=3),
                 _time(lane_nb.map_chunk_min_entropy, tables, proj, 16, 4, repeat=3)))

    print(f"{'kernel':36s} {'numpy':>12s} {'numba':>12s} {'speedup':>8s}")
    for name, t_np, t_nb in rows:
        print(f"{name:36s} {t_np*1e3:9.3f} ms {t_nb*1e3:9.3f} ms {t_np/t_nb:7.1f}x")


_E2E_SNIPPET = r"""
import time
import numpy as np
from erasot import backend_name
from erasot.bits import random_bits
from erasot.channel import ChannelParams
from erasot.protocol import max_feasible_rate, plan, run_protocol
from erasot.rng import generator, trial_seed

channel = ChannelParams(0.5, 0.8)
cfg = plan(2000, 0.05, channel, rate=max_feasible_rate(2000, 0.05, channel))
gen = generator(0)
k0, k1 = random_bits(gen, cfg.key_len), random_bits(gen, cfg.key_len)
run_protocol(cfg, k0, k1, 0, trial_seed(0, 0))   # warm the lane
start = time.perf_counter()
trials = 300
for t in range(trials):
    run_protocol(cfg, k0, k1, t & 1, trial_seed(1, t))
per_run = (time.perf_counter() - start) / trials
print(f"{backend_name():6s} lane: {per_run*1e3:.3f} ms per full run (n=2000)")
"""


def bench_end_to_end():
    sys.stdout.flush()
    for flag in ("1", "0"):
        env = dict(os.environ, ERASOT_NO_NUMBA=flag)
        subprocess.run([sys.executable, "-c", _E2E_SNIPPET], env=env, check=True)


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--end-to-end", action="store_true",
                        help="also time full protocol runs under both lanes")
    args = parser.parse_args()
    bench_kernels()
    if args.end_to_end:
        print()
        bench_end_to_end()
