#!/usr/bin/env python3
"""Throughput comparison of the stepping-kernel lanes.

Runs the same batch workload on the compiled Cython kernel and the
pure-numpy fallback, checks the outputs agree bit-for-bit, and prints
trajectory-steps per second for each lane.

    python benchmarks/bench_kernel.py [--batch 128] [--horizon 1.0]
"""

import argparse
import math
import time

import numpy as np

from spincollapse import DESK_SCHEDULE, kernel
from spincollapse.engine import EngineOptions, _run_batch, plan_segments, sample_layout
from spincollapse.noise import make_generator
from spincollapse.spin import ModelParams, SpinState


def run_lane(lane, batch, segments, stride, n_samples, seed):
    params = ModelParams(1.0, 100.0)
    init = SpinState(math.sqrt(0.75), 0.5)
    gens = [make_generator(seed, j) for j in range(batch)]
    out = np.empty((batch, n_samples, 4))
    t0 = time.perf_counter()
    _run_batch(params, init, segments, stride, gens, EngineOptions(kernel=lane), out)
    return time.perf_counter() - t0, out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--horizon", type=float, default=1.0)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    segments = plan_segments(DESK_SCHEDULE, args.horizon)
    total, n_samples, _times = sample_layout(segments, 500)
    steps = args.batch * total
    print(f"workload: {args.batch} trajectories x {total} steps = {steps:,} steps")

    lanes = ["python"]
    if kernel.have_compiled():
        lanes.insert(0, "compiled")
    else:
        print("compiled kernel not built; benchmarking the fallback only")

    outs = {}
    rates = {}
    for lane in lanes:
        dt, out = run_lane(lane, args.batch, segments, 500, n_samples, args.seed)
        outs[lane] = out
        rates[lane] = steps / dt
        print(f"{lane:>9}: {dt:7.2f} s   {rates[lane] / 1e6:8.1f} M steps/s")

    if len(lanes) == 2:
        identical = np.array_equal(outs["compiled"], outs["python"])
        print(f"bit-identical outputs: {identical}")
        print(f"speedup (compiled / python): {rates['compiled'] / rates['python']:.1f}x")
        if not identical:
            raise SystemExit("lanes disagree")


if __name__ == "__main__":
    main()
