"""High-accuracy reference mean and variance of the Morris-Lecar potential at T.

Writes an INI ``[ground_truth]`` block to stdout.  The defaults (h = 1e-3,
N = 1e6) take tens of minutes on one core.

    python scripts/ground_truth.py --h 1e-3 --n 1000000 --seed 7001
"""
import argparse
import math
import time

import numpy as np

from pdmp.models import morris_lecar as ml
from pdmp.rng import StreamKey
from pdmp.samplers import JitSampler


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--h", type=float, default=1e-3)
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--horizon", type=float, default=30.0)
    ap.add_argument("--seed", type=int, default=7001)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()

    params = ml.MlParams()
    sampler = JitSampler(ml.jit_model(params), ml.default_initial_state(params), args.horizon,
                         ml.DEFAULT_RATE_BOUND, chunk=4096, threads=args.threads)
    start = time.perf_counter()
    x = sampler.single(args.h, args.n, StreamKey(args.seed)).value
    mean, var = float(np.mean(x)), float(np.var(x, ddof=1))
    print("[ground_truth]")
    print(f"mean = {mean:.6f}")
    print(f"variance = {var:.4f}")
    print(f"standard_error = {math.sqrt(var / len(x)):.6f}")
    print(f"# h = {args.h}, N = {args.n}, T = {args.horizon}, seed = {args.seed}, "
          f"{time.perf_counter() - start:.0f} s")


if __name__ == "__main__":
    main()
