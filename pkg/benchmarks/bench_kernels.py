"""Compiled vs pure-Python kernel timings.

    python benchmarks/bench_kernels.py [--pairs N] [--frames N] [--repeat R]

Reports the best of R wall-clock runs per backend and the speedup.
"""

import argparse
import math
import timeit

import numpy as np

from hdsecrecy import kernels
from hdsecrecy.classifier import ThresholdClassifier, Window
from hdsecrecy.model import GeometryConfig, PowerDistribution
from hdsecrecy.montecarlo import SimConfig, simulate


def pair_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    x1, y1 = rng.uniform(0, 3, n), rng.uniform(0, 3, n)
    x2, y2 = x1 + rng.uniform(0, 3, n), y1 + rng.uniform(0, 3, n)
    lo = rng.uniform(0, 5, n)
    return x1, x2, y1, y2, lo, lo + rng.uniform(0, 5, n), rng.integers(-1, 2, n).astype(np.int8)


def frame_inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    u8 = lambda: rng.integers(0, 2, n).astype(np.uint8)  # noqa: E731
    sign = lambda: rng.choice([-1, 1], n).astype(np.int8)  # noqa: E731
    return (u8(), u8(), rng.uniform(0.5, 3, n), rng.uniform(0.5, 3, n), sign(), sign(),
            u8(), u8(), np.empty(0), np.empty(0), False, 0.3, 0.0,
            np.array([0.8, 1.0, 2.0, 3.5]), np.array([4, 1, 3, 2, 4], dtype=np.int8),
            np.array([1, 3, 3, 2], dtype=np.int8), False)


def sim_config(frames):
    geom = GeometryConfig(1.0, 0.8, 1.2)
    law = PowerDistribution.uniform_db(0.0, 20.0)
    cls = ThresholdClassifier.from_geometry(geom, law, Window(-math.inf, 1.0))
    return SimConfig("twoway", geom, law, frames, 1, p_t=0.4, classifier=cls)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=20_000)
    ap.add_argument("--frames", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    pairs, frame, cfg = pair_inputs(args.pairs), frame_inputs(args.frames), sim_config(args.frames)
    cases = {
        f"pair_mass ({args.pairs} boxes)": lambda k: k.pair_mass(*pairs),
        f"tally_frame ({args.frames} symbols)": lambda k: k.tally_frame(*frame),
        f"simulate ({args.frames} frames)": None,
    }
    backends = kernels.available_backends()
    if "compiled" not in backends:
        print("compiled kernels not built; timing the Python backend only")
    before = kernels.backend_name()
    print(f"{'case':34s}" + "".join(f"{b:>12s}" for b in backends) + "     speedup")
    try:
        for name, fn in cases.items():
            times = {}
            for b in backends:
                kernels.use_backend(b)
                mod = kernels.get(b)
                call = (lambda: simulate(cfg)) if fn is None else (lambda: fn(mod))
                times[b] = best(call, args.repeat)
            row = f"{name:34s}" + "".join(f"{times[b]:11.4f}s" for b in backends)
            if len(times) == 2:
                row += f"  {times['python'] / times['compiled']:9.1f}x"
            print(row)
    finally:
        kernels.use_backend(before)


if __name__ == "__main__":
    main()
