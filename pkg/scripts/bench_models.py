#!/usr/bin/env python3
"""Wall-time table for all deploy-form variants at one input size."""

import argparse
import time

import numpy as np

from mfdnet.graph import build_graph, config_for, forward
from mfdnet.image import pad_to_multiple
from mfdnet.weights import InitSpec, init_random

MODELS = ("baseline", "mfdnet-s", "mfdnet", "mfdnet-l")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=256)
    ap.add_argument("--runs", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    x0 = rng.uniform(0, 1, (1, 3, args.size, args.size)).astype(np.float32)
    print(f"{'model':<10}  {'mean ms':>8}  {'min ms':>8}")
    for model in MODELS:
        g = build_graph(config_for(model, "deploy"))
        w = init_random(g, InitSpec(seed=0))
        x, _ = pad_to_multiple(x0, g.pad_multiple)
        forward(g, w, x)  # warm up
        times = []
        for _ in range(args.runs):
            t0 = time.perf_counter()
            forward(g, w, x)
            times.append(1e3 * (time.perf_counter() - t0))
        print(f"{model:<10}  {np.mean(times):>8.1f}  {min(times):>8.1f}")


if __name__ == "__main__":
    main()
