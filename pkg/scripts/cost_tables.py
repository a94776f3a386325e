#!/usr/bin/env python3
"""Print both 720p cost tables produced by the analytic model.

Table 1 sweeps the downsampling factor on the plain baseline (4-byte
elements); table 2 covers the model family in deploy form (2-byte
elements). See the README calibration note for the unit conventions.
"""

import argparse

from mfdnet.cost import CostConvention, compare, estimate
from mfdnet.graph import ModelConfig, build_graph, config_for

BASELINE_ROWS = [
    ("baseline f=4 (C48, N16)", ModelConfig(variant="baseline", width=48, blocks=16, factor=4)),
    ("baseline f=2 (C32, N12)", ModelConfig(variant="baseline", width=32, blocks=12, factor=2)),
    ("baseline f=1 (C16, N8)", ModelConfig(variant="baseline", width=16, blocks=8, factor=1)),
]

FAMILY_ROWS = [
    ("MFDNet-S", "mfdnet-s"),
    ("MFDNet", "mfdnet"),
    ("MFDNet-L", "mfdnet-l"),
]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--width", type=int, default=1280)
    ap.add_argument("--height", type=int, default=720)
    args = ap.parse_args()
    shape = (1, 3, args.height, args.width)

    reports = [estimate(build_graph(cfg), shape, CostConvention(bytes_per_elem=4))
               for _, cfg in BASELINE_ROWS]
    print(f"Downsampling-factor ablation @ {args.width}x{args.height}, 4 B/elem")
    print(compare(reports, [label for label, _ in BASELINE_ROWS]))
    print()

    reports = [
        estimate(build_graph(config_for(model, "deploy")), shape, CostConvention(bytes_per_elem=2))
        for _, model in FAMILY_ROWS
    ]
    print(f"Model family (deploy form) @ {args.width}x{args.height}, 2 B/elem")
    print(compare(reports, [label for label, _ in FAMILY_ROWS]))


if __name__ == "__main__":
    main()
