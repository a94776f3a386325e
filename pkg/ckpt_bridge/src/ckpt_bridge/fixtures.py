"""Golden fixture emission and the raw tensor-file format.

A fixture file is an 8-value little-endian u32 header [ndim, d0, d1, d2,
d3, 0, 0, 0] followed by the C-contiguous little-endian float32 payload.
emit_fixtures writes, per run: weights.mfdw (via the conversion path, so
fixtures exercise it too), count (input, output) pairs from the reference
model, and meta.json describing everything. Same arguments, same bytes.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np
import torch

from . import mfdw
from .convert import convert_state
from .reference import ReferenceModel, seeded_state

HEADER_SLOTS = 8
TOLERANCE = 1e-4


class FixtureError(ValueError):
    pass


def write_tensor(path: str, t: np.ndarray) -> None:
    t = np.ascontiguousarray(t, dtype="<f4")
    if t.ndim > HEADER_SLOTS - 1:
        raise FixtureError(f"tensor rank {t.ndim} does not fit the fixture header")
    dims = list(t.shape) + [0] * (HEADER_SLOTS - 1 - t.ndim)
    with open(path, "wb") as f:
        f.write(struct.pack(f"<{HEADER_SLOTS}I", t.ndim, *dims))
        f.write(t.tobytes())


def read_tensor(path: str) -> np.ndarray:
    with open(path, "rb") as f:
        head = f.read(4 * HEADER_SLOTS)
        if len(head) != 4 * HEADER_SLOTS:
            raise FixtureError(f"{path}: truncated fixture header")
        vals = struct.unpack(f"<{HEADER_SLOTS}I", head)
        ndim = vals[0]
        if not 1 <= ndim <= HEADER_SLOTS - 1:
            raise FixtureError(f"{path}: bad rank {ndim} in fixture header")
        shape = vals[1 : 1 + ndim]
        if any(d < 1 for d in shape) or any(v != 0 for v in vals[1 + ndim :]):
            raise FixtureError(f"{path}: malformed fixture header {vals}")
        payload = f.read()
    n = int(np.prod(shape))
    if len(payload) != 4 * n:
        raise FixtureError(f"{path}: payload is {len(payload)} bytes, expected {4 * n}")
    return np.frombuffer(payload, dtype="<f4").reshape(shape).copy()


def emit_fixtures(
    variant: str, seed: int, count: int, out_dir: str, size: int = 64, form: str = "deploy"
) -> dict:
    """Write weights + (input, output) pairs; returns the meta dict."""
    if count < 1:
        raise FixtureError(f"count must be at least 1, got {count}")
    if size % 8:
        raise FixtureError(f"size must be a multiple of 8, got {size}")
    os.makedirs(out_dir, exist_ok=True)

    store, state = seeded_state(variant, form, seed)
    model = ReferenceModel(variant, form)
    model.load_state_dict(state)
    model.eval()

    # route the weights through the conversion path so every fixture set
    # also certifies convert_state on a real state_dict
    converted, _ = convert_state(state, variant, form)
    for name in store:
        assert np.array_equal(converted[name], store[name])
    mfdw.write(converted, os.path.join(out_dir, "weights.mfdw"))

    rng = np.random.default_rng(seed + 1)
    pairs = []
    for idx in range(count):
        x = rng.uniform(0.0, 1.0, (1, 3, size, size)).astype(np.float32)
        with torch.no_grad():
            y = model(torch.from_numpy(x)).numpy()
        if not np.isfinite(y).all():
            raise FixtureError(f"fixture {idx}: reference output is not finite")
        in_name, out_name = f"input_{idx:02d}.bin", f"output_{idx:02d}.bin"
        write_tensor(os.path.join(out_dir, in_name), x)
        write_tensor(os.path.join(out_dir, out_name), y)
        pairs.append({"input": in_name, "output": out_name})

    meta = {
        "variant": variant,
        "form": form,
        "seed": seed,
        "count": count,
        "input_shape": [1, 3, size, size],
        "weights": "weights.mfdw",
        "pairs": pairs,
        "tolerance": TOLERANCE,
    }
    with open(os.path.join(out_dir, "meta.json"), "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")
    return meta
