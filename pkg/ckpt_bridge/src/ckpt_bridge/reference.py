"""Torch reference implementation of the model family.

Mirrors the inference engine's graph exactly: Haar stem to width 48 at
quarter resolution, M blocks of K (RepConv or folded conv) + LeakyReLU 0.2
units followed by an attention gate at half body resolution, one local
skip across the whole body, then a 3x3 tail, 4x PixelShuffle, and a
global skip. Used as the numeric oracle for golden fixtures; never used
for training.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from .namemap import EXPAND_RATIO, VARIANT_SHAPES, WIDTH, _check


def haar_forward(x: torch.Tensor) -> torch.Tensor:
    """Orthonormal stride-2 Haar analysis, bands grouped per input channel.

    Computed in float64 and rounded once, matching the engine bit-for-bit.
    """
    n, c, h, w = x.shape
    x64 = x.double()
    a = x64[:, :, 0::2, 0::2]
    b = x64[:, :, 0::2, 1::2]
    cc = x64[:, :, 1::2, 0::2]
    d = x64[:, :, 1::2, 1::2]
    bands = torch.stack(
        [(a + b + cc + d), (a + b - cc - d), (a - b + cc - d), (a - b - cc + d)], dim=2
    )
    return (0.5 * bands).reshape(n, 4 * c, h // 2, w // 2).float()


class RepConvUnit(nn.Module):
    """Train-form branch: 1x1 expand (bias-free) -> 3x3 -> 1x1 squeeze + skip."""

    def __init__(self, channels: int):
        super().__init__()
        e = EXPAND_RATIO * channels
        self.expand = nn.Conv2d(channels, e, 1, bias=False)
        self.mid = nn.Conv2d(e, e, 3, padding=1)
        self.squeeze = nn.Conv2d(e, channels, 1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.squeeze(self.mid(self.expand(x))) + x


class DeployUnit(nn.Module):
    """Deploy-form equivalent: the folded single 3x3 conv."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv = nn.Conv2d(channels, channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(x)


class Attention(nn.Module):
    """Gate computed at half resolution and multiplied back onto the input."""

    def __init__(self, channels: int):
        super().__init__()
        q = channels // 4
        self.conv0 = nn.Conv2d(channels, q, 3, stride=2, padding=1)
        self.conv1 = nn.Conv2d(q, q, 3, padding=1)
        self.conv2 = nn.Conv2d(q, channels, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        a = F.relu(self.conv0(x))
        a = F.relu(self.conv1(a))
        a = self.conv2(a)
        a = F.interpolate(a, scale_factor=2, mode="bilinear", align_corners=False)
        return a * x


class Block(nn.Module):
    def __init__(self, channels: int, units: int, form: str):
        super().__init__()
        unit = RepConvUnit if form == "train" else DeployUnit
        self.units = nn.ModuleList(unit(channels) for _ in range(units))
        self.attn = Attention(channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for unit in self.units:
            x = F.leaky_relu(unit(x), 0.2)
        return self.attn(x)


class ReferenceModel(nn.Module):
    def __init__(self, variant: str, form: str = "deploy"):
        super().__init__()
        m, k = _check(variant, form)
        self.variant = variant
        self.form = form
        self.body = nn.ModuleList(Block(WIDTH, k, form) for _ in range(m))
        self.tail = nn.Conv2d(WIDTH, WIDTH, 3, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        t = haar_forward(haar_forward(x))
        entry = t
        for block in self.body:
            t = block(t)
        t = t + entry
        t = self.tail(t)
        t = F.pixel_shuffle(t, 4)
        return t + x


def seeded_state(variant: str, form: str, seed: int, damping: float = 0.5):
    """Deterministic weights drawn with NumPy, independent of torch RNG.

    Conv kernels are Kaiming-uniform draws scaled by `damping` so that
    activations stay O(1) through the residual chain even for the deepest
    variant; biases are zeros. Names are drawn in sorted canonical order,
    so a (variant, form, seed) triple fully determines every byte.
    Returns (canonical store, torch state_dict) with shared values.
    """
    from .namemap import canonical_manifest, default_namemap

    rng = np.random.default_rng(seed)
    manifest = canonical_manifest(variant, form)
    store: dict[str, np.ndarray] = {}
    for name in sorted(manifest):
        shape = manifest[name]
        if len(shape) == 4:
            bound = float(np.sqrt(6.0 / (shape[1] * shape[2] * shape[3])))
            store[name] = (damping * rng.uniform(-bound, bound, shape)).astype(np.float32)
        else:
            store[name] = np.zeros(shape, dtype=np.float32)
    inverse = {canon: ref for ref, canon in default_namemap(variant, form).items()}
    state = {inverse[n]: torch.from_numpy(store[n].copy()) for n in store}
    return store, state


def build_seeded_model(variant: str, form: str, seed: int) -> ReferenceModel:
    model = ReferenceModel(variant, form)
    _, state = seeded_state(variant, form, seed)
    model.load_state_dict(state)
    return model.eval()


__all__ = [
    "VARIANT_SHAPES",
    "ReferenceModel",
    "build_seeded_model",
    "haar_forward",
    "seeded_state",
]
