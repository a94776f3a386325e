"""Structural reparameterization: fold train-form RepConv branches into
single 3x3 convolutions.

A RepConv branch is Conv1x1(C->E, bias-free) -> Conv3x3(E->E) ->
Conv1x1(E->C) plus an identity skip. Because the expanding 1x1 carries no
bias, zero padding commutes with it and the fold is exact under the
deploy conv's own zero padding (up to float rounding).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import ops
from .graph import CONV, REPCONV, GraphError, GraphSpec
from .ops import ConvParams, ShapeError


@dataclass
class RepConvBranch:
    """Train-form branch weights. k_expand must be bias-free."""

    k_expand: np.ndarray  # (E, C, 1, 1)
    k_mid: np.ndarray  # (E, E, 3, 3)
    b_mid: np.ndarray  # (E,)
    k_squeeze: np.ndarray  # (C, E, 1, 1)
    b_squeeze: np.ndarray  # (C,)
    has_skip: bool = True

    def __post_init__(self) -> None:
        for f in ("k_expand", "k_mid", "b_mid", "k_squeeze", "b_squeeze"):
            setattr(self, f, np.asarray(getattr(self, f), dtype=np.float32))
        e, c = self.k_expand.shape[:2]
        if self.k_expand.shape != (e, c, 1, 1):
            raise ShapeError(f"k_expand must be (E, C, 1, 1), got {self.k_expand.shape}")
        if self.k_mid.shape != (e, e, 3, 3):
            raise ShapeError(f"k_mid must be ({e}, {e}, 3, 3), got {self.k_mid.shape}")
        if self.b_mid.shape != (e,):
            raise ShapeError(f"b_mid must be ({e},), got {self.b_mid.shape}")
        if self.k_squeeze.shape != (c, e, 1, 1):
            raise ShapeError(f"k_squeeze must be ({c}, {e}, 1, 1), got {self.k_squeeze.shape}")
        if self.b_squeeze.shape != (c,):
            raise ShapeError(f"b_squeeze must be ({c},), got {self.b_squeeze.shape}")

    @property
    def channels(self) -> int:
        return self.k_expand.shape[1]

    @property
    def expanded(self) -> int:
        return self.k_expand.shape[0]


@dataclass
class FoldedConv:
    """Deploy-form equivalent: one 3x3 conv, stride 1, padding 1."""

    weights: np.ndarray  # (C, C, 3, 3)
    bias: np.ndarray  # (C,)


def fold_1x1_then_3x3(
    k1: np.ndarray, k3: np.ndarray, b3: np.ndarray, b1: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Merge Conv1x1(k1, no bias) followed by Conv3x3(k3, b3) into one 3x3.

    k[o,i,u,v] = sum_m k3[o,m,u,v] * k1[m,i]; the bias passes through. A
    bias on k1 is rejected: it would leak into the padded border, which a
    single zero-padded conv cannot reproduce.
    """
    if b1 is not None:
        raise ValueError("expand 1x1 bias is not foldable under zero padding; fold requires a bias-free k1")
    k1 = np.asarray(k1, dtype=np.float32)
    k3 = np.asarray(k3, dtype=np.float32)
    b3 = np.asarray(b3, dtype=np.float32)
    if k1.ndim != 4 or k1.shape[2:] != (1, 1):
        raise ShapeError(f"k1 must be (E, C, 1, 1), got {k1.shape}")
    if k3.ndim != 4 or k3.shape[1] != k1.shape[0]:
        raise ShapeError(f"k3 in_ch ({k3.shape[1]}) must match k1 out_ch ({k1.shape[0]})")
    k = np.einsum(
        "omuv,mi->oiuv", k3.astype(np.float64), k1[:, :, 0, 0].astype(np.float64)
    )
    return k.astype(np.float32), b3.copy()


def fold_3x3_then_1x1(
    k3: np.ndarray, b3: np.ndarray, k2: np.ndarray, b2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Merge Conv3x3(k3, b3) followed by Conv1x1(k2, b2) into one 3x3.

    k[o,i,u,v] = sum_m k2[o,m] * k3[m,i,u,v]; b[o] = b2[o] + sum_m k2[o,m]*b3[m].
    """
    k3 = np.asarray(k3, dtype=np.float32)
    b3 = np.asarray(b3, dtype=np.float32)
    k2 = np.asarray(k2, dtype=np.float32)
    b2 = np.asarray(b2, dtype=np.float32)
    if k2.ndim != 4 or k2.shape[2:] != (1, 1):
        raise ShapeError(f"k2 must be (C, E, 1, 1), got {k2.shape}")
    if k3.shape[0] != k2.shape[1]:
        raise ShapeError(f"k2 in_ch ({k2.shape[1]}) must match k3 out_ch ({k3.shape[0]})")
    m2 = k2[:, :, 0, 0].astype(np.float64)
    k = np.einsum("om,miuv->oiuv", m2, k3.astype(np.float64))
    b = b2.astype(np.float64) + m2 @ b3.astype(np.float64)
    return k.astype(np.float32), b.astype(np.float32)


def add_identity(k: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Absorb an identity skip into a square 3x3 kernel: +1 on the center
    tap of each channel's own filter."""
    k = np.array(k, dtype=np.float32, copy=True)
    if k.ndim != 4 or k.shape[0] != k.shape[1]:
        raise ShapeError(f"identity needs a channel-square kernel, got {k.shape}")
    c, _, kh, kw = k.shape
    k[np.arange(c), np.arange(c), kh // 2, kw // 2] += np.float32(1.0)
    return k, np.asarray(b, dtype=np.float32).copy()


def fold_repconv(branch: RepConvBranch) -> FoldedConv:
    """Fold expand -> mid -> squeeze (-> +identity) into one 3x3 conv."""
    k, b = fold_1x1_then_3x3(branch.k_expand, branch.k_mid, branch.b_mid)
    k, b = fold_3x3_then_1x1(k, b, branch.k_squeeze, branch.b_squeeze)
    if branch.has_skip:
        k, b = add_identity(k, b)
    return FoldedConv(k, b)


def branch_forward(branch: RepConvBranch, x: np.ndarray) -> np.ndarray:
    """Run the unfolded branch with the stock conv kernels (train path)."""
    y = ops.conv2d(x, ConvParams(branch.k_expand))
    y = ops.conv2d(y, ConvParams(branch.k_mid, branch.b_mid, padding=1))
    y = ops.conv2d(y, ConvParams(branch.k_squeeze, branch.b_squeeze))
    return y + x if branch.has_skip else y


def fold_graph(
    g: GraphSpec, weights: dict[str, np.ndarray]
) -> tuple[GraphSpec, dict[str, np.ndarray]]:
    """Replace every RepConv site with its folded 3x3 conv.

    Layer ids and all non-RepConv weights pass through untouched, so the
    result is structurally the deploy-form graph of the same config. A
    graph without RepConv sites is returned as-is (identity transform).
    """
    sites = [l for l in g.layers if l.kind == REPCONV]
    if not sites:
        return g, dict(weights)
    branch_names = set()
    out_w = dict(weights)
    out_layers = []
    for layer in g.layers:
        if layer.kind != REPCONV:
            out_layers.append(layer)
            continue
        base = layer.name
        names = {
            "k_expand": f"{base}.expand.w",
            "k_mid": f"{base}.mid.w",
            "b_mid": f"{base}.mid.b",
            "k_squeeze": f"{base}.squeeze.w",
            "b_squeeze": f"{base}.squeeze.b",
        }
        missing = [n for n in names.values() if n not in weights]
        if missing:
            raise GraphError(f"layer {layer.id}: missing weight tensor '{missing[0]}'")
        branch_names.update(names.values())
        folded = fold_repconv(RepConvBranch(**{f: weights[n] for f, n in names.items()}))
        out_layers.append(
            replace(
                layer, kind=CONV, in_ch=layer.channels, out_ch=layer.channels,
                k=3, stride=1, padding=1, bias=True, name=f"{base}.conv",
            )
        )
        out_w[f"{base}.conv.w"] = folded.weights
        out_w[f"{base}.conv.b"] = folded.bias
    for n in branch_names:
        del out_w[n]
    g2 = GraphSpec(
        label=g.label.replace("train", "deploy"), layers=out_layers,
        factor=g.factor, pad_multiple=g.pad_multiple, form="deploy",
    )
    return g2, out_w


@dataclass
class FoldReport:
    trials: int
    tol: float
    max_abs_diff: float

    @property
    def passed(self) -> bool:
        return self.max_abs_diff <= self.tol


def _random_branch(rng: np.random.Generator, c: int, e: int) -> RepConvBranch:
    def u(shape, fan_in):
        bound = np.sqrt(6.0 / fan_in)
        return rng.uniform(-bound, bound, shape).astype(np.float32)

    return RepConvBranch(
        k_expand=u((e, c, 1, 1), c),
        k_mid=u((e, e, 3, 3), 9 * e),
        b_mid=u((e,), e),
        k_squeeze=u((c, e, 1, 1), e),
        b_squeeze=u((c,), c),
    )


def verify_fold(seed: int = 0, trials: int = 100, tol: float = 1e-4) -> FoldReport:
    """Numerically compare random branches against their folds.

    Each trial draws a branch (C cycles through 4/16/48, E = 2C) and an
    input in [-1, 1], then measures max |branch(x) - folded(x)|. Fully
    deterministic for a given seed.
    """
    rng = np.random.default_rng(seed)
    widths = (4, 16, 48)
    worst = 0.0
    for t in range(trials):
        c = widths[t % len(widths)]
        branch = _random_branch(rng, c, 2 * c)
        x = rng.uniform(-1.0, 1.0, (1, c, 12, 12)).astype(np.float32)
        y_train = branch_forward(branch, x)
        f = fold_repconv(branch)
        y_deploy = ops.conv2d(x, ConvParams(f.weights, f.bias, padding=1))
        worst = max(worst, float(np.max(np.abs(y_train - y_deploy))))
    return FoldReport(trials=trials, tol=tol, max_abs_diff=worst)
