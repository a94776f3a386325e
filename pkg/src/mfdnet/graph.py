"""Layer-list graphs for the baseline and mfdnet model families.

A GraphSpec is a flat, ordered list of layers forming a DAG with one input
and one output. Side edges (residual adds, attention muls) point backwards
at earlier layer ids; the pseudo-id 0 denotes the network input.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import ops
from .ops import Activation, ConvParams, ShapeError

INPUT_ID = 0

CONV = "conv"
ACT = "act"
HAAR_DOWN = "haar_down"
BILINEAR_UP2 = "bilinear_up2"
PIXEL_SHUFFLE = "pixel_shuffle"
MUL = "mul"
ADD = "add"
REPCONV = "repconv"
BRANCH_POINT = "branch_point"

LAYER_KINDS = frozenset(
    (CONV, ACT, HAAR_DOWN, BILINEAR_UP2, PIXEL_SHUFFLE, MUL, ADD, REPCONV, BRANCH_POINT)
)

VARIANTS = ("baseline", "mfdnet", "mfdnet-s", "mfdnet-l", "custom")

# (mfdb count M, repconvs per block K) for the named family variants
FAMILY_SHAPES = {"mfdnet-s": (1, 1), "mfdnet": (3, 3), "mfdnet-l": (6, 3)}


class GraphError(ValueError):
    """A graph violates its structural contract (wiring, shapes, weights)."""


@dataclass
class LayerSpec:
    id: int
    kind: str
    input: int
    src: int | None = None  # second operand for mul/add
    name: str | None = None  # weight-name prefix
    in_ch: int = 0
    out_ch: int = 0
    k: int = 3
    stride: int = 1
    padding: int = 1
    bias: bool = True
    act: Activation | None = None
    r: int = 1  # pixel-shuffle upscale
    channels: int = 0  # repconv width C
    expand_ratio: int = 2  # repconv hidden width E = ratio * C
    tag: str = ""


@dataclass
class GraphSpec:
    label: str
    layers: list[LayerSpec] = field(default_factory=list)
    factor: int = 1  # spatial ratio between input and body resolution
    pad_multiple: int = 1  # input dims must divide by this
    form: str = "deploy"

    @property
    def output_id(self) -> int:
        return self.layers[-1].id


@dataclass
class ModelConfig:
    variant: str = "mfdnet"
    width: int = 48
    blocks: int = 16  # baseline body depth N
    m: int = 3  # MFDB count
    k: int = 3  # RepConvs per MFDB
    factor: int = 4
    activation: Activation | None = None
    form: str = "deploy"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise GraphError(f"unknown variant {self.variant!r}")
        if self.form not in ("train", "deploy"):
            raise GraphError(f"form must be 'train' or 'deploy', got {self.form!r}")
        if self.variant in FAMILY_SHAPES:
            self.m, self.k = FAMILY_SHAPES[self.variant]
            self.width = 48
            self.factor = 4


def config_for(model: str, form: str = "deploy") -> ModelConfig:
    """ModelConfig for a CLI model name; 'baseline' gets its default size."""
    if model == "baseline":
        return ModelConfig(variant="baseline", width=48, blocks=16, factor=4, form=form)
    return ModelConfig(variant=model, form=form)


class _Builder:
    def __init__(self, label: str, factor: int, pad_multiple: int, form: str = "deploy"):
        self.g = GraphSpec(label=label, factor=factor, pad_multiple=pad_multiple, form=form)
        self._next = 1

    def _emit(self, **kw) -> int:
        lid = self._next
        self._next += 1
        if "input" not in kw:
            kw["input"] = lid - 1
        self.g.layers.append(LayerSpec(id=lid, **kw))
        return lid

    def conv(self, in_ch, out_ch, k=3, stride=1, name=None, bias=True) -> int:
        return self._emit(
            kind=CONV, in_ch=in_ch, out_ch=out_ch, k=k, stride=stride,
            padding=k // 2, bias=bias, name=name,
        )

    def act(self, a: Activation, name=None) -> int:
        return self._emit(kind=ACT, act=a, name=name)

    def haar_down(self, in_ch) -> int:
        return self._emit(kind=HAAR_DOWN, in_ch=in_ch, out_ch=4 * in_ch)

    def bilinear_up2(self) -> int:
        return self._emit(kind=BILINEAR_UP2)

    def pixel_shuffle(self, r) -> int:
        return self._emit(kind=PIXEL_SHUFFLE, r=r)

    def mul(self, src) -> int:
        return self._emit(kind=MUL, src=src)

    def add(self, src) -> int:
        return self._emit(kind=ADD, src=src)

    def repconv(self, channels, expand_ratio=2, name=None) -> int:
        return self._emit(kind=REPCONV, channels=channels, expand_ratio=expand_ratio, name=name)

    def branch_point(self, tag) -> int:
        return self._emit(kind=BRANCH_POINT, tag=tag)


def build_baseline(
    width: int, blocks: int, factor: int, activation: Activation | None = None
) -> GraphSpec:
    """Plain conv/act stack: stride-2 downsampling convs, `blocks` body
    conv+act pairs under one local skip, a tail conv to 3*factor^2 channels,
    PixelShuffle(factor), and a global residual add of the input."""
    if factor not in (1, 2, 4):
        raise GraphError(f"baseline factor must be 1, 2 or 4, got {factor}")
    if width < 1 or blocks < 1:
        raise GraphError(f"width and blocks must be >= 1, got {width}, {blocks}")
    if factor == 4 and width % 2:
        raise GraphError(f"factor-4 baseline needs an even width, got {width}")
    act = activation or Activation("relu")
    b = _Builder(f"baseline-c{width}n{blocks}f{factor}", factor, pad_multiple=factor)
    if factor == 4:
        b.conv(3, width // 2, stride=2, name="stem.conv0")
        b.conv(width // 2, width, stride=2, name="stem.conv1")
    elif factor == 2:
        b.conv(3, width, stride=2, name="stem.conv0")
    else:
        b.conv(3, width, name="stem.conv0")
    body_in = b.branch_point("body_in")
    for i in range(blocks):
        b.conv(width, width, name=f"body.b{i}.conv")
        b.act(act, name=f"body.b{i}.act")
    b.add(src=body_in)
    b.conv(width, 3 * factor * factor, name="tail.conv")
    if factor > 1:
        b.pixel_shuffle(factor)
    b.add(src=INPUT_ID)
    return b.g


def _append_mfa(b: _Builder, width: int, name: str) -> None:
    # downsampled attention gate: all three convs run at half body
    # resolution, the map is upsampled back only at the very end
    gate_in = b.branch_point(f"{name}.in")
    b.conv(width, width // 4, stride=2, name=f"{name}.conv0")
    b.act(Activation("relu"))
    b.conv(width // 4, width // 4, name=f"{name}.conv1")
    b.act(Activation("relu"))
    b.conv(width // 4, width, name=f"{name}.conv2")
    b.bilinear_up2()
    b.mul(src=gate_in)


def build_mfa(width: int, name: str = "mfa") -> GraphSpec:
    """Standalone mobile-friendly attention fragment (shape preserving)."""
    if width % 4:
        raise GraphError(f"attention width must divide by 4, got {width}")
    b = _Builder(f"mfa-c{width}", factor=1, pad_multiple=2)
    _append_mfa(b, width, name)
    return b.g


def build_mfdnet(cfg: ModelConfig) -> GraphSpec:
    """Haar-stem model: two HaarDowns (3->12->48), M MFDBs of K
    RepConv+LReLU pairs each followed by one attention gate, a local skip
    across the body, tail conv + PixelShuffle(4), and a global residual."""
    if cfg.variant == "baseline":
        raise GraphError("build_mfdnet does not take the baseline variant")
    if cfg.factor != 4:
        raise GraphError(f"the mfdnet family is factor-4 only, got {cfg.factor}")
    width = cfg.width
    if width % 4:
        raise GraphError(f"width must divide by 4 (attention width C/4), got {width}")
    if cfg.m < 1 or cfg.k < 1:
        raise GraphError(f"m and k must be >= 1, got {cfg.m}, {cfg.k}")
    act = cfg.activation or Activation("lrelu", 0.2)
    # stride-2 attention convs need an even body resolution, hence 8
    b = _Builder(f"{cfg.variant}-{cfg.form}", factor=4, pad_multiple=8, form=cfg.form)
    b.haar_down(3)
    b.haar_down(12)
    if width != 48:
        b.conv(48, width, name="stem.conv0")
    body_in = b.branch_point("body_in")
    for i in range(cfg.m):
        for j in range(cfg.k):
            base = f"body.m{i}.k{j}"
            if cfg.form == "train":
                b.repconv(width, expand_ratio=2, name=base)
            else:
                b.conv(width, width, name=f"{base}.conv")
            b.act(act, name=f"{base}.act")
        _append_mfa(b, width, f"body.m{i}.mfa")
    b.add(src=body_in)
    b.conv(width, 48, name="tail.conv")
    b.pixel_shuffle(4)
    b.add(src=INPUT_ID)
    return b.g


def build_graph(cfg: ModelConfig) -> GraphSpec:
    if cfg.variant == "baseline":
        return build_baseline(cfg.width, cfg.blocks, cfg.factor, cfg.activation)
    return build_mfdnet(cfg)


def _infer_shape(layer: LayerSpec, shapes: dict[int, tuple[int, ...]]) -> tuple[int, ...]:
    n, c, h, w = shapes[layer.input]
    if layer.kind == CONV:
        if c != layer.in_ch:
            raise GraphError(
                f"layer {layer.id} ({layer.name}): expects {layer.in_ch} channels, got {c}"
            )
        ho = ops.conv_out_size(h, layer.k, layer.stride, layer.padding)
        wo = ops.conv_out_size(w, layer.k, layer.stride, layer.padding)
        if ho < 1 or wo < 1:
            raise GraphError(f"layer {layer.id}: conv output collapses below 1x1 from {h}x{w}")
        return (n, layer.out_ch, ho, wo)
    if layer.kind == ACT or layer.kind == BRANCH_POINT:
        return (n, c, h, w)
    if layer.kind == HAAR_DOWN:
        if layer.in_ch and c != layer.in_ch:
            raise GraphError(f"layer {layer.id}: haar expects {layer.in_ch} channels, got {c}")
        if h % 2 or w % 2:
            raise GraphError(
                f"layer {layer.id}: haar needs even spatial dims, got {h}x{w}"
            )
        return (n, 4 * c, h // 2, w // 2)
    if layer.kind == BILINEAR_UP2:
        return (n, c, 2 * h, 2 * w)
    if layer.kind == PIXEL_SHUFFLE:
        r2 = layer.r * layer.r
        if c % r2:
            raise GraphError(
                f"layer {layer.id}: channels ({c}) not divisible by r^2 ({r2})"
            )
        return (n, c // r2, h * layer.r, w * layer.r)
    if layer.kind in (MUL, ADD):
        other = shapes[layer.src]
        if other != (n, c, h, w):
            raise GraphError(
                f"layer {layer.id} ({layer.kind}): operand shapes differ, "
                f"{(n, c, h, w)} vs {other} from layer {layer.src}"
            )
        return (n, c, h, w)
    if layer.kind == REPCONV:
        if c != layer.channels:
            raise GraphError(
                f"layer {layer.id} ({layer.name}): repconv width {layer.channels}, got {c}"
            )
        return (n, c, h, w)
    raise GraphError(f"layer {layer.id}: unknown kind {layer.kind!r}")


def validate(g: GraphSpec, input_shape: tuple[int, ...]) -> list[tuple[int, str, tuple[int, ...]]]:
    """Shape-check every layer; returns a (id, kind, out_shape) trace.

    Raises GraphError on wiring violations (forward references, dangling
    side edges) or any shape mismatch along the way.
    """
    if len(input_shape) != 4 or min(input_shape) < 1:
        raise GraphError(f"input shape must be positive NCHW, got {input_shape}")
    if not g.layers:
        raise GraphError("graph has no layers")
    shapes: dict[int, tuple[int, ...]] = {INPUT_ID: tuple(input_shape)}
    trace = []
    for layer in g.layers:
        if layer.kind not in LAYER_KINDS:
            raise GraphError(f"layer {layer.id}: unknown kind {layer.kind!r}")
        if layer.id in shapes:
            raise GraphError(f"duplicate layer id {layer.id}")
        if layer.input not in shapes:
            raise GraphError(
                f"layer {layer.id}: input {layer.input} is not an earlier layer"
            )
        if layer.kind in (MUL, ADD) and (layer.src is None or layer.src not in shapes):
            raise GraphError(
                f"layer {layer.id}: side edge {layer.src} must reference an earlier layer"
            )
        out = _infer_shape(layer, shapes)
        shapes[layer.id] = out
        trace.append((layer.id, layer.kind, out))
    return trace


def _tensor(weights: dict[str, np.ndarray], name: str, layer: LayerSpec) -> np.ndarray:
    try:
        return weights[name]
    except KeyError:
        raise GraphError(f"layer {layer.id}: missing weight tensor '{name}'") from None


def _run_repconv(layer: LayerSpec, x: np.ndarray, weights) -> np.ndarray:
    base = layer.name
    k1 = _tensor(weights, f"{base}.expand.w", layer)
    k3 = _tensor(weights, f"{base}.mid.w", layer)
    b3 = _tensor(weights, f"{base}.mid.b", layer)
    k2 = _tensor(weights, f"{base}.squeeze.w", layer)
    b2 = _tensor(weights, f"{base}.squeeze.b", layer)
    y = ops.conv2d(x, ConvParams(k1))  # expand is bias-free
    y = ops.conv2d(y, ConvParams(k3, b3, padding=1))
    y = ops.conv2d(y, ConvParams(k2, b2))
    return y + x


def _run_layer(layer: LayerSpec, x: np.ndarray, vals, weights) -> np.ndarray:
    if layer.kind == CONV:
        w = _tensor(weights, f"{layer.name}.w", layer)
        b = _tensor(weights, f"{layer.name}.b", layer) if layer.bias else None
        return ops.conv2d(x, ConvParams(w, b, layer.stride, layer.padding))
    if layer.kind == ACT:
        act = layer.act
        if act is not None and act.kind == "prelu" and act.slopes is None:
            act = replace(act, slopes=_tensor(weights, f"{layer.name}.slope", layer))
        return ops.apply_activation(x, act or Activation("relu"))
    if layer.kind == HAAR_DOWN:
        return ops.haar_forward(x)
    if layer.kind == BILINEAR_UP2:
        return ops.bilinear_upsample_x2(x)
    if layer.kind == PIXEL_SHUFFLE:
        return ops.pixel_shuffle(x, layer.r)
    if layer.kind == MUL:
        return ops.elementwise_mul(x, vals[layer.src])
    if layer.kind == ADD:
        return ops.elementwise_add(x, vals[layer.src])
    if layer.kind == REPCONV:
        return _run_repconv(layer, x, weights)
    return x  # branch_point


def forward(g: GraphSpec, weights: dict[str, np.ndarray], x: np.ndarray) -> np.ndarray:
    """Run the graph on an NCHW batch. Deterministic: two runs on the same
    inputs produce bit-identical outputs."""
    x = ops.as_tensor(x)
    validate(g, x.shape)
    vals: dict[int, np.ndarray] = {INPUT_ID: x}
    for layer in g.layers:
        try:
            vals[layer.id] = _run_layer(layer, vals[layer.input], vals, weights)
        except ShapeError as e:
            raise GraphError(f"layer {layer.id} ({layer.kind}): {e}") from e
    return vals[g.output_id]


def _channels_through(g: GraphSpec) -> dict[int, int]:
    chans = {INPUT_ID: 3}
    for layer in g.layers:
        c = chans[layer.input]
        if layer.kind == CONV:
            c = layer.out_ch
        elif layer.kind == HAAR_DOWN:
            c = 4 * c
        elif layer.kind == PIXEL_SHUFFLE:
            c = c // (layer.r * layer.r)
        chans[layer.id] = c
    return chans


def required_tensors(g: GraphSpec) -> dict[str, tuple[int, ...]]:
    """Canonical weight-tensor names and shapes the graph resolves at run
    time, assuming a 3-channel input."""
    chans = _channels_through(g)
    req: dict[str, tuple[int, ...]] = {}
    for layer in g.layers:
        if layer.kind == CONV:
            req[f"{layer.name}.w"] = (layer.out_ch, layer.in_ch, layer.k, layer.k)
            if layer.bias:
                req[f"{layer.name}.b"] = (layer.out_ch,)
        elif layer.kind == REPCONV:
            c = layer.channels
            e = c * layer.expand_ratio
            base = layer.name
            req[f"{base}.expand.w"] = (e, c, 1, 1)
            req[f"{base}.mid.w"] = (e, e, 3, 3)
            req[f"{base}.mid.b"] = (e,)
            req[f"{base}.squeeze.w"] = (c, e, 1, 1)
            req[f"{base}.squeeze.b"] = (c,)
        elif layer.kind == ACT and layer.act is not None and layer.act.kind == "prelu":
            req[f"{layer.name}.slope"] = (chans[layer.input],)
    return req


def check_weights(g: GraphSpec, weights: dict[str, np.ndarray]) -> list[str]:
    """Problems binding `weights` to `g`: missing or unexpected names and
    shape mismatches. Empty list means the store matches exactly."""
    required = required_tensors(g)
    problems = []
    for name, shape in sorted(required.items()):
        t = weights.get(name)
        if t is None:
            problems.append(f"missing weight tensor '{name}'")
        elif tuple(t.shape) != shape:
            problems.append(f"weight tensor '{name}' has shape {tuple(t.shape)}, expected {shape}")
    for name in sorted(set(weights) - set(required)):
        problems.append(f"unexpected weight tensor '{name}'")
    return problems
