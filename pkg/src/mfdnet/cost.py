"""Analytic MACs / parameter / memory-traffic model.

Costs are derived purely from layer shapes, never by running the network.
MACs count only convolution multiply-accumulates. Memory is modeled as
read+write traffic: every layer reads its operands and writes its output;
flags on CostConvention control whether activations, parameter reads, and
elementwise add/mul operands are charged (an NPU fusing those ops moves no
extra data for them).

Published figures this model is calibrated against report MACs in units of
2^30 ("G") and memory in units of 10^6 bytes; see the README calibration
note. compare() uses the same scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graph import (
    ACT,
    ADD,
    BILINEAR_UP2,
    BRANCH_POINT,
    CONV,
    HAAR_DOWN,
    MUL,
    PIXEL_SHUFFLE,
    REPCONV,
    GraphSpec,
    validate,
)

GMAC = 2**30
MEGABYTE = 10**6


@dataclass
class CostConvention:
    bytes_per_elem: int = 4
    count_activations_as_ops: bool = True
    count_param_reads: bool = True
    count_residual_adds: bool = True  # also gates the attention muls

    def __post_init__(self) -> None:
        if self.bytes_per_elem not in (2, 4):
            raise ValueError(f"bytes_per_elem must be 2 or 4, got {self.bytes_per_elem}")


@dataclass
class LayerCost:
    id: int
    kind: str
    name: str | None
    macs: int
    params: int
    read: int  # bytes
    write: int  # bytes


@dataclass
class CostReport:
    label: str
    input_shape: tuple[int, ...]
    convention: CostConvention
    per_layer: list[LayerCost] = field(default_factory=list)

    @property
    def macs(self) -> int:
        return sum(l.macs for l in self.per_layer)

    @property
    def params(self) -> int:
        return sum(l.params for l in self.per_layer)

    @property
    def mem_read(self) -> int:
        return sum(l.read for l in self.per_layer)

    @property
    def mem_write(self) -> int:
        return sum(l.write for l in self.per_layer)

    @property
    def mem_total(self) -> int:
        return self.mem_read + self.mem_write


def _elems(shape: tuple[int, ...]) -> int:
    return math.prod(shape)


def _conv_cost(out_shape, in_elems, in_ch, k, bias, conv: CostConvention):
    n, out_ch, ho, wo = out_shape
    macs = n * out_ch * in_ch * k * k * ho * wo
    params = out_ch * in_ch * k * k + (out_ch if bias else 0)
    read = in_elems + (params if conv.count_param_reads else 0)
    write = _elems(out_shape)
    return macs, params, read, write


def estimate(
    g: GraphSpec, input_shape: tuple[int, ...], conv: CostConvention | None = None
) -> CostReport:
    """Per-layer and total cost of one forward pass at the given input."""
    conv = conv or CostConvention()
    shapes = {0: tuple(input_shape)}
    for lid, _, out in validate(g, input_shape):
        shapes[lid] = out
    report = CostReport(label=g.label, input_shape=tuple(input_shape), convention=conv)
    bpe = conv.bytes_per_elem
    for layer in g.layers:
        in_elems = _elems(shapes[layer.input])
        out_elems = _elems(shapes[layer.id])
        macs = params = read = write = 0
        if layer.kind == CONV:
            macs, params, read, write = _conv_cost(
                shapes[layer.id], in_elems, layer.in_ch, layer.k, layer.bias, conv
            )
        elif layer.kind == REPCONV:
            n, c, h, w = shapes[layer.input]
            e = c * layer.expand_ratio
            hw = n * h * w
            macs = (e * c + e * e * 9 + c * e) * hw
            params = e * c + (e * e * 9 + e) + (c * e + c)
            p_read = params if conv.count_param_reads else 0
            read = (c * hw + e * hw + e * hw) + p_read  # the three conv inputs
            write = e * hw + e * hw + c * hw
            if conv.count_residual_adds:  # identity skip
                read += 2 * c * hw
                write += c * hw
        elif layer.kind == ACT:
            if layer.act is not None and layer.act.kind == "prelu":
                params = shapes[layer.input][1]
            if conv.count_activations_as_ops:
                read = in_elems + (params if conv.count_param_reads else 0)
                write = out_elems
        elif layer.kind in (HAAR_DOWN, PIXEL_SHUFFLE, BILINEAR_UP2):
            read = in_elems
            write = out_elems
        elif layer.kind in (ADD, MUL):
            if conv.count_residual_adds:
                read = 2 * in_elems
                write = out_elems
        elif layer.kind == BRANCH_POINT:
            pass
        report.per_layer.append(
            LayerCost(
                id=layer.id, kind=layer.kind, name=layer.name,
                macs=macs, params=params, read=read * bpe, write=write * bpe,
            )
        )
    return report


def compare(reports: list[CostReport], labels: list[str] | None = None) -> str:
    """Fixed-width text table, one row per report, in the given order."""
    labels = labels or [r.label for r in reports]
    if len(labels) != len(reports):
        raise ValueError("labels must match reports one to one")
    rows = [
        (
            lbl,
            f"{r.macs / GMAC:.2f}",
            f"{r.mem_total / MEGABYTE:.1f}",
            f"{r.params / 1e3:.1f}",
        )
        for lbl, r in zip(labels, reports)
    ]
    header = ("Model", "MACs/G", "Memory/M", "Params/K")
    w0 = max(len(header[0]), *(len(r[0]) for r in rows))
    widths = [max(len(header[i]), *(len(r[i]) for r in rows)) for i in range(1, 4)]
    lines = [
        f"{header[0]:<{w0}}  "
        + "  ".join(f"{header[i + 1]:>{widths[i]}}" for i in range(3))
    ]
    for row in rows:
        lines.append(
            f"{row[0]:<{w0}}  " + "  ".join(f"{row[i + 1]:>{widths[i]}}" for i in range(3))
        )
    return "\n".join(lines)
