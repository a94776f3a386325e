"""NCHW float32 tensor kernels.

Everything in this module operates on plain numpy arrays laid out as
(batch, channels, height, width) in single precision. Convolution is
cross-correlation (no kernel flip), matching the usual deep-learning
convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf

ACTIVATION_KINDS = ("relu", "lrelu", "gelu", "prelu")

_HALF = np.float32(0.5)
_SQRT1_2 = np.float32(1.0 / math.sqrt(2.0))


class ShapeError(ValueError):
    """An operand's shape violates an operation's contract."""


def as_tensor(x) -> np.ndarray:
    """Coerce to float32 and validate the NCHW layout."""
    t = np.asarray(x, dtype=np.float32)
    if t.ndim != 4:
        raise ShapeError(f"expected a 4-d NCHW tensor, got {t.ndim}-d shape {t.shape}")
    if min(t.shape) < 1:
        raise ShapeError(f"every NCHW dimension must be >= 1, got {t.shape}")
    return t


@dataclass
class ConvParams:
    """Convolution weights in OIHW order plus stride/padding metadata."""

    weights: np.ndarray
    bias: np.ndarray | None = None
    stride: int = 1
    padding: int = 0

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float32)
        if self.weights.ndim != 4:
            raise ShapeError(f"weights must be OIHW, got {self.weights.ndim}-d")
        out_ch, _, kh, kw = self.weights.shape
        if kh != kw or kh not in (1, 2, 3):
            raise ShapeError(f"kernel must be square with side 1, 2 or 3, got {kh}x{kw}")
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float32)
            if self.bias.shape != (out_ch,):
                raise ShapeError(
                    f"bias must have shape ({out_ch},) to match out_ch, got {self.bias.shape}"
                )
        if self.stride < 1:
            raise ShapeError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ShapeError(f"padding must be >= 0, got {self.padding}")

    @property
    def out_ch(self) -> int:
        return self.weights.shape[0]

    @property
    def in_ch(self) -> int:
        return self.weights.shape[1]

    @property
    def k(self) -> int:
        return self.weights.shape[2]


def conv_out_size(size: int, k: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - k) // stride + 1


def conv2d(x: np.ndarray, p: ConvParams) -> np.ndarray:
    """2-d convolution with symmetric zero padding.

    Output spatial size is floor((s + 2*padding - k) / stride) + 1 per axis.
    Implemented as im2col + one GEMM per batch element; summation order is
    fixed by the BLAS call, so repeated runs are bit-identical.
    """
    x = as_tensor(x)
    n, c, h, w = x.shape
    if c != p.in_ch:
        raise ShapeError(f"input has {c} channels but kernel expects in_ch={p.in_ch}")
    k, s, pad = p.k, p.stride, p.padding
    h_out = conv_out_size(h, k, s, pad)
    w_out = conv_out_size(w, k, s, pad)
    if h_out < 1 or w_out < 1:
        raise ShapeError(
            f"kernel {k}x{k} with padding {pad} does not fit input height x width {h}x{w}"
        )
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = np.lib.stride_tricks.sliding_window_view(x, (k, k), axis=(2, 3))
    win = win[:, :, ::s, ::s]  # (n, c, h_out, w_out, k, k)
    cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n, h_out * w_out, c * k * k)
    wmat = p.weights.reshape(p.out_ch, c * k * k)
    out = cols @ wmat.T
    if p.bias is not None:
        out = out + p.bias
    return out.transpose(0, 2, 1).reshape(n, p.out_ch, h_out, w_out)


@dataclass
class Activation:
    """Pointwise nonlinearity. All supported kinds map 0 to 0.

    slope is the negative-branch slope for lrelu; slopes holds prelu's
    per-channel negative slopes.
    """

    kind: str = "relu"
    slope: float = 0.2
    slopes: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.kind == "lrelu" and not 0.0 < self.slope < 1.0:
            raise ValueError(f"lrelu slope must be in (0, 1), got {self.slope}")
        if self.slopes is not None:
            self.slopes = np.asarray(self.slopes, dtype=np.float32)
            if self.slopes.ndim != 1:
                raise ShapeError("prelu slopes must be a 1-d per-channel vector")


def apply_activation(x: np.ndarray, act: Activation) -> np.ndarray:
    x = as_tensor(x)
    if act.kind == "relu":
        return np.maximum(x, np.float32(0.0))
    if act.kind == "lrelu":
        return np.where(x >= 0, x, np.float32(act.slope) * x)
    if act.kind == "gelu":
        # exact Gaussian-CDF form: x * Phi(x)
        return x * _HALF * (np.float32(1.0) + erf(x * _SQRT1_2))
    if act.slopes is None:
        raise ShapeError("prelu requires per-channel slopes")
    if act.slopes.shape[0] != x.shape[1]:
        raise ShapeError(
            f"prelu has {act.slopes.shape[0]} slopes but input has {x.shape[1]} channels"
        )
    s = act.slopes.reshape(1, -1, 1, 1)
    return np.where(x >= 0, x, s * x)


def _upsample_axis_x2(x: np.ndarray, axis: int) -> np.ndarray:
    # half-pixel source centers, clamped at the edges
    size = x.shape[axis]
    dst = np.arange(2 * size, dtype=np.float32)
    src = np.clip((dst + _HALF) / np.float32(2.0) - _HALF, 0.0, float(size - 1))
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, size - 1)
    t = (src - i0).astype(np.float32)
    shape = [1] * x.ndim
    shape[axis] = 2 * size
    t = t.reshape(shape)
    a = np.take(x, i0, axis=axis)
    b = np.take(x, i1, axis=axis)
    return a + (b - a) * t


def bilinear_upsample_x2(x: np.ndarray) -> np.ndarray:
    """Scale both spatial axes by exactly 2 with half-pixel-center bilinear
    interpolation and edge clamping. Outputs stay within [min(x), max(x)]."""
    x = as_tensor(x)
    return _upsample_axis_x2(_upsample_axis_x2(x, 2), 3)


def pixel_shuffle(x: np.ndarray, r: int) -> np.ndarray:
    """Rearrange (n, c*r^2, h, w) -> (n, c, h*r, w*r).

    out[n, c, r*y+dy, r*x+dx] = in[n, c*r^2 + dy*r + dx, y, x]
    """
    x = as_tensor(x)
    if r < 1:
        raise ShapeError(f"upscale factor must be >= 1, got {r}")
    n, c, h, w = x.shape
    if c % (r * r) != 0:
        raise ShapeError(f"channels ({c}) not divisible by r^2 ({r * r})")
    c_out = c // (r * r)
    out = x.reshape(n, c_out, r, r, h, w).transpose(0, 1, 4, 2, 5, 3)
    return out.reshape(n, c_out, h * r, w * r).copy()


# Orthonormal 2x2 Haar filters, band order LL, LH, HL, HH.
_HAAR = 0.5 * np.array(
    [
        [[1, 1], [1, 1]],
        [[1, 1], [-1, -1]],
        [[1, -1], [1, -1]],
        [[1, -1], [-1, 1]],
    ],
    dtype=np.float64,
)


def haar_forward(x: np.ndarray) -> np.ndarray:
    """Stride-2 orthonormal Haar analysis: (n, c, h, w) -> (n, 4c, h/2, w/2).

    Output channels are grouped per input channel: [c0_LL, c0_LH, c0_HL,
    c0_HH, c1_LL, ...]. Energy (sum of squares) is preserved.
    """
    x = as_tensor(x)
    n, c, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"haar_forward needs even spatial dims, got {h}x{w}")
    x64 = x.astype(np.float64)
    a = x64[:, :, 0::2, 0::2]
    b = x64[:, :, 0::2, 1::2]
    cc = x64[:, :, 1::2, 0::2]
    d = x64[:, :, 1::2, 1::2]
    bands = np.stack(
        [(a + b + cc + d), (a + b - cc - d), (a - b + cc - d), (a - b - cc + d)],
        axis=2,
    )
    out = (0.5 * bands).reshape(n, 4 * c, h // 2, w // 2)
    return out.astype(np.float32)


def haar_inverse(y: np.ndarray) -> np.ndarray:
    """Adjoint of haar_forward; exact roundtrip up to float32 rounding."""
    y = as_tensor(y)
    n, c4, h2, w2 = y.shape
    if c4 % 4:
        raise ShapeError(f"haar_inverse needs channels divisible by 4, got {c4}")
    c = c4 // 4
    y64 = y.astype(np.float64).reshape(n, c, 4, h2, w2)
    ll, lh, hl, hh = y64[:, :, 0], y64[:, :, 1], y64[:, :, 2], y64[:, :, 3]
    out = np.empty((n, c, 2 * h2, 2 * w2), dtype=np.float64)
    out[:, :, 0::2, 0::2] = 0.5 * (ll + lh + hl + hh)
    out[:, :, 0::2, 1::2] = 0.5 * (ll + lh - hl - hh)
    out[:, :, 1::2, 0::2] = 0.5 * (ll - lh + hl - hh)
    out[:, :, 1::2, 1::2] = 0.5 * (ll - lh - hl + hh)
    return out.astype(np.float32)


def _binary_check(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = as_tensor(a)
    b = as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"operand shapes differ: {a.shape} vs {b.shape}")
    return a, b


def elementwise_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = _binary_check(a, b)
    return a * b


def elementwise_add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = _binary_check(a, b)
    return a + b


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf when the operands are equal."""
    a, b = _binary_check(a, b)
    if peak <= 0:
        raise ValueError(f"peak must be > 0, got {peak}")
    diff = a.astype(np.float64) - b.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return float("inf")
    return 10.0 * math.log10(peak * peak / mse)
