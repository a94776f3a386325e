import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfdnet.ops import ConvParams, ShapeError, conv2d

from oracles import conv2d_loops


def rnd(rng, shape, scale=0.5):
    return (rng.uniform(-scale, scale, shape)).astype(np.float32)


def test_identity_kernel_passthrough():
    # delta-center 3x3 kernel reproduces the input exactly
    x = np.random.default_rng(0).normal(0, 1, (1, 3, 8, 8)).astype(np.float32)
    w = np.zeros((3, 3, 3, 3), dtype=np.float32)
    for c in range(3):
        w[c, c, 1, 1] = 1.0
    y = conv2d(x, ConvParams(w, padding=1))
    assert np.array_equal(y, x)


def test_channel_sum_1x1():
    x = np.arange(2 * 3 * 2 * 2, dtype=np.float32).reshape(2, 3, 2, 2)
    w = np.ones((1, 3, 1, 1), dtype=np.float32)
    y = conv2d(x, ConvParams(w))
    assert np.allclose(y, x.sum(axis=1, keepdims=True))


def test_output_size_formula():
    x = np.zeros((1, 2, 11, 7), dtype=np.float32)
    p = ConvParams(np.zeros((4, 2, 3, 3), dtype=np.float32), stride=2, padding=1)
    y = conv2d(x, p)
    assert y.shape == (1, 4, (11 + 2 - 3) // 2 + 1, (7 + 2 - 3) // 2 + 1)


def test_bias_applied_per_channel():
    x = np.zeros((1, 2, 4, 4), dtype=np.float32)
    w = np.zeros((3, 2, 1, 1), dtype=np.float32)
    b = np.array([1.0, -2.0, 0.5], dtype=np.float32)
    y = conv2d(x, ConvParams(w, b))
    assert np.allclose(y, b.reshape(1, 3, 1, 1))


@pytest.mark.parametrize("k", [1, 2, 3])
@pytest.mark.parametrize("stride", [1, 2])
@pytest.mark.parametrize("padding", [0, 1, 2])
def test_matches_loop_oracle_grid(k, stride, padding):
    rng = np.random.default_rng(97 * k + 13 * stride + padding)
    for n, c_in, c_out, h, w in [(1, 3, 5, 9, 12), (2, 7, 4, 8, 8), (1, 1, 1, 5, 6)]:
        if (h + 2 * padding - k) < 0 or (w + 2 * padding - k) < 0:
            continue
        x = rnd(rng, (n, c_in, h, w))
        wt = rnd(rng, (c_out, c_in, k, k))
        b = rnd(rng, (c_out,))
        got = conv2d(x, ConvParams(wt, b, stride, padding))
        want = conv2d_loops(x, wt, b, stride, padding)
        assert got.shape == want.shape
        assert float(np.max(np.abs(got - want))) <= 1e-5


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 2),
    c_in=st.integers(1, 16),
    c_out=st.integers(1, 8),
    hw=st.integers(3, 32),
    seed=st.integers(0, 2**31),
)
def test_matches_loop_oracle_random(n, c_in, c_out, hw, seed):
    rng = np.random.default_rng(seed)
    x = rnd(rng, (n, c_in, hw, hw))
    wt = rnd(rng, (c_out, c_in, 3, 3))
    got = conv2d(x, ConvParams(wt, padding=1))
    want = conv2d_loops(x, wt, None, 1, 1)
    assert float(np.max(np.abs(got - want))) <= 1e-5


def test_linearity_in_input():
    rng = np.random.default_rng(5)
    x = rnd(rng, (1, 4, 10, 10))
    p = ConvParams(rnd(rng, (4, 4, 3, 3)), padding=1)
    lhs = conv2d(2.0 * x, p)
    rhs = 2.0 * conv2d(x, p)
    assert np.allclose(lhs, rhs, atol=1e-5)


def test_determinism():
    rng = np.random.default_rng(11)
    x = rnd(rng, (2, 8, 16, 16))
    p = ConvParams(rnd(rng, (8, 8, 3, 3)), rnd(rng, (8,)), 1, 1)
    assert np.array_equal(conv2d(x, p), conv2d(x, p))


def test_channel_mismatch_error_names_dimension():
    x = np.zeros((1, 3, 8, 8), dtype=np.float32)
    p = ConvParams(np.zeros((2, 4, 3, 3), dtype=np.float32))
    with pytest.raises(ShapeError, match="channels"):
        conv2d(x, p)


def test_kernel_too_large_for_input():
    x = np.zeros((1, 1, 2, 2), dtype=np.float32)
    p = ConvParams(np.zeros((1, 1, 3, 3), dtype=np.float32), padding=0)
    with pytest.raises(ShapeError):
        conv2d(x, p)


def test_kernel_side_must_be_small_square():
    with pytest.raises(ShapeError):
        ConvParams(np.zeros((1, 1, 5, 5), dtype=np.float32))
    with pytest.raises(ShapeError):
        ConvParams(np.zeros((1, 1, 3, 2), dtype=np.float32))


def test_bad_bias_length():
    with pytest.raises(ShapeError, match="bias"):
        ConvParams(np.zeros((2, 1, 3, 3), dtype=np.float32), np.zeros(3, dtype=np.float32))
