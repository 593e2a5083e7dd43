"""Kernel lowering and im2col: convolution as matrix multiplication.

A (d, d, S, T) kernel is reshaped to a T x (S*d*d) matrix; an input
feature map becomes a redundant Toeplitz matrix whose rows use the same
packing, so the matrix product reproduces direct convolution.

Packing convention (fixed, both sides must agree): lowered column /
Toeplitz row index ``c = s*d*d + i*d + j`` for kernel element
``K[i, j, s, t]``. Padding is zero-padding; output size is
``floor((H + 2*padding - d) / stride) + 1``.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import jit, select
from .tensor import check_kernel4

__all__ = [
    "LoweredKernel",
    "ToeplitzInput",
    "lower_kernel",
    "raise_kernel",
    "im2col",
    "conv_gemm",
]


@dataclass(frozen=True)
class LoweredKernel:
    """T x (S*d*d) kernel matrix plus the extents needed to invert it."""

    matrix: np.ndarray
    d: int
    in_channels: int
    out_channels: int


@dataclass(frozen=True)
class ToeplitzInput:
    """(S*d*d) x (h_out*w_out) patch matrix; entries are inputs or zeros."""

    matrix: np.ndarray
    h_out: int
    w_out: int


def lower_kernel(kernel):
    """Reshape a (d, d, S, T) kernel to its T x (S*d*d) lowered matrix."""
    d, s, t = check_kernel4(kernel)
    kernel = np.asarray(kernel, dtype=np.float64)
    matrix = np.ascontiguousarray(kernel.transpose(3, 2, 0, 1).reshape(t, s * d * d))
    return LoweredKernel(matrix=matrix, d=d, in_channels=s, out_channels=t)


def raise_kernel(lowered):
    """Exact inverse of :func:`lower_kernel`."""
    d, s, t = lowered.d, lowered.in_channels, lowered.out_channels
    matrix = np.asarray(lowered.matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape != (t, s * d * d):
        raise ValueError(
            f"lowered matrix shape {matrix.shape} inconsistent with "
            f"d={d}, S={s}, T={t}"
        )
    return np.ascontiguousarray(matrix.reshape(t, s, d, d).transpose(2, 3, 1, 0))


def _im2col_body(padded, d, stride, out, h_out, w_out):
    channels = padded.shape[0]
    for s in range(channels):
        for i in range(d):
            for j in range(d):
                row = s * d * d + i * d + j
                col = 0
                for ho in range(h_out):
                    for wo in range(w_out):
                        out[row, col] = padded[s, ho * stride + i, wo * stride + j]
                        col += 1


_im2col_numba = jit(_im2col_body)


def _im2col_numpy(padded, d, stride, out, h_out, w_out):
    channels = padded.shape[0]
    view = out.reshape(channels, d * d, h_out * w_out)
    for i in range(d):
        for j in range(d):
            window = padded[:, i : i + stride * h_out : stride, j : j + stride * w_out : stride]
            view[:, i * d + j, :] = window.reshape(channels, h_out * w_out)


_im2col = select(_im2col_numba, _im2col_numpy)


def im2col(activations, d, stride=1, padding=0):
    """Build the Toeplitz patch matrix of an (S, H, W) feature map."""
    x = np.asarray(activations, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"activations must be (S, H, W), got shape {x.shape}")
    if d < 1 or stride < 1 or padding < 0:
        raise ValueError("need d >= 1, stride >= 1, padding >= 0")
    channels, h, w = x.shape
    if h + 2 * padding < d or w + 2 * padding < d:
        raise ValueError(
            f"{d}x{d} kernel larger than padded {h + 2 * padding}x{w + 2 * padding} input"
        )
    h_out = (h + 2 * padding - d) // stride + 1
    w_out = (w + 2 * padding - d) // stride + 1
    if padding:
        padded = np.zeros((channels, h + 2 * padding, w + 2 * padding))
        padded[:, padding : padding + h, padding : padding + w] = x
    else:
        padded = np.ascontiguousarray(x)
    out = np.empty((channels * d * d, h_out * w_out))
    _im2col(padded, d, stride, out, h_out, w_out)
    return ToeplitzInput(matrix=out, h_out=h_out, w_out=w_out)


def conv_gemm(kernel, activations, stride=1, padding=0):
    """Convolve via lowering: lowered kernel times Toeplitz input.

    Returns the (T, H_out, W_out) output map. This is the matrix-
    multiplication route; the training engine computes the same thing
    with direct loops, and tests pin the two to each other.
    """
    lowered = lower_kernel(kernel)
    patches = im2col(activations, lowered.d, stride=stride, padding=padding)
    out = lowered.matrix @ patches.matrix
    return out.reshape(lowered.out_channels, patches.h_out, patches.w_out)
