"""Dense tensor primitives: mode unfolding/folding and mode products.

Tensors are plain float64 numpy arrays in row-major (C) order, last index
fastest. All functions are pure: inputs are never mutated.

Unfolding convention: ``unfold(x, m)`` has shape ``(x.shape[m], prod(rest))``
and its columns enumerate the remaining modes in ascending mode order,
row-major. This is the one fixed convention every factor matrix in the
package is expressed in; ``fold`` is its exact (bitwise) inverse.
"""

import numpy as np

__all__ = ["as_tensor", "unfold", "fold", "mode_multiply", "check_kernel4"]


def as_tensor(data, shape=None):
    """Coerce to a C-contiguous float64 array, optionally reshaped."""
    arr = np.ascontiguousarray(data, dtype=np.float64)
    if shape is not None:
        arr = arr.reshape(shape)
    return arr


def unfold(tensor, mode):
    """Matricize ``tensor`` along ``mode``.

    Returns a ``(shape[mode], prod(other extents))`` matrix. Columns are
    ordered by row-major traversal of the remaining modes in ascending
    mode order.
    """
    tensor = np.asarray(tensor, dtype=np.float64)
    if not 0 <= mode < tensor.ndim:
        raise ValueError(f"mode {mode} out of range for rank-{tensor.ndim} tensor")
    return np.ascontiguousarray(
        np.moveaxis(tensor, mode, 0).reshape(tensor.shape[mode], -1)
    )


def fold(matrix, mode, shape):
    """Inverse of :func:`unfold` for the same mode and target shape."""
    matrix = np.asarray(matrix, dtype=np.float64)
    shape = tuple(int(s) for s in shape)
    if not 0 <= mode < len(shape):
        raise ValueError(f"mode {mode} out of range for shape {shape}")
    rest = shape[:mode] + shape[mode + 1 :]
    expected = (shape[mode], int(np.prod(rest, dtype=np.int64)) if rest else 1)
    if matrix.ndim != 2 or matrix.shape != expected:
        raise ValueError(
            f"matrix shape {matrix.shape} inconsistent with mode {mode} of shape "
            f"{shape}; expected {expected}"
        )
    return np.ascontiguousarray(
        np.moveaxis(matrix.reshape((shape[mode],) + rest), 0, mode)
    )


def mode_multiply(tensor, matrix, mode):
    """Mode-``mode`` product: contract ``tensor``'s extent with ``matrix`` rows.

    Result has the input shape with extent at ``mode`` replaced by
    ``matrix.shape[0]``; algebraically ``fold(matrix @ unfold(tensor, mode))``.
    """
    tensor = np.asarray(tensor, dtype=np.float64)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError("mode_multiply expects a 2-D matrix")
    if not 0 <= mode < tensor.ndim:
        raise ValueError(f"mode {mode} out of range for rank-{tensor.ndim} tensor")
    if matrix.shape[1] != tensor.shape[mode]:
        raise ValueError(
            f"matrix has {matrix.shape[1]} columns but tensor extent at mode "
            f"{mode} is {tensor.shape[mode]}"
        )
    new_shape = list(tensor.shape)
    new_shape[mode] = matrix.shape[0]
    return fold(matrix @ unfold(tensor, mode), mode, new_shape)


def check_kernel4(kernel):
    """Validate a 4-D convolution kernel laid out as (d, d, S, T).

    Returns the (d, S, T) extents. The two leading extents are the square
    spatial window, then input channels, then output channels.
    """
    kernel = np.asarray(kernel)
    if kernel.ndim != 4:
        raise ValueError(f"kernel must be 4-D (d, d, S, T), got shape {kernel.shape}")
    d0, d1, s, t = kernel.shape
    if d0 != d1:
        raise ValueError(f"kernel spatial window must be square, got {d0}x{d1}")
    return d0, s, t
