"""Low-rank compression math for convolution kernels.

Two families:

* Tucker factorization of a (d, d, S, T) kernel over the channel modes:
  a reduced (d, d, R_s, R_t) core plus channel factor matrices, computed
  by per-mode SVD initialization followed by alternating orthogonal
  iteration refinement.
* Truncated SVD applied per tile of a lowered T x (S*d*d) kernel matrix.

Plus the parameter-count/compression-ratio arithmetic for both, rank
selection against a ratio target, and the tiling variance study.

Parameter counting for SVD tiles folds the singular values into the
left factor, giving r*(h + w) stored values per h x w tile; that is the
convention the ratio arithmetic in this package is calibrated to.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RatioInfeasibleError
from .linalg import SvdFactors, frobenius_sq, truncated_svd
from .tensor import check_kernel4, mode_multiply, unfold

__all__ = [
    "TuckerFactors",
    "tucker_ranks",
    "tucker_decompose",
    "tucker_reconstruct",
    "tucker_param_count",
    "tucker_ratio",
    "TileGridSvd",
    "tiled_svd_decompose",
    "tiled_svd_reconstruct",
    "tiled_param_count",
    "tiled_ratio",
    "svd_rank_for_ratio",
    "TileVarianceResult",
    "tiling_variance_study",
]

# kernel tensors are laid out (d, d, S, T): channel modes are 2 and 3
_MODE_S = 2
_MODE_T = 3


@dataclass(frozen=True)
class TuckerFactors:
    """Core tensor plus column-orthonormal channel factors.

    ``error_history`` holds the relative reconstruction error after
    initialization and after each refinement round (non-increasing).
    """

    core: np.ndarray  # (d, d, R_s, R_t)
    p_s: np.ndarray  # (S, R_s)
    p_t: np.ndarray  # (T, R_t)
    error_history: tuple = field(default=(), compare=False)

    @property
    def ranks(self):
        return self.p_s.shape[1], self.p_t.shape[1]


def tucker_ranks(s, t, rc):
    """Channel ranks from the rank fraction: round(rc*dim), half-up, clamped."""
    if not 0.0 < rc <= 1.0:
        raise ValueError(f"rank fraction must be in (0, 1], got {rc}")
    r_s = min(max(int(math.floor(rc * s + 0.5)), 1), s)
    r_t = min(max(int(math.floor(rc * t + 0.5)), 1), t)
    return r_s, r_t


def _channel_core(kernel, p_s, p_t):
    return mode_multiply(mode_multiply(kernel, p_s.T, _MODE_S), p_t.T, _MODE_T)


def tucker_decompose(kernel, r_s, r_t, hooi_iters=3, tol=1e-6):
    """Rank-(R_s, R_t) Tucker factors of a (d, d, S, T) kernel.

    Initialization takes the leading left singular vectors of the two
    channel-mode unfoldings; ``hooi_iters`` rounds of alternating
    refinement follow, stopping early once the relative reconstruction
    error improves by less than ``tol``.
    """
    _, s, t = check_kernel4(kernel)
    if not 1 <= r_s <= s:
        raise ValueError(f"R_s={r_s} out of range [1, {s}]")
    if not 1 <= r_t <= t:
        raise ValueError(f"R_t={r_t} out of range [1, {t}]")
    if hooi_iters < 0:
        raise ValueError("hooi_iters must be >= 0")
    kernel = np.asarray(kernel, dtype=np.float64)
    total_sq = frobenius_sq(kernel)

    p_s = truncated_svd(unfold(kernel, _MODE_S), r_s).u
    p_t = truncated_svd(unfold(kernel, _MODE_T), r_t).u

    def rel_error(core):
        if total_sq == 0.0:
            return 0.0
        # orthonormal projection: error^2 = ||K||^2 - ||core||^2
        gap = max(total_sq - frobenius_sq(core), 0.0)
        return math.sqrt(gap / total_sq)

    core = _channel_core(kernel, p_s, p_t)
    errors = [rel_error(core)]
    for _ in range(hooi_iters):
        shrunk_t = mode_multiply(kernel, p_t.T, _MODE_T)
        p_s = truncated_svd(unfold(shrunk_t, _MODE_S), r_s).u
        shrunk_s = mode_multiply(kernel, p_s.T, _MODE_S)
        p_t = truncated_svd(unfold(shrunk_s, _MODE_T), r_t).u
        core = mode_multiply(shrunk_s, p_t.T, _MODE_T)
        errors.append(rel_error(core))
        if errors[-2] - errors[-1] < tol:
            break
    return TuckerFactors(core=core, p_s=p_s, p_t=p_t, error_history=tuple(errors))


def tucker_reconstruct(factors):
    """Expand factors back to the full (d, d, S, T) kernel."""
    core = np.asarray(factors.core, dtype=np.float64)
    if core.ndim != 4:
        raise ValueError(f"core must be 4-D, got shape {core.shape}")
    return mode_multiply(
        mode_multiply(core, factors.p_s, _MODE_S), factors.p_t, _MODE_T
    )


def tucker_param_count(d, s, t, r_s, r_t):
    """Stored values in the decomposed form: S*R_s + d^2*R_s*R_t + T*R_t."""
    return s * r_s + d * d * r_s * r_t + t * r_t


def tucker_ratio(d, s, t, r_s, r_t):
    """Original kernel size over decomposed size (exact integer counts)."""
    if min(d, s, t, r_s, r_t) < 1:
        raise ValueError("all extents and ranks must be positive")
    return (d * d * s * t) / tucker_param_count(d, s, t, r_s, r_t)


@dataclass(frozen=True)
class TileGridSvd:
    """Per-tile truncated SVD factors of a partitioned matrix.

    Tiles partition the matrix row-major; edge tiles are smaller when
    the tile dims do not divide the matrix and carry rank
    ``min(rank, tile dims)``.
    """

    shape: tuple
    tile_h: int
    tile_w: int
    rank: int
    tiles: tuple  # tuple of row-tuples of SvdFactors

    @property
    def param_count(self):
        return sum(
            f.rank * (f.u.shape[0] + f.v.shape[0]) for row in self.tiles for f in row
        )

    @property
    def ratio(self):
        return (self.shape[0] * self.shape[1]) / self.param_count


def _tile_sizes(extent, tile):
    sizes = [tile] * (extent // tile)
    if extent % tile:
        sizes.append(extent % tile)
    return sizes


def tiled_svd_decompose(matrix, tile_h, tile_w, rank):
    """Truncate each tile of ``matrix`` to rank ``min(rank, tile dims)``."""
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("tiled_svd_decompose expects a 2-D matrix")
    if tile_h < 1 or tile_w < 1 or rank < 1:
        raise ValueError("tile dims and rank must be >= 1")
    n_rows, n_cols = m.shape
    grid = []
    r0 = 0
    for h in _tile_sizes(n_rows, tile_h):
        row = []
        c0 = 0
        for w in _tile_sizes(n_cols, tile_w):
            tile = m[r0 : r0 + h, c0 : c0 + w]
            row.append(truncated_svd(tile, min(rank, h, w)))
            c0 += w
        grid.append(tuple(row))
        r0 += h
    return TileGridSvd(
        shape=(n_rows, n_cols), tile_h=tile_h, tile_w=tile_w, rank=rank,
        tiles=tuple(grid),
    )


def tiled_svd_reconstruct(grid):
    """Reassemble the rank-truncated tiles into the full matrix."""
    out = np.empty(grid.shape)
    r0 = 0
    for row in grid.tiles:
        h = row[0].u.shape[0]
        c0 = 0
        for f in row:
            w = f.v.shape[0]
            out[r0 : r0 + h, c0 : c0 + w] = f.reconstruct()
            c0 += w
        r0 += h
    return out


def tiled_param_count(n, m, tile_h, tile_w, rank):
    """Stored values at the given rank, folded-sigma convention, no SVD run."""
    total = 0
    for h in _tile_sizes(n, tile_h):
        for w in _tile_sizes(m, tile_w):
            total += min(rank, h, w) * (h + w)
    return total


def tiled_ratio(n, m, tile_h, tile_w, rank):
    return (n * m) / tiled_param_count(n, m, tile_h, tile_w, rank)


def svd_rank_for_ratio(n, m, tile_h, tile_w, target_ratio):
    """Largest rank whose achieved ratio still meets the target.

    Returns ``(rank, achieved_ratio)``. Raises RatioInfeasibleError when
    even rank 1 falls short (the error carries the best achievable ratio).
    """
    if target_ratio < 1.0:
        raise ValueError(f"target ratio must be >= 1, got {target_ratio}")
    cap = min(tile_h, tile_w, n, m)
    best = None
    for r in range(1, cap + 1):
        achieved = tiled_ratio(n, m, tile_h, tile_w, r)
        if achieved >= target_ratio:
            best = (r, achieved)
        else:
            break
    if best is None:
        raise RatioInfeasibleError(target_ratio, tiled_ratio(n, m, tile_h, tile_w, 1))
    return best


@dataclass(frozen=True)
class TileVarianceResult:
    tile_h: int
    tile_w: int
    rank: int
    achieved_ratio: float
    variance: float
    bin_edges: np.ndarray  # 201 edges over [0, max|w|]
    counts: np.ndarray  # 200 counts, positive reconstructed weights only


_HIST_BINS = 200


def tiling_variance_study(matrix, tile_dims_list, target_ratio):
    """Reconstruct ``matrix`` under several tilings at one ratio target.

    For each (tile_h, tile_w) the rank is picked to meet ``target_ratio``
    (a target of exactly 1 means no truncation), the matrix is
    reconstructed, and the sample variance plus a histogram of the
    positive reconstructed weights (200 uniform bins over [0, max|w|])
    is reported.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise ValueError("variance study input contains non-finite entries")
    results = []
    for tile_h, tile_w in tile_dims_list:
        if target_ratio <= 1.0:
            rank = min(tile_h, tile_w, m.shape[0], m.shape[1])
            achieved = tiled_ratio(m.shape[0], m.shape[1], tile_h, tile_w, rank)
        else:
            rank, achieved = svd_rank_for_ratio(
                m.shape[0], m.shape[1], tile_h, tile_w, target_ratio
            )
        recon = tiled_svd_reconstruct(tiled_svd_decompose(m, tile_h, tile_w, rank))
        top = float(np.max(np.abs(recon))) if recon.size else 0.0
        counts, edges = np.histogram(
            recon[recon > 0.0], bins=_HIST_BINS, range=(0.0, top if top > 0 else 1.0)
        )
        results.append(
            TileVarianceResult(
                tile_h=tile_h,
                tile_w=tile_w,
                rank=rank,
                achieved_ratio=achieved,
                variance=float(np.var(recon, ddof=1)) if recon.size > 1 else 0.0,
                bin_edges=edges,
                counts=counts,
            )
        )
    return results
