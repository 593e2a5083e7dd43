"""Self-contained dense SVD and Frobenius utilities.

The decomposition is a one-sided Jacobi SVD written from scratch (no
LAPACK): plane rotations repeatedly orthogonalize column pairs of the
working matrix until every rotation in a full sweep is below tolerance.
It is simple, robust and plenty fast for the matrix sizes that occur
here (tiles up to ~1024 columns, kernel unfoldings with a few hundred
columns). Outputs are deterministic: fixed cyclic pair order, no
pivoting, stable sort for tied singular values, and a sign convention
(largest-magnitude entry of each left singular vector is positive).

The sweep kernel exists twice, numba loops and a vectorized numpy twin;
see :mod:`deeptwist._backend`.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import jit, select
from .errors import NumericalError

__all__ = ["SvdFactors", "svd", "truncated_svd", "frobenius_sq"]

_MAX_SWEEPS = 60
_CONV_TOL = 1e-12  # largest rotation sine allowed in a converged sweep
_SKIP_TOL2 = 1e-28  # skip pairs with normalized correlation^2 below this


@dataclass(frozen=True)
class SvdFactors:
    """Singular triplets: ``u @ diag(sigma) @ v.T`` approximates the input.

    ``u`` is n x r and ``v`` is m x r, both column-orthonormal; ``sigma``
    is length r, non-negative and non-increasing.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self):
        return self.sigma.shape[0]

    def reconstruct(self):
        return (self.u * self.sigma) @ self.v.T


def _sweep_body(cols, vrows, max_sweeps, conv_tol, skip_tol2):
    # cols[p] is column p of the tall working matrix; vrows[p] is column p
    # of the accumulated right-rotation product. Both are mutated in place.
    m, n = cols.shape
    sweeps = 0
    biggest = 1.0
    while sweeps < max_sweeps and biggest >= conv_tol:
        biggest = 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                app = 0.0
                aqq = 0.0
                apq = 0.0
                for i in range(n):
                    cp = cols[p, i]
                    cq = cols[q, i]
                    app += cp * cp
                    aqq += cq * cq
                    apq += cp * cq
                if apq == 0.0 or apq * apq <= skip_tol2 * app * aqq:
                    continue
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                if abs(s) > biggest:
                    biggest = abs(s)
                for i in range(n):
                    cp = cols[p, i]
                    cq = cols[q, i]
                    cols[p, i] = c * cp - s * cq
                    cols[q, i] = s * cp + c * cq
                for i in range(m):
                    vp = vrows[p, i]
                    vq = vrows[q, i]
                    vrows[p, i] = c * vp - s * vq
                    vrows[q, i] = s * vp + c * vq
        sweeps += 1
    return sweeps, biggest


_sweep_numba = jit(_sweep_body)


def _sweep_numpy(cols, vrows, max_sweeps, conv_tol, skip_tol2):
    # Same rotation sequence as _sweep_body, with vectorized row updates.
    m, _ = cols.shape
    sweeps = 0
    biggest = 1.0
    while sweeps < max_sweeps and biggest >= conv_tol:
        biggest = 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                rp = cols[p]
                rq = cols[q]
                apq = float(rp @ rq)
                if apq == 0.0:
                    continue
                app = float(rp @ rp)
                aqq = float(rq @ rq)
                if apq * apq <= skip_tol2 * app * aqq:
                    continue
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                if abs(s) > biggest:
                    biggest = abs(s)
                new_p = c * rp - s * rq
                new_q = s * rp + c * rq
                cols[p] = new_p
                cols[q] = new_q
                new_vp = c * vrows[p] - s * vrows[q]
                new_vq = s * vrows[p] + c * vrows[q]
                vrows[p] = new_vp
                vrows[q] = new_vq
        sweeps += 1
    return sweeps, biggest


_sweep = select(_sweep_numba, _sweep_numpy)


def _complete_orthonormal(u_rows, dead):
    """Replace near-zero rows with unit vectors orthogonal to all others.

    Keeps U column-orthonormal when the input matrix is rank deficient.
    Deterministic: tries standard basis vectors in index order.
    """
    n = u_rows.shape[1]
    for i in dead:
        for k in range(n):
            cand = np.zeros(n)
            cand[k] = 1.0
            cand -= (u_rows @ cand) @ u_rows
            norm = math.sqrt(float(cand @ cand))
            if norm > 0.5:
                u_rows[i] = cand / norm
                break
        else:  # pragma: no cover - n basis vectors always span the gap
            raise NumericalError("failed to complete orthonormal basis")


def svd(matrix):
    """Full SVD of a real matrix, r = min(n, m) triplets.

    Raises ValueError on non-finite input and NumericalError if the
    Jacobi sweeps do not converge within the sweep cap.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"svd expects a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("svd input contains non-finite entries")

    transposed = a.shape[0] < a.shape[1]
    tall = a.T if transposed else a
    # Row p of `cols` holds column p of the tall matrix (contiguous access).
    cols = np.ascontiguousarray(tall.T)
    r = cols.shape[0]
    vrows = np.eye(r)

    _, biggest = _sweep(cols, vrows, _MAX_SWEEPS, _CONV_TOL, _SKIP_TOL2)
    if biggest >= _CONV_TOL:
        raise NumericalError(
            f"Jacobi SVD did not converge in {_MAX_SWEEPS} sweeps "
            f"(last rotation magnitude {biggest:.3e})"
        )

    sigma = np.sqrt(np.einsum("ij,ij->i", cols, cols))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    cols = cols[order]
    vrows = vrows[order]

    u_rows = np.zeros_like(cols)
    tiny = max(cols.shape) * np.finfo(np.float64).eps * (sigma[0] if r else 0.0)
    live = sigma > tiny
    u_rows[live] = cols[live] / sigma[live, None]
    dead = np.flatnonzero(~live)
    if dead.size:
        _complete_orthonormal(u_rows, dead)

    # Sign convention: largest-magnitude entry of each left vector positive.
    for i in range(r):
        k = int(np.argmax(np.abs(u_rows[i])))
        if u_rows[i, k] < 0.0:
            u_rows[i] = -u_rows[i]
            vrows[i] = -vrows[i]

    u = np.ascontiguousarray(u_rows.T)
    v = np.ascontiguousarray(vrows.T)
    if transposed:
        u, v = v, u
    return SvdFactors(u=u, sigma=sigma, v=v)


def truncated_svd(matrix, r):
    """Leading ``r`` singular triplets (the best rank-r approximation)."""
    a = np.asarray(matrix)
    if a.ndim != 2:
        raise ValueError("truncated_svd expects a 2-D matrix")
    cap = min(a.shape)
    if not 1 <= r <= cap:
        raise ValueError(f"rank {r} out of range [1, {cap}] for shape {a.shape}")
    full = svd(a)
    return SvdFactors(
        u=np.ascontiguousarray(full.u[:, :r]),
        sigma=full.sigma[:r].copy(),
        v=np.ascontiguousarray(full.v[:, :r]),
    )


def frobenius_sq(x):
    """Sum of squared entries of a matrix or tensor (64-bit accumulation)."""
    flat = np.asarray(x, dtype=np.float64).ravel()
    return float(flat @ flat)
