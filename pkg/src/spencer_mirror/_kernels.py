"""Inner loops with a numba path and a pure-numpy path.

The numba path is used when numba imports and ``SPENCER_MIRROR_NUMPY`` is unset
(or ``0``). Both paths produce the same numbers up to summation order; every
mirror identity in the package compares results from a single path.
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("SPENCER_MIRROR_NUMPY", "0") in ("", "0")

try:  # pragma: no cover - exercised implicitly by the backend fixture
    from numba import njit
except ImportError:  # pragma: no cover
    USE_NUMBA = False


# --- numpy implementations ----------------------------------------------------


def _bracket_norms_np(c, pts):
    """``||[x_i, y_i]||`` for ``pts`` of shape ``(m, 2, n)``."""
    out = np.empty(pts.shape[0])
    chunk = 8192
    for s in range(0, pts.shape[0], chunk):
        p = pts[s : s + chunk]
        br = np.einsum("abg,mb,mg->ma", c, p[:, 0], p[:, 1])
        out[s : s + chunk] = np.sqrt((br * br).sum(axis=1))
    return out


def _block_lift_np(weights, basis_blocks, row_off, col_off):
    """Triplets of the block-diagonal operator ``sum_a weights[s, a] * basis_blocks[a]``.

    Block ``s`` sits at rows ``row_off[s] + i`` and columns ``col_off[s] + j``.
    Explicit zeros are dropped.
    """
    ns = weights.shape[0]
    _, nr, nc = basis_blocks.shape
    vals = np.zeros((ns, nr, nc))
    # fixed left-to-right accumulation, matching the compiled loop
    for a in range(basis_blocks.shape[0]):
        vals += weights[:, a, None, None] * basis_blocks[a][None, :, :]
    rows = row_off[:, None, None] + np.arange(nr)[None, :, None]
    cols = col_off[:, None, None] + np.arange(nc)[None, None, :]
    rows = np.broadcast_to(rows, vals.shape)
    cols = np.broadcast_to(cols, vals.shape)
    keep = vals != 0.0
    return rows[keep].astype(np.int64), cols[keep].astype(np.int64), vals[keep]


def _kron_identity_np(rows, cols, vals, block):
    """Triplets of ``A kron I_block`` from triplets of ``A``."""
    k = np.arange(block)
    r = (rows[:, None] * block + k[None, :]).ravel()
    c = (cols[:, None] * block + k[None, :]).ravel()
    v = np.repeat(vals, block)
    return r.astype(np.int64), c.astype(np.int64), v


# --- numba implementations ----------------------------------------------------

if USE_NUMBA:

    @njit(cache=True)
    def _bracket_norms_nb(c, pts):
        m = pts.shape[0]
        n = c.shape[0]
        out = np.empty(m)
        for i in range(m):
            acc = 0.0
            for a in range(n):
                s = 0.0
                for b in range(n):
                    xb = pts[i, 0, b]
                    if xb == 0.0:
                        continue
                    for g in range(n):
                        s += c[a, b, g] * xb * pts[i, 1, g]
                acc += s * s
            out[i] = np.sqrt(acc)
        return out

    @njit(cache=True)
    def _block_lift_nb(weights, basis_blocks, row_off, col_off):
        ns, na = weights.shape
        nr = basis_blocks.shape[1]
        nc = basis_blocks.shape[2]
        rows = np.empty(ns * nr * nc, dtype=np.int64)
        cols = np.empty(ns * nr * nc, dtype=np.int64)
        vals = np.empty(ns * nr * nc)
        cnt = 0
        for s in range(ns):
            for i in range(nr):
                for j in range(nc):
                    v = 0.0
                    for a in range(na):
                        v += weights[s, a] * basis_blocks[a, i, j]
                    if v != 0.0:
                        rows[cnt] = row_off[s] + i
                        cols[cnt] = col_off[s] + j
                        vals[cnt] = v
                        cnt += 1
        return rows[:cnt], cols[:cnt], vals[:cnt]

    @njit(cache=True)
    def _kron_identity_nb(rows, cols, vals, block):
        nnz = rows.shape[0]
        r = np.empty(nnz * block, dtype=np.int64)
        c = np.empty(nnz * block, dtype=np.int64)
        v = np.empty(nnz * block)
        for t in range(nnz):
            for k in range(block):
                r[t * block + k] = rows[t] * block + k
                c[t * block + k] = cols[t] * block + k
                v[t * block + k] = vals[t]
        return r, c, v


def bracket_norms(c, pts, backend: str | None = None):
    c = np.ascontiguousarray(c, dtype=float)
    pts = np.ascontiguousarray(pts, dtype=float)
    if _pick(backend) == "numba":
        return _bracket_norms_nb(c, pts)
    return _bracket_norms_np(c, pts)


def block_lift(weights, basis_blocks, row_off, col_off, backend: str | None = None):
    weights = np.ascontiguousarray(weights, dtype=float)
    basis_blocks = np.ascontiguousarray(basis_blocks, dtype=float)
    row_off = np.ascontiguousarray(row_off, dtype=np.int64)
    col_off = np.ascontiguousarray(col_off, dtype=np.int64)
    if _pick(backend) == "numba":
        return _block_lift_nb(weights, basis_blocks, row_off, col_off)
    return _block_lift_np(weights, basis_blocks, row_off, col_off)


def kron_identity(rows, cols, vals, block: int, backend: str | None = None):
    rows = np.ascontiguousarray(rows, dtype=np.int64)
    cols = np.ascontiguousarray(cols, dtype=np.int64)
    vals = np.ascontiguousarray(vals, dtype=float)
    if _pick(backend) == "numba":
        return _kron_identity_nb(rows, cols, vals, int(block))
    return _kron_identity_np(rows, cols, vals, int(block))


def _pick(backend):
    if backend is None:
        return "numba" if USE_NUMBA else "numpy"
    if backend == "numba" and not USE_NUMBA:
        raise RuntimeError("numba backend requested but disabled or unavailable")
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    return backend


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
