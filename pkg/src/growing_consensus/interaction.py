"""Weighted pairwise interaction sums v(q) = sum_j w_j psi(|p_j - q|) (p_j - q).

Several evaluation paths produce the same sum:

* ``constant``: psi is constant, so the sum collapses to first moments.
* ``sorted1d``: in one dimension, kernels whose odd extension psi(|u|) u is
  polynomial on each side (tent, bump) or exponential reduce to prefix sums
  over the sorted sources.
* ``binned``: compactly supported kernels in any dimension; sources are
  hashed into unit cells and only the 3^d neighbouring cells are scanned.
* ``dense``: the plain double sum, chunked to bound memory.
"""

from __future__ import annotations

import itertools
from math import comb

import numpy as np

from .kernels import InfluenceKernel

_CHUNK = 2_000_000
METHODS = ("auto", "dense", "constant", "sorted1d", "binned")


def _as2d(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[:, None] if x.ndim == 1 else x


def dense(points, weights, kernel: InfluenceKernel, queries=None) -> np.ndarray:
    p = _as2d(points)
    q = p if queries is None else _as2d(queries)
    w = np.asarray(weights, dtype=float)
    out = np.empty_like(q)
    step = max(1, _CHUNK // max(1, len(p)))
    for s in range(0, len(q), step):
        diff = p[None, :, :] - q[s:s + step, None, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        coef = kernel._raw(r) * w[None, :]
        out[s:s + step] = np.einsum("ij,ijk->ik", coef, diff)
    return out


def constant(points, weights, kernel: InfluenceKernel, queries=None) -> np.ndarray:
    p = _as2d(points)
    q = p if queries is None else _as2d(queries)
    w = np.asarray(weights, dtype=float)
    return kernel.value * (w @ p - w.sum() * q)


def _poly_side(S, lo, hi, q, coeffs):
    # sum over sources j in [lo, hi) of w_j * sum_k c_k (a_j - q)^k
    out = np.zeros_like(q)
    win = [S[m][hi] - S[m][lo] for m in range(len(coeffs))]
    for k, c in enumerate(coeffs):
        if c == 0.0:
            continue
        acc = np.zeros_like(q)
        for m in range(k + 1):
            acc += comb(k, m) * (-q) ** (k - m) * win[m]
        out += c * acc
    return out


def sorted_poly_1d(points, weights, kernel: InfluenceKernel, queries=None) -> np.ndarray:
    radius, right, left = kernel.odd_polynomial()
    a = np.asarray(points, dtype=float).reshape(-1)
    q = a if queries is None else np.asarray(queries, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float)
    shift = float(w @ a / w.sum()) if w.sum() > 0 else 0.0
    a, q = a - shift, q - shift
    order = np.argsort(a, kind="stable")
    a, w = a[order], w[order]
    deg = max(len(right), len(left))
    S = [np.concatenate(([0.0], np.cumsum(w * a ** m))) for m in range(deg)]
    mid = np.searchsorted(a, q, side="left")
    hi = np.searchsorted(a, q + radius, side="left")
    lo = np.searchsorted(a, q - radius, side="right")
    v = _poly_side(S, mid, hi, q, right) + _poly_side(S, lo, mid, q, left)
    return v[:, None]


def sorted_exp_1d(points, weights, kernel: InfluenceKernel, queries=None) -> np.ndarray | None:
    lam = kernel.lam
    a = np.asarray(points, dtype=float).reshape(-1)
    q = a if queries is None else np.asarray(queries, dtype=float).reshape(-1)
    w = np.asarray(weights, dtype=float)
    shift = 0.5 * (a.min() + a.max())
    a, q = a - shift, q - shift
    span = lam * max(np.abs(a).max(), np.abs(q).max())
    if span > 300:
        return None
    order = np.argsort(a, kind="stable")
    a, w = a[order], w[order]
    em, ep = np.exp(-lam * a), np.exp(lam * a)
    # right side (a_j >= q): e^{lam q} * sum w e^{-lam a} (a - q), suffix sums
    R1 = np.concatenate((np.cumsum((w * em * a)[::-1])[::-1], [0.0]))
    R0 = np.concatenate((np.cumsum((w * em)[::-1])[::-1], [0.0]))
    # left side (a_j < q): e^{-lam q} * sum w e^{lam a} (a - q), prefix sums
    L1 = np.concatenate(([0.0], np.cumsum(w * ep * a)))
    L0 = np.concatenate(([0.0], np.cumsum(w * ep)))
    k = np.searchsorted(a, q, side="left")
    v = np.exp(lam * q) * (R1[k] - q * R0[k]) + np.exp(-lam * q) * (L1[k] - q * L0[k])
    return v[:, None]


def binned(points, weights, kernel: InfluenceKernel, queries=None, cell: float = 1.0) -> np.ndarray:
    """Cell-list evaluation for compactly supported kernels (support <= ``cell``)."""
    if not kernel.compact or kernel.support_radius > cell:
        return dense(points, weights, kernel, queries)
    p = _as2d(points)
    q = p if queries is None else _as2d(queries)
    w = np.asarray(weights, dtype=float)
    d = p.shape[1]
    pc = np.floor(p / cell).astype(np.int64)
    qc = np.floor(q / cell).astype(np.int64)
    origin = np.minimum(pc.min(axis=0), qc.min(axis=0)) - 1
    dims = np.maximum(pc.max(axis=0), qc.max(axis=0)) - origin + 2
    pkey = np.ravel_multi_index((pc - origin).T, dims)
    qkey = np.ravel_multi_index((qc - origin).T, dims)
    porder = np.argsort(pkey, kind="stable")
    pkey_sorted = pkey[porder]
    ps, ws = p[porder], w[porder]
    out = np.zeros_like(q)
    qorder = np.argsort(qkey, kind="stable")
    ukeys, starts = np.unique(qkey[qorder], return_index=True)
    ends = np.append(starts[1:], len(qorder))
    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=d)), dtype=np.int64)
    strides = np.array([int(np.prod(dims[i + 1:])) for i in range(d)], dtype=np.int64)
    key_offsets = offsets @ strides
    for key, s, e in zip(ukeys, starts, ends):
        nkeys = key + key_offsets
        lo = np.searchsorted(pkey_sorted, nkeys, side="left")
        hi = np.searchsorted(pkey_sorted, nkeys, side="right")
        idx = np.concatenate([np.arange(a, b) for a, b in zip(lo, hi) if b > a] or [np.empty(0, np.int64)])
        qi = qorder[s:e]
        if len(idx):
            out[qi] = dense(ps[idx], ws[idx], kernel, q[qi])
    return out


def choose_method(kernel: InfluenceKernel, dim: int, n: int) -> str:
    if kernel.kind == "type1_constant":
        return "constant"
    if dim == 1 and (kernel.odd_polynomial() is not None or kernel.kind == "type1_exponential"):
        return "sorted1d"
    if kernel.compact and n > 256:
        return "binned"
    return "dense"


def velocities(points, weights, kernel: InfluenceKernel, queries=None, method: str = "auto") -> np.ndarray:
    """Interaction velocity at each query (default: at the sources); shape (n_queries, d)."""
    p = _as2d(points)
    if method == "auto":
        method = choose_method(kernel, p.shape[1], len(p))
    if method == "constant":
        if kernel.kind != "type1_constant":
            raise ValueError("constant path needs a constant kernel")
        return constant(p, weights, kernel, queries)
    if method == "sorted1d":
        if p.shape[1] != 1:
            raise ValueError("sorted1d path is one-dimensional")
        if kernel.odd_polynomial() is not None:
            return sorted_poly_1d(p, weights, kernel, queries)
        if kernel.kind == "type1_exponential":
            out = sorted_exp_1d(p, weights, kernel, queries)
            if out is not None:
                return out
        return dense(p, weights, kernel, queries)
    if method == "binned":
        return binned(p, weights, kernel, queries)
    if method == "dense":
        return dense(p, weights, kernel, queries)
    raise ValueError(f"unknown method {method!r}")
