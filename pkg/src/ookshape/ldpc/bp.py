"""Flooding sum-product decoding in the LLR domain (tanh rule).

LLR convention: positive values favour bit 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np
import scipy.sparse as sp

LLR_CLIP = 1e3
_TANH_MAX = 1.0 - 2.0**-52


class DecodeResult(NamedTuple):
    bits: np.ndarray
    iterations: int
    converged: bool
    posterior: np.ndarray


@dataclass(frozen=True)
class TannerGraph:
    """Edge lists of a parity-check matrix, row-major plus a column index."""

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    col_ptr: np.ndarray
    col_edges: np.ndarray

    @classmethod
    def from_h(cls, h) -> "TannerGraph":
        h = sp.csr_matrix(h)
        h.sort_indices()
        col_idx = h.indices.astype(np.int64)
        order = np.argsort(col_idx, kind="stable")
        counts = np.bincount(col_idx, minlength=h.shape[1])
        col_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        return cls(h.shape[1], h.indptr.astype(np.int64), col_idx, col_ptr,
                   order.astype(np.int64))


@numba.njit(cache=True, nogil=True)
def _syndrome_ok(row_ptr, col_idx, hard):
    for r in range(row_ptr.shape[0] - 1):
        acc = 0
        for e in range(row_ptr[r], row_ptr[r + 1]):
            acc ^= hard[col_idx[e]]
        if acc:
            return False
    return True


@numba.njit(cache=True, nogil=True)
def _decode(row_ptr, col_idx, col_ptr, col_edges, llr, max_iter, early_stop):
    n = llr.shape[0]
    m = row_ptr.shape[0] - 1
    n_edges = col_idx.shape[0]
    ch = np.empty(n)
    for j in range(n):
        v = llr[j]
        ch[j] = LLR_CLIP if v > LLR_CLIP else (-LLR_CLIP if v < -LLR_CLIP else v)
    v2c = np.empty(n_edges)
    c2v = np.zeros(n_edges)
    for e in range(n_edges):
        v2c[e] = ch[col_idx[e]]
    post = ch.copy()
    hard = np.zeros(n, dtype=np.uint8)
    for j in range(n):
        hard[j] = 1 if post[j] < 0 else 0
    ok = _syndrome_ok(row_ptr, col_idx, hard)
    if ok and early_stop:
        return hard, post, 0, True
    t = np.empty(n_edges)
    it = 0
    for it in range(1, max_iter + 1):
        # flat loops over all edges vectorize; the row sweeps only multiply
        for e in range(n_edges):
            # tanh(x/2) through a single exp of -|x|
            x = v2c[e]
            z = np.exp(-abs(x))
            t[e] = math.copysign((1.0 - z) / (1.0 + z), x)
        for r in range(m):
            start, stop = row_ptr[r], row_ptr[r + 1]
            # leave-one-out products via prefix/suffix sweeps
            prefix = 1.0
            for e in range(start, stop):
                c2v[e] = prefix
                prefix *= t[e]
            suffix = 1.0
            for e in range(stop - 1, start - 1, -1):
                c2v[e] *= suffix
                suffix *= t[e]
        for e in range(n_edges):
            p = min(max(c2v[e], -_TANH_MAX), _TANH_MAX)
            c2v[e] = np.log((1.0 + p) / (1.0 - p))
        for j in range(n):
            total = ch[j]
            for k in range(col_ptr[j], col_ptr[j + 1]):
                total += c2v[col_edges[k]]
            post[j] = total
            hard[j] = 1 if total < 0 else 0
            for k in range(col_ptr[j], col_ptr[j + 1]):
                e = col_edges[k]
                v2c[e] = total - c2v[e]
        ok = _syndrome_ok(row_ptr, col_idx, hard)
        if ok and early_stop:
            break
    return hard, post, it, ok


def bp_decode(graph: TannerGraph, llr: np.ndarray, max_iter: int = 100,
              early_stop: bool = True) -> DecodeResult:
    """Decode channel LLRs (length ``n``; punctured positions 0)."""
    llr = np.ascontiguousarray(llr, dtype=float)
    if llr.shape != (graph.n,):
        raise ValueError(f"expected {graph.n} LLRs, got {llr.shape}")
    bits, post, iters, ok = _decode(graph.row_ptr, graph.col_idx, graph.col_ptr,
                                    graph.col_edges, llr, max_iter, early_stop)
    return DecodeResult(bits, int(iters), bool(ok), post)
