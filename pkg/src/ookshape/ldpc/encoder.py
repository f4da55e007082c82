"""Systematic encoding from a parity-check matrix by GF(2) elimination."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp


class RankDeficient(ValueError):
    def __init__(self, rank: int, rows: int):
        super().__init__(f"parity-check matrix has rank {rank} < {rows} rows")
        self.rank = rank
        self.rows = rows


@dataclass(frozen=True)
class SystematicEncoder:
    """``c[info] = u`` and ``c[parity] = A u (mod 2)``.

    Equivalently ``G = (I  A^T)`` after the column permutation
    ``info + parity``.
    """

    info_positions: np.ndarray
    parity_positions: np.ndarray
    parity_map: np.ndarray  # A, shape (m, k)

    @property
    def k(self) -> int:
        return self.info_positions.size

    @property
    def n(self) -> int:
        return self.info_positions.size + self.parity_positions.size

    def encode(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.uint8)
        if u.shape[-1] != self.k:
            raise ValueError(f"expected {self.k} information bits, got {u.shape[-1]}")
        c = np.zeros(u.shape[:-1] + (self.n,), dtype=np.uint8)
        c[..., self.info_positions] = u
        c[..., self.parity_positions] = (u.astype(np.int32) @ self.parity_map.T) & 1
        return c

    def generator(self) -> np.ndarray:
        return self.encode(np.eye(self.k, dtype=np.uint8))


def gf2_eliminate(h: np.ndarray, column_order: Sequence[int]) -> tuple[np.ndarray, list[int]]:
    """Reduce ``h`` (copied) so pivot columns become unit vectors.

    Pivots are searched in ``column_order``. Returns the reduced matrix with
    row ``r`` holding the 1 of the ``r``-th pivot, and the pivot columns.
    """
    h = np.asarray(h, dtype=np.uint8)
    m, n = h.shape
    words = -(-n // 64)
    padded = np.zeros((m, words * 64), dtype=np.uint8)
    padded[:, :n] = h
    a = np.packbits(padded, axis=1, bitorder="little").view(np.uint64)
    pivots: list[int] = []
    r = 0
    for col in column_order:
        if r == m:
            break
        w, bit = divmod(int(col), 64)
        mask = np.uint64(1 << bit)
        column = (a[:, w] & mask) != 0
        hits = np.flatnonzero(column[r:])
        if hits.size == 0:
            continue
        p = r + hits[0]
        if p != r:
            a[[r, p]] = a[[p, r]]
            column[[r, p]] = column[[p, r]]
        column[r] = False
        others = np.flatnonzero(column)
        a[others] ^= a[r]
        pivots.append(int(col))
        r += 1
    out = np.unpackbits(a[:r].view(np.uint8), axis=1, bitorder="little")[:, :n]
    return out.astype(bool), pivots


def gf2_rank(h) -> int:
    dense = h.toarray() if sp.issparse(h) else np.asarray(h)
    return len(gf2_eliminate(dense & 1, range(dense.shape[1]))[1])


def build_systematic_encoder(h, parity_preference: Sequence[int] | None = None
                             ) -> SystematicEncoder:
    """Build an encoder; parity positions are taken from ``parity_preference`` first.

    Columns not listed are tried afterwards, last column first.
    """
    dense = h.toarray() if sp.issparse(h) else np.asarray(h)
    m, n = dense.shape
    order = list(parity_preference or [])
    seen = set(order)
    order += [c for c in range(n - 1, -1, -1) if c not in seen]
    reduced, pivots = gf2_eliminate(dense, order)
    if len(pivots) < m:
        raise RankDeficient(len(pivots), m)
    parity = np.asarray(pivots)
    info = np.setdiff1d(np.arange(n), parity)
    return SystematicEncoder(info, parity, reduced[:, info].astype(np.uint8))
