"""Quasi-cyclic lifting of protographs.

Each base entry ``b[i, j] = t`` becomes a sum of ``t`` distinct Q x Q
circulant permutation matrices. Shifts are placed one edge at a time, each
time picking the shift that closes the fewest length-4 cycles with the edges
already placed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from ..protograph import BaseMatrix, design_rate

MIN_Q = 8


@dataclass(frozen=True)
class LiftedCode:
    base: BaseMatrix
    q: int
    seed: int
    shifts: tuple[tuple[int, int, tuple[int, ...]], ...]  # (i, j, circulant shifts)

    @cached_property
    def h(self) -> sp.csr_matrix:
        return expand(self.base.shape, self.q, self.shifts)

    @property
    def m(self) -> int:
        return self.base.shape[0] * self.q

    @property
    def n_full(self) -> int:
        return self.base.shape[1] * self.q

    @property
    def punctured_bits(self) -> np.ndarray:
        cols = sorted(self.base.punctured)
        return np.concatenate([np.arange(j * self.q, (j + 1) * self.q) for j in cols]) \
            if cols else np.zeros(0, dtype=np.int64)

    @property
    def n_tx(self) -> int:
        return self.n_full - self.punctured_bits.size

    @property
    def rate_code(self) -> float:
        return (self.n_full - self.m) / self.n_tx

    def shift_table(self) -> dict[tuple[int, int], tuple[int, ...]]:
        return {(i, j): s for i, j, s in self.shifts}

    def to_json(self) -> str:
        return json.dumps({
            "base": self.base.to_text(),
            "q": self.q,
            "seed": self.seed,
            "shifts": [[i, j, list(s)] for i, j, s in self.shifts],
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "LiftedCode":
        d = json.loads(text)
        shifts = tuple((int(i), int(j), tuple(int(v) for v in s)) for i, j, s in d["shifts"])
        return cls(BaseMatrix.from_text(d["base"]), int(d["q"]), int(d["seed"]), shifts)


def expand(shape: tuple[int, int], q: int, shifts) -> sp.csr_matrix:
    rows, cols = [], []
    r = np.arange(q)
    for i, j, ss in shifts:
        for s in ss:
            rows.append(i * q + r)
            cols.append(j * q + (r + s) % q)
    m, n = shape
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    h = sp.csr_matrix((np.ones(rows.size, dtype=np.uint8), (rows, cols)), shape=(m * q, n * q))
    h.sum_duplicates()
    if h.data.max() > 1:
        raise AssertionError("overlapping circulants")
    return h


def _cycle_histogram(i: int, j: int, placed: dict, q: int, m: int, n: int) -> np.ndarray:
    """Count, per candidate shift x for a new edge in cell (i, j), the 4-cycles it closes.

    A base-level 4-cycle (i,j,x) -> (i2,j,b) -> (i2,j2,c) -> (i,j2,d) lifts to
    cycles iff x - b + c - d = 0 (mod q); consecutive edges must differ.
    """
    hist = np.zeros(q, dtype=np.int64)
    own = placed.get((i, j), [])
    # x used twice: 2x = b + d with b, d in the same cell
    xs = np.arange(q)
    for b in own:
        for d in own:
            hist += (2 * xs - b - d) % q == 0
    for i2 in range(m):
        col_cell = placed.get((i2, j), [])
        for kb, b in enumerate(col_cell):
            for j2 in range(n):
                row2 = placed.get((i2, j2), [])
                row1 = placed.get((i, j2), [])
                for kc, c in enumerate(row2):
                    if j2 == j and kc == kb:
                        continue
                    for kd, d in enumerate(row1):
                        if i2 == i and kd == kc:
                            continue
                        hist[(b - c + d) % q] += 1
    return hist


def lift(b: BaseMatrix, q: int, seed: int = 0, method: str = "greedy") -> LiftedCode:
    """Lift ``b`` by a factor ``q``. ``method`` is ``"greedy"`` or ``"random"``."""
    design_rate(b)
    if q < MIN_Q:
        raise ValueError(f"lifting factor must be at least {MIN_Q}")
    arr = b.array
    if q < arr.max():
        raise ValueError("lifting factor too small for the parallel edges")
    m, n = arr.shape
    rng = np.random.default_rng(seed)
    placed: dict[tuple[int, int], list[int]] = {}
    for j in range(n):
        for i in range(m):
            for _ in range(arr[i, j]):
                cell = placed.setdefault((i, j), [])
                allowed = np.ones(q, dtype=bool)
                for s in cell:
                    allowed[s] = False
                    if q % 2 == 0:
                        allowed[(s + q // 2) % q] = False  # parallel pair closing a 4-cycle
                if not allowed.any():
                    allowed[:] = True
                    allowed[cell] = False
                if method == "random":
                    x = int(rng.choice(np.flatnonzero(allowed)))
                elif method == "greedy":
                    hist = _cycle_histogram(i, j, placed, q, m, n)
                    hist[~allowed] = np.iinfo(np.int64).max
                    best = np.flatnonzero(hist == hist.min())
                    x = int(rng.choice(best))
                else:
                    raise ValueError(f"unknown lifting method {method!r}")
                cell.append(x)
    shifts = tuple((i, j, tuple(placed[(i, j)])) for j in range(n) for i in range(m)
                   if (i, j) in placed)
    return LiftedCode(b, q, seed, shifts)


def count_4cycles(h: sp.spmatrix) -> int:
    """Exhaustive 4-cycle count: every pair of rows sharing t columns gives C(t, 2) cycles."""
    h = sp.csr_matrix(h, dtype=np.int64)
    overlap = sp.triu(h @ h.T, k=1).tocoo()
    t = overlap.data
    return int(np.sum(t * (t - 1) // 2))
