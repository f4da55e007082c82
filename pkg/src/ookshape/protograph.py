"""Protograph base matrices and protograph EXIT (P-EXIT) threshold analysis.

Variable nodes are split into three channel classes: shaped (analysed through
the uniform-input surrogate), uniform (parity symbols) and punctured (no
channel observation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numba
import numpy as np

from .infotheory import TsConfig, db_to_sigma2
from .jfunction import get_table, j_eval, j_inv_eval
from .surrogate import SurrogateChannel, match_surrogate

SHAPED, UNIFORM, PUNCTURED = 0, 1, 2
MAX_ENTRY = 4
MAX_ITER = 2000
CONVERGED_MI = 1.0 - 1e-6
STALL_TOL = 1e-12
THRESHOLD_TOL_DB = 0.01
THRESHOLD_BRACKET_DB = (-20.0, 20.0)


@dataclass(frozen=True)
class BaseMatrix:
    entries: tuple[tuple[int, ...], ...]
    punctured: frozenset[int] = frozenset()
    max_entry: int = MAX_ENTRY

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=np.int64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("base matrix must be a non-empty 2-D array")
        if arr.min() < 0:
            raise ValueError("base matrix entries must be non-negative")
        if arr.max() > self.max_entry:
            raise ValueError(f"entry {arr.max()} exceeds max_entry={self.max_entry}")
        if np.any(arr.sum(axis=0) == 0):
            raise ValueError("every variable node needs at least one edge")
        bad = [j for j in self.punctured if not 0 <= j < arr.shape[1]]
        if bad:
            raise ValueError(f"punctured columns out of range: {bad}")

    @classmethod
    def from_array(cls, arr, punctured=(), max_entry: int = MAX_ENTRY) -> "BaseMatrix":
        arr = np.asarray(arr, dtype=np.int64)
        return cls(tuple(map(tuple, arr.tolist())), frozenset(int(j) for j in punctured), max_entry)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.entries, dtype=np.int64)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    @property
    def column_degrees(self) -> np.ndarray:
        return self.array.sum(axis=0)

    @property
    def row_degrees(self) -> np.ndarray:
        return self.array.sum(axis=1)

    def to_text(self) -> str:
        m, n = self.shape
        lines = [f"{m} {n}", " ".join(str(j) for j in sorted(self.punctured))]
        lines += [" ".join(str(v) for v in row) for row in self.entries]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, max_entry: int = MAX_ENTRY) -> "BaseMatrix":
        lines = text.splitlines()
        if len(lines) < 2:
            raise ValueError("base-matrix text needs a size line and a punctured line")
        m, n = (int(v) for v in lines[0].split())
        punctured = [int(v) for v in lines[1].split()]
        rows = [[int(v) for v in line.split()] for line in lines[2:] if line.strip()]
        if len(rows) != m or any(len(r) != n for r in rows):
            raise ValueError(f"expected {m} rows of {n} integers")
        return cls.from_array(rows, punctured, max_entry)

    @classmethod
    def load(cls, path: str | Path) -> "BaseMatrix":
        return cls.from_text(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())


def builtin(name: str) -> BaseMatrix:
    """Bundled protographs: ``B1``, ``B2``, ``B3`` and the uniform-signaling ``U025``."""
    text = resources.files("ookshape").joinpath("data", f"{name}.txt").read_text()
    return BaseMatrix.from_text(text)


def design_rate(b: BaseMatrix) -> float:
    m, n = b.shape
    rate = (n - m) / (n - len(b.punctured))
    if not 0.0 < rate < 1.0:
        raise ValueError(f"design rate {rate} outside (0, 1)")
    return rate


def column_classes(b: BaseMatrix, rate_code: float) -> np.ndarray:
    """Tag columns: the first round(R_C * N_tx) transmitted columns are shaped."""
    n = b.shape[1]
    tags = np.full(n, UNIFORM, dtype=np.int64)
    transmitted = [j for j in range(n) if j not in b.punctured]
    n_shaped = int(math.floor(rate_code * len(transmitted) + 0.5))
    tags[transmitted[:n_shaped]] = SHAPED
    tags[sorted(b.punctured)] = PUNCTURED
    return tags


def class_noise_variances(ts: TsConfig, sigma2: float) -> tuple[float, float]:
    """Per-class noise variances normalized to unit signal power.

    sigma2_S = sigma2 / (A_S^2 p1) and sigma2_U = 2 sigma2 / A_U^2.
    """
    shaped_power = ts.amp_shaped**2 * ts.p1
    uniform_power = ts.amp_uniform**2 / 2
    s2_s = sigma2 / shaped_power if shaped_power > 0 else math.inf
    s2_u = sigma2 / uniform_power if uniform_power > 0 else math.inf
    return s2_s, s2_u


@dataclass(frozen=True)
class ChannelAssignment:
    tags: np.ndarray
    shaped: SurrogateChannel | None
    sigma2_uniform: float

    def llr_variances(self) -> np.ndarray:
        """Consistent channel-LLR variance per column (0 for punctured)."""
        out = np.zeros(self.tags.shape[0])
        if self.shaped is not None:
            out[self.tags == SHAPED] = self.shaped.llr_variance
        if math.isfinite(self.sigma2_uniform):
            # unit-power uniform OOK has amplitude sqrt(2)
            out[self.tags == UNIFORM] = 2.0 / self.sigma2_uniform
        return out


def assign_channels(b: BaseMatrix, ts: TsConfig, sigma2: float) -> ChannelAssignment:
    tags = column_classes(b, ts.rate_code)
    s2_s, s2_u = class_noise_variances(ts, sigma2)
    shaped = None
    if math.isfinite(s2_s) and 0.0 < ts.p1 < 1.0:
        # unit-power shaped OOK has amplitude 1/sqrt(p1)
        shaped = match_surrogate(ts.p1, 1.0 / math.sqrt(ts.p1), s2_s)
    return ChannelAssignment(tags, shaped, s2_u)


@dataclass
class PexitState:
    iev: np.ndarray   # VN -> CN extrinsic MI per (check, variable) cell
    iac: np.ndarray   # CN -> VN extrinsic MI
    app: np.ndarray   # a-posteriori MI per VN
    iterations: int
    converged: bool
    trajectory: np.ndarray | None = field(default=None, repr=False)


@numba.njit(cache=True, nogil=True)
def _pexit_kernel(b, ch2, max_iter, target, stall_tol, record,
                  step, coef, values, sigma_max, mi_sat):
    m, n = b.shape
    iev = np.zeros((m, n))
    iac = np.zeros((m, n))
    app = np.zeros(n)
    prev = np.zeros(n)
    traj = np.zeros((max_iter if record else 0, n))
    s2_ac = np.zeros((m, n))
    s2_ev = np.zeros((m, n))
    tot = np.zeros(max(m, n))
    iters = 0
    converged = False
    for it in range(max_iter):
        iters = it + 1
        # variable-node update
        for i in range(m):
            for j in range(n):
                if b[i, j] > 0:
                    s = j_inv_eval(iac[i, j], step, coef, values, sigma_max, mi_sat)
                    s2_ac[i, j] = s * s
        for j in range(n):
            acc = ch2[j]
            for i in range(m):
                acc += b[i, j] * s2_ac[i, j]
            tot[j] = acc
        for i in range(m):
            for j in range(n):
                if b[i, j] > 0:
                    v = tot[j] - s2_ac[i, j]
                    iev[i, j] = j_eval(math.sqrt(v if v > 0.0 else 0.0), step, coef, values)
        # check-node update
        for i in range(m):
            acc = 0.0
            for j in range(n):
                if b[i, j] > 0:
                    s = j_inv_eval(1.0 - iev[i, j], step, coef, values, sigma_max, mi_sat)
                    s2_ev[i, j] = s * s
                    acc += b[i, j] * s2_ev[i, j]
            tot[i] = acc
        for i in range(m):
            for j in range(n):
                if b[i, j] > 0:
                    v = tot[i] - s2_ev[i, j]
                    iac[i, j] = 1.0 - j_eval(math.sqrt(v if v > 0.0 else 0.0), step, coef, values)
        # a-posteriori MI
        done = True
        moved = 0.0
        for j in range(n):
            acc = ch2[j]
            for i in range(m):
                if b[i, j] > 0:
                    s = j_inv_eval(iac[i, j], step, coef, values, sigma_max, mi_sat)
                    acc += b[i, j] * s * s
            app[j] = j_eval(math.sqrt(acc), step, coef, values)
            if app[j] < target:
                done = False
            d = abs(app[j] - prev[j])
            if d > moved:
                moved = d
            prev[j] = app[j]
        if record:
            traj[it, :] = app
        if done:
            converged = True
            break
        if moved < stall_tol:
            break
    return app, iev, iac, iters, converged, traj[:iters] if record else traj


def pexit_run(b: BaseMatrix, assign: ChannelAssignment | np.ndarray, max_iter: int = MAX_ITER,
              record: bool = False) -> PexitState:
    """Flooding P-EXIT recursion.

    ``assign`` is a :class:`ChannelAssignment` or directly the per-column
    channel-LLR variances. Iteration stops when every a-posteriori MI reaches
    ``1 - 1e-6`` or the recursion stalls at a fixed point.
    """
    ch2 = assign.llr_variances() if isinstance(assign, ChannelAssignment) else assign
    ch2 = np.ascontiguousarray(ch2, dtype=float)
    if ch2.shape != (b.shape[1],):
        raise ValueError("channel assignment does not match the base matrix")
    tab = get_table()
    app, iev, iac, iters, converged, traj = _pexit_kernel(
        b.array, ch2, max_iter, CONVERGED_MI, STALL_TOL, record,
        tab.step, tab.coef, tab.values, tab.sigma_max, tab.mi_sat)
    return PexitState(iev, iac, app, int(iters), bool(converged), traj if record else None)


def converges(b: BaseMatrix, ts: TsConfig, es_n0_db: float, max_iter: int = MAX_ITER) -> bool:
    assign = assign_channels(b, ts, db_to_sigma2(es_n0_db))
    return pexit_run(b, assign, max_iter).converged


class NoConvergence(RuntimeError):
    pass


def threshold(b: BaseMatrix, ts: TsConfig, lo: float = THRESHOLD_BRACKET_DB[0],
              hi: float = THRESHOLD_BRACKET_DB[1], tol_db: float = THRESHOLD_TOL_DB,
              max_iter: int = MAX_ITER) -> float:
    """Lowest E_s/N_0 (dB) at which all a-posteriori MIs converge to one."""
    if abs(design_rate(b) - ts.rate_code) > 1e-6:
        raise ValueError(f"design rate {design_rate(b):.6f} != code rate {ts.rate_code:.6f}")
    if not converges(b, ts, hi, max_iter):
        raise NoConvergence(f"no convergence at {hi} dB")
    if converges(b, ts, lo, max_iter):
        return lo
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if converges(b, ts, mid, max_iter):
            hi = mid
        else:
            lo = mid
    return hi
