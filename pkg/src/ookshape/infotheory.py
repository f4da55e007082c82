"""Rate and capacity computations for on-off keying over AWGN.

All mutual informations are in bits. The average power is normalized to
one, so ``E_s/N_0 = 1 / (2 sigma^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp, roots_hermite

GH_NODES = 256
P1_MIN = 1e-4
P1_MAX = 0.5
TIE_TOL_DB = 0.01
SNR_BRACKET_DB = (-30.0, 30.0)


@lru_cache(maxsize=4)
def _hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = roots_hermite(n)
    return t * math.sqrt(2.0), w / math.sqrt(math.pi)


def db_to_sigma2(es_n0_db: float) -> float:
    return 1.0 / (2.0 * 10.0 ** (es_n0_db / 10.0))


def sigma2_to_db(sigma2: float) -> float:
    return 10.0 * math.log10(1.0 / (2.0 * sigma2))


def ebn0_to_esn0(eb_n0_db: float, rate_tx: float) -> float:
    return eb_n0_db + 10.0 * math.log10(rate_tx)


def esn0_to_ebn0(es_n0_db: float, rate_tx: float) -> float:
    return es_n0_db - 10.0 * math.log10(rate_tx)


@dataclass(frozen=True)
class OokInput:
    """Binary intensity input ``X in {0, amplitude}`` with ``P(X = amplitude) = p1``."""

    p1: float
    amplitude: float

    def __post_init__(self):
        if not 0.0 <= self.p1 <= 1.0:
            raise ValueError(f"p1={self.p1} outside [0, 1]")
        if self.amplitude < 0:
            raise ValueError(f"amplitude={self.amplitude} must be non-negative")

    @property
    def power(self) -> float:
        return self.amplitude**2 * self.p1


@dataclass(frozen=True)
class SnrPoint:
    es_n0_db: float
    sigma2: float

    @classmethod
    def from_db(cls, es_n0_db: float) -> "SnrPoint":
        return cls(float(es_n0_db), db_to_sigma2(es_n0_db))

    @classmethod
    def from_sigma2(cls, sigma2: float) -> "SnrPoint":
        if sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        return cls(sigma2_to_db(sigma2), float(sigma2))


@dataclass(frozen=True)
class TsConfig:
    """Operating point of the time-sharing scheme.

    A fraction ``rate_code`` of the channel uses carries shaped systematic
    bits (pulse probability ``p1``, amplitude ``amp_shaped``); the rest
    carries uniform parity bits with amplitude ``amp_uniform``.
    """

    case_id: int
    rate_code: float
    rate_tx: float
    p1: float
    amp_shaped: float
    amp_uniform: float

    def __post_init__(self):
        if self.case_id not in (1, 2):
            raise ValueError(f"case_id must be 1 or 2, got {self.case_id}")
        if not 0.0 < self.rate_code <= 1.0:
            raise ValueError(f"rate_code={self.rate_code} outside (0, 1]")
        if self.rate_tx > self.rate_code + 1e-12:
            raise ValueError("rate_tx cannot exceed rate_code")
        if not 0.0 <= self.p1 <= 1.0:
            raise ValueError(f"p1={self.p1} outside [0, 1]")
        if self.case_id == 1 and not math.isclose(
            self.amp_shaped, self.amp_uniform, rel_tol=1e-12
        ):
            raise ValueError("case 1 requires amp_shaped == amp_uniform")
        if abs(self.power - 1.0) > 1e-9:
            raise ValueError(f"power constraint violated: {self.power!r} != 1")

    @property
    def power(self) -> float:
        rc = self.rate_code
        return rc * self.p1 * self.amp_shaped**2 + (1 - rc) * 0.5 * self.amp_uniform**2

    @classmethod
    def case1(cls, rate_code: float, p1: float, rate_tx: float | None = None) -> "TsConfig":
        amp = case1_amplitude(rate_code, p1)
        if rate_tx is None:
            rate_tx = rate_code * binary_entropy(p1)
        return cls(1, rate_code, rate_tx, p1, amp, amp)

    @classmethod
    def case2(
        cls, rate_code: float, p1: float, amp_shaped: float, rate_tx: float | None = None
    ) -> "TsConfig":
        amp_u = case2_uniform_amplitude(rate_code, p1, amp_shaped)
        if rate_tx is None:
            rate_tx = rate_code * binary_entropy(p1)
        return cls(2, rate_code, rate_tx, p1, amp_shaped, amp_u)


# ---------------------------------------------------------------------------
# entropy


def binary_entropy(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def binary_entropy_inv(h: float) -> float:
    """Return the ``p`` in ``[0, 0.5]`` with ``binary_entropy(p) == h`` (bisection)."""
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"h={h} outside [0, 1]")
    if h == 0.0:
        return 0.0
    if h == 1.0:
        return 0.5
    lo, hi = 0.0, 0.5
    while hi - lo > 1e-15:
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < h:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# mutual information


def mi_ook(inp: OokInput, sigma2: float) -> float:
    """I(X;Y) for Y = X + N, N ~ N(0, sigma2), by Gauss-Hermite quadrature."""
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    p1 = inp.p1
    if p1 in (0.0, 1.0) or inp.amplitude == 0.0:
        return 0.0
    x, w = _hermite(GH_NODES)
    s = math.sqrt(sigma2)
    amp = inp.amplitude
    log_prior = np.array([math.log1p(-p1), math.log(p1)])
    levels = np.array([0.0, amp])
    total = 0.0
    for k, (prior, level) in enumerate(zip((1 - p1, p1), levels)):
        y = level + s * x
        # log p(y|x') - log p(y|x) for both hypotheses
        d = ((y[:, None] - level) ** 2 - (y[:, None] - levels[None, :]) ** 2) / (2 * sigma2)
        lse = logsumexp(d + log_prior[None, :], axis=1)
        total += prior * float(np.dot(w, -lse))
    return max(total / math.log(2), 0.0)


def cond_entropy_ook(inp: OokInput, sigma2: float) -> float:
    h = binary_entropy(inp.p1)
    return min(max(h - mi_ook(inp, sigma2), 0.0), h)


def uniform_ook_rate(snr: SnrPoint) -> float:
    return mi_ook(OokInput(0.5, math.sqrt(2.0)), snr.sigma2)


def _maximize(f, lo: float, hi: float, xtol: float = 1e-7) -> tuple[float, float]:
    # bounded Brent never samples the endpoints; check them explicitly
    res = minimize_scalar(lambda x: -f(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": xtol})
    best_x, best_f = float(res.x), float(-res.fun)
    for x in (lo, hi):
        fx = f(x)
        if fx > best_f:
            best_x, best_f = x, fx
    return best_f, best_x


def ook_capacity(snr: SnrPoint) -> tuple[float, float, float]:
    """Maximize I(X;Y) over p1 with the power constraint active.

    Returns ``(capacity, p1_opt, amplitude_opt)``.
    """
    cap, p1 = _maximize(lambda p: mi_ook(OokInput(p, math.sqrt(1 / p)), snr.sigma2),
                        P1_MIN, P1_MAX)
    return cap, p1, math.sqrt(1 / p1)


# ---------------------------------------------------------------------------
# time sharing


def case1_amplitude(rate_code: float, p1: float) -> float:
    return 1.0 / math.sqrt(rate_code * p1 + (1 - rate_code) / 2)


def case2_uniform_amplitude(rate_code: float, p1: float, amp_shaped: float) -> float:
    if rate_code >= 1.0:
        return 0.0
    residual = 1.0 - rate_code * p1 * amp_shaped**2
    if residual < -1e-12:
        raise ValueError("shaped amplitude exceeds the power budget")
    return math.sqrt(max(residual, 0.0) / ((1 - rate_code) / 2))


def ts_rate(config: TsConfig, snr: SnrPoint) -> float:
    """R_C * I(X_S;Y_S) + (1 - R_C) * I(X_U;Y_U)."""
    if abs(config.power - 1.0) > 1e-9:
        raise ValueError("infeasible configuration")
    rc = config.rate_code
    rate = rc * mi_ook(OokInput(config.p1, config.amp_shaped), snr.sigma2)
    if rc < 1.0:
        rate += (1 - rc) * mi_ook(OokInput(0.5, config.amp_uniform), snr.sigma2)
    return rate


def _ts2_rate(rate_code: float, p1: float, amp_shaped: float, sigma2: float) -> float:
    amp_u = case2_uniform_amplitude(rate_code, p1, amp_shaped)
    rate = rate_code * mi_ook(OokInput(p1, amp_shaped), sigma2)
    if rate_code < 1.0:
        rate += (1 - rate_code) * mi_ook(OokInput(0.5, amp_u), sigma2)
    return rate


def best_shaped_amplitude(rate_code: float, p1: float, snr: SnrPoint) -> tuple[float, float]:
    """Inner case-2 problem: maximize over A_S for fixed p1. Returns (rate, A_S)."""
    amp_max = math.sqrt(1.0 / (rate_code * p1))
    if rate_code >= 1.0:
        return _ts2_rate(rate_code, p1, amp_max, snr.sigma2), amp_max
    return _maximize(lambda a: _ts2_rate(rate_code, p1, a, snr.sigma2), 0.0, amp_max)


def optimize_ts_case1(rate_code: float, snr: SnrPoint) -> tuple[float, TsConfig]:
    """Best case-1 rate over p1. Returns ``(rate, config)``."""
    rate, p1 = _maximize(lambda p: ts_rate(TsConfig.case1(rate_code, p), snr), P1_MIN, P1_MAX)
    return rate, TsConfig.case1(rate_code, p1)


def optimize_ts_case2(rate_code: float, snr: SnrPoint) -> tuple[float, TsConfig]:
    """Best case-2 rate over (p1, A_S); A_U follows from the power constraint."""
    if rate_code >= 1.0:
        return optimize_ts_case1(rate_code, snr)
    rate, p1 = _maximize(lambda p: best_shaped_amplitude(rate_code, p, snr)[0], P1_MIN, P1_MAX)
    _, amp_s = best_shaped_amplitude(rate_code, p1, snr)
    return rate, TsConfig.case2(rate_code, p1, amp_s)


class OperatingPoint(NamedTuple):
    es_n0_db: float
    config: TsConfig


def _rate_at(rate_code: float, p1: float, case_id: int, es_n0_db: float) -> tuple[float, TsConfig]:
    snr = SnrPoint.from_db(es_n0_db)
    if case_id == 1:
        cfg = TsConfig.case1(rate_code, p1)
        return ts_rate(cfg, snr), cfg
    rate, amp_s = best_shaped_amplitude(rate_code, p1, snr)
    return rate, TsConfig.case2(rate_code, p1, amp_s)


def operating_point(rate_code: float, rate_tx: float, case_id: int,
                    tol_db: float = 1e-3) -> OperatingPoint:
    """Smallest E_s/N_0 with R_TS >= R_TX for a fixed code rate.

    p1 is pinned by ``R_TX = R_C * H2(p1)``. For case 2 the shaped amplitude
    is re-optimized at each trial SNR; the returned config holds the
    amplitudes at the final SNR.
    """
    if case_id not in (1, 2):
        raise ValueError("case_id must be 1 or 2")
    if rate_tx > rate_code + 1e-12:
        raise ValueError(f"rate_tx={rate_tx} exceeds rate_code={rate_code}")
    p1 = binary_entropy_inv(min(rate_tx / rate_code, 1.0))
    lo, hi = SNR_BRACKET_DB
    if _rate_at(rate_code, p1, case_id, hi)[0] < rate_tx:
        raise ValueError("rate not reachable inside the SNR bracket")
    while hi - lo > tol_db:
        mid = 0.5 * (lo + hi)
        if _rate_at(rate_code, p1, case_id, mid)[0] >= rate_tx:
            hi = mid
        else:
            lo = mid
    _, cfg = _rate_at(rate_code, p1, case_id, hi)
    cfg = TsConfig(cfg.case_id, cfg.rate_code, rate_tx, cfg.p1, cfg.amp_shaped, cfg.amp_uniform)
    return OperatingPoint(hi, cfg)


def required_snr(rate_code: float, rate_tx: float, case_id: int, tol_db: float = 1e-3) -> float:
    return operating_point(rate_code, rate_tx, case_id, tol_db).es_n0_db


def select_code_rate(rate_tx: float, rate_set: Iterable[float], case_id: int,
                     tie_tol_db: float = TIE_TOL_DB) -> float:
    """Code rate from ``rate_set`` needing the smallest E_s/N_0.

    Rates within ``tie_tol_db`` of the minimum are treated as equal and the
    largest of them wins.
    """
    req = {rc: required_snr(rc, rate_tx, case_id) for rc in rate_set if rc >= rate_tx - 1e-12}
    if not req:
        raise ValueError(f"no code rate >= rate_tx={rate_tx}")
    best = min(req.values())
    return max(rc for rc, snr in req.items() if snr <= best + tie_tol_db)
