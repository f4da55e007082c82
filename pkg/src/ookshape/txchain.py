"""Time-sharing transceiver: CCDM, systematic LDPC, dual OOK mappers, AWGN.

Bit 1 maps to the pulse. Transmitted frames are the shaped (systematic)
block followed by the uniform (parity) block; punctured bits are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .ccdm import Composition, CompositionError, dm_dematch, dm_match, make_composition
from .infotheory import TsConfig
from .ldpc import LiftedCode, RankDeficient, SystematicEncoder, TannerGraph, bp_decode
from .ldpc import build_systematic_encoder, lift
from .protograph import BaseMatrix, PUNCTURED, SHAPED, column_classes


class FrameStatus(str, Enum):
    OK = "ok"
    DECODE_FAIL = "decode-fail"
    COMPOSITION_FAIL = "composition-fail"


def parity_preference(code: LiftedCode, rate_code: float) -> list[int]:
    """Column order for pivot search: punctured, then uniform, then shaped columns.

    Within each class the last bit comes first, so the systematic part
    lands on the shaped columns whenever the parity submatrix allows it.
    """
    tags = column_classes(code.base, rate_code)
    q = code.q
    order = []
    for cls in (PUNCTURED, 1, SHAPED):
        for j in np.flatnonzero(tags == cls)[::-1]:
            order.extend(range((j + 1) * q - 1, j * q - 1, -1))
    return order


@dataclass(frozen=True)
class FramePlan:
    code: LiftedCode
    encoder: SystematicEncoder
    graph: TannerGraph
    ts: TsConfig
    comp: Composition | None  # None: systematic bits are the data bits, no matcher

    @property
    def k_prime(self) -> int:
        return self.encoder.k if self.comp is None else self.comp.k_prime

    @property
    def shaped_positions(self) -> np.ndarray:
        return self.encoder.info_positions

    @property
    def uniform_positions(self) -> np.ndarray:
        parity = np.sort(self.encoder.parity_positions)
        return np.setdiff1d(parity, self.code.punctured_bits)

    @property
    def punctured_positions(self) -> np.ndarray:
        return self.code.punctured_bits

    @property
    def n_tx(self) -> int:
        return self.shaped_positions.size + self.uniform_positions.size

    @property
    def prior_llr(self) -> float:
        """Prior log(P(0)/P(1)) on shaped bits; parity bits carry zero prior."""
        p1 = self.ts.p1
        return math.log((1 - p1) / p1)

    @property
    def realized_rate_tx(self) -> float:
        return self.k_prime / self.n_tx

    def shaped_mismatch(self) -> int:
        """Number of systematic bits outside the shaped protograph columns."""
        tags = column_classes(self.code.base, self.ts.rate_code)
        return int(np.sum(tags[self.shaped_positions // self.code.q] != SHAPED))


def make_plan(code: LiftedCode, ts: TsConfig, encoder: SystematicEncoder | None = None,
              matcher: bool = True) -> FramePlan:
    """Bundle code, encoder and matcher. ``matcher=False`` sends the data bits
    straight into the encoder, which only makes sense for p1 = 1/2."""
    if not matcher and ts.p1 != 0.5:
        raise ValueError("the matcher can only be bypassed for uniform signaling")
    if abs(code.rate_code - ts.rate_code) > 1e-6:
        raise ValueError(f"code rate {code.rate_code:.6f} != config rate {ts.rate_code:.6f}")
    if encoder is None:
        encoder = build_systematic_encoder(code.h, parity_preference(code, ts.rate_code))
    punct = set(code.punctured_bits.tolist())
    if punct & set(encoder.info_positions.tolist()):
        raise ValueError("punctured bits ended up in the systematic part")
    comp = make_composition(encoder.k, ts.p1) if matcher else None
    return FramePlan(code, encoder, TannerGraph.from_h(code.h), ts, comp)


def plan_for(base: BaseMatrix, q: int, ts: TsConfig, seed: int = 0, max_tries: int = 20,
             matcher: bool = True) -> FramePlan:
    """Lift and build a plan, moving to the next lift seed on rank deficiency."""
    last = None
    for s in range(seed, seed + max_tries):
        code = lift(base, q, s)
        try:
            return make_plan(code, ts, matcher=matcher)
        except RankDeficient as exc:
            last = exc
    raise last


def transmit(info_bits, plan: FramePlan) -> tuple[np.ndarray, np.ndarray]:
    """Map ``k_prime`` data bits to channel symbols. Returns ``(symbols, codeword)``."""
    info_bits = np.asarray(info_bits, dtype=np.uint8)
    if info_bits.shape != (plan.k_prime,):
        raise ValueError(f"expected {plan.k_prime} bits, got {info_bits.shape}")
    u = info_bits if plan.comp is None else dm_match(info_bits, plan.comp)
    c = plan.encoder.encode(u)
    x_s = c[plan.shaped_positions] * plan.ts.amp_shaped
    x_u = c[plan.uniform_positions] * plan.ts.amp_uniform
    return np.concatenate([x_s, x_u]).astype(float), c


def channel_awgn(symbols, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    if not sigma2 > 0:
        raise ValueError("sigma2 must be positive")
    symbols = np.asarray(symbols, dtype=float)
    return symbols + math.sqrt(sigma2) * rng.standard_normal(symbols.shape)


def _ook_llr(y, amp: float, sigma2: float) -> np.ndarray:
    # log p(y|0)/p(y|A)
    return -(amp / sigma2) * y + amp * amp / (2 * sigma2)


def demap(received, plan: FramePlan, sigma2: float) -> np.ndarray:
    """Full-length LLR vector (positive favours bit 0, punctured bits 0)."""
    received = np.asarray(received, dtype=float)
    if received.shape != (plan.n_tx,):
        raise ValueError(f"expected {plan.n_tx} received samples")
    k = plan.shaped_positions.size
    llr = np.zeros(plan.code.n_full)
    llr[plan.shaped_positions] = _ook_llr(received[:k], plan.ts.amp_shaped, sigma2) \
        + plan.prior_llr
    llr[plan.uniform_positions] = _ook_llr(received[k:], plan.ts.amp_uniform, sigma2)
    return llr


@dataclass(frozen=True)
class ReceiveResult:
    info_bits: np.ndarray | None
    status: FrameStatus
    iterations: int


def receive(received, plan: FramePlan, sigma2: float, max_iter: int = 100) -> ReceiveResult:
    llr = demap(received, plan, sigma2)
    res = bp_decode(plan.graph, llr, max_iter)
    u_hat = res.bits[plan.shaped_positions]
    status = FrameStatus.OK if res.converged else FrameStatus.DECODE_FAIL
    if plan.comp is None:
        return ReceiveResult(u_hat, status, res.iterations)
    try:
        bits = dm_dematch(u_hat, plan.comp)
    except CompositionError:
        return ReceiveResult(None, FrameStatus.COMPOSITION_FAIL, res.iterations)
    return ReceiveResult(bits, status, res.iterations)
