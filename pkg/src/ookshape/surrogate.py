"""Uniform-input surrogate for the shaped OOK channel.

The prior on the shaped bits makes their LLRs inconsistent, so the
consistent-Gaussian EXIT machinery cannot be applied to them directly.
The shaped channel is therefore replaced by an OOK channel with the same
amplitude, uniform input, and the noise variance that reproduces the
shaped channel's conditional entropy H(X|Y).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .infotheory import OokInput, cond_entropy_ook

BRACKET = (1e-6, 1e6)
MAX_ITER = 200
ENTROPY_TOL = 1e-8


@dataclass(frozen=True)
class SurrogateChannel:
    sigma2_tilde: float
    amp: float
    cond_entropy: float
    degenerate: bool = False

    @property
    def llr_variance(self) -> float:
        """Variance of the consistent channel LLR, ``amp^2 / sigma2_tilde``."""
        return self.amp**2 / self.sigma2_tilde


def _uniform_cond_entropy(amp: float, sigma2: float) -> float:
    return cond_entropy_ook(OokInput(0.5, amp), sigma2)


@lru_cache(maxsize=4096)
def match_surrogate(p1: float, amp_shaped: float, sigma2_shaped: float) -> SurrogateChannel:
    """Find sigma2_tilde with H(X~|Y~) = H(X_S|Y_S) by bisection in log-variance."""
    if not 0.0 < p1 < 1.0:
        raise ValueError(f"p1={p1} must lie in (0, 1)")
    if not sigma2_shaped > 0:
        raise ValueError("sigma2_shaped must be positive")
    if amp_shaped <= 0:
        raise ValueError("amp_shaped must be positive")
    target = cond_entropy_ook(OokInput(p1, amp_shaped), sigma2_shaped)
    if target >= 1.0:
        raise ValueError("target conditional entropy must be below 1 bit")

    a2 = amp_shaped**2
    lo, hi = math.log(BRACKET[0] * a2), math.log(BRACKET[1] * a2)
    h_lo = _uniform_cond_entropy(amp_shaped, math.exp(lo))
    if target <= h_lo:
        return SurrogateChannel(math.exp(lo), amp_shaped, target, degenerate=True)
    if target >= _uniform_cond_entropy(amp_shaped, math.exp(hi)):
        return SurrogateChannel(math.exp(hi), amp_shaped, target, degenerate=True)

    # H(X|Y) of the uniform channel is strictly increasing in the noise variance
    for _ in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        h = _uniform_cond_entropy(amp_shaped, math.exp(mid))
        if abs(h - target) < 1e-13 or hi - lo < 1e-15:
            break
        if h < target:
            lo = mid
        else:
            hi = mid
    return SurrogateChannel(math.exp(mid), amp_shaped, target)
