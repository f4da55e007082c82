"""Constant composition distribution matcher via combinadic indexing.

``k_prime`` uniform bits are read as an integer index (MSB first) into the
lexicographic list of all length-``k`` binary words with exactly ``n1`` ones;
the word at that index is the matcher output. Words are ordered as binary
numbers with position 0 most significant, so index 0 is ``0...01...1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .infotheory import binary_entropy


class CompositionError(ValueError):
    pass


@dataclass(frozen=True)
class Composition:
    k: int
    n1: int

    def __post_init__(self):
        if self.k < 1 or not 0 <= self.n1 <= self.k:
            raise ValueError(f"invalid composition k={self.k}, n1={self.n1}")

    @property
    def size(self) -> int:
        return math.comb(self.k, self.n1)

    @property
    def k_prime(self) -> int:
        return self.size.bit_length() - 1

    @property
    def rate(self) -> float:
        return self.k_prime / self.k

    @property
    def p1(self) -> float:
        return self.n1 / self.k


def make_composition(k: int, p1: float) -> Composition:
    if k < 1:
        raise ValueError("k must be positive")
    if not 0.0 <= p1 <= 1.0:
        raise ValueError("p1 must lie in [0, 1]")
    n1 = int(math.floor(k * p1 + 0.5))  # ties toward more ones
    return Composition(k, n1)


def _bits_to_int(bits: np.ndarray) -> int:
    if bits.size == 0:
        return 0
    return int("".join("1" if b else "0" for b in bits.tolist()), 2)


def dm_match(bits, comp: Composition) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape != (comp.k_prime,):
        raise ValueError(f"expected {comp.k_prime} input bits, got {bits.shape}")
    index = _bits_to_int(bits)
    k, ones = comp.k, comp.n1
    out = np.zeros(k, dtype=np.uint8)
    # words with a 0 at the current position: C(remaining - 1, ones)
    zeros_first = math.comb(k - 1, ones) if k > 0 else 0
    for pos in range(k):
        rem = k - pos  # positions left including this one
        if ones == 0:
            break
        if ones == rem:
            out[pos:] = 1
            break
        if index < zeros_first:
            # C(rem - 2, ones) = C(rem - 1, ones) * (rem - 1 - ones) / (rem - 1)
            zeros_first = zeros_first * (rem - 1 - ones) // (rem - 1)
        else:
            out[pos] = 1
            index -= zeros_first
            # C(rem - 2, ones - 1) = C(rem - 1, ones) * ones / (rem - 1)
            zeros_first = zeros_first * ones // (rem - 1)
            ones -= 1
    return out


def dm_dematch(shaped, comp: Composition) -> np.ndarray:
    shaped = np.asarray(shaped, dtype=np.uint8)
    if shaped.shape != (comp.k,):
        raise ValueError(f"expected {comp.k} shaped bits, got {shaped.shape}")
    if int(shaped.sum()) != comp.n1:
        raise CompositionError(f"weight {int(shaped.sum())} != {comp.n1}")
    k, ones = comp.k, comp.n1
    index = 0
    zeros_first = math.comb(k - 1, ones)
    for pos in range(k):
        rem = k - pos
        if ones == 0 or ones == rem:
            break
        if shaped[pos]:
            index += zeros_first
            zeros_first = zeros_first * ones // (rem - 1)
            ones -= 1
        else:
            zeros_first = zeros_first * (rem - 1 - ones) // (rem - 1)
    if index >> comp.k_prime:
        raise CompositionError("word lies outside the matcher's image")
    kp = comp.k_prime
    if kp == 0:
        return np.zeros(0, dtype=np.uint8)
    return np.frombuffer(format(index, f"0{kp}b").encode(), dtype=np.uint8) - ord("0")


def rate_penalty(comp: Composition) -> float:
    """Gap between the composition entropy and the matching rate, in bits/symbol."""
    return binary_entropy(comp.p1) - comp.rate
