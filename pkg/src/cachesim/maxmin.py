"""Max-min fair multicast delivery.

Every nonempty user subset S gets one XOR codeword built from the pieces of
the requested files cached exactly at S minus the receiver. Centralized
placement yields the classic C(K, t+1) equal-length codewords.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import BeamCache
from .model import (CacheState, RateResult, UserSubset, all_subsets, enumerate_subsets,
                    exclusive_subfile, log_rate, validate_demands, without)


@dataclass(frozen=True, eq=False)
class Codeword:
    """One multicast: ``composition`` holds (user, file, symbol indices) pieces XORed together."""

    target: UserSubset
    composition: tuple[tuple[int, int, np.ndarray], ...]
    f: int

    @property
    def length(self) -> int:
        """Length in symbols; shorter pieces are zero-padded."""
        return max((len(idx) for _, _, idx in self.composition), default=0)

    @property
    def length_fraction(self) -> float:
        return self.length / self.f


def _codeword(cache: CacheState, d, S: UserSubset) -> Codeword:
    parts = tuple((k, d[k], exclusive_subfile(cache, d[k], without(S, k))) for k in S)
    return Codeword(S, parts, cache.f)


def build_codewords_decentralized(cache: CacheState, d: Sequence[int]) -> list[Codeword]:
    d = validate_demands(d, cache.K, cache.N)
    words = (_codeword(cache, d, S) for S in all_subsets(cache.K, nonempty=True))
    return [w for w in words if w.length > 0]


def build_codewords_centralized(cache: CacheState, d: Sequence[int]) -> list[Codeword]:
    if cache.scheme != "centralized" or cache.t is None:
        raise ValueError("centralized delivery needs a centralized placement")
    d = validate_demands(d, cache.K, cache.N)
    if cache.t >= cache.K:
        return []
    return [_codeword(cache, d, S) for S in enumerate_subsets(cache.K, cache.t + 1)]


def multicast_rate(S: Sequence[int], H: np.ndarray, p_max, base: float = 2.0, beams: BeamCache | None = None):
    """min_{k in S} log(1 + |h_k^H w_S|^2 P) with the max-min beamformer w_S."""
    beams = beams or BeamCache(H)
    return log_rate(np.asarray(p_max, dtype=float) * beams.multicast_gain(tuple(S)), base)


def duration(length: float, rate):
    """Time to push ``length`` files at ``rate``; infinite when the rate is zero."""
    rate = np.asarray(rate, dtype=float)
    if length == 0:
        return np.zeros_like(rate)
    with np.errstate(divide="ignore"):
        return np.where(rate > 0, length / np.where(rate > 0, rate, 1.0), np.inf)


def symrate_maxmin(codewords: Sequence[Codeword], H: np.ndarray, p_max, base: float = 2.0,
                   beams: BeamCache | None = None) -> RateResult:
    """R_sym = (sum_S L(U_S) / R(S))^-1; broadcasts over an array of p_max."""
    beams = beams or BeamCache(H)
    total = np.zeros_like(np.asarray(p_max, dtype=float))
    for w in codewords:
        total = total + duration(w.length_fraction, multicast_rate(w.target, H, p_max, base, beams))
    return RateResult.from_time(total)
