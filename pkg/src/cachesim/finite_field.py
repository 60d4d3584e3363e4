"""Zero-forcing delivery with XOR combinations (finite field).

Groups and beamformers are those of the complex-field scheme, but each
subset S sends a single XOR of its members' mini-files and all subsets of a
group go out at once. A user then resolves its v streams as a multiple
access channel, so its rate is capped by both the sum rate and v times the
weakest stream.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .channel import BeamCache
from .codec import xor_codec, xor_decode, xor_encode  # noqa: F401  (re-exported)
from .complex_field import Block, build_blocks, symrate_zf
from .model import CacheState, RateResult, SystemConfig, log_rate, subsets_of, validate_demands
from .placement import MiniFileIndexTable, MiniFiles


def deliver_round_finite(s: int, cache: CacheState, d: Sequence[int], H: np.ndarray, config: SystemConfig,
                         index_table: MiniFileIndexTable, minifiles: MiniFiles | None = None,
                         beams: BeamCache | None = None) -> list[Block]:
    d = validate_demands(d, cache.K, cache.N)
    minifiles = minifiles or MiniFiles(cache, config.L)
    return build_blocks(s, cache, d, H, index_table, minifiles, beams or BeamCache(H), "finite")


def mac_effective_rate(B: Sequence[int], k: int, s: int, H: np.ndarray, p_max, base: float = 2.0,
                       beams: BeamCache | None = None):
    """min(sum rate, v * weakest single-stream rate) for user k in group B."""
    B = tuple(B)
    if k not in B:
        raise ValueError(f"user {k} is not in group {B}")
    beams = beams or BeamCache(H)
    n_sub = math.comb(len(B), s)
    v = math.comb(len(B) - 1, s - 1)
    g = np.array([abs(np.vdot(H[:, k], beams.bfv(B, S))) ** 2 for S in subsets_of(B, s) if k in S])
    p = np.asarray(p_max, dtype=float)
    r_sum = log_rate(p * g.sum() / n_sub, base)
    r_each = v * log_rate(p * g.min() / n_sub, base)
    return np.minimum(r_sum, r_each)


def rate_finite_common(B: Sequence[int], s: int, H: np.ndarray, p_max, base: float = 2.0,
                       beams: BeamCache | None = None):
    beams = beams or BeamCache(H)
    return np.min([mac_effective_rate(B, k, s, H, p_max, base, beams) for k in B], axis=0)


def symrate_finite(cache: CacheState, d: Sequence[int], H: np.ndarray, config: SystemConfig, *,
                   masses: str = "empirical", p_max=None, base: float = 2.0,
                   beams: BeamCache | None = None) -> RateResult:
    beams = beams or BeamCache(H)

    def common(B, s, p):
        return rate_finite_common(B, s, H, p, base, beams)

    return symrate_zf(cache, d, H, config, common, kind="finite", masses=masses, p_max=p_max,
                      base=base, beams=beams)
