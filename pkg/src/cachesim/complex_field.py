"""Zero-forcing delivery with linear combinations in the complex field.

Round s serves groups B of size min(s+L-1, K). Inside a group each size-s
subset S gets a beamformer nulling B \\ S, so a user k of B only hears the
C(|B|-1, s-1) subsets containing it. Those subsets are resent as v unitary
combinations, which lets k separate its v fresh mini-files.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import BeamCache
from .maxmin import duration
from .model import (CacheState, RateResult, SystemConfig, UserSubset, enumerate_subsets, log_rate,
                    subsets_of, validate_demands, without)
from .placement import IndexExhausted, MiniFileIndexTable, MiniFiles, expected_fraction, minifile_count


def combo_coefficients(v: int, w: int) -> np.ndarray:
    """Row w (1-based) of the v x v unitary DFT matrix."""
    if not 1 <= w <= v:
        raise ValueError(f"transmission index {w} outside 1..{v}")
    return np.exp(-2j * np.pi * (w - 1) * np.arange(v) / v) / np.sqrt(v)


def group_size(s: int, L: int, K: int) -> int:
    return min(s + L - 1, K)


@dataclass(eq=False)
class Block:
    """Everything sent to one user group B in round s.

    ``pieces[S]`` lists (user, file, symbol indices, mini-file index) for each
    member of S. ``v`` is the number of streams each member must resolve.
    """

    B: UserSubset
    s: int
    beams: dict[UserSubset, np.ndarray]
    pieces: dict[UserSubset, list[tuple[int, int, np.ndarray, int]]]
    kind: str = "complex"
    _position: dict = field(default_factory=dict, repr=False)

    @property
    def subsets(self) -> list[UserSubset]:
        return list(self.beams)

    @property
    def v(self) -> int:
        return math.comb(len(self.B) - 1, self.s - 1)

    @property
    def length(self) -> int:
        return max((len(idx) for parts in self.pieces.values() for _, _, idx, _ in parts), default=0)

    @property
    def scale(self) -> float:
        """Amplitude normalization of the block (power 1 per transmission)."""
        c = math.comb(len(self.B), self.s)
        return 1 / math.sqrt(self.s * c) if self.kind == "complex" else 1 / math.sqrt(c)

    def containing(self, k: int) -> list[UserSubset]:
        return [S for S in self.beams if k in S]

    def coefficient(self, w: int, S: UserSubset, k: int) -> complex:
        """Weight of user k's mini-file inside G_w(S).

        Each user sees its v subsets through the columns of sqrt(v) times the
        DFT unitary, so its mixing matrix is always invertible.
        """
        if (S, k) not in self._position:
            self._position[(S, k)] = self.containing(k).index(S)
        return np.sqrt(self.v) * combo_coefficients(self.v, w)[self._position[(S, k)]]

    def gains(self, H: np.ndarray, k: int) -> np.ndarray:
        """|h_k^H u_B^S|^2 over the subsets S of the block that contain k."""
        return np.array([abs(np.vdot(H[:, k], self.beams[S])) ** 2 for S in self.containing(k)])


def build_blocks(s: int, cache: CacheState, d: Sequence[int], H: np.ndarray, index_table: MiniFileIndexTable,
                 minifiles: MiniFiles, beams: BeamCache, kind: str) -> list[Block]:
    K, L = cache.K, H.shape[0]
    if s not in index_table.rounds:
        index_table.init_round(K, s)
    blocks = []
    for B in enumerate_subsets(K, group_size(s, L, K)):
        bf, pieces = {}, {}
        for S in subsets_of(B, s):
            bf[S] = beams.bfv(B, S)
            parts = []
            for k in S:
                T = without(S, k)
                j = index_table.current(k, T)
                minis = minifiles[d[k], T]
                if j > len(minis):
                    raise IndexExhausted(f"user {k} has no mini-file {j} cached at {T}")
                parts.append((k, d[k], minis[j - 1], j))
            pieces[S] = parts
        index_table.update(B, s)
        blocks.append(Block(B, s, bf, pieces, kind))
    return blocks


def deliver_round_complex(s: int, cache: CacheState, d: Sequence[int], H: np.ndarray, config: SystemConfig,
                          index_table: MiniFileIndexTable, minifiles: MiniFiles | None = None,
                          beams: BeamCache | None = None) -> list[Block]:
    d = validate_demands(d, cache.K, cache.N)
    minifiles = minifiles or MiniFiles(cache, config.L)
    return build_blocks(s, cache, d, H, index_table, minifiles, beams or BeamCache(H), "complex")


def _user_gains(B: Sequence[int], k: int, s: int, H: np.ndarray, beams: BeamCache) -> np.ndarray:
    if k not in B:
        raise ValueError(f"user {k} is not in group {B}")
    return np.array([abs(np.vdot(H[:, k], beams.bfv(B, S))) ** 2 for S in subsets_of(B, s) if k in S])


def rate_complex_user(B: Sequence[int], k: int, s: int, H: np.ndarray, p_max, base: float = 2.0,
                      beams: BeamCache | None = None):
    """log(1 + P/|B| min_{S ∋ k} |h_k^H u_B^S|^2)."""
    B = tuple(B)
    g = _user_gains(B, k, s, H, beams or BeamCache(H)).min()
    return log_rate(np.asarray(p_max, dtype=float) * g / len(B), base)


def rate_complex_common(B: Sequence[int], s: int, H: np.ndarray, p_max, base: float = 2.0,
                        beams: BeamCache | None = None):
    beams = beams or BeamCache(H)
    return np.min([rate_complex_user(B, k, s, H, p_max, base, beams) for k in B], axis=0)


def _round_plan(K: int, L: int, s: int, q: float) -> tuple[int, float]:
    """(streams per user, analytic mini-file length in files) for round s."""
    v = math.comb(group_size(s, L, K) - 1, s - 1)
    return v, expected_fraction(q, K, s) / minifile_count(K, L, s - 1)


def symrate_zf(cache: CacheState, d: Sequence[int], H: np.ndarray, config: SystemConfig, common_rate, *,
               kind: str, masses: str = "empirical", p_max=None, base: float = 2.0,
               beams: BeamCache | None = None) -> RateResult:
    """Shared time accounting of the two zero-forcing schemes.

    ``common_rate(B, s, p)`` is the per-stream-group rate; every group costs
    v * (mini-file length) / rate.
    """
    d = validate_demands(d, cache.K, cache.N)
    p = np.asarray(config.p_max if p_max is None else p_max, dtype=float)
    beams = beams or BeamCache(H)
    K, L = cache.K, config.L
    total = np.zeros_like(p)
    if masses == "empirical":
        table, minis = MiniFileIndexTable(), MiniFiles(cache, L)
        for s in range(1, K + 1):
            for blk in build_blocks(s, cache, d, H, table, minis, beams, kind):
                if blk.length:
                    total = total + duration(blk.v * blk.length / cache.f, common_rate(blk.B, s, p))
    elif masses == "analytic":
        q = config.cache_ratio
        for s in range(1, K + 1):
            v, ell = _round_plan(K, L, s, q)
            if ell == 0:
                continue
            for B in enumerate_subsets(K, group_size(s, L, K)):
                total = total + duration(v * ell, common_rate(B, s, p))
    else:
        raise ValueError(f"unknown mass model {masses!r}")
    return RateResult.from_time(total)


def symrate_complex(cache: CacheState, d: Sequence[int], H: np.ndarray, config: SystemConfig, *,
                    masses: str = "empirical", p_max=None, base: float = 2.0,
                    beams: BeamCache | None = None) -> RateResult:
    beams = beams or BeamCache(H)

    def common(B, s, p):
        return rate_complex_common(B, s, H, p, base, beams)

    return symrate_zf(cache, d, H, config, common, kind="complex", masses=masses, p_max=p_max,
                      base=base, beams=beams)
