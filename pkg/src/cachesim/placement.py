"""Cache placement (centralized and decentralized) and mini-file bookkeeping."""
from __future__ import annotations

import math
from collections import defaultdict
from typing import Sequence

import numpy as np

from .model import (CacheState, ConfigError, SystemConfig, UserSubset, enumerate_subsets,
                    subset_mask, subsets_of, without)


def place_centralized(config: SystemConfig) -> CacheState:
    """Split every file into C(K, t) equal subfiles; subfile T goes to the users in T."""
    t = config.t
    K, N, f = config.K, config.N, config.f
    n_sub = math.comb(K, t)
    if f % n_sub:
        raise ConfigError(f"f={f} is not a multiple of C({K},{t})={n_sub}")
    size = f // n_sub
    owner = np.zeros((K, f), dtype=bool)
    for i, T in enumerate(enumerate_subsets(K, t)):
        owner[list(T), i * size:(i + 1) * size] = True
    cached = np.repeat(owner[:, None, :], N, axis=1)
    return CacheState(cached, scheme="centralized", t=t)


def place_decentralized(config: SystemConfig, rng: np.random.Generator) -> CacheState:
    """Each user stores floor(M_k f / N) uniformly chosen symbols of every file."""
    K, N, f = config.K, config.N, config.f
    cached = np.zeros((K, N, f), dtype=bool)
    for k in range(K):
        count = math.floor(config.M[k] * f / N + 1e-9)
        for n in range(N):
            cached[k, n, rng.choice(f, size=count, replace=False)] = True
    return CacheState(cached, scheme="decentralized")


def expected_fraction(M_over_N: float, K: int, s: int) -> float:
    """High-probability length of a size-s multicast codeword, in files.

    (M/N)^(s-1) (1 - M/N)^(K-s+1), i.e. the mass of a file cached at exactly
    s-1 given users out of K.
    """
    if not 0 <= M_over_N <= 1 or not 1 <= s <= K:
        raise ValueError("need 0 <= M/N <= 1 and 1 <= s <= K")
    q = M_over_N
    return q ** (s - 1) * (1 - q) ** (K - s + 1)


def minifile_count(K: int, L: int, sigma: int) -> int:
    """Number of mini-files a subfile cached at sigma users is split into."""
    if sigma <= K - L:
        return math.comb(K - sigma - 1, L - 1)
    return 1


class MiniFiles:
    """Mini-file partition of every subfile W_{n,T}.

    ``self[n, T]`` is a list of symbol-index arrays, one per mini-file
    (1-based index j maps to position j-1). Sizes differ by at most one symbol,
    the larger ones last.
    """

    def __init__(self, cache: CacheState, L: int):
        self.cache = cache
        self.L = L
        self._parts: dict[tuple[int, UserSubset], list[np.ndarray]] = {}

    def __getitem__(self, key: tuple[int, Sequence[int]]) -> list[np.ndarray]:
        n, T = key
        T = tuple(T)
        if (n, T) not in self._parts:
            symbols = np.flatnonzero(self.cache.patterns[n] == subset_mask(T))
            count = minifile_count(self.cache.K, self.L, len(T))
            base, extra = divmod(len(symbols), count)
            # remainder symbols go to the trailing mini-files
            sizes = [base] * (count - extra) + [base + 1] * extra
            self._parts[(n, T)] = np.split(symbols, np.cumsum(sizes)[:-1])
        return self._parts[(n, T)]

    def sizes(self, n: int, T: Sequence[int]) -> list[int]:
        return [len(p) for p in self[n, T]]


def partition_minifiles(cache: CacheState, config: SystemConfig) -> MiniFiles:
    return MiniFiles(cache, config.L)


class IndexExhausted(RuntimeError):
    """A delivery asked for a mini-file that does not exist or was already sent."""


class MiniFileIndexTable:
    """Next-fresh-mini-file counters N(k, T), starting at 1."""

    def __init__(self):
        self.next_index: dict[tuple[int, UserSubset], int] = {}
        self.consumed: dict[tuple[int, UserSubset], int] = defaultdict(int)
        self.rounds: set[int] = set()

    def init_round(self, K: int, s: int) -> None:
        self.rounds.add(s)
        for S in enumerate_subsets(K, s):
            for k in S:
                self.next_index[(k, without(S, k))] = 1

    def current(self, k: int, T: UserSubset) -> int:
        try:
            return self.next_index[(k, T)]
        except KeyError:
            raise IndexExhausted(f"index for user {k}, subset {T} was never initialized") from None

    def update(self, B: Sequence[int], s: int) -> None:
        for S in subsets_of(B, s):
            for k in S:
                T = without(S, k)
                self.next_index[(k, T)] += 1
                self.consumed[(k, T)] += 1

