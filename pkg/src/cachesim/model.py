"""Shared types for the caching simulator: configs, caches, subsets, demands.

Users and files are 0-indexed. A user subset is a sorted tuple of user
indices; the empty tuple stands for "cached nowhere".
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

UserSubset = tuple[int, ...]


class ConfigError(ValueError):
    """Raised for configurations the simulator cannot run."""


@dataclass(frozen=True)
class SystemConfig:
    K: int
    L: int
    N: int
    M: tuple[float, ...]
    f: int
    p_max: float = 1.0
    noise_power: float = 1.0

    def __post_init__(self):
        M = self.M
        if np.isscalar(M):
            M = (float(M),) * self.K
        object.__setattr__(self, "M", tuple(float(m) for m in M))
        if min(self.K, self.L, self.N, self.f) < 1:
            raise ConfigError("K, L, N and f must all be >= 1")
        if len(self.M) != self.K:
            raise ConfigError(f"expected {self.K} cache sizes, got {len(self.M)}")
        if any(m < 0 or m > self.N for m in self.M):
            raise ConfigError("every cache size must lie in [0, N]")
        if self.p_max <= 0:
            raise ConfigError("p_max must be positive")

    @property
    def homogeneous(self) -> bool:
        return len(set(self.M)) == 1

    @property
    def cache_ratio(self) -> float:
        """M/N for homogeneous caches."""
        if not self.homogeneous:
            raise ConfigError("cache ratio is only defined for homogeneous caches")
        return self.M[0] / self.N

    @property
    def t(self) -> int:
        """Integer replication factor M*K/N required by centralized placement."""
        if not self.homogeneous:
            raise ConfigError("centralized placement needs homogeneous cache sizes")
        t = self.M[0] * self.K / self.N
        if not math.isclose(t, round(t), abs_tol=1e-9):
            raise ConfigError(f"t = MK/N = {t:g} is not an integer")
        return int(round(t))


def subset(*members: int) -> UserSubset:
    """Canonical form of a user subset."""
    s = tuple(sorted(set(members)))
    return s


def subset_mask(S: Sequence[int]) -> int:
    mask = 0
    for k in S:
        mask |= 1 << k
    return mask


def enumerate_subsets(K: int, s: int) -> list[UserSubset]:
    """All size-``s`` subsets of ``range(K)`` in lexicographic order."""
    if s < 0 or s > K:
        raise ValueError(f"subset size {s} outside [0, {K}]")
    return list(itertools.combinations(range(K), s))


def subsets_of(B: Sequence[int], s: int) -> list[UserSubset]:
    """Size-``s`` subsets of the (sorted) group B, lexicographic."""
    return list(itertools.combinations(tuple(B), s))


def without(S: Sequence[int], k: int) -> UserSubset:
    return tuple(j for j in S if j != k)


def all_subsets(K: int, *, nonempty: bool = False) -> list[UserSubset]:
    start = 1 if nonempty else 0
    return [S for s in range(start, K + 1) for S in enumerate_subsets(K, s)]


@dataclass(frozen=True, eq=False)
class CacheState:
    """Placement outcome: ``cached[k, n, x]`` is True when user k holds symbol x of file n.

    ``scheme`` records how the cache was filled; centralized delivery checks it.
    """

    cached: np.ndarray
    scheme: str = "decentralized"
    t: int | None = None

    def __post_init__(self):
        arr = np.asarray(self.cached, dtype=bool)
        if arr.ndim != 3:
            raise ValueError("cached must have shape (K, N, f)")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "cached", arr)

    @property
    def K(self) -> int:
        return self.cached.shape[0]

    @property
    def N(self) -> int:
        return self.cached.shape[1]

    @property
    def f(self) -> int:
        return self.cached.shape[2]

    def symbols(self, k: int, n: int) -> set[int]:
        return set(np.flatnonzero(self.cached[k, n]).tolist())

    def occupancy(self, k: int) -> int:
        return int(self.cached[k].sum())

    @cached_property
    def patterns(self) -> np.ndarray:
        """Bitmask of caching users for every (file, symbol); shape (N, f)."""
        weights = (1 << np.arange(self.K, dtype=np.int64))[:, None, None]
        pat = (self.cached.astype(np.int64) * weights).sum(axis=0)
        pat.flags.writeable = False
        return pat


def exclusive_subfile(cache: CacheState, file: int, S: Sequence[int]) -> np.ndarray:
    """Sorted symbols of ``file`` cached at every user of S and at nobody else."""
    return np.flatnonzero(cache.patterns[file] == subset_mask(S))


def subfile_partition_sizes(cache: CacheState, d: Sequence[int]) -> dict[tuple[int, UserSubset], int]:
    """Map (k, T) with k not in T to the size of V_{d_k, T} (in symbols)."""
    K = cache.K
    out = {}
    for k in range(K):
        counts = np.bincount(cache.patterns[d[k]], minlength=1 << K)
        others = [j for j in range(K) if j != k]
        for r in range(len(others) + 1):
            for T in itertools.combinations(others, r):
                out[(k, T)] = int(counts[subset_mask(T)])
    return out


def validate_demands(d: Sequence[int], K: int, N: int) -> tuple[int, ...]:
    d = tuple(int(x) for x in d)
    if len(d) != K:
        raise ValueError(f"demand vector has length {len(d)}, expected {K}")
    if any(x < 0 or x >= N for x in d):
        raise ValueError("demanded file index out of range")
    return d


def log_rate(snr, base: float = 2.0):
    """log_base(1 + snr); works elementwise on arrays."""
    return np.log1p(snr) / np.log(base)


def parse_log_base(base) -> float:
    if isinstance(base, str):
        if base.lower() == "e":
            return math.e
        base = float(base)
    base = float(base)
    if base <= 1:
        raise ConfigError(f"log base must exceed 1, got {base}")
    return base


@dataclass
class RateResult:
    """Symmetric rate of one delivery run; ``r_sym`` broadcasts over p_max."""

    r_sym: np.ndarray | float
    flags: tuple[str, ...] = ()
    total_time: np.ndarray | float = field(default=0.0, repr=False)
    details: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_time(cls, total_time, *, flags=()):
        total_time = np.asarray(total_time, dtype=float)
        flags = list(flags)
        if np.all(total_time == 0):
            r = np.full_like(total_time, np.inf)
            flags.append("all-cached")
        else:
            with np.errstate(divide="ignore"):
                r = np.where(np.isfinite(total_time), 1.0 / total_time, 0.0)
            if np.any(~np.isfinite(total_time)):
                flags.append("zero-rate")
        if r.ndim == 0:
            r = float(r)
            total_time = float(total_time)
        return cls(r, tuple(flags), total_time)
