"""Noiseless symbol-level receivers used to check that every scheme is decodable.

Files are byte arrays (one symbol = one byte). Complex-field blocks map each
byte to its integer value; finite-field blocks send each XOR payload as
BPSK bits, so a receiver resolves its superposed streams by joint ML per
channel use.
"""
from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .codec import xor_encode
from .complex_field import Block
from .maxmin import Codeword
from .model import CacheState


class DecodeError(RuntimeError):
    pass


def random_library(N: int, f: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 256, size=(N, f), dtype=np.uint8)


class Receivers:
    """Per-user recovered copy of the demanded file (-1 where unknown)."""

    def __init__(self, cache: CacheState, d: Sequence[int], library: np.ndarray):
        self.cache, self.d, self.library = cache, tuple(d), library
        self.files = np.full((cache.K, cache.f), -1, dtype=np.int64)
        for k in range(cache.K):
            mask = cache.cached[k, d[k]]
            self.files[k, mask] = library[d[k], mask]

    def store(self, k: int, idx: np.ndarray, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=np.int64)[:len(idx)]
        if np.any(values != self.library[self.d[k], idx]):
            raise DecodeError(f"user {k} decoded wrong symbols")
        self.files[k, idx] = values

    def known(self, k: int, n: int, idx: np.ndarray) -> np.ndarray:
        if not self.cache.cached[k, n, idx].all():
            raise DecodeError(f"user {k} lacks side information for file {n}")
        return self.library[n, idx]

    def complete(self) -> bool:
        return bool(np.all(self.files >= 0))


def decode_codewords(codewords: Sequence[Codeword], cache: CacheState, d: Sequence[int],
                     library: np.ndarray) -> Receivers:
    """XOR multicast delivery: each target strips the pieces it caches."""
    rx = Receivers(cache, d, library)
    for cw in codewords:
        payload = xor_encode([library[n, idx] for _, n, idx in cw.composition])
        for k, n, idx in cw.composition:
            others = [rx.known(k, m, jdx) for j, m, jdx in cw.composition if j != k]
            rx.store(k, idx, xor_encode([payload, *others])[:len(idx)])
    return rx


def _padded(values: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros(n, dtype=float)
    out[:len(values)] = values
    return out


def decode_complex_blocks(blocks: Sequence[Block], H: np.ndarray, cache: CacheState, d: Sequence[int],
                          library: np.ndarray) -> Receivers:
    rx = Receivers(cache, d, library)
    for blk in blocks:
        n = blk.length
        if n == 0:
            continue
        v = blk.v
        x = {(S, j): _padded(library[m, idx], n) for S, parts in blk.pieces.items() for j, m, idx, _ in parts}
        # X_w = scale * sum_S u^S * sum_{j in S} c_{w,j}^S x_j   (L x n)
        X = [blk.scale * sum(np.outer(blk.beams[S], sum(blk.coefficient(w, S, j) * x[(S, j)]
                                                          for j, _, _, _ in blk.pieces[S]))
                             for S in blk.subsets)
             for w in range(1, v + 1)]
        for k in blk.B:
            h = H[:, k]
            y = np.array([h.conj() @ Xw for Xw in X])
            mine = blk.containing(k)
            A = np.zeros((v, len(mine)), dtype=complex)
            for col, S in enumerate(mine):
                a = blk.scale * np.vdot(h, blk.beams[S])
                for w in range(1, v + 1):
                    A[w - 1, col] = a * blk.coefficient(w, S, k)
                    for j, m, idx, _ in blk.pieces[S]:
                        if j != k:
                            y[w - 1] -= a * blk.coefficient(w, S, j) * _padded(rx.known(k, m, idx), n)
            z = np.linalg.solve(A, y)
            for col, S in enumerate(mine):
                idx = next(idx for j, _, idx, _ in blk.pieces[S] if j == k)
                rx.store(k, idx, np.rint(z[col].real))
    return rx


def _bpsk(payload: np.ndarray, n_bytes: int) -> np.ndarray:
    buf = np.zeros(n_bytes, dtype=np.uint8)
    buf[:len(payload)] = payload
    return 2.0 * np.unpackbits(buf) - 1.0


def decode_finite_blocks(blocks: Sequence[Block], H: np.ndarray, cache: CacheState, d: Sequence[int],
                         library: np.ndarray) -> Receivers:
    rx = Receivers(cache, d, library)
    for blk in blocks:
        n = blk.length
        if n == 0:
            continue
        G = {S: xor_encode([library[m, idx] for _, m, idx, _ in parts]) for S, parts in blk.pieces.items()}
        X = blk.scale * sum(np.outer(blk.beams[S], _bpsk(G[S], n)) for S in blk.subsets)
        for k in blk.B:
            h = H[:, k]
            y = h.conj() @ X
            mine = blk.containing(k)
            a = blk.scale * np.array([np.vdot(h, blk.beams[S]) for S in mine])
            hyps = np.array(list(itertools.product((-1.0, 1.0), repeat=len(mine))))
            points = hyps @ a
            best = np.abs(y[:, None] - points[None, :]).argmin(axis=1)
            bits = hyps[best]
            for col, S in enumerate(mine):
                payload = np.packbits((bits[:, col] > 0).astype(np.uint8))
                own = next(idx for j, _, idx, _ in blk.pieces[S] if j == k)
                others = [rx.known(k, m, idx) for j, m, idx, _ in blk.pieces[S] if j != k]
                rx.store(k, own, xor_encode([payload, *others])[:len(own)])
    return rx
