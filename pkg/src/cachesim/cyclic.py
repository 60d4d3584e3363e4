"""Cyclic exchanges built from two-user multicasts.

Edge (i, j) of the exchange graph carries the symbols user i can supply to
user j. A directed cycle of o users is served with o-1 pair multicasts, all
involving one anchor that relays through a one-symbol buffer; whatever no
cycle absorbs is sent uncoded.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import BeamCache
from .maxmin import build_codewords_decentralized, duration, multicast_rate, symrate_maxmin
from .model import CacheState, RateResult, UserSubset, validate_demands

MODES = ("cyclic", "two_user_only", "uncoded", "all_user")


class ProtocolViolation(RuntimeError):
    """A scheduled exchange cannot be decoded by one of its receivers."""


@dataclass(eq=False)
class ExchangeGraph:
    """``edge_symbols[(i, j)]``: symbols of d_j cached at i (not at j) that i was picked to supply."""

    K: int
    d: tuple[int, ...]
    edge_symbols: dict[tuple[int, int], np.ndarray]
    self_cached: tuple[int, ...]
    unsupplied: dict[int, np.ndarray]

    @property
    def weights(self) -> np.ndarray:
        w = np.zeros((self.K, self.K), dtype=np.int64)
        for (i, j), syms in self.edge_symbols.items():
            w[i, j] = len(syms)
        return w

    def edge_weight(self, i: int, j: int) -> int:
        return len(self.edge_symbols.get((i, j), ()))


@dataclass(frozen=True)
class Loop:
    nodes: tuple[int, ...]

    @property
    def order(self) -> int:
        return len(self.nodes)

    @property
    def edges(self) -> list[tuple[int, int]]:
        n = self.nodes
        return [(n[i], n[(i + 1) % len(n)]) for i in range(len(n))]


@dataclass(frozen=True)
class PairCodeword:
    """x_k XOR x_j sent to {anchor, relay}; pieces are (user, file, symbol)."""

    anchor: int
    relay: int
    relay_piece: tuple[int, int, int]
    next_piece: tuple[int, int, int]

    @property
    def target(self) -> UserSubset:
        return tuple(sorted((self.anchor, self.relay)))


@dataclass(eq=False)
class CyclicPlan:
    mode: str
    graph: ExchangeGraph
    loops: list[Loop]
    codewords: list[PairCodeword]
    schedule: list[list[PairCodeword]]
    unicasts: dict[int, np.ndarray]
    uncoded_count: int = field(default=0)

    @property
    def transmissions(self) -> int:
        return len(self.codewords) + sum(len(v) for v in self.unicasts.values())


def build_exchange_graph(cache: CacheState, d: Sequence[int], rng: np.random.Generator) -> ExchangeGraph:
    """Weighted demand graph; a symbol held by several users is given to one at random."""
    d = validate_demands(d, cache.K, cache.N)
    K = cache.K
    buckets: dict[tuple[int, int], list] = defaultdict(list)
    self_cached, unsupplied = [], {}
    for j in range(K):
        holders = cache.cached[:, d[j], :]
        self_cached.append(int(holders[j].sum()))
        missing = np.flatnonzero(~holders[j])
        owners = holders[:, missing].copy()
        owners[j] = False
        scores = np.where(owners, rng.random(owners.shape), -1.0)
        pick = scores.argmax(axis=0)
        has_owner = owners.any(axis=0)
        unsupplied[j] = missing[~has_owner]
        for i in range(K):
            sel = missing[has_owner & (pick == i)]
            if len(sel):
                buckets[(i, j)] = sel
    edges = {e: np.asarray(v, dtype=np.int64) for e, v in sorted(buckets.items())}
    return ExchangeGraph(K, d, edges, tuple(self_cached), unsupplied)


def _find_cycle(w: np.ndarray, order: int) -> tuple[int, ...] | None:
    """First simple cycle with ``order`` nodes, in DFS order from low indices.

    A cycle is reported from its lowest node, so each one is found once.
    """
    K = len(w)
    for start in range(K):
        path = [start]
        # stack of successor iterators
        stack = [iter(np.flatnonzero(w[start] > 0))]
        while stack:
            nxt = next(stack[-1], None)
            if nxt is None:
                stack.pop()
                path.pop()
                continue
            nxt = int(nxt)
            if len(path) == order:
                if nxt == start:
                    return tuple(path)
                continue
            if nxt <= start or nxt in path:
                continue
            path.append(nxt)
            stack.append(iter(np.flatnonzero(w[nxt] > 0)))
    return None


def extract_loops(graph: ExchangeGraph, orders: Sequence[int] | None = None) -> list[Loop]:
    """Greedy loop extraction by ascending order; one entry per processed loop.

    Repeats of the same loop are peeled in one go: the search finds the same
    cycle first until one of its edges runs dry.
    """
    K = graph.K
    orders = range(2, K + 1) if orders is None else orders
    w = graph.weights
    loops = []
    for o in orders:
        while (cyc := _find_cycle(w, o)) is not None:
            loop = Loop(cyc)
            times = min(w[i, j] for i, j in loop.edges)
            for i, j in loop.edges:
                w[i, j] -= times
            loops.extend([loop] * int(times))
    return loops


def schedule_cycle(loop: Loop, graph: ExchangeGraph, d: Sequence[int], cursor: dict | None = None,
                   anchor: int | None = None) -> list[PairCodeword]:
    """Pair multicasts serving one loop; ``cursor`` tracks symbols already used per edge."""
    cursor = cursor if cursor is not None else defaultdict(int)
    nodes = list(loop.nodes)
    u = min(nodes) if anchor is None else anchor
    r = nodes.index(u)
    nodes = nodes[r:] + nodes[:r]
    o = len(nodes)
    supplied = {}
    for idx in range(o):
        i, j = nodes[idx], nodes[(idx + 1) % o]
        syms = graph.edge_symbols.get((i, j), ())
        pos = cursor[(i, j)]
        if pos >= len(syms):
            raise ProtocolViolation(f"edge {(i, j)} has no symbol left")
        supplied[j] = (j, d[j], int(syms[pos]))
        cursor[(i, j)] = pos + 1
    out = []
    for idx in range(1, o):
        k, j = nodes[idx], nodes[(idx + 1) % o]
        out.append(PairCodeword(u, k, supplied[k], supplied[j]))
    return out


def plan_cyclic_delivery(cache: CacheState, d: Sequence[int], rng: np.random.Generator,
                         mode: str = "cyclic") -> CyclicPlan:
    d = validate_demands(d, cache.K, cache.N)
    if mode not in ("cyclic", "two_user_only", "uncoded"):
        raise ValueError(f"no exchange plan for mode {mode!r}")
    graph = build_exchange_graph(cache, d, rng)
    orders = {"cyclic": None, "two_user_only": (2,), "uncoded": ()}[mode]
    loops = extract_loops(graph, orders)
    cursor: dict = defaultdict(int)
    schedule = [schedule_cycle(lp, graph, d, cursor) for lp in loops]
    unicasts = {}
    for j in range(cache.K):
        rest = [graph.unsupplied[j]]
        rest += [syms[cursor[(i, jj)]:] for (i, jj), syms in graph.edge_symbols.items() if jj == j]
        unicasts[j] = np.sort(np.concatenate(rest))
    uncoded = int(sum(cache.f - c for c in graph.self_cached))
    return CyclicPlan(mode, graph, loops, [c for s in schedule for c in s], schedule, unicasts, uncoded)


def simulate_decode(schedule: Sequence[PairCodeword], cache: CacheState, d: Sequence[int],
                    library: np.ndarray) -> tuple[dict[int, set[int]], int]:
    """Replay pair multicasts symbol by symbol.

    Returns the demanded symbols each user recovered and the largest relay
    buffer occupancy seen (the protocol needs at most one).
    """
    d = validate_demands(d, cache.K, cache.N)
    recovered: dict[int, set[int]] = {k: set() for k in range(cache.K)}
    buffers: dict[int, dict[tuple[int, int], int]] = defaultdict(dict)
    peak = 0

    def known(user, piece):
        _, n, x = piece
        if (n, x) in buffers[user]:
            return buffers[user].pop((n, x))
        if cache.cached[user, n, x]:
            return int(library[n, x])
        raise ProtocolViolation(f"user {user} cannot strip symbol {x} of file {n}")

    for cw in schedule:
        payload = int(library[cw.relay_piece[1], cw.relay_piece[2]]) ^ int(library[cw.next_piece[1], cw.next_piece[2]])
        # relay: holds the next symbol in cache, learns its own demand
        got = payload ^ known(cw.relay, cw.next_piece)
        if got != library[d[cw.relay], cw.relay_piece[2]] or cw.relay_piece[1] != d[cw.relay]:
            raise ProtocolViolation(f"relay {cw.relay} decoded a wrong symbol")
        recovered[cw.relay].add(cw.relay_piece[2])
        # anchor: strips the relay's symbol, keeps the next one
        got = payload ^ known(cw.anchor, cw.relay_piece)
        owner, n, x = cw.next_piece
        if got != library[n, x]:
            raise ProtocolViolation(f"anchor {cw.anchor} decoded a wrong symbol")
        if owner == cw.anchor:
            recovered[cw.anchor].add(x)
        else:
            buffers[cw.anchor][(n, x)] = got
        peak = max(peak, max((len(b) for b in buffers.values()), default=0))
    if any(buffers.values()):
        raise ProtocolViolation("relay buffer not drained at the end of the schedule")
    return recovered, peak


def run_cyclic_delivery(cache: CacheState, d: Sequence[int], H: np.ndarray, p_max, mode: str = "cyclic",
                        rng: np.random.Generator | None = None, base: float = 2.0,
                        beams: BeamCache | None = None, plan: CyclicPlan | None = None) -> RateResult:
    """Symmetric rate of an exchange mode; pair codewords and unicasts cost 1/f files each."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    beams = beams or BeamCache(H)
    if mode == "all_user":
        return symrate_maxmin(build_codewords_decentralized(cache, d), H, p_max, base, beams)
    if plan is None:
        plan = plan_cyclic_delivery(cache, d, rng if rng is not None else np.random.default_rng(0), mode)
    counts: dict[UserSubset, int] = defaultdict(int)
    for cw in plan.codewords:
        counts[cw.target] += 1
    for j, syms in plan.unicasts.items():
        if len(syms):
            counts[(j,)] += len(syms)
    total = np.zeros_like(np.asarray(p_max, dtype=float))
    for S, n in sorted(counts.items()):
        total = total + duration(n / cache.f, multicast_rate(S, H, p_max, base, beams))
    res = RateResult.from_time(total)
    res.details["plan"] = plan
    return res
