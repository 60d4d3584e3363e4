"""Channel draws and beamforming.

Max-min multicast beamforming is solved in the zero-forcing nullspace.
One user is matched filtering. A two-dimensional nullspace (every L=2
setup) is solved exactly by enumerating tie points on the Bloch sphere.
Larger nullspaces use a minorize-maximize loop whose convex step (receive
phases frozen) is a least-distance program solved through NNLS, started
from several seeds.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .model import SystemConfig, UserSubset

D_MIN_FACTOR = 0.01


class InfeasibleBeamformer(ValueError):
    """Zero-forcing constraints leave no room for a beamformer."""


@dataclass(frozen=True, eq=False)
class Geometry:
    positions: np.ndarray
    bs_position: tuple[float, float] = (0.0, 0.0)

    @property
    def K(self) -> int:
        return len(self.positions)

    @property
    def distances(self) -> np.ndarray:
        return np.hypot(*(np.asarray(self.positions) - np.asarray(self.bs_position)).T)

    def gains(self, k0: float = 1.0, d0: float = 1.0, exponent: float = 3.0) -> np.ndarray:
        return path_loss_gain(self.distances, k0, d0, exponent)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    H: np.ndarray
    gains: np.ndarray

    @property
    def L(self) -> int:
        return self.H.shape[0]

    @property
    def K(self) -> int:
        return self.H.shape[1]


def sample_ppp_disk(expected_count: float, radius: float, rng: np.random.Generator,
                    fixed_count: int | None = None) -> Geometry:
    """Uniform points on a disk; Poisson count unless ``fixed_count`` is given."""
    if expected_count <= 0 or radius <= 0:
        raise ValueError("expected_count and radius must be positive")
    n = rng.poisson(expected_count) if fixed_count is None else int(fixed_count)
    r = radius * np.sqrt(rng.random(n))
    theta = 2 * np.pi * rng.random(n)
    return Geometry(np.column_stack([r * np.cos(theta), r * np.sin(theta)]))


def path_loss_gain(d, k0: float = 1.0, d0: float = 1.0, exponent: float = 3.0):
    """k0 (d/d0)^-exponent, with d clamped below at 0.01 d0."""
    d = np.maximum(np.asarray(d, dtype=float), D_MIN_FACTOR * d0)
    g = k0 * (d / d0) ** (-exponent)
    return float(g) if g.ndim == 0 else g


def sample_rayleigh(config: SystemConfig, geometry: Geometry | None, rng: np.random.Generator,
                    *, k0: float = 1.0, d0: float = 1.0, exponent: float = 3.0,
                    gains=None) -> ChannelRealization:
    """i.i.d. CN(0, g_k) entries in column k. Unit gains when no geometry is given."""
    if gains is None:
        gains = np.ones(config.K) if geometry is None else geometry.gains(k0, d0, exponent)
    gains = np.asarray(gains, dtype=float)
    if gains.shape != (config.K,):
        raise ValueError("need one large-scale gain per user")
    z = rng.standard_normal((config.L, config.K)) + 1j * rng.standard_normal((config.L, config.K))
    H = z * np.sqrt(gains / 2.0)
    return ChannelRealization(H, gains)


def _fix_phase(u: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(u) > 1e-14)
    if len(nz):
        c = u[nz[0]]
        u = u * (abs(c) / c)
    return u


def nullspace(Hz: np.ndarray, L: int) -> np.ndarray:
    """Orthonormal basis (L x r) of {u : h_j^H u = 0 for every column h_j of Hz}."""
    if Hz.size == 0:
        return np.eye(L, dtype=complex)
    Q = scipy.linalg.null_space(Hz.conj().T)
    return Q.astype(complex)


def orth_complement(h: np.ndarray) -> np.ndarray:
    """L x (L-1) orthonormal basis of the complement of span(h)."""
    h = np.asarray(h, dtype=complex).ravel()
    if not np.any(h):
        raise ValueError("orthogonal complement of the zero vector")
    Q = nullspace(h[:, None], len(h))
    return np.column_stack([_fix_phase(q) for q in Q.T]) if Q.size else Q


# -- reduced max-min problem: maximize min_k |g_k^H v| over ||v|| <= 1 -----

def _min_gain(G: np.ndarray, v: np.ndarray) -> float:
    return float(np.min(np.abs(G.conj().T @ v)))


def _pair_equalized(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Unit v with |a^H v| = |b^H v| maximal (min-norm solution of A^H v = c)."""
    na, nb = np.vdot(a, a).real, np.vdot(b, b).real
    z = np.vdot(a, b)
    rho = abs(z)
    det = na * nb - rho ** 2
    denom = na + nb - 2 * rho
    if det <= 1e-12 * na * nb or denom <= 0:
        return None
    t = np.sqrt(det / denom)
    phase = np.conj(z) / rho if rho > 0 else 1.0
    c = t * np.array([1.0, phase])
    A = np.column_stack([a, b])
    v = A @ np.linalg.solve(A.conj().T @ A, c)
    return v / np.linalg.norm(v)


def _ldp_step(G: np.ndarray, v: np.ndarray) -> np.ndarray | None:
    """Best v for receive phases frozen at those of ``v``.

    Maximizing min_k Re(e^{-j phi_k} g_k^H v) on the unit ball is the
    least-distance program min ||p|| s.t. Re(c_k^H p) >= 1, solved by NNLS.
    """
    r = G.shape[0]
    proj = G.conj().T @ v
    C = G * (proj / np.abs(proj))[None, :]
    E = np.vstack([C.real, C.imag, np.ones((1, C.shape[1]))])
    f = np.zeros(2 * r + 1)
    f[-1] = 1.0
    x, _ = scipy.optimize.nnls(E, f)
    res = E @ x - f
    if abs(res[-1]) < 1e-14:
        return None
    p = -res[:-1] / res[-1]
    p = p[:r] + 1j * p[r:]
    return p / np.linalg.norm(p)


def _polish(G: np.ndarray, v: np.ndarray, max_iter: int = 200, tol: float = 1e-10):
    best = _min_gain(G, v)
    for _ in range(max_iter):
        if best <= 0:
            break
        w = _ldp_step(G, v)
        if w is None:
            break
        val = _min_gain(G, w)
        if val <= best * (1 + tol):
            if val > best:
                v, best = w, val
            break
        v, best = w, val
    return v, best


def _bloch(G: np.ndarray) -> np.ndarray:
    """Bloch vectors (3 x m) of the columns of a 2 x m matrix, normalized."""
    a, b = G[0], G[1]
    nrm = np.abs(a) ** 2 + np.abs(b) ** 2
    return np.vstack([2 * (a * b.conj()).real, -2 * (a * b.conj()).imag,
                      np.abs(a) ** 2 - np.abs(b) ** 2]) / nrm


def _from_bloch(n: np.ndarray) -> np.ndarray:
    c = np.sqrt(max((1 + n[2]) / 2, 0.0))
    if c < 1e-12:
        return np.array([0.0, 1.0], dtype=complex)
    return np.array([c, (n[0] + 1j * n[1]) / (2 * c)])


def _solve_bloch(G: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact max-min for 2-dimensional beamformers.

    With vv^H = (I + n.sigma)/2, |g_k^H v|^2 = alpha_k (1 + b_k.n) is affine in
    the unit vector n, so the optimum has one active user (n = b_k), two
    (best point of the circle where they tie) or three (a tie point).
    """
    m = G.shape[1]
    alpha = (np.abs(G) ** 2).sum(axis=0) / 2
    b = _bloch(G)
    cands = [b.T]
    for i, j in itertools.combinations(range(m), 2):
        w = alpha[i] * b[:, i] - alpha[j] * b[:, j]
        c = alpha[j] - alpha[i]
        ww = w @ w
        if ww < 1e-24 or c * c > ww:
            continue
        n0 = c * w / ww
        e = b[:, i] - (b[:, i] @ w) * w / ww
        ne = np.linalg.norm(e)
        if ne < 1e-15:
            continue
        cands.append((n0 + np.sqrt(1 - c * c / ww) * e / ne)[None, :])
    for i, j, k in itertools.combinations(range(m), 3):
        W = np.array([alpha[i] * b[:, i] - alpha[j] * b[:, j],
                      alpha[i] * b[:, i] - alpha[k] * b[:, k]])
        c = np.array([alpha[j] - alpha[i], alpha[k] - alpha[i]])
        d = np.cross(W[0], W[1])
        dd = d @ d
        if dd < 1e-24:
            continue
        n0 = np.linalg.lstsq(W, c, rcond=None)[0]
        rest = 1 - n0 @ n0
        if rest < 0:
            continue
        tau = np.sqrt(rest / dd)
        cands.append(np.array([n0 + tau * d, n0 - tau * d]))
    n = np.vstack(cands)
    vals = (alpha[None, :] * (1 + n @ b)).min(axis=1)
    best = int(np.argmax(vals))
    v = _from_bloch(n[best] / np.linalg.norm(n[best]))
    return v, _min_gain(G, v)


_RESTART_SEED = 20180101


def _solve_reduced(G: np.ndarray, restarts: int = 8, screen_steps: int = 3,
                   keep: int = 3) -> tuple[np.ndarray, float]:
    r, m = G.shape
    if r == 1:
        v = np.ones(1, dtype=complex)
        return v, _min_gain(G, v)
    norms = np.linalg.norm(G, axis=0)
    if m == 1:
        v = G[:, 0] / norms[0]
        return v, float(norms[0])
    if r == 2:
        return _solve_bloch(G)

    candidates = [G[:, k] / norms[k] for k in range(m) if norms[k] > 0]
    for i, j in itertools.combinations(range(m), 2):
        v = _pair_equalized(G[:, i], G[:, j])
        if v is not None:
            candidates.append(v)
    if m == 2:
        vals = [_min_gain(G, v) for v in candidates]
        i = int(np.argmax(vals))
        return candidates[i], vals[i]

    safe = G[:, norms > 0] / norms[norms > 0]
    s = safe.sum(axis=1)
    if np.linalg.norm(s) > 0:
        candidates.append(s / np.linalg.norm(s))
    rng = np.random.default_rng(_RESTART_SEED)
    for _ in range(restarts):
        z = rng.standard_normal(r) + 1j * rng.standard_normal(r)
        candidates.append(z / np.linalg.norm(z))

    # a few MM steps from every start, then converge the leaders
    screened = sorted((_polish(G, v, max_iter=screen_steps)[::-1] for v in candidates),
                      key=lambda x: -x[0])
    best, best_v = screened[0]
    for val, v in screened[:keep]:
        v, val = _polish(G, v, tol=1e-9)
        if val > best:
            best, best_v = val, v
    return best_v, float(best)


def maxmin_beamformer(S: Sequence[int], H: np.ndarray, zf_set: Sequence[int] = ()) -> tuple[np.ndarray, float]:
    """Unit beamformer maximizing min_{k in S} |h_k^H u| with h_j^H u = 0 for j in zf_set.

    Returns the beamformer and the attained minimum |h_k^H u|.
    """
    S, zf_set = list(S), list(zf_set)
    if not S:
        raise ValueError("empty target set")
    if set(S) & set(zf_set):
        raise ValueError("target and zero-forced users overlap")
    L = H.shape[0]
    Q = nullspace(H[:, zf_set], L)
    if Q.shape[1] == 0:
        raise InfeasibleBeamformer(f"no beamformer nulls users {zf_set} with L={L}")
    G = Q.conj().T @ H[:, S]
    v, _ = _solve_reduced(G)
    u = _fix_phase(Q @ v)
    u = u / np.linalg.norm(u)
    return u, float(np.min(np.abs(H[:, S].conj().T @ u)))


def mrt_worst_user(S: Sequence[int], H: np.ndarray) -> float:
    """Min gain of matched filtering toward the weakest user of S (a feasible point)."""
    S = list(S)
    k = S[int(np.argmin(np.linalg.norm(H[:, S], axis=0)))]
    u = H[:, k] / np.linalg.norm(H[:, k])
    return float(np.min(np.abs(H[:, S].conj().T @ u)))


def bfv(B: Sequence[int], S: Sequence[int], H: np.ndarray) -> np.ndarray:
    """Beamformer for subset S inside group B: nulls B \\ S, max-min over S.

    When |S| <= K - L + 1 and |B| = |S| + L - 1 the nullspace is a single
    direction; otherwise the max-min search runs inside the nullspace.
    """
    if not set(S) <= set(B):
        raise ValueError("S must be a subset of B")
    zf = [k for k in B if k not in set(S)]
    u, _ = maxmin_beamformer(S, H, zf)
    return u


class BeamCache:
    """Memoizes beamformers for one channel matrix."""

    def __init__(self, H: np.ndarray):
        self.H = H
        self._beams: dict[tuple[UserSubset, UserSubset], tuple[np.ndarray, float]] = {}

    def beam(self, S: Sequence[int], zf_set: Sequence[int] = ()) -> tuple[np.ndarray, float]:
        key = (tuple(S), tuple(sorted(zf_set)))
        if key not in self._beams:
            self._beams[key] = maxmin_beamformer(key[0], self.H, key[1])
        return self._beams[key]

    def bfv(self, B: Sequence[int], S: Sequence[int]) -> np.ndarray:
        zf = tuple(k for k in B if k not in set(S))
        return self.beam(S, zf)[0]

    def multicast_gain(self, S: Sequence[int]) -> float:
        """min_{k in S} |h_k^H w_S|^2 for the unconstrained max-min beamformer."""
        return self.beam(S)[1] ** 2
