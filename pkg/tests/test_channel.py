import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cachesim.channel import (D_MIN_FACTOR, BeamCache, Geometry, InfeasibleBeamformer, bfv, maxmin_beamformer,
                              mrt_worst_user, orth_complement, path_loss_gain, sample_ppp_disk, sample_rayleigh)
from cachesim.model import SystemConfig

from oracles import expected_log1p_exponential, grid_maxmin_c2


def cn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


seeds = st.integers(0, 2 ** 32 - 1)


def test_ppp_disk_fixed_count_and_determinism():
    g = sample_ppp_disk(50, 1.0, np.random.default_rng(1), fixed_count=50)
    assert g.K == 50 and np.all(g.distances <= 1.0)
    a = sample_ppp_disk(1, 1.0, np.random.default_rng(7), fixed_count=1)
    b = sample_ppp_disk(1, 1.0, np.random.default_rng(7), fixed_count=1)
    np.testing.assert_array_equal(a.positions, b.positions)


def test_ppp_disk_second_moment():
    g = sample_ppp_disk(1, 2.0, np.random.default_rng(2), fixed_count=100_000)
    assert np.mean(g.distances ** 2) == pytest.approx(2.0 ** 2 / 2, rel=0.01)


def test_ppp_disk_poisson_count():
    counts = [sample_ppp_disk(20, 1.0, np.random.default_rng(i)).K for i in range(400)]
    assert np.mean(counts) == pytest.approx(20, rel=0.05)
    assert np.var(counts) == pytest.approx(20, rel=0.25)


def test_ppp_disk_rejects_bad_input():
    with pytest.raises(ValueError):
        sample_ppp_disk(0, 1.0, np.random.default_rng(0))


def test_path_loss():
    assert path_loss_gain(1.0) == 1.0
    assert path_loss_gain(2.0) == 0.125
    assert path_loss_gain(0.0) == pytest.approx(D_MIN_FACTOR ** -3)
    assert np.isfinite(path_loss_gain(0.0, k0=2.0, d0=3.0))
    assert path_loss_gain(np.array([0.5, 2.0]), exponent=2).tolist() == [4.0, 0.25]


def test_geometry_distances():
    geo = Geometry(np.array([[3.0, 4.0], [1.0, 1.0]]), bs_position=(1.0, 1.0))
    assert geo.distances.tolist() == pytest.approx([np.hypot(2, 3), 0.0])


def test_rayleigh_moments_and_zero_gain():
    cfg = SystemConfig(K=2, L=1, N=1, M=0, f=1)
    rng = np.random.default_rng(0)
    H = np.concatenate([sample_rayleigh(cfg, None, rng, gains=np.array([1.0, 0.0])).H for _ in range(50_000)], axis=0)
    assert np.mean(np.abs(H[:, 0]) ** 2) == pytest.approx(1.0, rel=0.02)
    assert np.all(H[:, 1] == 0)


def test_rayleigh_capacity_matches_quadrature():
    cfg = SystemConfig(K=1, L=1, N=1, M=0, f=1)
    rng = np.random.default_rng(1)
    z = np.array([sample_rayleigh(cfg, None, rng).H[0, 0] for _ in range(100_000)])
    mc = np.mean(np.log2(1 + np.abs(z) ** 2))
    assert mc == pytest.approx(expected_log1p_exponential(1.0, 2.0), rel=0.01)


def test_rayleigh_deterministic():
    cfg = SystemConfig(K=3, L=2, N=1, M=0, f=1)
    geo = sample_ppp_disk(3, 1.0, np.random.default_rng(4), fixed_count=3)
    a = sample_rayleigh(cfg, geo, np.random.default_rng(9)).H
    b = sample_rayleigh(cfg, geo, np.random.default_rng(9)).H
    np.testing.assert_array_equal(a, b)


def test_orth_complement_basic():
    v = orth_complement(np.array([1.0, 0.0]))
    assert v.shape == (2, 1)
    assert abs(abs(v[1, 0]) - 1) < 1e-12 and abs(v[0, 0]) < 1e-12
    with pytest.raises(ValueError):
        orth_complement(np.zeros(3))


@given(seeds, st.integers(2, 5))
def test_orth_complement_orthonormal(seed, L):
    rng = np.random.default_rng(seed)
    h = cn(rng, L)
    Q = orth_complement(h)
    assert Q.shape == (L, L - 1)
    assert np.all(np.abs(Q.conj().T @ h) <= 1e-10 * np.linalg.norm(h))
    np.testing.assert_allclose(Q.conj().T @ Q, np.eye(L - 1), atol=1e-10)
    # same subspace for a scaled h
    Q2 = orth_complement((2 - 3j) * h)
    np.testing.assert_allclose(Q @ Q.conj().T, Q2 @ Q2.conj().T, atol=1e-10)


@given(seeds, st.integers(1, 4))
def test_single_user_is_matched_filter(seed, L):
    H = cn(np.random.default_rng(seed), L, 3)
    u, val = maxmin_beamformer([1], H)
    assert val == pytest.approx(np.linalg.norm(H[:, 1]))
    assert abs(np.vdot(u, H[:, 1] / np.linalg.norm(H[:, 1]))) == pytest.approx(1.0)


def test_full_nulling_forces_direction():
    H = cn(np.random.default_rng(5), 3, 4)
    u, _ = maxmin_beamformer([0, 1], H, [2, 3])
    # the one direction orthogonal to h_2 and h_3
    direction = np.linalg.svd(H[:, [2, 3]].conj().T)[2].conj()[2]
    assert abs(abs(np.vdot(direction, u)) - 1) < 1e-10


def test_infeasible_nulling():
    H = cn(np.random.default_rng(0), 2, 4)
    with pytest.raises(InfeasibleBeamformer):
        maxmin_beamformer([0], H, [1, 2])
    with pytest.raises(ValueError):
        maxmin_beamformer([0], H, [0])
    with pytest.raises(ValueError):
        maxmin_beamformer([], H)


@given(seeds, st.integers(2, 3), st.integers(3, 5))
def test_zero_forcing_and_norm(seed, L, K):
    H = cn(np.random.default_rng(seed), L, K)
    B = tuple(range(K))
    for r in range(1, L):  # nulled-set sizes the nullspace allows
        S, zf = B[: K - r], B[K - r:]
        u = bfv(B, S, H)
        assert np.linalg.norm(u) <= 1 + 1e-9
        for k in zf:
            assert abs(np.vdot(H[:, k], u)) <= 1e-8 * np.linalg.norm(H[:, k])


def test_bfv_example_a_direction():
    # s=1, B={0,1}, S={0}: the beam is h_1-perp, normalized
    H = cn(np.random.default_rng(11), 2, 3)
    u = bfv((0, 1), (0,), H)
    perp = orth_complement(H[:, 1])[:, 0]
    assert abs(abs(np.vdot(perp, u)) - 1) < 1e-10


def test_bfv_requires_subset():
    H = cn(np.random.default_rng(0), 2, 3)
    with pytest.raises(ValueError):
        bfv((0, 1), (2,), H)


def test_phase_convention():
    H = cn(np.random.default_rng(3), 2, 3)
    u, _ = maxmin_beamformer([0, 1, 2], H)
    first = u[np.flatnonzero(np.abs(u) > 1e-14)[0]]
    assert abs(first.imag) < 1e-12 and first.real >= 0


@given(seeds, st.integers(2, 4), st.integers(2, 5))
def test_beats_matched_filter_to_worst_user(seed, L, n):
    H = cn(np.random.default_rng(seed), L, n)
    _, val = maxmin_beamformer(range(n), H)
    assert val >= mrt_worst_user(range(n), H) * (1 - 1e-9)


@given(seeds, st.integers(2, 3))
def test_enlarging_target_cannot_help(seed, L):
    H = cn(np.random.default_rng(seed), L, 5)
    vals = [maxmin_beamformer(range(n), H)[1] for n in range(1, 6)]
    assert all(b <= a * (1 + 1e-6) for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("n_users", [2, 3])
def test_matches_grid_oracle(n_users):
    rng = np.random.default_rng(100 + n_users)
    for _ in range(10):
        H = cn(rng, 2, n_users)
        _, val = maxmin_beamformer(range(n_users), H)
        oracle = grid_maxmin_c2(H, 400, 400)
        assert val >= 0.98 * oracle


def test_beam_cache_memoizes():
    H = cn(np.random.default_rng(0), 2, 3)
    bc = BeamCache(H)
    assert bc.bfv((0, 1, 2), (0, 1)) is bc.bfv((0, 1, 2), (0, 1))
    assert bc.multicast_gain((0, 1)) == pytest.approx(maxmin_beamformer([0, 1], H)[1] ** 2)
