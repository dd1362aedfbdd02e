import numpy as np
import pytest
from scipy import stats

from remdyn.dynamics import (DynamicsError, HorizonError, centered_clock, centering_at, chain_diagnostics,
                             correlation_paths, rescaled_clock, run_trajectory, state_at)
from remdyn.landscape import Landscape, dist, g_delta
from remdyn.rng import disorder_seed, path_seed
from remdyn.scales import ModelParams, beta_c, solve_scales


def _land(n=12, beta=1.2, eps=0.5, seed=1):
    return Landscape.direct(ModelParams(n=n, beta=beta, eps=eps), seed)


def test_single_step_trajectory():
    tr = run_trajectory(_land(), 1, traj_seed=4)
    assert tr.clock.shape == (2,)
    assert dist(tr.visits[0], tr.visits[1]) == 1


def test_clock_increments_and_walk():
    land = _land()
    tr = run_trajectory(land, 500, traj_seed=9)
    inc = np.diff(np.concatenate([[0.0], tr.rclock]))
    expected = np.array([land.rescaled(int(x)) for x in tr.visits]) * tr.marks
    assert np.allclose(inc, expected, rtol=1e-9)
    assert np.all(np.diff(tr.rclock) > 0) and np.all(tr.marks > 0)
    assert all(dist(a, b) == 1 for a, b in zip(tr.visits[:-1], tr.visits[1:]))
    assert np.allclose(tr.clock, tr.rclock * land.scales.c_n)


def test_replay_is_bit_identical():
    land = _land()
    a = run_trajectory(land, 200, traj_seed=5)
    b = run_trajectory(land, 200, traj_seed=5)
    assert np.array_equal(a.visits, b.visits) and np.array_equal(a.rclock, b.rclock)


def test_flat_landscape_clock_law_of_large_numbers():
    land = _land(beta=0.0)
    tr = run_trajectory(land, 100_000, traj_seed=1)
    assert tr.clock[-1] / 100_001 == pytest.approx(1.0, rel=0.01)


def test_parity_after_even_steps():
    tr = run_trajectory(_land(), 1000, traj_seed=2)
    par = np.array([bin(int(x)).count("1") & 1 for x in tr.visits])
    assert np.all(par[::2] == par[0]) and np.all(par[1::2] != par[0])


def test_state_at_semantics():
    land = _land()
    sc = land.scales
    tr = run_trajectory(land, 50, traj_seed=3)
    r = tr.rclock
    assert state_at(tr, sc, 0.0) == tr.visits[0]
    # the walk sits at J(0) on [0, S(0)) and at J(k) on [S(k-1), S(k))
    assert state_at(tr, sc, r[0] * (1 - 1e-12)) == tr.visits[0]
    assert state_at(tr, sc, r[0] * (1 + 1e-12)) == tr.visits[1]
    assert state_at(tr, sc, r[10]) == tr.visits[11]
    t1 = 0.5 * (r[4] + r[5])
    t2 = r[5] * (1 - 1e-12)
    assert state_at(tr, sc, t1) == state_at(tr, sc, t2)
    with pytest.raises(HorizonError):
        state_at(tr, sc, r[-1] * 2)
    with pytest.raises(DynamicsError):
        state_at(tr, sc, -1.0)


def test_rescaled_clock_index_and_monotone():
    land = _land()
    sc = land.scales
    tr = run_trajectory(land, 2 * int(sc.a_n), traj_seed=3)
    assert rescaled_clock(tr, sc, 0.0) == tr.rclock[0]
    ts = np.linspace(0, 2, 41)
    vals = [rescaled_clock(tr, sc, t) for t in ts]
    assert all(a <= b for a, b in zip(vals, vals[1:]))
    with pytest.raises(HorizonError):
        rescaled_clock(tr, sc, 3.0)


def test_centering_matches_neighbour_sum():
    land = _land(n=8)
    sc = land.scales
    tr = run_trajectory(land, 40, traj_seed=6, centering=True)
    acc = 0.0
    for k in range(40):
        x = int(tr.visits[k])
        acc += np.mean([float(g_delta(land.rescaled(x ^ (1 << i)), 1.0)) for i in range(8)])
        assert tr.centering[k + 1] == pytest.approx(acc, rel=1e-12)
    t = 30 / sc.a_n
    assert centered_clock(tr, sc, t) == pytest.approx(rescaled_clock(tr, sc, t) - centering_at(tr, sc, t))
    plain = run_trajectory(land, 40, traj_seed=6)
    with pytest.raises(DynamicsError):
        centering_at(plain, sc, t)


def test_marks_exchangeable():
    # with the chain and landscape fixed, permuting the marks leaves the law of S(k) unchanged
    land = _land(n=10)
    k = 6
    orig, perm = [], []
    for seed in range(3000):
        tr = run_trajectory(land, k, traj_seed=seed)
        g = np.array([land.rescaled(int(x)) for x in tr.visits])
        orig.append(float(np.sum(g * tr.marks)))
        perm.append(float(np.sum(g * tr.marks[::-1])))
    assert stats.ks_2samp(orig, perm).pvalue > 0.01


def test_gibbs_start_guard():
    land = Landscape.direct(ModelParams(n=30, beta=1.0, eps=0.5), 1)
    with pytest.raises(DynamicsError):
        run_trajectory(land, 5, start_law="gibbs")
    with pytest.raises(DynamicsError):
        run_trajectory(_land(), 5, start_law="other")
    with pytest.raises(DynamicsError):
        run_trajectory(_land(), 0)


def test_gibbs_start_follows_gibbs_weights():
    land = _land(n=6, beta=1.5)
    w = land.values() / land.values().sum()
    starts = np.array([run_trajectory(land, 1, start_law="gibbs", traj_seed=s).visits[0] for s in range(20000)])
    counts = np.bincount(starts.astype(int), minlength=64)
    mask = w * 20000 > 20
    chi = stats.chisquare(counts[mask], w[mask] / w[mask].sum() * counts[mask].sum())
    assert chi.pvalue > 0.001


def test_rescaled_clock_heavy_tail_n20():
    p = ModelParams(n=20, beta=beta_c(0.5) / 0.6, eps=0.5)
    sc = solve_scales(p)
    S = []
    for d in range(10_000):
        land = Landscape.direct(p, disorder_seed(31, d), sc)
        tr = run_trajectory(land, int(sc.a_n), traj_seed=path_seed(31, d, 0))
        S.append(rescaled_clock(tr, sc, 1.0))
    S = np.array(S)
    assert 0.05 <= np.median(S) <= 20
    us = np.geomspace(5, 50, 8)
    tail = np.array([(S > u).mean() for u in us])
    slope = np.polyfit(np.log(us), np.log(tail), 1)[0]
    assert -0.7 <= slope <= -0.5


def test_centering_concentrates_on_critical_line():
    # eps = 1/2 critical scale at n = 24: a_n ~ 4.4e4 steps per unit time
    p = ModelParams(n=24, beta=beta_c(0.5), eps=0.5, theta=0.0)
    sc = solve_scales(p)
    steps = int(sc.a_n)
    curves = []
    for d in range(500):
        land = Landscape.direct(p, disorder_seed(41, d), sc)
        tr = run_trajectory(land, steps, traj_seed=path_seed(41, d, 0), centering=True)
        curves.append(tr.centering)
    m_hat = np.mean([c[steps] for c in curves])
    ts = np.arange(steps + 1) / sc.a_n
    sup = np.array([np.max(np.abs(c / m_hat - ts)) for c in curves])
    assert np.mean(sup > 0.2) <= 0.10


def test_chain_diagnostics_shapes_and_a2_trend():
    beta = beta_c(0.5) / 0.6
    sig = []
    for n in (12, 16, 20):
        p = ModelParams(n=n, beta=beta, eps=0.5)
        sc = solve_scales(p)
        vals = [chain_diagnostics(Landscape.direct(p, disorder_seed(5, d), sc),
                                  [path_seed(5, d, q) for q in range(5)])[:, 1].mean() for d in range(40)]
        sig.append(np.mean(vals))
    assert sig[0] > sig[1] > sig[2]


def test_correlation_paths_validation():
    land = _land()
    with pytest.raises(DynamicsError):
        correlation_paths(land, [1], [1.0], [0.0])
    with pytest.raises(DynamicsError):
        correlation_paths(land, [1], [1.0, 2.0], [1.0])
    with pytest.raises(HorizonError):
        correlation_paths(land, [1, 2], [50.0], [1.0], max_steps=10)
