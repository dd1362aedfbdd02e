import math

import numpy as np
import pytest

from remdyn.estimators import (Ensemble, EstimatorError, correlation_grid, critical_sweep, default_workers,
                               estimate_nojump, estimate_overlap, estimates_from_grid, quenched_nojump,
                               run_grid, two_level)
from remdyn.scales import ModelParams, beta_c

AGING = ModelParams(n=12, beta=beta_c(0.5) / 0.6, eps=0.5)


def test_two_level_known_values():
    v = np.array([[1.0, 0.0, 1.0, 0.0], [1.0, 1.0, 1.0, 1.0], [0.0, 0.0, 0.0, 0.0]])
    mean, se, sp, sd = two_level(v)
    assert mean == pytest.approx(0.5)
    within = np.mean([v[0].var(ddof=1), 0.0, 0.0])
    assert sp == pytest.approx(math.sqrt(within / 12))
    between = v.mean(axis=1).var(ddof=1) - within / 4
    assert sd == pytest.approx(math.sqrt(between / 3))
    assert se == pytest.approx(math.hypot(sp, sd))
    with pytest.raises(EstimatorError):
        two_level(np.zeros(4))


def test_flat_landscape_closed_form():
    p = ModelParams(n=10, beta=0.0, eps=0.5)
    ens = Ensemble(p, paths=4000, disorders=1, seed=3, workers=1)
    s = 1.0 / ens.scales.c_n
    est = estimate_nojump(ens, 0.0, s)
    assert abs(est.mean - math.exp(-1)) <= 3 * est.stderr


def test_short_lag_limit():
    ens = Ensemble(AGING, paths=200, disorders=4, seed=1, workers=1)
    est = estimate_nojump(ens, 1.0, 1e-12)
    assert est.mean >= 0.99


def test_pathwise_ordering_and_monotonicity():
    ens = Ensemble(AGING, paths=100, disorders=3, seed=2, workers=1)
    ss = [0.1, 0.5, 1.0, 3.0]
    out = run_grid(ens, [1.0] * 4, ss, [0.5] * 4)
    # no jump in the window implies the same vertex, hence overlap success
    assert np.all(out.overlap >= out.nojump)
    # a longer window can only contain more jumps
    assert np.all(np.diff(out.nojump.astype(int), axis=2) <= 0)
    assert np.all(np.diff(out.conditional, axis=2) <= 1e-15)


def test_conditional_agrees_with_indicator():
    ens = Ensemble(AGING, paths=400, disorders=5, seed=4, workers=1)
    out = run_grid(ens, [1.0, 2.0], [1.0, 0.5])
    for g in range(2):
        nj, _ = estimates_from_grid(out, g, "indicator")
        rb, ov = estimates_from_grid(out, g, "conditional")
        assert ov is None
        assert abs(nj.mean - rb.mean) <= 3 * math.hypot(nj.stderr, rb.stderr)
        # conditioning never adds path noise
        assert rb.stderr_path <= nj.stderr_path


def test_overlap_close_to_nojump():
    ens = Ensemble(AGING, paths=200, disorders=5, seed=5, workers=1)
    nj = estimate_nojump(ens, 1.0, 1.0)
    ov = estimate_overlap(ens, 1.0, 1.0, 0.5)
    assert ov.mean >= nj.mean
    assert ov.rho == 0.5 and ov.kind == "overlap"


def test_determinism_across_worker_counts():
    e1 = Ensemble(AGING, paths=30, disorders=4, seed=9, workers=1)
    e2 = Ensemble(AGING, paths=30, disorders=4, seed=9, workers=2)
    a = correlation_grid(e1, [(1.0, 1.0), (2.0, 0.5, 0.3)])
    b = correlation_grid(e2, [(1.0, 1.0), (2.0, 0.5, 0.3)])
    assert [x[0].mean for x in a] == [x[0].mean for x in b]
    assert [x[1].mean for x in a] == [x[1].mean for x in b]


def test_quenched_matches_single_disorder_ensemble():
    ens = Ensemble(AGING, paths=50, disorders=1, seed=6, workers=1)
    land = ens.build_landscape(0)
    q = quenched_nojump(land, 1.0, 1.0, paths=50, seed=6)
    e = estimate_nojump(ens, 1.0, 1.0)
    assert q.mean == e.mean


def test_validation():
    with pytest.raises(EstimatorError):
        Ensemble(AGING, paths=0, disorders=1)
    with pytest.raises(EstimatorError):
        Ensemble(AGING, paths=1, disorders=1, landscape="other")
    ens = Ensemble(AGING, paths=2, disorders=1, workers=1)
    with pytest.raises(EstimatorError):
        estimate_nojump(ens, 1.0, 0.0)
    with pytest.raises(EstimatorError):
        estimate_nojump(ens, -1.0, 1.0)
    with pytest.raises(EstimatorError):
        estimate_overlap(ens, 1.0, 1.0, 1.0)
    with pytest.raises(EstimatorError):
        correlation_grid(ens, [])
    with pytest.raises(EstimatorError):
        critical_sweep(ens, 1.0, 1.0)
    off = ModelParams(n=12, beta=1.0, eps=0.5, theta=0.0)
    with pytest.raises(EstimatorError):
        critical_sweep(Ensemble(off, paths=2, disorders=1), 1.0, 1.0)


def test_critical_sweep_runs():
    p = ModelParams(n=10, beta=beta_c(1.0), eps=1.0, theta=0.0)
    cs = critical_sweep(Ensemble(p, paths=50, disorders=2, seed=1, workers=1), 1.0, 1.0)
    assert cs.prediction == pytest.approx(0.4697186393498257, rel=1e-12)
    assert cs.scaled == pytest.approx(math.sqrt(10) * cs.estimate.mean)
    assert cs.ratio > 0


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("REMDYN_THREADS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("REMDYN_THREADS", "x")
    with pytest.raises(EstimatorError):
        default_workers()
