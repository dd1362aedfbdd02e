import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from remdyn.landscape import PoissonCascade
from remdyn.limits import (DepthError, LevyTail, LimitError, aging_prediction, asl_cdf, critical_prediction,
                           critical_prefactor, levy_tail, moment_predictions, nu_int_first_moment,
                           reg_inc_beta, stationary_corr)
from remdyn.scales import ModelParams, beta_c, solve_scales

LEVY_INT_HALF = 0.886226925452758013649083741670572591399  # 0.5 sqrt(pi), mpmath 40 digits
CRITICAL_EQUAL_TIMES = 0.4697186393498257
SCALE_RATIO_LIMIT = 0.3388303758


def asl_quadrature(alpha, u):
    # substitution y = x^alpha removes the endpoint singularity at 0
    mpmath.mp.dps = 30
    a = mpmath.mpf(alpha)
    f = lambda y: (1 - y ** (1 / a)) ** (-a)
    return float(mpmath.sin(a * mpmath.pi) / mpmath.pi / a * mpmath.quad(f, [0, mpmath.mpf(u) ** a]))


def test_asl_endpoints_and_symmetry():
    for a in (0.2, 0.5, 0.8):
        assert asl_cdf(a, 0.0) == 0.0
        assert asl_cdf(a, 1.0) == 1.0
    assert asl_cdf(0.5, 0.5) == pytest.approx(0.5, abs=1e-14)


def test_asl_arcsine_closed_form():
    assert asl_cdf(0.5, 0.25) == pytest.approx(1 / 3, abs=1e-10)
    for u in np.linspace(0.01, 0.99, 25):
        assert asl_cdf(0.5, u) == pytest.approx(2 / math.pi * math.asin(math.sqrt(u)), abs=1e-12)


def test_asl_against_quadrature():
    for a in (0.2, 0.5, 0.8):
        for u in (0.03, 0.31, 0.5, 0.77, 0.97):
            assert asl_cdf(a, u) == pytest.approx(asl_quadrature(a, u), abs=1e-10)


def test_asl_vectorised():
    u = np.linspace(0, 1, 11)
    out = asl_cdf(0.3, u)
    assert out.shape == u.shape
    assert np.all(np.diff(out) > 0)


@pytest.mark.parametrize("a", [0.0, 1.0, -0.5, 1.5])
def test_asl_rejects_degenerate_alpha(a):
    with pytest.raises(LimitError):
        asl_cdf(a, 0.5)


def test_asl_rejects_out_of_range_u():
    with pytest.raises(LimitError):
        asl_cdf(0.5, 1.5)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_asl_monotone(a, u, v):
    lo, hi = sorted((u, v))
    assert asl_cdf(a, lo) <= asl_cdf(a, hi) + 1e-15


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(0.001, 0.999))
def test_reg_inc_beta_matches_scipy(a, b, x):
    from scipy import special
    assert reg_inc_beta(a, b, x) == pytest.approx(special.betainc(a, b, x), abs=1e-12)


def test_aging_prediction_depends_on_ratio():
    assert aging_prediction(0.6, 1.0, 1.0) == pytest.approx(aging_prediction(0.6, 7.0, 7.0), abs=1e-15)
    assert aging_prediction(0.6, 0.0, 1.0) == 0.0
    with pytest.raises(LimitError):
        aging_prediction(0.6, 1.0, 0.0)


def test_levy_intermediate_values():
    tail = LevyTail.intermediate(0.5)
    assert levy_tail(tail, 1.0) == pytest.approx(LEVY_INT_HALF, rel=1e-14)
    for a in (0.3, 0.6, 0.9):
        t = LevyTail.intermediate(a)
        assert levy_tail(t, 2.4) / levy_tail(t, 1.2) == pytest.approx(2 ** (-a), rel=1e-13)
    assert levy_tail(LevyTail.intermediate(1.0), 4.0) == 0.25
    with pytest.raises(LimitError):
        levy_tail(tail, 0.0)


def test_levy_extreme_depth_error():
    casc = PoissonCascade.sample(0.5, 100, seed=1)
    tail = LevyTail.extreme(casc)
    assert tail.kind == "extreme"
    with pytest.raises(DepthError) as info:
        levy_tail(tail, 1e-3)
    assert info.value.required == tail.required_depth(1e-3)
    assert tail.required_depth(1e-3) > 100


def test_levy_extreme_mean_and_remainder():
    vals = []
    for seed in range(1000):
        tail = LevyTail.extreme(PoissonCascade.sample(0.5, 5_000, seed=seed))
        vals.append(levy_tail(tail, 0.05))
        assert 0 <= tail.remainder(0.05) < 1e-6
    assert np.mean(vals) == pytest.approx(0.05 ** -0.5 * LEVY_INT_HALF, rel=0.05)


def test_nu_int_first_moment_bounded():
    vals = [nu_int_first_moment(0.6, 2.0 ** -k) for k in range(1, 60, 4)]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 0.36 * math.gamma(0.6) / 0.4 + 1e-12


def test_stationary_corr_basic():
    casc = PoissonCascade.sample(0.5, 10_000, seed=3)
    assert stationary_corr(casc, 0.0) == 1.0
    s = np.geomspace(1e-4, 1e3, 30)
    v = [stationary_corr(casc, x) for x in s]
    assert all(a > b for a, b in zip(v, v[1:]))
    assert v[-1] < 1e-3
    single = PoissonCascade(Gammas=np.array([0.5 ** 0.5]), gammas=np.array([2.0]), alpha=0.5)
    assert stationary_corr(single, 2.0) == pytest.approx(math.exp(-1), abs=1e-15)
    with pytest.raises(LimitError):
        stationary_corr(PoissonCascade.sample(1.0, 10, seed=1), 1.0)


def test_critical_prediction_values():
    b = math.sqrt(2 * math.log(2))
    assert critical_prediction(0.0, b, 1.0, 1.0) == pytest.approx(CRITICAL_EQUAL_TIMES, rel=1e-14)
    assert critical_prediction(0.0, b, 0.0, 1.0) == 0.0
    r = critical_prediction(0.3, b, 5.0, 2.0) / critical_prediction(0.3, b, 1.0, 2.0)
    assert r == pytest.approx(math.log1p(2.5) / math.log1p(0.5), rel=1e-14)
    pre = [critical_prefactor(th) for th in (1.0, 2.0, 3.0)]
    assert pre == pytest.approx([0.72094, 0.13850, 0.011125], rel=1e-3)
    assert pre[0] > pre[1] > pre[2]
    with pytest.raises(LimitError):
        critical_prediction(0.0, b, 1.0, 0.0)


def test_moment_predictions():
    p = ModelParams(n=64, beta=beta_c(1.0), eps=1.0, theta=0.0)
    sc = solve_scales(p)
    mp = moment_predictions(p, sc)
    assert mp.scale_ratio_limit == pytest.approx(SCALE_RATIO_LIMIT, rel=1e-9)
    assert mp.m1_critical / mp.m1_bound == pytest.approx(0.5 * sc.a_n, rel=1e-12)
    p2 = ModelParams(n=40, beta=beta_c(0.5), eps=0.5, theta=-0.7)
    mp2 = moment_predictions(p2, solve_scales(p2))
    from remdyn.scales import norm_cdf
    assert mp2.m1_critical / mp2.m1_bound == pytest.approx(norm_cdf(-0.7) * solve_scales(p2).a_n, rel=1e-12)
    off = ModelParams(n=20, beta=1.0, eps=0.5)
    assert moment_predictions(off, solve_scales(off)).m1_critical is None


def test_scale_ratio_converges_n256():
    p = ModelParams(n=256, beta=beta_c(1.0), eps=1.0, theta=0.0)
    mp = moment_predictions(p, solve_scales(p))
    assert abs(mp.scale_ratio / mp.scale_ratio_limit - 1) <= 0.05
