"""Closed-form limit objects of the dynamics.

The generalized arcsine law, the stable Lévy tails nu^int and nu^ext, the
stationary correlation of the extreme-scale limit, the critical-line constant
and the finite-n moment/scaling predictions for g_1(gamma_n(x)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from .landscape import PoissonCascade
from .scales import ModelParams, Scales, norm_cdf

SQRT2PI = math.sqrt(2.0 * math.pi)


class LimitError(ValueError):
    pass


class DepthError(LimitError):
    """The cascade is too shallow for the requested argument."""

    def __init__(self, msg: str, required: int):
        super().__init__(msg)
        self.required = required


# --- generalized arcsine law ---------------------------------------------------------

_CF_EPS = 1e-16
_CF_TINY = 1e-300


def _betacf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = _CF_TINY if abs(d) < _CF_TINY else d
        c = 1.0 + aa / c
        c = _CF_TINY if abs(c) < _CF_TINY else c
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise LimitError("incomplete beta continued fraction did not converge")


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0, 0 <= x <= 1."""
    if not (a > 0 and b > 0):
        raise LimitError("incomplete beta needs a, b > 0")
    if not 0.0 <= x <= 1.0:
        raise LimitError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    lbeta = special.gammaln(a) + special.gammaln(b) - special.gammaln(a + b)
    front = math.exp(a * math.log(x) + b * math.log1p(-x) - lbeta)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def asl_cdf(alpha: float, u):
    """Asl_alpha(u) = (sin(alpha pi)/pi) int_0^u (1-x)^(-alpha) x^(alpha-1) dx = I_u(alpha, 1-alpha)."""
    if not 0.0 < alpha < 1.0:
        raise LimitError(f"the arcsine law needs 0 < alpha < 1, got {alpha}")
    if np.ndim(u) == 0:
        return reg_inc_beta(alpha, 1.0 - alpha, float(u))
    return np.array([reg_inc_beta(alpha, 1.0 - alpha, float(v)) for v in np.ravel(u)]).reshape(np.shape(u))


def aging_prediction(alpha: float, t: float, s: float) -> float:
    """Limit of the no-jump correlation on intermediate scales: Asl_alpha(t/(t+s))."""
    if t < 0 or not s > 0:
        raise LimitError("need t >= 0 and s > 0")
    return asl_cdf(alpha, t / (t + s))


# --- Lévy tails ------------------------------------------------------------------------

@dataclass(frozen=True)
class LevyTail:
    """nu^int (``cascade is None``) or the random nu^ext built on a cascade."""

    alpha: float
    cascade: Optional[PoissonCascade] = None
    eps_bar: float = 1.0

    def __post_init__(self):
        if self.cascade is None:
            if not 0.0 < self.alpha <= 1.0:
                raise LimitError(f"nu^int needs 0 < alpha <= 1, got {self.alpha}")
        elif not self.eps_bar > 0:
            raise LimitError("eps_bar must be > 0")

    @classmethod
    def intermediate(cls, alpha: float) -> "LevyTail":
        return cls(alpha=float(alpha))

    @classmethod
    def extreme(cls, cascade: PoissonCascade, eps_bar: float = 1.0) -> "LevyTail":
        return cls(alpha=cascade.alpha, cascade=cascade, eps_bar=float(eps_bar))

    @property
    def kind(self) -> str:
        return "intermediate" if self.cascade is None else "extreme"

    def required_depth(self, u: float) -> int:
        """Smallest depth k with E gamma_k = k^(-1/alpha) below u/40."""
        return int(math.ceil((40.0 / u) ** self.alpha))

    def remainder(self, u: float) -> float:
        """E[eps_bar sum_{k > count} e^{-u/gamma_k} | Gamma_count].

        Beyond the last mark the Gamma's form a unit-rate Poisson process, so
        the conditional mean is eps_bar * int_{Gamma_K}^inf exp(-u x^{1/alpha}) dx.
        """
        if self.cascade is None:
            return 0.0
        a = self.alpha
        z = u * self.cascade.Gammas[-1] ** (1.0 / a)
        return float(self.eps_bar * a * u ** (-a) * special.gamma(a) * special.gammaincc(a, z))


def levy_tail(tail: LevyTail, u: float) -> float:
    if not u > 0:
        raise LimitError("u must be > 0")
    a = tail.alpha
    if tail.cascade is None:
        if a == 1.0:
            return 1.0 / u
        return u ** (-a) * a * math.gamma(a)
    g = tail.cascade.gammas
    if not g[-1] < u / 40.0:
        need = tail.required_depth(u)
        raise DepthError(f"cascade depth {g.shape[0]} too shallow for u={u}; need about {need} marks", need)
    return float(tail.eps_bar * np.sum(np.exp(-u / g)))


def ext_tail_mean(alpha: float, u: float, eps_bar: float = 1.0) -> float:
    """E nu^ext(u, inf) = eps_bar u^{-alpha} alpha Gamma(alpha)."""
    return eps_bar * u ** (-alpha) * alpha * math.gamma(alpha)


def nu_int_first_moment(alpha: float, delta: float) -> float:
    """int_delta^1 v nu^int(dv) for alpha < 1; bounded as delta -> 0."""
    if not 0.0 < alpha < 1.0:
        raise LimitError("need 0 < alpha < 1")
    return alpha * alpha * math.gamma(alpha) * (1.0 - delta ** (1.0 - alpha)) / (1.0 - alpha)


# --- stationary correlation ---------------------------------------------------------------

def stationary_corr(cascade: PoissonCascade, s: float) -> float:
    """C^sta(s) = sum_k (gamma_k / sum gamma) e^{-s/gamma_k} over the materialized marks."""
    if cascade.alpha >= 1.0:
        raise LimitError("stationary correlation needs alpha < 1 (summable marks)")
    if s < 0:
        raise LimitError("s must be >= 0")
    g = cascade.gammas
    if s == 0:
        return 1.0
    w = g / g.sum()
    return float(np.sum(w * np.exp(-s / g)))


def stationary_corr_remainder(cascade: PoissonCascade) -> float:
    """Relative weight bound of the unmaterialized marks, sum_{k>count} gamma_k / sum gamma."""
    return cascade.mass_remainder() / float(cascade.gammas.sum())


# --- critical line --------------------------------------------------------------------------

def critical_prefactor(theta: float) -> float:
    return math.exp(-0.5 * theta * theta) / norm_cdf(theta)


def critical_prediction(theta: float, beta: float, t: float, s: float) -> float:
    """lim sqrt(n) C_n(t, s) = (e^{-theta^2/2}/Phi(theta)) log(1 + t/s) / (beta sqrt(2 pi))."""
    if not s > 0 or t < 0 or not beta > 0:
        raise LimitError("need s > 0, t >= 0 and beta > 0")
    return critical_prefactor(theta) * math.log1p(t / s) / (beta * SQRT2PI)


# --- moment and scaling predictions ---------------------------------------------------------

@dataclass(frozen=True)
class MomentPredictions:
    m1_bound: float
    m1_critical: Optional[float]
    scale_ratio: float
    scale_ratio_limit: Optional[float]


def moment_predictions(params: ModelParams, scales: Scales) -> MomentPredictions:
    """E g_1 ~ e^{n beta^2/2}/c_n, the critical a_n E g_1 and sqrt(n) c_n/(a_n e^{n beta^2/2})."""
    n, beta = params.n, params.beta
    half = 0.5 * n * beta * beta
    log_a = math.log(scales.a_n)
    m1_bound = math.exp(half - scales.log_c_n)
    ratio = math.exp(0.5 * math.log(n) + scales.log_c_n - log_a - half)
    if params.critical:
        th = params.theta
        m1c = norm_cdf(th) * math.exp(log_a + half - scales.log_c_n)
        lim = math.exp(-0.5 * th * th) / (beta * SQRT2PI)
    else:
        m1c = lim = None
    return MomentPredictions(m1_bound=m1_bound, m1_critical=m1c, scale_ratio=ratio, scale_ratio_limit=lim)
