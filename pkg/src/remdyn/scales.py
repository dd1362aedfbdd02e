"""Deterministic scaling quantities of the REM random hopping dynamics.

Given the hypercube dimension ``n``, the inverse temperature ``beta`` and a
time-scale family, resolve the number of steps ``a_n`` and the time scale
``c_n`` tied together by ``a_n * P(tau_n(x) >= c_n) = 1``, plus the Gaussian
extreme-value quantities ``B_n``, ``alpha_n`` and the jump-chain mixing time.

Finite-n pinning: ``a_n = 2**(eps*n)`` on intermediate scales and
``a_n = eps_bar * 2**n`` on extreme scales. On the critical line (``theta``
given) ``c_n = exp(beta*sqrt(n)*(sqrt(n)*beta - theta))`` instead, and ``a_n``
follows from the defining identity.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

from scipy import optimize, special

LOG2 = math.log(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)


class ScaleError(ValueError):
    """Invalid model parameters or an unresolvable scale."""


# --- Gaussian tail helpers ------------------------------------------------

def norm_sf(x: float) -> float:
    """Upper tail 1 - Phi(x), accurate in relative terms for large x."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def log_norm_sf(x: float) -> float:
    return float(special.log_ndtr(-x))


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / SQRT2PI


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def norm_isf(p: float) -> float:
    """Upper-tail quantile Q(p), i.e. 1 - Phi(Q(p)) = p, for 0 < p < 1.

    Starts from scipy's ``ndtri`` and polishes with a bracketed root search
    on the log tail, which keeps ~1e-13 accuracy far into the tail.
    """
    if not 0.0 < p < 1.0:
        raise ScaleError(f"tail probability must lie in (0, 1), got {p}")
    x0 = -float(special.ndtri(p))
    logp = math.log(p)
    f = lambda x: log_norm_sf(x) - logp
    lo, hi = x0 - 1e-3 - 1e-6 * abs(x0), x0 + 1e-3 + 1e-6 * abs(x0)
    while f(lo) < 0.0:
        lo -= 1.0
    while f(hi) > 0.0:
        hi += 1.0
    return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


# --- model parameters -----------------------------------------------------

@dataclass(frozen=True)
class ModelParams:
    """n, beta and the time-scale family.

    Exactly one of ``eps`` (intermediate scale) and ``eps_bar`` (extreme
    scale) is set. ``beta = 0`` is accepted as a diagnostic (flat landscape).
    """

    n: int
    beta: float
    eps: Optional[float] = None
    eps_bar: Optional[float] = None
    theta: Optional[float] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ScaleError(f"n must be an integer >= 2, got {self.n}")
        if not (self.beta >= 0.0 and math.isfinite(self.beta)):
            raise ScaleError(f"beta must be finite and >= 0, got {self.beta}")
        if (self.eps is None) == (self.eps_bar is None):
            raise ScaleError("exactly one of eps (intermediate) or eps_bar (extreme) is required")
        if self.eps is not None and not 0.0 < self.eps <= 1.0:
            raise ScaleError(f"eps must lie in (0, 1], got {self.eps}")
        if self.eps_bar is not None and not self.eps_bar > 0.0:
            raise ScaleError(f"eps_bar must be > 0, got {self.eps_bar}")
        if self.theta is not None and not math.isfinite(self.theta):
            raise ScaleError("theta must be finite")

    @property
    def extreme(self) -> bool:
        return self.eps_bar is not None

    @property
    def scale_eps(self) -> float:
        """The exponent eps of the scale (1 on extreme scales)."""
        return 1.0 if self.extreme else float(self.eps)

    @property
    def critical(self) -> bool:
        return self.theta is not None

    @property
    def sigma(self) -> float:
        """beta * sqrt(n), the log-scale of the landscape."""
        return self.beta * math.sqrt(self.n)


@dataclass(frozen=True)
class Scales:
    a_n: float
    c_n: float
    log_c_n: float
    alpha_eps: float
    beta_c_eps: float
    B_n: float
    A_n: float
    alpha_n: float
    Bbar_n: float
    theta_n_mix: int

    def as_dict(self) -> dict:
        return asdict(self)


def beta_c(eps: float) -> float:
    if not 0.0 < eps <= 1.0:
        raise ScaleError(f"eps must lie in (0, 1], got {eps}")
    return math.sqrt(eps * 2.0 * LOG2)


def alpha_of(eps: float, beta: float) -> float:
    if not beta > 0.0:
        raise ScaleError(f"beta must be > 0, got {beta}")
    return beta_c(eps) / beta


def mixing_steps(n: int) -> int:
    """theta_n = 2 * ceil(1.5 (n-1) log 2 / |log(1 - 2/n)|); even, >= 2."""
    if n <= 2:
        raise ScaleError("mixing_steps needs n >= 3")
    inner = 1.5 * (n - 1) * LOG2 / abs(math.log(1.0 - 2.0 / n))
    return 2 * math.ceil(inner)


def _solve_B(log_a: float) -> float:
    # a_n phi(B)/B = 1  <=>  log a_n - B^2/2 - log(sqrt(2 pi)) - log B = 0 (decreasing in B)
    f = lambda b: log_a - 0.5 * b * b - math.log(SQRT2PI) - math.log(b)
    lo = 1.0
    hi = 3.0 * math.sqrt(max(log_a, 0.0)) + 3.0
    while f(lo) < 0.0:
        lo *= 0.5
        if lo < 1e-300:
            raise ScaleError("cannot bracket B_n")
    return optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=300)


def solve_scales(params: ModelParams) -> Scales:
    n, beta = params.n, params.beta
    sq = math.sqrt(n)
    if params.critical:
        if beta == 0.0:
            raise ScaleError("critical mode requires beta > 0")
        Bbar = sq * beta - params.theta
        log_c = beta * sq * Bbar
        log_a = -log_norm_sf(Bbar)
        a_n = math.exp(log_a)
    else:
        if params.extreme:
            log_a = math.log(params.eps_bar) + n * LOG2
            a_n = params.eps_bar * 2.0**n if n < 1000 else math.exp(log_a)
        else:
            log_a = params.eps * n * LOG2
            a_n = 2.0 ** (params.eps * n) if params.eps * n < 1000 else math.exp(log_a)
        if not a_n > 1.0:
            raise ScaleError(f"a_n = {a_n} must exceed 1")
        Bbar = norm_isf(1.0 / a_n) if a_n < 1e300 else math.sqrt(2.0 * log_a)
        log_c = beta * sq * Bbar
    if not a_n > 1.0:
        raise ScaleError(f"a_n = {a_n} must exceed 1")
    B = _solve_B(log_a)
    bc = beta_c(params.scale_eps)
    alpha_eps = bc / beta if beta > 0.0 else math.inf
    alpha_n = B / (beta * sq) if beta > 0.0 else math.inf
    theta_mix = mixing_steps(n) if n >= 3 else 2
    c_n = math.exp(log_c) if log_c < 709.0 else math.inf
    vals = (a_n, log_c, B, Bbar)
    if not all(math.isfinite(v) for v in vals):
        raise ScaleError(f"non-finite scale for {params}")
    return Scales(a_n=a_n, c_n=c_n, log_c_n=log_c, alpha_eps=alpha_eps, beta_c_eps=bc,
                  B_n=B, A_n=1.0 / B, alpha_n=alpha_n, Bbar_n=Bbar, theta_n_mix=theta_mix)


# --- landscape tail function h_n and its inverse ----------------------------

def h_n(scales: Scales, params: ModelParams, v: float) -> float:
    """h_n(v) = a_n * P(tau_n(x) > c_n v)."""
    if not v > 0.0:
        raise ScaleError("h_n needs v > 0")
    x = (scales.log_c_n + math.log(v)) / params.sigma
    return scales.a_n * norm_sf(x)


def g_n_inv(scales: Scales, params: ModelParams, u: float) -> float:
    """Inverse of h_n by monotone bisection in log v."""
    if not u > 0.0:
        raise ScaleError("g_n_inv needs u > 0")
    v_min = math.exp(-scales.log_c_n)
    alpha = scales.alpha_n if math.isfinite(scales.alpha_n) and scales.alpha_n > 0 else 1.0
    v_max = max(2.0, u ** (-2.0 / alpha))
    h_lo, h_hi = h_n(scales, params, v_max), h_n(scales, params, v_min)
    if not h_lo <= u <= h_hi:
        raise ScaleError(f"u={u} outside the range [{h_lo}, {h_hi}] of h_n on the bracket")
    lo, hi = math.log(v_min), math.log(v_max)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if h_n(scales, params, math.exp(mid)) > u:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14:
            break
    return math.exp(0.5 * (lo + hi))
