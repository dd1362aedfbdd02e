"""Quenched random landscape tau_n(x) = exp(-beta H_n(x)) on the n-cube.

Vertices are n-bit integers (bit i set = spin +1 at coordinate i). In direct
mode the field is never stored: vertex x gets the uniform ``u(seed, x)`` from
the keyed generator and ``tau_n(x) = G_n^{-1}(u)`` where ``G_n`` is the tail
of tau, i.e. ``H_n(x) = sqrt(n) * Phi^{-1}(u)``. The LePage mode realises the
ordered landscape from cumulative sums of exponentials (``Gamma_k``), coupled
to the Poisson cascade ``gamma_k = Gamma_k**(-1/alpha)``.

All kernels work with the rescaled variables ``gamma_n(x) = tau_n(x)/c_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numba as nb
import numpy as np
from scipy import special

from .rng import as_key, keyed_uniform, norm_ppf, numpy_rng
from .scales import ModelParams, Scales, solve_scales

MODE_DIRECT = 0
MODE_TABLE = 1
MODE_SPARSE = 2

EXACT_MAX_N = 26
LEPAGE_DEFAULT_COUNT = 100_000


class LandscapeError(ValueError):
    pass


def popcount(x: int) -> int:
    return bin(int(x)).count("1")


def dist(x: int, y: int) -> int:
    """Hamming distance between two vertices."""
    return popcount(int(x) ^ int(y))


# --- numba field evaluation -------------------------------------------------

@nb.njit(cache=True)
def _sparse_lookup(keys, x):
    i = np.searchsorted(keys, x)
    if i < keys.shape[0] and keys[i] == x:
        return i
    return -1


@nb.njit(cache=True)
def log_gamma_at(x, mode, key, sig, logc, table, keys, ucut):
    """log gamma_n(x) for vertex x (uint64) under any landscape mode."""
    if mode == MODE_TABLE:
        return table[np.int64(x)]
    if mode == MODE_SPARSE:
        i = _sparse_lookup(keys, x)
        if i >= 0:
            return table[i]
    u = keyed_uniform(key, x)
    if ucut > 0.0:
        u = ucut + (1.0 - ucut) * u
    # tau = G^{-1}(u) = exp(-sig * Phi^{-1}(u))
    return -sig * norm_ppf(u) - logc


@nb.njit(cache=True)
def _materialize(n, mode, key, sig, logc, table, keys, ucut):
    N = np.int64(1) << n
    out = np.empty(N)
    for x in range(N):
        out[x] = log_gamma_at(np.uint64(x), mode, key, sig, logc, table, keys, ucut)
    return out


@nb.njit(cache=True)
def _neighbor_mean(w, n):
    # h(y) = (1/n) sum_i w(y xor 2^i)
    N = w.shape[0]
    out = np.zeros(N)
    for y in range(N):
        acc = 0.0
        for i in range(n):
            acc += w[y ^ (1 << i)]
        out[y] = acc / n
    return out


@nb.njit(cache=True)
def _sampled_terms(n, m, sample_key, mode, key, sig, logc, table, keys, ucut, u, neighbors):
    # per-sample e^{-u/gamma(x)} (neighbors=False) or h^u(x)^2 (neighbors=True)
    out = np.empty(m)
    mask = (np.uint64(1) << np.uint64(n)) - np.uint64(1) if n < 64 else ~np.uint64(0)
    for j in range(m):
        x = np.uint64(np.int64(keyed_uniform(sample_key, np.uint64(j)) * 2.0 ** n)) & mask
        if not neighbors:
            out[j] = math.exp(-u * math.exp(-log_gamma_at(x, mode, key, sig, logc, table, keys, ucut)))
        else:
            acc = 0.0
            for i in range(n):
                y = x ^ (np.uint64(1) << np.uint64(i))
                acc += math.exp(-u * math.exp(-log_gamma_at(y, mode, key, sig, logc, table, keys, ucut)))
            out[j] = (acc / n) ** 2
    return out


# --- data types ---------------------------------------------------------------

@dataclass(frozen=True)
class PoissonCascade:
    """Ordered marks gamma_k = Gamma_k**(-1/alpha) of a PRM with mean measure x^-alpha dx-tail."""

    Gammas: np.ndarray
    gammas: np.ndarray
    alpha: float

    @property
    def count(self) -> int:
        return int(self.gammas.shape[0])

    @classmethod
    def from_exponentials(cls, E, alpha: float) -> "PoissonCascade":
        E = np.asarray(E, dtype=float)
        if not 0.0 < alpha:
            raise LandscapeError("alpha must be positive")
        G = np.cumsum(E)
        return cls(Gammas=G, gammas=G ** (-1.0 / alpha), alpha=float(alpha))

    @classmethod
    def sample(cls, alpha: float, count: int, seed: int) -> "PoissonCascade":
        rng = numpy_rng(seed)
        return cls.from_exponentials(rng.exponential(size=int(count)), alpha)

    def mass_remainder(self) -> float:
        """Integral-comparison bound on sum_{k > count} gamma_k (alpha < 1)."""
        if self.alpha >= 1.0:
            return math.inf
        p = 1.0 / self.alpha
        return float(self.Gammas[-1] ** (1.0 - p) / (p - 1.0))


@dataclass
class Landscape:
    """A quenched landscape; see module docstring for the two modes.

    ``table``/``keys``/``ucut`` only matter in LePage mode: full tables hold
    log gamma for every vertex, sparse ones hold the top order statistics on
    sorted vertex ``keys`` and draw the rest lazily above ``ucut``.
    """

    params: ModelParams
    scales: Scales
    seed: int
    mode: int = MODE_DIRECT
    table: np.ndarray = field(default_factory=lambda: np.zeros(0))
    keys: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.uint64))
    ucut: float = 0.0
    cascade: Optional[PoissonCascade] = None
    truncated: bool = False

    @classmethod
    def direct(cls, params: ModelParams, seed: int, scales: Optional[Scales] = None) -> "Landscape":
        return cls(params=params, scales=scales or solve_scales(params), seed=int(seed))

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def kind(self) -> str:
        return "direct" if self.mode == MODE_DIRECT else "lepage"

    def kernel_args(self):
        """Tuple accepted by the numba kernels after the vertex argument."""
        return (self.mode, as_key(self.seed), float(self.params.sigma), float(self.scales.log_c_n),
                self.table, self.keys, float(self.ucut))

    def _check(self, x: int) -> np.uint64:
        x = int(x)
        if x < 0 or x >> self.n:
            raise LandscapeError(f"vertex {x} has bits beyond n={self.n}")
        return np.uint64(x)

    def log_rescaled(self, x: int) -> float:
        return float(log_gamma_at(self._check(x), *self.kernel_args()))

    def rescaled(self, x: int) -> float:
        """gamma_n(x) = tau_n(x)/c_n."""
        return math.exp(self.log_rescaled(x))

    def energy(self, x: int) -> float:
        """tau_n(x), the Boltzmann weight at x."""
        return math.exp(self.log_rescaled(x) + self.scales.log_c_n)

    def hamiltonian(self, x: int) -> float:
        if self.params.beta == 0.0:
            raise LandscapeError("H_n is not recoverable from tau at beta = 0")
        return -(self.log_rescaled(x) + self.scales.log_c_n) / self.params.beta

    def log_values(self) -> np.ndarray:
        """log gamma_n(x) for all 2^n vertices (n <= 26)."""
        if self.n > EXACT_MAX_N:
            raise LandscapeError(f"full materialization needs n <= {EXACT_MAX_N}")
        if self.mode == MODE_TABLE:
            return self.table
        return _materialize(self.n, *self.kernel_args())

    def values(self) -> np.ndarray:
        return np.exp(self.log_values())

    def materialized(self) -> "Landscape":
        """Same field held as a full table; faster when walks revisit vertices."""
        if self.mode == MODE_TABLE:
            return self
        return Landscape(params=self.params, scales=self.scales, seed=self.seed, mode=MODE_TABLE,
                         table=self.log_values(), cascade=self.cascade)

    def gibbs_cdf(self) -> np.ndarray:
        """Cumulative Gibbs weights tau/sum(tau) over vertices 0..2^n-1."""
        lg = self.log_values()
        w = np.exp(lg - lg.max())
        c = np.cumsum(w)
        return c / c[-1]


def energy(landscape: Landscape, x: int) -> float:
    return landscape.energy(x)


# --- LePage representation -------------------------------------------------

def lepage_build(params: ModelParams, scales: Optional[Scales], count: int, seed: int,
                 exponentials: Optional[np.ndarray] = None) -> tuple[Landscape, PoissonCascade]:
    """Ordered landscape gamma_n(x^(k)) = c_n^{-1} G_n^{-1}(Gamma_k / Gamma_{N+1}).

    For n <= 26 every order statistic is materialized (``count`` only sets
    the depth of the returned cascade). Above that, the top ``count`` values
    sit on randomly chosen vertices and every other vertex gets an
    independent uniform conditioned to exceed Gamma_count / Gamma_{N+1},
    which is the exact conditional law of the remaining order statistics.
    """
    if not params.extreme:
        raise LandscapeError("the LePage representation is for extreme scales")
    scales = scales or solve_scales(params)
    alpha = scales.alpha_eps
    if not 0.0 < alpha < 1.0:
        raise LandscapeError(f"LePage mode needs 0 < alpha < 1, got {alpha}")
    n = params.n
    N = 1 << n
    rng = numpy_rng(seed)
    sig, logc = params.sigma, scales.log_c_n
    if n <= EXACT_MAX_N:
        if exponentials is None:
            E = rng.exponential(size=N + 1)
        else:
            E = np.asarray(exponentials, dtype=float)
            if E.shape[0] != N + 1:
                raise LandscapeError("need N+1 exponentials")
        G = np.cumsum(E)
        U = G[:N] / G[N]
        logg = sig * (-special.ndtri(U)) - logc
        labels = rng.permutation(N)
        table = np.empty(N)
        table[labels] = logg
        depth = min(int(count), N)
        cascade = PoissonCascade(Gammas=G[:depth], gammas=G[:depth] ** (-1.0 / alpha), alpha=alpha)
        land = Landscape(params=params, scales=scales, seed=int(seed), mode=MODE_TABLE,
                         table=table, cascade=cascade)
        return land, cascade
    count = int(count)
    if not count < N:
        raise LandscapeError("truncated LePage mode needs count < 2^n")
    E = rng.exponential(size=count) if exponentials is None else np.asarray(exponentials, float)[:count]
    G = np.cumsum(E)
    G_total = G[-1] + rng.gamma(shape=float(N + 1 - count))
    U = G / G_total
    logg = sig * (-special.ndtri(U)) - logc
    labels = np.unique(rng.integers(0, N, size=count, dtype=np.uint64))
    while labels.shape[0] < count:
        extra = rng.integers(0, N, size=count - labels.shape[0], dtype=np.uint64)
        labels = np.unique(np.concatenate([labels, extra]))
    order = rng.permutation(count)
    keys = labels[order]
    srt = np.argsort(keys)
    cascade = PoissonCascade(Gammas=G, gammas=G ** (-1.0 / alpha), alpha=alpha)
    land = Landscape(params=params, scales=scales, seed=int(seed), mode=MODE_SPARSE,
                     table=np.ascontiguousarray(logg[srt]), keys=np.ascontiguousarray(keys[srt]),
                     ucut=float(U[-1]), cascade=cascade, truncated=True)
    return land, cascade


# --- lattice averages ------------------------------------------------------------

def g_delta(u, delta: float):
    """g_delta(u) = u (1 - exp(-delta/u))."""
    if not delta > 0:
        raise LandscapeError("delta must be > 0")
    u = np.asarray(u, dtype=float)
    return u * -np.expm1(-delta / u)


def f_delta(u, delta: float):
    """f_delta(u) = u^2 (1 - e^{-delta/u}) - delta u e^{-delta/u}, >= 0."""
    if not delta > 0:
        raise LandscapeError("delta must be > 0")
    u = np.asarray(u, dtype=float)
    x = delta / u
    # 1 - (1+x) e^{-x}, with a series where the direct form cancels
    small = x < 0.05
    xs = np.where(small, x, 0.0)
    series = xs**2 / 2 - xs**3 / 3 + xs**4 / 8 - xs**5 / 30 + xs**6 / 144 - xs**7 / 840
    xd = np.where(small, 1.0, x)
    direct = -np.expm1(-xd) - xd * np.exp(-xd)
    return u**2 * np.where(small, series, direct)


@dataclass(frozen=True)
class LatticeValue:
    value: float
    stderr: float = 0.0
    exact: bool = True


def _sampled_gammas(land: Landscape, m: int, sample_seed: int) -> np.ndarray:
    key = as_key(sample_seed ^ 0x5A5A5A5A)
    return np.exp(_sampled_loggam(land.n, m, key, *land.kernel_args()))


@nb.njit(cache=True)
def _sampled_loggam(n, m, sample_key, mode, key, sig, logc, table, keys, ucut):
    out = np.empty(m)
    mask = (np.uint64(1) << np.uint64(n)) - np.uint64(1) if n < 64 else ~np.uint64(0)
    for j in range(m):
        x = np.uint64(np.int64(keyed_uniform(sample_key, np.uint64(j)) * 2.0 ** n)) & mask
        out[j] = log_gamma_at(x, mode, key, sig, logc, table, keys, ucut)
    return out


def _lattice_average(land: Landscape, F, samples: int, sample_seed: int) -> LatticeValue:
    a_n = land.scales.a_n
    if land.n <= EXACT_MAX_N:
        return LatticeValue(a_n * float(np.mean(F(land.values()))))
    vals = F(_sampled_gammas(land, samples, sample_seed))
    return LatticeValue(a_n * float(vals.mean()), a_n * float(vals.std(ddof=1)) / math.sqrt(samples),
                        exact=False)


def lattice_nu(land: Landscape, u: float, samples: int = 10_000_000, sample_seed: int = 0) -> LatticeValue:
    """nu_n(u, inf) = (a_n/2^n) sum_x exp(-u/gamma_n(x))."""
    if not u > 0:
        raise LandscapeError("u must be > 0")
    return _lattice_average(land, lambda g: np.exp(-u / g), samples, sample_seed)


def lattice_sigma(land: Landscape, u: float, samples: int = 1_000_000, sample_seed: int = 0) -> LatticeValue:
    """sigma_n(u, inf) = (a_n/2^n) sum_{x,x'} p_n^2(x,x') e^{-u/gamma(x)} e^{-u/gamma(x')}.

    Uses p_n^2 = P P with P symmetric, so the double sum equals sum_y h^u(y)^2
    with h^u(y) the one-step neighbour average of e^{-u/gamma}.
    """
    if not u > 0:
        raise LandscapeError("u must be > 0")
    a_n = land.scales.a_n
    if land.n <= EXACT_MAX_N:
        h = _neighbor_mean(np.exp(-u / land.values()), land.n)
        return LatticeValue(a_n * float(np.mean(h * h)))
    key = as_key(sample_seed ^ 0x5A5A5A5A)
    t = _sampled_terms(land.n, samples, key, *land.kernel_args(), float(u), True)
    return LatticeValue(a_n * float(t.mean()), a_n * float(t.std(ddof=1)) / math.sqrt(samples), exact=False)


def lattice_m(land: Landscape, samples: int = 10_000_000, sample_seed: int = 0) -> LatticeValue:
    """m_n = (a_n/2^n) sum_x g_1(gamma_n(x))."""
    return _lattice_average(land, lambda g: g_delta(g, 1.0), samples, sample_seed)


def lattice_lambda(land: Landscape, delta: float, which: str = "A3", samples: int = 10_000_000,
                   sample_seed: int = 0) -> LatticeValue:
    """lambda_{delta,n} (which='A3', g_delta) or lambda-bar_{delta,n} (which='A3prime', f_delta)."""
    if not delta > 0:
        raise LandscapeError("delta must be > 0")
    if which == "A3":
        F = lambda g: g_delta(g, delta)
    elif which == "A3prime":
        F = lambda g: f_delta(g, delta)
    else:
        raise LandscapeError(f"unknown condition {which!r}")
    return _lattice_average(land, F, samples, sample_seed)


def exact_stationary_corr(land: Landscape, s: float) -> float:
    """sum_x G_n(x) exp(-s/gamma_n(x)): the no-jump correlation of the Gibbs-started process."""
    lg = land.log_values()
    w = np.exp(lg - lg.max())
    return float(np.sum(w * np.exp(-s * np.exp(-lg))) / np.sum(w))
