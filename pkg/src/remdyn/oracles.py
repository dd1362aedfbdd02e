"""Exact small-instance references for the hypercube walk and the dynamics.

Everything here is deliberately naive: dense matrices, explicit distribution
vectors and a step-by-step event simulation. These functions exist to check
the fast code paths, not to be fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .landscape import Landscape
from .rng import as_key, keyed_exponential, keyed_uniform, numpy_rng
from .scales import mixing_steps

EXACT_CHAIN_MAX_N = 12
BRUTE_MAX_N = 10


class OracleError(ValueError):
    pass


def spectral_return(n: int, l: int) -> float:
    """p^l_n(x, x) = 2^{-n} sum_j C(n, j) (1 - 2j/n)^l for the SRW on the n-cube."""
    if n < 1 or l < 0:
        raise OracleError("need n >= 1 and l >= 0")
    if l % 2 == 1:
        return 0.0
    total = 0.0
    for j in range(n + 1):
        total += math.comb(n, j) * (1.0 - 2.0 * j / n) ** l
    return total / 2.0**n


def transition_matrix(n: int) -> np.ndarray:
    if not 1 <= n <= BRUTE_MAX_N:
        raise OracleError(f"dense transition matrix only for 1 <= n <= {BRUTE_MAX_N}")
    N = 1 << n
    Q = np.zeros((N, N))
    x = np.arange(N)
    for i in range(n):
        Q[x, x ^ (1 << i)] = 1.0 / n
    return Q


def matrix_return(n: int, l: int) -> float:
    """p^l_n(0, 0) from a dense matrix power."""
    if l < 0:
        raise OracleError("l must be >= 0")
    return float(np.linalg.matrix_power(transition_matrix(n), l)[0, 0])


def _step(dist: np.ndarray, n: int) -> np.ndarray:
    x = np.arange(dist.shape[0])
    out = np.zeros_like(dist)
    for i in range(n):
        out += dist[x ^ (1 << i)]
    return out / n


def _parity(N: int) -> np.ndarray:
    return np.array([bin(v).count("1") & 1 for v in range(N)])


@dataclass(frozen=True)
class ExactChain:
    """Exact law of J_n(l) started from a point mass (n <= 12)."""

    n: int
    distribution: np.ndarray

    @classmethod
    def point_mass(cls, n: int, x: int = 0) -> "ExactChain":
        if not 1 <= n <= EXACT_CHAIN_MAX_N:
            raise OracleError(f"exact chains are limited to n <= {EXACT_CHAIN_MAX_N}")
        d = np.zeros(1 << n)
        d[x] = 1.0
        return cls(n, d)

    def step(self, k: int = 1) -> "ExactChain":
        d = self.distribution
        for _ in range(k):
            d = _step(d, self.n)
        return ExactChain(self.n, d)


def mixing_tv(n: int, steps: int | None = None) -> float:
    """Max relative deviation of J^+_n from pi^+_n = 2^{-n+1} after theta_n/2 two-step moves.

    ``steps`` overrides the number of two-step transitions (theta_n/2 by default).
    By vertex transitivity the start 0 is a worst case.
    """
    if not 3 <= n <= EXACT_CHAIN_MAX_N:
        raise OracleError(f"mixing_tv needs 3 <= n <= {EXACT_CHAIN_MAX_N}")
    two_steps = mixing_steps(n) // 2 if steps is None else int(steps)
    if two_steps < 0:
        raise OracleError("steps must be >= 0")
    chain = ExactChain.point_mass(n).step(2 * two_steps)
    even = _parity(1 << n) == 0
    pi = 2.0 ** (-n + 1)
    return float(np.max(np.abs(chain.distribution[even] / pi - 1.0)))


def return_sum(n: int, m: int) -> float:
    """sum_{l=1}^{2m} p^{l+2}_n(z, z)."""
    return sum(spectral_return(n, l + 2) for l in range(1, 2 * m + 1))


def fit_return_constant(n: int) -> float:
    """Smallest c with return_sum(n, m) <= c/n^2 for every m <= n^2."""
    best = 0.0
    acc = 0.0
    for l in range(1, 2 * n * n + 1):
        acc += spectral_return(n, l + 2)
        best = max(best, acc * n * n)
    return best


# --- brute-force correlation ----------------------------------------------------------

@dataclass(frozen=True)
class BruteResult:
    mean: float
    stderr: float
    paths: int


def _shared_path(gam, n, key, t, s):
    # same keyed streams as the fast kernels, walked one event at a time
    x = int(np.int64(keyed_uniform(key, np.uint64(0)) * 2.0**n))
    now = 0.0
    k = 0
    while True:
        nxt = now + gam[x] * keyed_exponential(key, np.uint64(2 * k + 1))
        if now <= t < nxt:
            return 1 if nxt > t + s else 0
        i = int(np.int64(keyed_uniform(key, np.uint64(2 * k + 2)) * n))
        x ^= 1 << i
        now = nxt
        k += 1


def _race_path(gam, n, rng, t, s):
    # n competing exponential clocks of rate 1/(n gamma(x)) per neighbour
    x = int(rng.integers(0, 1 << n))
    now = 0.0
    while True:
        clocks = rng.exponential(n * gam[x], size=n)
        i = int(np.argmin(clocks))
        nxt = now + clocks[i]
        if now <= t < nxt:
            return 1 if nxt > t + s else 0
        x ^= 1 << i
        now = nxt


def shared_visits(landscape: Landscape, steps: int, traj_seed: int) -> list[int]:
    """Jump-chain visits generated event by event from the shared keyed stream."""
    n = landscape.n
    key = as_key(traj_seed)
    x = int(np.int64(keyed_uniform(key, np.uint64(0)) * 2.0**n))
    out = [x]
    for k in range(steps):
        x ^= 1 << int(np.int64(keyed_uniform(key, np.uint64(2 * k + 2)) * n))
        out.append(x)
    return out


def brute_force_corr(landscape: Landscape, t: float, s: float, paths: int = 20_000, seed: int = 0,
                     mode: str = "race") -> BruteResult:
    """No-jump correlation C_n(t, s) by direct event simulation (uniform start, rescaled time).

    ``mode='race'`` uses an independent numpy generator and competing neighbour
    clocks; ``mode='shared'`` replays the keyed streams of the fast kernels with
    trajectory seeds ``seed + p``.
    """
    n = landscape.n
    if n > BRUTE_MAX_N:
        raise OracleError(f"brute-force correlation needs n <= {BRUTE_MAX_N}")
    if t < 0 or not s > 0:
        raise OracleError("need t >= 0 and s > 0")
    if paths < 2:
        raise OracleError("need at least 2 paths")
    gam = [float(g) for g in landscape.values()]
    if mode == "race":
        rng = numpy_rng(seed)
        hits = [_race_path(gam, n, rng, t, s) for _ in range(paths)]
    elif mode == "shared":
        hits = [_shared_path(gam, n, as_key(seed + p), t, s) for p in range(paths)]
    else:
        raise OracleError(f"unknown mode {mode!r}")
    h = np.asarray(hits, dtype=float)
    return BruteResult(float(h.mean()), float(h.std(ddof=1) / math.sqrt(paths)), int(paths))


def expected_lattice_mean(landscape: Landscape, F) -> float:
    """E[a_n F(gamma_n(x))] for a single vertex, by quadrature over the Gaussian field.

    ``F`` maps a float gamma to a float. This is the disorder mean of every
    lattice average (a_n/2^n) sum_x F(gamma_n(x)).
    """
    from scipy import integrate

    sig = landscape.params.sigma
    lc = landscape.scales.log_c_n
    if sig == 0.0:
        return landscape.scales.a_n * F(math.exp(-lc))

    def integrand(z):
        return F(math.exp(min(sig * z - lc, 700.0))) * math.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

    mid = lc / sig
    lo = integrate.quad(integrand, -40.0, mid, limit=500)[0]
    hi = integrate.quad(integrand, mid, 40.0, limit=500)[0]
    return landscape.scales.a_n * (lo + hi)
