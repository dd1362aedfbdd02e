"""Random hopping dynamics as a time-changed simple random walk.

The jump chain J(0), J(1), ... flips one uniformly chosen coordinate per
step. The walk sits at J(k) for the holding time tau(J(k)) e_k with e_k i.i.d.
Exp(1), so the clock points are S(k) = sum_{i<=k} tau(J(i)) e_i and

    X(t) = J(k)   for   S(k-1) <= t < S(k),   S(-1) = 0.

Stream layout for a trajectory key: counter 0 draws the start, counter 2k+1
the mark e_k, counter 2k+2 the coordinate flipped after J(k). Internally all
clocks are kept in rescaled units S(k)/c_n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numba as nb
import numpy as np

from .landscape import Landscape, log_gamma_at
from .rng import as_key, keyed_exponential, keyed_uniform
from .scales import Scales

START_UNIFORM = 0
START_GIBBS = 1
_START_LAWS = {"uniform": START_UNIFORM, "gibbs": START_GIBBS}


class HorizonError(RuntimeError):
    """A query reaches beyond the simulated part of a trajectory."""


class DynamicsError(ValueError):
    pass


# --- kernels -----------------------------------------------------------------------

@nb.njit(cache=True)
def _start_vertex(n, tkey, start_mode, gibbs_cdf):
    u = keyed_uniform(tkey, np.uint64(0))
    if start_mode == START_GIBBS:
        return np.uint64(np.searchsorted(gibbs_cdf, u, side="right"))
    return np.uint64(np.int64(u * 2.0 ** n))


@nb.njit(cache=True)
def _flip_coord(n, tkey, k):
    return np.uint64(np.int64(keyed_uniform(tkey, np.uint64(2 * k + 2)) * n))


@nb.njit(cache=True)
def _neighbor_terms(x, n, u, mode, key, sig, logc, table, keys, ucut):
    # (h^u(x), G1(x)) = neighbour averages of e^{-u/gamma} and g_1(gamma)
    hu = 0.0
    g1 = 0.0
    for i in range(n):
        y = x ^ (np.uint64(1) << np.uint64(i))
        g = math.exp(log_gamma_at(y, mode, key, sig, logc, table, keys, ucut))
        hu += math.exp(-u / g)
        g1 += -g * math.expm1(-1.0 / g)
    return hu / n, g1 / n


@nb.njit(cache=True, error_model="numpy")
def _trajectory(n, steps, tkey, start_mode, gibbs_cdf, with_centering,
                mode, key, sig, logc, table, keys, ucut):
    visits = np.empty(steps + 1, dtype=np.uint64)
    rclock = np.empty(steps + 1)
    marks = np.empty(steps + 1)
    centering = np.zeros(steps + 1)
    x = _start_vertex(n, tkey, start_mode, gibbs_cdf)
    acc = 0.0
    m = 0.0
    for k in range(steps + 1):
        visits[k] = x
        e = keyed_exponential(tkey, np.uint64(2 * k + 1))
        marks[k] = e
        acc += math.exp(log_gamma_at(x, mode, key, sig, logc, table, keys, ucut)) * e
        rclock[k] = acc
        if k < steps:
            if with_centering:
                _, g1 = _neighbor_terms(x, n, 1.0, mode, key, sig, logc, table, keys, ucut)
                m += g1
                centering[k + 1] = m
            x = x ^ (np.uint64(1) << _flip_coord(n, tkey, k))
    return visits, rclock, marks, centering


@nb.njit(cache=True, error_model="numpy")
def _popcount(z):
    c = 0
    while z:
        z &= z - np.uint64(1)
        c += 1
    return c


@nb.njit(cache=True, error_model="numpy")
def _correlation_paths(n, tkeys, start_mode, gibbs_cdf, ts, ss, rho_thr, indicator, max_steps,
                       mode, key, sig, logc, table, keys, ucut):
    """Per-path outcomes for a grid of (t, s) points in rescaled time.

    Returns int8 no-jump and overlap indicators (-1 when not computed), the
    conditional (Rao-Blackwell) no-jump terms, and the number of steps used.
    Overlap success: popcount(X(t) ^ X(t+s)) < rho_thr[g].
    """
    P = tkeys.shape[0]
    G = ts.shape[0]
    nojump = np.full((P, G), -1, dtype=np.int8)
    overlap = np.full((P, G), -1, dtype=np.int8)
    cond = np.zeros((P, G))
    used = np.zeros(P, dtype=np.int64)
    xt = np.zeros(G, dtype=np.uint64)
    tstop = 0.0
    for g in range(G):
        stop_g = ts[g] + ss[g] if indicator else ts[g]
        if stop_g > tstop:
            tstop = stop_g
    for p in range(P):
        tkey = tkeys[p]
        x = _start_vertex(n, tkey, start_mode, gibbs_cdf)
        prev = 0.0
        k = 0
        while True:
            gam = math.exp(log_gamma_at(x, mode, key, sig, logc, table, keys, ucut))
            new = prev + gam * keyed_exponential(tkey, np.uint64(2 * k + 1))
            for g in range(G):
                t = ts[g]
                if prev <= t:
                    cond[p, g] += math.exp(-(t + ss[g] - prev) / gam)
                    if t < new:
                        xt[g] = x
                        if indicator:
                            nojump[p, g] = 1 if new > t + ss[g] else 0
                if indicator:
                    te = t + ss[g]
                    if prev <= te and te < new:
                        overlap[p, g] = 1 if _popcount(x ^ xt[g]) < rho_thr[g] else 0
            if new > tstop:
                break
            k += 1
            if k >= max_steps:
                used[p] = -1
                break
            x = x ^ (np.uint64(1) << _flip_coord(n, tkey, k - 1))
            prev = new
        if used[p] == 0:
            used[p] = k + 1
    return nojump, overlap, cond, used


@nb.njit(cache=True, error_model="numpy")
def _chain_sums(n, tkeys, steps, u, mode, key, sig, logc, table, keys, ucut):
    # nu^J = sum_{j=1}^{steps} h^u(J(j-1)), sigma^J = sum h^u^2, M = sum G1(J(j-1))
    P = tkeys.shape[0]
    out = np.zeros((P, 3))
    empty = np.zeros(0)
    for p in range(P):
        tkey = tkeys[p]
        x = _start_vertex(n, tkey, START_UNIFORM, empty)
        for j in range(steps):
            hu, g1 = _neighbor_terms(x, n, u, mode, key, sig, logc, table, keys, ucut)
            out[p, 0] += hu
            out[p, 1] += hu * hu
            out[p, 2] += g1
            x = x ^ (np.uint64(1) << _flip_coord(n, tkey, j))
    return out


# --- trajectory API ----------------------------------------------------------------

MAX_STORED_STEPS = 10**9


@dataclass
class ClockTrajectory:
    visits: np.ndarray
    rclock: np.ndarray
    marks: np.ndarray
    centering: Optional[np.ndarray]
    traj_seed: int
    start_law: str
    c_n: float
    a_n: float

    @property
    def clock(self) -> np.ndarray:
        """Unscaled clock S(k) = sum_{i<=k} tau(J(i)) e_i."""
        return self.rclock * self.c_n

    @property
    def steps(self) -> int:
        return int(self.visits.shape[0]) - 1


def _start_setup(landscape: Landscape, start_law: str):
    if start_law not in _START_LAWS:
        raise DynamicsError(f"unknown start law {start_law!r}")
    mode = _START_LAWS[start_law]
    if mode == START_GIBBS:
        if landscape.n > 26:
            raise DynamicsError("Gibbs start needs a materialized landscape (n <= 26)")
        return mode, landscape.gibbs_cdf()
    return mode, np.zeros(0)


def run_trajectory(landscape: Landscape, steps: int, start_law: str = "uniform", traj_seed: int = 0,
                   centering: bool = False) -> ClockTrajectory:
    if steps < 1:
        raise DynamicsError("steps must be >= 1")
    if steps > MAX_STORED_STEPS:
        raise DynamicsError(f"refusing to store more than {MAX_STORED_STEPS} steps")
    smode, cdf = _start_setup(landscape, start_law)
    visits, rclock, marks, cent = _trajectory(landscape.n, int(steps), as_key(traj_seed), smode, cdf,
                                              bool(centering), *landscape.kernel_args())
    return ClockTrajectory(visits=visits, rclock=rclock, marks=marks,
                           centering=cent if centering else None, traj_seed=int(traj_seed),
                           start_law=start_law, c_n=landscape.scales.c_n, a_n=landscape.scales.a_n)


def state_at(traj: ClockTrajectory, scales: Scales, t: float) -> int:
    """X_n(c_n t): the vertex whose holding interval contains c_n t."""
    if t < 0:
        raise DynamicsError("t must be >= 0")
    i = int(np.searchsorted(traj.rclock, t, side="right"))
    if i >= traj.visits.shape[0]:
        raise HorizonError(f"t={t} beyond the trajectory horizon {traj.rclock[-1]}")
    return int(traj.visits[i])


def _k(scales: Scales, t: float) -> int:
    if t < 0:
        raise DynamicsError("t must be >= 0")
    return int(math.floor(scales.a_n * t))


def rescaled_clock(traj: ClockTrajectory, scales: Scales, t: float) -> float:
    """S_n(t) = S(floor(a_n t)) / c_n."""
    k = _k(scales, t)
    if k >= traj.rclock.shape[0]:
        raise HorizonError(f"floor(a_n t)={k} exceeds the {traj.steps} simulated steps")
    return float(traj.rclock[k])


def centering_at(traj: ClockTrajectory, scales: Scales, t: float) -> float:
    """M_n(t) = sum_{i=1}^{floor(a_n t)} sum_x p_n(J(i-1), x) g_1(gamma_n(x))."""
    if traj.centering is None:
        raise DynamicsError("trajectory was run without centering")
    k = _k(scales, t)
    if k >= traj.centering.shape[0]:
        raise HorizonError(f"floor(a_n t)={k} exceeds the {traj.steps} simulated steps")
    return float(traj.centering[k])


def centered_clock(traj: ClockTrajectory, scales: Scales, t: float) -> float:
    return rescaled_clock(traj, scales, t) - centering_at(traj, scales, t)


def chain_diagnostics(landscape: Landscape, traj_seeds, t: float = 1.0, u: float = 1.0) -> np.ndarray:
    """Per path (nu^{J,t}_n(u), sigma^{J,t}_n(u), M_n(t)) under a uniform start."""
    steps = _k(landscape.scales, t)
    keys = np.array([as_key(s) for s in traj_seeds], dtype=np.uint64)
    return _chain_sums(landscape.n, keys, steps, float(u), *landscape.kernel_args())


def correlation_paths(landscape: Landscape, traj_seeds, ts, ss, rho=None, start_law: str = "uniform",
                      indicator: bool = True, max_steps: int = MAX_STORED_STEPS):
    """Raw per-path outcomes for the grid points (ts[g], ss[g]); see ``_correlation_paths``."""
    ts = np.asarray(ts, dtype=float)
    ss = np.asarray(ss, dtype=float)
    if ts.shape != ss.shape or ts.ndim != 1 or ts.size == 0:
        raise DynamicsError("ts and ss must be equal-length nonempty 1-d sequences")
    if np.any(ts < 0) or np.any(ss <= 0):
        raise DynamicsError("need t >= 0 and s > 0")
    if rho is None:
        rho = np.full(ts.shape, 0.5)
    rho = np.broadcast_to(np.asarray(rho, dtype=float), ts.shape)
    thr = rho * landscape.n / 2.0
    smode, cdf = _start_setup(landscape, start_law)
    keys = np.array([as_key(s) for s in traj_seeds], dtype=np.uint64)
    nojump, overlap, cond, used = _correlation_paths(landscape.n, keys, smode, cdf, ts, ss,
                                                     np.ascontiguousarray(thr), bool(indicator),
                                                     int(max_steps), *landscape.kernel_args())
    if np.any(used < 0):
        raise HorizonError(f"a path exceeded max_steps={max_steps} before reaching the last query time")
    return nojump, overlap, cond, used
