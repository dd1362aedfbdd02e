"""Two-time correlation estimates over disorder and path ensembles.

Outcomes are averaged in two levels: paths within a disorder realization,
then across realizations. Both variance components are reported because the
limit theorems mix almost-sure and in-probability statements.

Two estimators of the no-jump correlation are available. ``indicator``
records whether the path jumps in (t, t+s]. ``conditional`` averages
exp(-(t+s-S)/gamma(J)) over holding intervals that start at S <= t, the
conditional probability of no jump given the chain and the marks up to t. It
is unbiased for the same quantity with smaller variance.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import MAX_STORED_STEPS, correlation_paths
from .landscape import LEPAGE_DEFAULT_COUNT, Landscape, lepage_build
from .limits import critical_prediction
from .rng import disorder_seed, path_seed
from .scales import ModelParams, Scales, solve_scales

ESTIMATORS = ("indicator", "conditional")


class EstimatorError(ValueError):
    pass


def default_workers() -> int:
    raw = os.environ.get("REMDYN_THREADS", "1")
    try:
        w = int(raw)
    except ValueError as exc:
        raise EstimatorError(f"REMDYN_THREADS must be an integer, got {raw!r}") from exc
    return max(1, w)


@dataclass(frozen=True)
class Ensemble:
    """Everything needed to regenerate a disorder x path ensemble."""

    params: ModelParams
    paths: int
    disorders: int
    seed: int = 0
    start_law: str = "uniform"
    landscape: str = "direct"
    lepage_count: int = LEPAGE_DEFAULT_COUNT
    max_steps: int = MAX_STORED_STEPS
    workers: Optional[int] = None
    materialize: bool = False
    scales: Optional[Scales] = field(default=None, compare=False)

    def __post_init__(self):
        if self.paths < 1 or self.disorders < 1:
            raise EstimatorError("paths and disorders must be >= 1")
        if self.landscape not in ("direct", "lepage"):
            raise EstimatorError(f"unknown landscape kind {self.landscape!r}")
        if self.start_law not in ("uniform", "gibbs"):
            raise EstimatorError(f"unknown start law {self.start_law!r}")
        if self.scales is None:
            object.__setattr__(self, "scales", solve_scales(self.params))

    def build_landscape(self, d: int) -> Landscape:
        seed = disorder_seed(self.seed, d)
        if self.landscape == "lepage":
            return lepage_build(self.params, self.scales, self.lepage_count, seed)[0]
        land = Landscape.direct(self.params, seed, self.scales)
        # a full table pays off once walks run far longer than 2^n steps
        return land.materialized() if self.materialize else land

    def path_seeds(self, d: int) -> list[int]:
        return [path_seed(self.seed, d, p) for p in range(self.paths)]


@dataclass
class GridOutcome:
    """Per (disorder, path, grid point) outcomes; indicators are -1 where not computed."""

    ts: np.ndarray
    ss: np.ndarray
    rhos: np.ndarray
    nojump: np.ndarray
    overlap: np.ndarray
    conditional: np.ndarray
    steps: np.ndarray


def _disorder_task(args):
    ens, d, ts, ss, rhos, indicator = args
    land = ens.build_landscape(d)
    return correlation_paths(land, ens.path_seeds(d), ts, ss, rhos, start_law=ens.start_law,
                             indicator=indicator, max_steps=ens.max_steps)


def run_grid(ens: Ensemble, ts: Sequence[float], ss: Sequence[float], rhos=None,
             indicator: bool = True, disorders: Optional[Sequence[int]] = None) -> GridOutcome:
    """Simulate every (disorder, path) once and record outcomes for all grid points."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    ss = np.atleast_1d(np.asarray(ss, dtype=float))
    rhos = np.full(ts.shape, 0.5) if rhos is None else np.broadcast_to(np.asarray(rhos, float), ts.shape).copy()
    if np.any((rhos <= 0) | (rhos >= 1)):
        raise EstimatorError("rho must lie in (0, 1)")
    ids = range(ens.disorders) if disorders is None else list(disorders)
    tasks = [(ens, d, ts, ss, rhos, indicator) for d in ids]
    workers = ens.workers or default_workers()
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_disorder_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        results = [_disorder_task(t) for t in tasks]
    nj, ov, co, used = (np.stack(r) for r in zip(*results))
    return GridOutcome(ts, ss, rhos, nj, ov, co, used)


@dataclass(frozen=True)
class CorrelationEstimate:
    kind: str
    t: float
    s: float
    rho: Optional[float]
    mean: float
    stderr: float
    stderr_path: float
    stderr_disorder: float
    n_paths: int
    n_disorders: int
    estimator: str = "indicator"

    def as_dict(self) -> dict:
        return asdict(self)


def two_level(values: np.ndarray) -> tuple[float, float, float, float]:
    """(mean, stderr, stderr_path, stderr_disorder) of a disorders x paths array."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise EstimatorError("expected a disorders x paths array")
    D, P = v.shape
    per = v.mean(axis=1)
    mean = float(per.mean())
    within = float(v.var(axis=1, ddof=1).mean()) if P > 1 else 0.0
    se_path = math.sqrt(within / (P * D))
    if D > 1:
        between = float(per.var(ddof=1)) - within / P
        se_dis = math.sqrt(max(between, 0.0) / D)
    else:
        se_dis = 0.0
    if P == 1 and D > 1:
        # paths and disorders are confounded; attribute everything to the total
        total = math.sqrt(float(per.var(ddof=1)) / D)
        return mean, total, total, 0.0
    return mean, math.hypot(se_path, se_dis), se_path, se_dis


def _estimate(kind, values, t, s, rho, estimator) -> CorrelationEstimate:
    if np.any(values < 0):
        raise EstimatorError("outcome not computed for this grid point")
    mean, se, sp, sd = two_level(values)
    D, P = values.shape
    return CorrelationEstimate(kind=kind, t=float(t), s=float(s), rho=rho, mean=mean, stderr=se,
                               stderr_path=sp, stderr_disorder=sd, n_paths=P, n_disorders=D,
                               estimator=estimator)


def estimates_from_grid(out: GridOutcome, g: int, estimator: str = "indicator"):
    """(no-jump, overlap) estimates for grid point g; overlap is None for the conditional estimator."""
    t, s, rho = out.ts[g], out.ss[g], float(out.rhos[g])
    if estimator == "conditional":
        return _estimate("nojump", out.conditional[:, :, g], t, s, None, "conditional"), None
    if estimator != "indicator":
        raise EstimatorError(f"unknown estimator {estimator!r}")
    nj = _estimate("nojump", out.nojump[:, :, g], t, s, None, "indicator")
    ov = _estimate("overlap", out.overlap[:, :, g], t, s, rho, "indicator")
    return nj, ov


def _check_ts(t, s):
    if t < 0 or not s > 0:
        raise EstimatorError("need t >= 0 and s > 0")


def estimate_nojump(ens: Ensemble, t: float, s: float, estimator: str = "indicator") -> CorrelationEstimate:
    """C_n(t, s): probability of no clock point in (c_n t, c_n (t+s)]."""
    _check_ts(t, s)
    if estimator not in ESTIMATORS:
        raise EstimatorError(f"unknown estimator {estimator!r}")
    out = run_grid(ens, [t], [s], indicator=estimator == "indicator")
    return estimates_from_grid(out, 0, estimator)[0]


def estimate_overlap(ens: Ensemble, t: float, s: float, rho: float) -> CorrelationEstimate:
    """C^rho_n(t, s): probability that dist(X(c_n t), X(c_n (t+s))) < rho n / 2."""
    _check_ts(t, s)
    if not 0 < rho < 1:
        raise EstimatorError("rho must lie in (0, 1)")
    out = run_grid(ens, [t], [s], [rho])
    return estimates_from_grid(out, 0)[1]


def correlation_grid(ens: Ensemble, points: Sequence[tuple], estimator: str = "indicator"):
    """Estimates for (t, s) or (t, s, rho) points from one shared ensemble run."""
    if len(points) == 0:
        raise EstimatorError("empty grid")
    ts = [p[0] for p in points]
    ss = [p[1] for p in points]
    rhos = [p[2] if len(p) > 2 and p[2] is not None else 0.5 for p in points]
    for t, s in zip(ts, ss):
        _check_ts(t, s)
    out = run_grid(ens, ts, ss, rhos, indicator=estimator == "indicator")
    return [estimates_from_grid(out, g, estimator) for g in range(len(points))]


def quenched_nojump(landscape: Landscape, t: float, s: float, paths: int, seed: int = 0,
                    estimator: str = "indicator", start_law: str = "uniform") -> CorrelationEstimate:
    """No-jump correlation for one fixed landscape (paths only)."""
    _check_ts(t, s)
    seeds = [path_seed(seed, 0, p) for p in range(paths)]
    nj, _, co, _ = correlation_paths(landscape, seeds, [t], [s], start_law=start_law,
                                     indicator=estimator == "indicator")
    vals = (co if estimator == "conditional" else nj)[:, 0][None, :]
    return _estimate("nojump", vals, t, s, None, estimator)


@dataclass(frozen=True)
class CriticalEstimate:
    n: int
    t: float
    s: float
    scaled: float
    stderr: float
    prediction: float
    estimate: CorrelationEstimate

    @property
    def ratio(self) -> float:
        return self.scaled / self.prediction

    @property
    def ratio_stderr(self) -> float:
        return self.stderr / self.prediction


def critical_sweep(ens: Ensemble, t: float, s: float, estimator: str = "conditional") -> CriticalEstimate:
    """sqrt(n) C_n(t, s) on the critical line, with the limiting constant alongside."""
    p = ens.params
    if not p.critical:
        raise EstimatorError("critical_sweep needs theta (critical mode)")
    if not math.isclose(p.beta, ens.scales.beta_c_eps, rel_tol=1e-12):
        raise EstimatorError("critical_sweep needs beta = beta_c(eps)")
    est = estimate_nojump(ens, t, s, estimator=estimator)
    rt = math.sqrt(p.n)
    return CriticalEstimate(n=p.n, t=float(t), s=float(s), scaled=rt * est.mean, stderr=rt * est.stderr,
                            prediction=critical_prediction(p.theta, p.beta, t, s), estimate=est)
