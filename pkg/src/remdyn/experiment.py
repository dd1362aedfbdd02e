"""TOML experiment configs and the config-driven runner behind ``remdyn run``."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numba
import numpy as np
import scipy

from .dynamics import MAX_STORED_STEPS
from .estimators import Ensemble, correlation_grid
from .landscape import LEPAGE_DEFAULT_COUNT
from .limits import aging_prediction, critical_prediction, stationary_corr
from .scales import ModelParams, ScaleError, beta_c, solve_scales

EXPERIMENTS = ("aging_sweep", "high_temp", "critical_line", "extreme_crossover", "stationary", "diagnostics")

CSV_COLUMNS = ("kind", "n", "eps", "beta", "theta", "t", "s", "rho", "mean", "stderr_path",
               "stderr_disorder", "n_paths", "n_disorders", "prediction", "prediction_kind")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelParams
    experiment: str
    points: tuple = ()
    paths: int = 1
    disorders: int = 1
    seed: int = 0
    start_law: str = "uniform"
    landscape: str = "direct"
    lepage_count: int = LEPAGE_DEFAULT_COUNT
    max_steps: int = MAX_STORED_STEPS
    estimator: str = "indicator"
    workers: Optional[int] = None
    t_max: float = 1.0
    output_path: Optional[str] = None
    output_format: str = "csv"
    raw: dict = field(default_factory=dict, compare=False)

    def ensemble(self) -> Ensemble:
        return Ensemble(params=self.model, paths=self.paths, disorders=self.disorders, seed=self.seed,
                        start_law=self.start_law, landscape=self.landscape, lepage_count=self.lepage_count,
                        max_steps=self.max_steps, workers=self.workers)


def _model_from(tbl: dict) -> ModelParams:
    if "n" not in tbl:
        raise ConfigError("[model] needs n")
    eps = tbl.get("eps")
    eps_bar = tbl.get("eps_bar")
    if (eps is None) == (eps_bar is None):
        raise ConfigError("[model] needs exactly one of eps or eps_bar")
    scale_eps = 1.0 if eps_bar is not None else float(eps)
    if "beta" in tbl and "alpha_target" in tbl:
        raise ConfigError("[model] takes beta or alpha_target, not both")
    if "beta" in tbl:
        beta = float(tbl["beta"])
    elif "alpha_target" in tbl:
        a = float(tbl["alpha_target"])
        if not a > 0:
            raise ConfigError("alpha_target must be > 0")
        beta = beta_c(scale_eps) / a
    elif "theta" in tbl:
        beta = beta_c(scale_eps)
    else:
        raise ConfigError("[model] needs beta or alpha_target")
    try:
        return ModelParams(n=int(tbl["n"]), beta=beta, eps=eps, eps_bar=eps_bar, theta=tbl.get("theta"))
    except ScaleError as exc:
        raise ConfigError(str(exc)) from exc


def _points_from(tbl: dict) -> tuple:
    if "points" in tbl:
        pts = []
        for p in tbl["points"]:
            if len(p) not in (2, 3):
                raise ConfigError("grid points are [t, s] or [t, s, rho]")
            pts.append((float(p[0]), float(p[1]), float(p[2]) if len(p) == 3 else None))
        return tuple(pts)
    ts, ss = tbl.get("t", []), tbl.get("s", [])
    rhos = tbl.get("rho")
    pts = []
    for t in ts:
        for s in ss:
            if rhos:
                pts.extend((float(t), float(s), float(r)) for r in rhos)
            else:
                pts.append((float(t), float(s), None))
    return tuple(pts)


def config_from_dict(raw: dict, need_grid: bool = True) -> ExperimentConfig:
    # flat files (every key at top level) are accepted as well as the sectioned layout
    model = _model_from(raw.get("model", raw))
    exp_tbl = raw.get("experiment", {})
    kind = exp_tbl.get("kind", "aging_sweep") if isinstance(exp_tbl, dict) else str(exp_tbl)
    ens = dict(raw.get("ensemble", raw))
    if "trajectories" in ens:
        ens.setdefault("paths", ens["trajectories"])
    out = raw.get("output", {})
    cfg = ExperimentConfig(
        model=model, experiment=kind, points=_points_from(raw.get("grid", raw)),
        paths=int(ens.get("paths", 1)), disorders=int(ens.get("disorders", 1)), seed=int(ens.get("seed", 0)),
        start_law=str(ens.get("start_law", "gibbs" if kind == "stationary" else "uniform")),
        landscape=str(ens.get("landscape", "lepage" if kind in ("stationary", "extreme_crossover") else "direct")),
        lepage_count=int(ens.get("lepage_count", LEPAGE_DEFAULT_COUNT)),
        max_steps=int(ens.get("max_steps", MAX_STORED_STEPS)),
        estimator=str(ens.get("estimator", "conditional" if kind == "critical_line" else "indicator")),
        workers=ens.get("workers"), t_max=float(raw.get("simulate", {}).get("t_max", raw.get("t_max", ens.get("t_max", 1.0)))),
        output_path=out.get("path"), output_format=str(out.get("format", "csv")), raw=raw)
    validate(cfg, need_grid)
    return cfg


def load_config(path, need_grid: bool = True) -> ExperimentConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(raw, need_grid)


def validate(cfg: ExperimentConfig, need_grid: bool = True) -> None:
    m = cfg.model
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    if cfg.paths < 1 or cfg.disorders < 1:
        raise ConfigError("ensemble paths and disorders must be >= 1")
    if cfg.output_format not in ("csv", "json"):
        raise ConfigError("output format must be csv or json")
    if cfg.estimator not in ("indicator", "conditional"):
        raise ConfigError("estimator must be indicator or conditional")
    if need_grid and cfg.experiment != "diagnostics" and not cfg.points:
        raise ConfigError(f"{cfg.experiment} needs a nonempty [grid]")
    for t, s, rho in cfg.points:
        if t < 0 or not s > 0:
            raise ConfigError(f"grid point ({t}, {s}) needs t >= 0 and s > 0")
        if rho is not None and not 0 < rho < 1:
            raise ConfigError(f"rho={rho} must lie in (0, 1)")
    if cfg.max_steps < 1:
        raise ConfigError("max_steps must be >= 1")
    if not cfg.t_max > 0:
        raise ConfigError("t_max must be > 0")
    scales = solve_scales(m)
    kind = cfg.experiment
    if kind == "critical_line":
        if not m.critical:
            raise ConfigError("critical_line needs [model] theta")
        if not math.isclose(m.beta, scales.beta_c_eps, rel_tol=1e-12):
            raise ConfigError("critical_line needs beta = beta_c(eps); omit beta to get it")
    elif m.critical:
        raise ConfigError("theta is only used by critical_line")
    if kind == "aging_sweep" and not (m.beta > 0 and scales.alpha_eps < 1):
        raise ConfigError("aging_sweep needs alpha(eps) < 1 (beta > beta_c(eps))")
    if kind == "high_temp" and not scales.alpha_eps > 1:
        raise ConfigError("high_temp needs beta < beta_c(eps)")
    if kind in ("extreme_crossover", "stationary"):
        if not m.extreme:
            raise ConfigError(f"{kind} needs an extreme scale ([model] eps_bar)")
        if not scales.alpha_eps < 1:
            raise ConfigError(f"{kind} needs alpha < 1")
        if cfg.landscape != "lepage":
            raise ConfigError(f"{kind} needs the lepage landscape")
    if kind == "stationary" and cfg.start_law != "gibbs":
        raise ConfigError("stationary needs start_law = gibbs")
    if cfg.start_law == "gibbs" and cfg.landscape == "direct" and m.n > 26:
        raise ConfigError("Gibbs start needs n <= 26 or a LePage landscape")
    if cfg.landscape == "lepage" and m.n > 26 and cfg.start_law == "gibbs":
        raise ConfigError("Gibbs start needs a fully materialized LePage landscape (n <= 26)")


# --- running ----------------------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _prediction(cfg: ExperimentConfig, scales, t, s, ens=None):
    m = cfg.model
    kind = cfg.experiment
    if kind in ("aging_sweep", "extreme_crossover"):
        return aging_prediction(scales.alpha_eps, t, s), "asl"
    if kind == "high_temp":
        return 0.0, "zero"
    if kind == "critical_line":
        return critical_prediction(m.theta, m.beta, t, s) / math.sqrt(m.n), "critical_over_sqrt_n"
    if kind == "stationary":
        vals = [stationary_corr(ens.build_landscape(d).cascade, s) for d in range(ens.disorders)]
        return float(np.mean(vals)), "stationary_cascade_mean"
    return None, ""


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """One row per grid point (and kind); see CSV_COLUMNS."""
    validate(cfg)
    if cfg.experiment == "diagnostics":
        raise ConfigError("diagnostics runs through `remdyn landscape stats`")
    m = cfg.model
    ens = cfg.ensemble()
    scales = ens.scales
    results = correlation_grid(ens, cfg.points, estimator=cfg.estimator)
    rows = []
    for (t, s, rho), (nj, ov) in zip(cfg.points, results):
        pred, pkind = _prediction(cfg, scales, t, s, ens)
        base = dict(n=m.n, eps=m.eps, beta=m.beta, theta=m.theta, t=t, s=s, n_paths=nj.n_paths,
                    n_disorders=nj.n_disorders, prediction=pred, prediction_kind=pkind)
        rows.append(dict(base, kind="nojump", rho=None, mean=nj.mean, stderr_path=nj.stderr_path,
                         stderr_disorder=nj.stderr_disorder))
        if ov is not None and rho is not None:
            rows.append(dict(base, kind="overlap", rho=rho, mean=ov.mean, stderr_path=ov.stderr_path,
                             stderr_disorder=ov.stderr_disorder))
    return rows


def rows_to_csv(rows: list[dict], columns=CSV_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    return buf.getvalue()


def manifest(cfg: ExperimentConfig) -> dict:
    from . import __version__

    scales = solve_scales(cfg.model)
    return {
        "config": cfg.raw,
        "model": asdict(cfg.model),
        "scales": scales.as_dict(),
        "seeding": {"root_seed": cfg.seed, "disorder": "blake2b-64(root, 'disorder', d)",
                    "path": "blake2b-64(root, d, p)"},
        "ensemble": {"paths": cfg.paths, "disorders": cfg.disorders, "start_law": cfg.start_law,
                     "landscape": cfg.landscape, "lepage_count": cfg.lepage_count, "estimator": cfg.estimator,
                     "max_steps": cfg.max_steps},
        "versions": {"remdyn": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "numba": numba.__version__, "python": platform.python_version()},
    }


def write_outputs(cfg: ExperimentConfig, rows: list[dict], out: Optional[str] = None) -> Path:
    path = Path(out or cfg.output_path or "results.csv")
    path.parent.mkdir(parents=True, exist_ok=True)
    if cfg.output_format == "json":
        path.write_text(json.dumps(rows, indent=2) + "\n")
    else:
        path.write_text(rows_to_csv(rows))
    Path(str(path) + ".manifest.json").write_text(json.dumps(manifest(cfg), indent=2, default=str) + "\n")
    return path


SIMULATE_COLUMNS = ("disorder", "path", "steps", "t_max", "rescaled_clock", "centering", "centered_clock",
                    "start_vertex", "end_vertex")


def simulate_summary(cfg: ExperimentConfig) -> list[dict]:
    """Per trajectory S_n(t_max), M_n(t_max) and endpoints, for ``remdyn simulate``."""
    from .dynamics import centering_at, rescaled_clock, run_trajectory

    ens = cfg.ensemble()
    scales = ens.scales
    steps = max(1, int(math.floor(scales.a_n * cfg.t_max)))
    rows = []
    for d in range(cfg.disorders):
        land = ens.build_landscape(d)
        for p, ps in enumerate(ens.path_seeds(d)):
            tr = run_trajectory(land, steps, start_law=cfg.start_law, traj_seed=ps, centering=True)
            S = rescaled_clock(tr, scales, cfg.t_max)
            M = centering_at(tr, scales, cfg.t_max)
            rows.append(dict(disorder=d, path=p, steps=steps, t_max=cfg.t_max, rescaled_clock=S, centering=M,
                             centered_clock=S - M, start_vertex=int(tr.visits[0]), end_vertex=int(tr.visits[-1])))
    return rows
