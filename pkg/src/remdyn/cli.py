"""Command-line interface: ``remdyn <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 numerical or horizon error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from .dynamics import DynamicsError, HorizonError
from .estimators import EstimatorError, estimate_nojump, estimate_overlap
from .experiment import (CSV_COLUMNS, SIMULATE_COLUMNS, ConfigError, load_config, rows_to_csv, run_experiment,
                         simulate_summary, write_outputs)
from .landscape import (Landscape, LandscapeError, PoissonCascade, lattice_lambda, lattice_m, lattice_nu,
                        lattice_sigma, lepage_build)
from .limits import (DepthError, LevyTail, LimitError, aging_prediction, asl_cdf, critical_prediction,
                     levy_tail)
from .oracles import OracleError, brute_force_corr, mixing_tv, spectral_return
from .rng import disorder_seed
from .scales import ModelParams, ScaleError, beta_c, solve_scales

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


def _emit(obj, fmt: str = "json") -> None:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(obj.keys()))
        w.writerow([repr(v) if isinstance(v, float) else v for v in obj.values()])
        sys.stdout.write(buf.getvalue())
    else:
        print(json.dumps(obj, indent=2))


def _add_model_args(p: argparse.ArgumentParser, need_beta: bool = True) -> None:
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=None, help="intermediate scale exponent")
    p.add_argument("--extreme", type=float, default=None, metavar="EPSBAR", help="extreme scale a_n = EPSBAR 2^n")
    g = p.add_mutually_exclusive_group(required=need_beta)
    g.add_argument("--beta", type=float)
    g.add_argument("--alpha", type=float, dest="alpha_target", help="set beta = beta_c(eps)/alpha")
    p.add_argument("--theta", type=float, default=None)


def _params(a) -> ModelParams:
    if a.extreme is not None:
        eps, eps_bar, scale_eps = None, a.extreme, 1.0
    else:
        if a.eps is None:
            raise ScaleError("give --eps or --extreme")
        eps, eps_bar, scale_eps = a.eps, None, a.eps
    beta = a.beta
    if beta is None:
        beta = beta_c(scale_eps) / a.alpha_target if a.alpha_target is not None else beta_c(scale_eps)
    return ModelParams(n=a.n, beta=beta, eps=eps, eps_bar=eps_bar, theta=a.theta)


# --- subcommands ---------------------------------------------------------------------

def cmd_scales(a) -> int:
    p = _params(a)
    _emit(solve_scales(p).as_dict(), a.format)
    return EXIT_OK


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_landscape_stats(a) -> int:
    p = _params(a)
    sc = solve_scales(p)
    if a.lepage:
        land = lepage_build(p, sc, a.count, a.seed)[0]
    else:
        land = Landscape.direct(p, a.seed, sc)
    rows = []
    for u in _floats(a.u):
        v = lattice_nu(land, u, samples=a.samples, sample_seed=a.seed)
        rows.append(("nu", u, v))
        v = lattice_sigma(land, u, samples=max(1, a.samples // 10), sample_seed=a.seed)
        rows.append(("sigma", u, v))
    rows.append(("m", 1.0, lattice_m(land, samples=a.samples, sample_seed=a.seed)))
    for d in _floats(a.delta):
        rows.append(("lambda", d, lattice_lambda(land, d, "A3", samples=a.samples, sample_seed=a.seed)))
        rows.append(("lambda_bar", d, lattice_lambda(land, d, "A3prime", samples=a.samples, sample_seed=a.seed)))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["quantity", "u_or_delta", "value", "stderr", "n", "eps", "beta", "seed"])
    eps = p.eps if p.eps is not None else ""
    for q, x, v in rows:
        w.writerow([q, repr(float(x)), repr(v.value), repr(v.stderr), p.n, eps, repr(p.beta), a.seed])
    if a.out:
        Path(a.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_simulate(a) -> int:
    cfg = load_config(a.config, need_grid=False)
    rows = simulate_summary(cfg)
    text = rows_to_csv(rows, SIMULATE_COLUMNS)
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_correlation(a) -> int:
    cfg = load_config(a.config, need_grid=False)
    ens = cfg.ensemble()
    m = cfg.model
    if a.kind == "overlap":
        if a.rho is None:
            raise EstimatorError("--kind overlap needs --rho")
        est = estimate_overlap(ens, a.t, a.s, a.rho)
    else:
        est = estimate_nojump(ens, a.t, a.s, estimator=a.estimator)
    sc = ens.scales
    if m.critical:
        pred, pkind = critical_prediction(m.theta, m.beta, a.t, a.s) / math.sqrt(m.n), "critical_over_sqrt_n"
    elif sc.alpha_eps < 1:
        pred, pkind = aging_prediction(sc.alpha_eps, a.t, a.s), "asl"
    else:
        pred, pkind = 0.0, "zero"
    row = dict(kind=a.kind, n=m.n, eps=m.eps, beta=m.beta, theta=m.theta, t=a.t, s=a.s,
               rho=a.rho if a.kind == "overlap" else None, mean=est.mean, stderr_path=est.stderr_path,
               stderr_disorder=est.stderr_disorder, n_paths=est.n_paths, n_disorders=est.n_disorders,
               prediction=pred, prediction_kind=pkind)
    text = rows_to_csv([row], CSV_COLUMNS)
    if a.out:
        Path(a.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_limits(a) -> int:
    if a.which == "asl":
        _emit({"alpha": a.alpha, "u": a.u, "asl": asl_cdf(a.alpha, a.u)})
    elif a.which == "levy":
        if a.extreme:
            casc = PoissonCascade.sample(a.alpha, a.depth, a.seed)
            tail = LevyTail.extreme(casc, a.eps_bar)
            _emit({"kind": "extreme", "alpha": a.alpha, "u": a.u, "depth": a.depth, "seed": a.seed,
                   "value": levy_tail(tail, a.u), "remainder": tail.remainder(a.u)})
        else:
            _emit({"kind": "intermediate", "alpha": a.alpha, "u": a.u,
                   "value": levy_tail(LevyTail.intermediate(a.alpha), a.u)})
    else:
        _emit({"theta": a.theta, "beta": a.beta, "t": a.t, "s": a.s,
               "prediction": critical_prediction(a.theta, a.beta, a.t, a.s)})
    return EXIT_OK


def cmd_oracle(a) -> int:
    if a.which == "return-prob":
        _emit({"n": a.n, "l": a.l, "p": spectral_return(a.n, a.l)})
    elif a.which == "mixing":
        _emit({"n": a.n, "deviation": mixing_tv(a.n, a.steps), "bound": 2.0 ** (-a.n)})
    else:
        p = _params(a)
        land = Landscape.direct(p, disorder_seed(a.seed, 0))
        r = brute_force_corr(land, a.t, a.s, paths=a.paths, seed=a.seed, mode=a.mode)
        _emit({"n": a.n, "t": a.t, "s": a.s, "mode": a.mode, "mean": r.mean, "stderr": r.stderr,
               "paths": r.paths})
    return EXIT_OK


def cmd_run(a) -> int:
    cfg = load_config(a.config)
    rows = run_experiment(cfg)
    path = write_outputs(cfg, rows, a.out)
    print(str(path))
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="remdyn", description="Random hopping dynamics of the REM")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scales", help="resolve a_n, c_n, B_n, ...")
    _add_model_args(p)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_scales)

    p = sub.add_parser("landscape", help="landscape lattice statistics")
    lsub = p.add_subparsers(dest="action", required=True)
    q = lsub.add_parser("stats")
    _add_model_args(q)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--u", default="1")
    q.add_argument("--delta", default="1")
    q.add_argument("--samples", type=int, default=10_000_000)
    q.add_argument("--lepage", action="store_true")
    q.add_argument("--count", type=int, default=100_000)
    q.add_argument("--out")
    q.set_defaults(func=cmd_landscape_stats)

    p = sub.add_parser("simulate", help="trajectory summaries from a config")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("correlation", help="estimate one correlation")
    p.add_argument("--kind", choices=("nojump", "overlap"), default="nojump")
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--rho", type=float)
    p.add_argument("--estimator", choices=("indicator", "conditional"), default="indicator")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_correlation)

    p = sub.add_parser("limits", help="closed-form limit objects")
    lsub = p.add_subparsers(dest="which", required=True)
    q = lsub.add_parser("asl")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--u", type=float, required=True)
    q = lsub.add_parser("levy")
    q.add_argument("--alpha", type=float, required=True)
    q.add_argument("--u", type=float, required=True)
    q.add_argument("--extreme", action="store_true")
    q.add_argument("--depth", type=int, default=100_000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--eps-bar", type=float, default=1.0)
    q = lsub.add_parser("critical")
    q.add_argument("--theta", type=float, required=True)
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--s", type=float, required=True)
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("oracle", help="exact small-instance references")
    osub = p.add_subparsers(dest="which", required=True)
    q = osub.add_parser("return-prob")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--l", type=int, required=True)
    q = osub.add_parser("mixing")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--steps", type=int, default=None, help="two-step transitions (default theta_n/2)")
    q = osub.add_parser("brute-corr")
    _add_model_args(q, need_beta=False)
    q.add_argument("--t", type=float, required=True)
    q.add_argument("--s", type=float, required=True)
    q.add_argument("--paths", type=int, default=20_000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--mode", choices=("race", "shared"), default="race")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("run", help="config-driven experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)
    return ap


VALIDATION_ERRORS = (ScaleError, LandscapeError, EstimatorError, ConfigError, LimitError, OracleError,
                     DynamicsError, FileNotFoundError)
NUMERICAL_ERRORS = (HorizonError, DepthError, ArithmeticError, RuntimeError)


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    try:
        return a.func(a)
    except NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
