"""Command-line entry point: ``gibbsforge <config> [--output-dir D] [--grid-n N] [--seed S] [--timestamp]``.

Exit codes: 0 success, 1 configuration error, 2 hypotheses violated,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, load_config
from .dynamics import builtin_map, check_hypotheses
from .equilibrium import equilibrium_from_eigendata
from .errors import (
    ConfigParseError,
    HypothesisViolated,
    InvalidParameter,
    NoConvergence,
    UnknownMap,
    UnknownPotential,
)
from .gibbs import default_delta, gibbs_ratios_at_hyperbolic_times
from .hyptimes import first_time_tail
from .io import write_csv, write_json
from .potentials import builtin_potential
from .stability import PerturbationFamily, statistical_sweep, stochastic_sweep
from .transfer import compute_eigendata, make_grid

EXIT_OK, EXIT_CONFIG, EXIT_HYPOTHESES, EXIT_NUMERICS = 0, 1, 2, 3
TOL = 1e-10


def _metadata(cfg: ExperimentConfig, n_bins, timestamp):
    meta = {
        "toolkit": "gibbsforge",
        "version": __version__,
        "experiment": cfg.experiment,
        "map": f"{cfg.map_name}({', '.join(repr(p) for p in cfg.map_params)})",
        "potential": f"{cfg.potential_name}({', '.join(repr(p) for p in cfg.potential_params)})",
        "seed": cfg.seed,
        "grid_n": cfg.grid_n,
        "n_bins": n_bins,
        "tolerance": TOL,
        "gamma": cfg.gamma,
    }
    if timestamp:
        meta["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return meta


def _build(cfg):
    try:
        fmap = builtin_map(cfg.map_name, cfg.map_params)
        phi = builtin_potential(cfg.potential_name, cfg.potential_params, fmap)
    except (UnknownMap, UnknownPotential) as exc:
        raise ConfigParseError(f"unknown builtin {exc.args[0]!r}") from None
    except InvalidParameter as exc:
        raise ConfigParseError(str(exc)) from None
    return fmap, phi


def run(cfg: ExperimentConfig, timestamp: bool = False) -> int:
    """Run one experiment and write its files into ``cfg.output_dir``; returns the exit code."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmap, phi = _build(cfg)
    grid = make_grid(fmap, cfg.grid_n)
    meta = _metadata(cfg, grid.n_bins, timestamp)

    report = check_hypotheses(fmap, phi, sigma=cfg.sigma, gamma=cfg.gamma)
    write_json(out / "hypothesis_report.json",
               {**report.as_dict(), "failing": report.failing}, meta)
    if not report.passes:
        print(f"hypotheses violated: {', '.join(report.failing)}", file=sys.stderr)
        return EXIT_HYPOTHESES
    if cfg.experiment == "analyze":
        return EXIT_OK

    c = cfg.c if cfg.c is not None else report.admissible_c
    if cfg.experiment in ("equilibrium", "gibbs", "hyptimes"):
        eig = compute_eigendata(fmap, phi, grid, scheme=cfg.scheme, tol=TOL)
        mids = grid.midpoints
        write_csv(out / "eigendata.csv", ["midpoint", "h", "nu"],
                  zip(mids, eig.eigenfunction, eig.eigenmeasure.weights), meta)
        write_json(out / "eigendata.json", {
            "lambda": eig.lam, "pressure": math.log(eig.lam),
            "residual_right": eig.residual_right, "residual_left": eig.residual_left,
            "iterations": eig.iterations}, meta)

    if cfg.experiment == "equilibrium":
        eq = equilibrium_from_eigendata(eig, fmap, phi)
        write_csv(out / "equilibrium.csv", ["midpoint", "mu", "density_vs_nu"],
                  zip(grid.midpoints, eq.measure.weights, eq.density_vs_nu), meta)
        write_json(out / "equilibrium.json",
                   {"lambda": eig.lam, "pressure": math.log(eig.lam), **eq.summary()}, meta)
    elif cfg.experiment == "gibbs":
        delta = cfg.delta if cfg.delta is not None else default_delta(fmap)
        rng = np.random.default_rng(cfg.seed)
        xs = eig.eigenmeasure.sample(cfg.samples or 100, rng)
        gs = gibbs_ratios_at_hyperbolic_times(fmap, phi, eig, eig.eigenmeasure, xs,
                                              cfg.n_max or 20, delta, c)
        write_csv(out / "gibbs_ratios.csv", ["x", "n", "ratio"], zip(gs.x, gs.n, gs.ratio),
                  {**meta, "c": c, "delta": delta})
        write_json(out / "gibbs.json", {"K": gs.K, "count": int(gs.ratio.size),
                                        "ratio_min": float(gs.ratio.min()),
                                        "ratio_max": float(gs.ratio.max()),
                                        "c": c, "delta": delta}, meta)
    elif cfg.experiment == "hyptimes":
        tail = first_time_tail(fmap, eig.eigenmeasure, c, cfg.n_max or 60,
                               cfg.samples or 10_000, cfg.seed)
        slope, r2 = tail.loglinear_fit()
        write_csv(out / "hyptimes_tail.csv", ["n", "probability"], zip(tail.n, tail.probability),
                  {**meta, "c": c})
        write_json(out / "hyptimes.json", {
            "c": c, "mean_first_time": tail.mean_first_time, "loglinear_slope": slope,
            "r_squared": r2, "samples": tail.samples, "censored": tail.censored,
            "escaped": tail.escaped}, meta)
    elif cfg.experiment == "stat-sweep":
        base = cfg.sweep_base if cfg.sweep_base is not None else cfg.map_params[0]
        rest = tuple(cfg.map_params[1:])

        def map_at(t):
            return builtin_map(cfg.map_name, (t,) + rest)

        family = PerturbationFamily(tuple(cfg.sweep), map_at,
                                    lambda t: builtin_potential(cfg.potential_name, cfg.potential_params,
                                                                map_at(t)), base)
        res = statistical_sweep(family, grid, sigma=cfg.sigma, gamma=cfg.gamma, tol=TOL)
        _write_sweep(out, res, {**meta, "sweep_base": base})
    elif cfg.experiment == "stoch-sweep":
        res = stochastic_sweep(fmap, phi, grid, cfg.sweep, noise=cfg.noise, sigma=cfg.sigma,
                               gamma=cfg.gamma, tol=TOL)
        _write_sweep(out, res, {**meta, "noise": cfg.noise})
    return EXIT_OK


def _write_sweep(out, res, meta):
    write_csv(out / "sweep.csv", ["parameter", "L1", "kolmogorov", "lambda", "pressure"],
              res.rows(), meta)
    write_json(out / "sweep.json", {
        "parameter": res.parameter, "L1": res.distance_L1, "kolmogorov": res.distance_kolmogorov,
        "max_L1": max(res.distance_L1), "final_L1": res.distance_L1[-1]}, meta)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gibbsforge", description=__doc__.splitlines()[0])
    parser.add_argument("config", help="experiment config file")
    parser.add_argument("--output-dir", help="override [experiment] output_dir")
    parser.add_argument("--grid-n", type=int, help="override [experiment] grid_n")
    parser.add_argument("--seed", type=int, help="override [experiment] seed")
    parser.add_argument("--timestamp", action="store_true", help="add a timestamp to file metadata")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.output_dir is not None:
            overrides["output_dir"] = args.output_dir
        if args.grid_n is not None:
            if args.grid_n < 8:
                raise ConfigParseError("grid_n must be >= 8", field="--grid-n")
            overrides["grid_n"] = args.grid_n
        if args.seed is not None:
            overrides["seed"] = args.seed
        cfg = dataclasses.replace(cfg, **overrides)
        return run(cfg, timestamp=args.timestamp)
    except ConfigParseError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolated as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_HYPOTHESES
    except NoConvergence as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
