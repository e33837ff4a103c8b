"""Command-line orchestration of the pipeline.

Subcommands: simulate, observe, summarize, reftable, fit, crossval,
coverage, rscan, directfit, oracle-check. Exit codes: 0 success,
1 validation error, 2 runtime error, 3 acceptance-check failure.

Every flag may also come from a JSON file via ``--config`` (explicit
flags win); the default worker count honours the STEPTURN_WORKERS
environment variable. Each artifact is written with a JSON sidecar that
fully reproduces it, and an append-only manifest records digests.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import densities, io
from .errors import StepturnError
from .experiments import (
    coverage_report,
    cross_validate,
    direct_fit,
    r_scan,
)
from .inference import (
    METHODS,
    PriorSpec,
    ReferenceTable,
    SimConfig,
    fit,
    hpd_interval,
    reference_rows,
    weighted_quantile,
)
from .movement import MovementParams, observe, simulate_until
from .streams import stream
from .summaries import summarize

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_CHECK_FAILED = 3

WORKERS_ENV = "STEPTURN_WORKERS"


class ValidationError(ValueError):
    """Bad command line, config, or input schema."""


class CheckFailure(Exception):
    """An acceptance-tagged check failed; exit code 3."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default; we want 1
        raise ValidationError(message)


def _add_common(parser, out_required=True):
    parser.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    parser.add_argument(
        "--workers", type=int, default=None,
        help=f"worker processes (default ${WORKERS_ENV} or 1)",
    )
    parser.add_argument("--out", type=str, default=None, required=False,
                        help="output directory")
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file with defaults for this subcommand")
    parser._out_required = out_required


def build_parser():
    parser = _Parser(prog="stepturn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one latent path and its observation")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--n-obs", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("observe", help="observe a stored latent path at regular times")
    p.add_argument("--latent", type=str, default=None, help="latent path CSV")
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--n-obs", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("summarize", help="summary statistics of a stored track")
    p.add_argument("--track", type=str, default=None, help="observed track CSV")
    p.add_argument("--dt", type=float, default=None)
    _add_common(p, out_required=False)

    p = sub.add_parser("reftable", help="generate a prior-predictive reference table")
    p.add_argument("--n-sims", type=int, default=None)
    p.add_argument("--kappa-range", type=float, nargs=2, default=None)
    p.add_argument("--lambda-range", type=float, nargs=2, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--min-obs", type=int, default=None)
    p.add_argument("--shard-size", type=int, default=None)
    _add_common(p)

    p = sub.add_parser("fit", help="ABC fit of a track or summary against a table")
    p.add_argument("--table", type=str, default=None)
    p.add_argument("--track", type=str, default=None)
    p.add_argument("--summary", type=str, default=None)
    p.add_argument("--method", type=str, default=None, choices=METHODS)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--transform", type=str, default=None, choices=("none", "log"))
    _add_common(p)

    p = sub.add_parser("crossval", help="leave-one-out cross validation")
    p.add_argument("--table", type=str, default=None)
    p.add_argument("--methods", type=str, nargs="+", default=None, choices=METHODS)
    p.add_argument("--epsilons", type=float, nargs="+", default=None)
    p.add_argument("--n-rep", type=int, default=None)
    p.add_argument("--kappa-max", type=float, default=None)
    p.add_argument("--lambda-max", type=float, default=None)
    p.add_argument("--no-constraint", action="store_true")
    p.add_argument("--check", action="store_true",
                   help="exit 3 unless rejection errors shrink with epsilon")
    p.add_argument("--gnuplot", action="store_true")
    _add_common(p)

    p = sub.add_parser("coverage", help="empirical coverage and uniformity test")
    p.add_argument("--table", type=str, default=None)
    p.add_argument("--methods", type=str, nargs="+", default=None, choices=METHODS)
    p.add_argument("--epsilons", type=float, nargs="+", default=None)
    p.add_argument("--n-rep", type=int, default=None)
    p.add_argument("--kappa-max", type=float, default=None)
    p.add_argument("--lambda-max", type=float, default=None)
    p.add_argument("--no-constraint", action="store_true")
    p.add_argument("--check", action="store_true",
                   help="exit 3 unless all empirical coverages reach 0.90")
    p.add_argument("--gnuplot", action="store_true")
    _add_common(p)

    p = sub.add_parser("rscan", help="error scan over the observation-scale ratio R")
    p.add_argument("--table", type=str, default=None)
    p.add_argument("--r-values", type=float, nargs="+", default=None)
    p.add_argument("--kappa-values", type=float, nargs="+", default=None)
    p.add_argument("--n-per-cell", type=int, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--n-obs", type=int, default=None)
    p.add_argument("--methods", type=str, nargs="+", default=None, choices=METHODS)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--check", action="store_true",
                   help="exit 3 unless errors grow from the smallest to the largest R")
    p.add_argument("--gnuplot", action="store_true")
    _add_common(p)

    p = sub.add_parser("directfit", help="conjugate/grid fit on a stored latent path")
    p.add_argument("--latent", type=str, default=None)
    p.add_argument("--a0", type=float, default=None)
    p.add_argument("--b0", type=float, default=None)
    p.add_argument("--kappa-grid-max", type=float, default=None)
    _add_common(p, out_required=False)

    p = sub.add_parser("oracle-check", help="density normalization and MC suite")
    p.add_argument("--n-draws", type=int, default=None)
    _add_common(p)
    return parser


def _resolve(args, defaults):
    """Merge CLI flags, --config JSON and hard defaults (flags win)."""
    config = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ValidationError(f"config file not found: {path}")
        try:
            config = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(config, dict):
            raise ValidationError(f"config file {path} must hold a JSON object")
    resolved = {}
    for key, hard_default in defaults.items():
        flag = getattr(args, key, None)
        # store_true flags at their False default fall through to the config
        if flag is not None and flag is not False:
            resolved[key] = flag
        elif key in config:
            resolved[key] = config[key]
        else:
            resolved[key] = hard_default
    return resolved


def _workers(resolved):
    if resolved.get("workers"):
        return int(resolved["workers"])
    env = os.environ.get(WORKERS_ENV)
    return int(env) if env else 1


def _out_dir(resolved):
    out = resolved.get("out")
    if out is None:
        raise ValidationError("--out is required for this command")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load_table(resolved):
    path = resolved.get("table")
    if not path:
        raise ValidationError("--table is required")
    if not Path(path).exists():
        raise ValidationError(f"table not found: {path}")
    return io.read_reference_table(path)


def _emit(out_dir, name, writer, command, config, started):
    path = out_dir / name
    writer(path)
    io.append_manifest(out_dir, path, command, config, time.monotonic() - started)
    return path


# ---------------------------------------------------------------------------
# subcommand implementations


def cmd_simulate(args):
    resolved = _resolve(args, {
        "kappa": None, "lam": None, "dt": 0.5, "n_obs": 1500, "seed": 0,
        "out": None, "workers": None,
    })
    if resolved["kappa"] is None or resolved["lam"] is None:
        raise ValidationError("simulate requires --kappa and --lambda")
    out = _out_dir(resolved)
    started = time.monotonic()
    params = MovementParams(kappa=resolved["kappa"], lam=resolved["lam"])
    rng = stream(resolved["seed"], 0)
    path = simulate_until(params, resolved["n_obs"] * resolved["dt"], rng)
    track = observe(path, resolved["dt"], resolved["n_obs"])
    config = {k: resolved[k] for k in ("kappa", "lam", "dt", "n_obs", "seed")}
    _emit(out, "latent.csv", lambda p: io.write_latent_csv(p, path), "simulate",
          config, started)
    io.write_sidecar(out / "latent.csv", "simulate", config)
    _emit(out, "track.csv", lambda p: io.write_track_csv(p, track), "simulate",
          config, started)
    io.write_sidecar(out / "track.csv", "simulate", config)
    print(f"wrote {out / 'latent.csv'} ({path.n_steps} steps) and "
          f"{out / 'track.csv'} ({track.n_obs} observations)")
    return EXIT_OK


def cmd_observe(args):
    resolved = _resolve(args, {
        "latent": None, "dt": 0.5, "n_obs": 1500, "out": None, "seed": 0,
        "workers": None,
    })
    if not resolved["latent"]:
        raise ValidationError("observe requires --latent")
    if not Path(resolved["latent"]).exists():
        raise ValidationError(f"latent path not found: {resolved['latent']}")
    out = _out_dir(resolved)
    started = time.monotonic()
    latent = io.read_latent_csv(resolved["latent"])
    track = observe(latent, resolved["dt"], resolved["n_obs"])
    config = {k: resolved[k] for k in ("latent", "dt", "n_obs")}
    _emit(out, "track.csv", lambda p: io.write_track_csv(p, track), "observe",
          config, started)
    io.write_sidecar(out / "track.csv", "observe", config)
    print(f"wrote {out / 'track.csv'} ({track.n_obs} observations)")
    return EXIT_OK


def cmd_summarize(args):
    resolved = _resolve(args, {"track": None, "dt": 0.5, "out": None, "seed": 0,
                               "workers": None})
    if not resolved["track"]:
        raise ValidationError("summarize requires --track")
    if not Path(resolved["track"]).exists():
        raise ValidationError(f"track not found: {resolved['track']}")
    track = io.read_track_csv(resolved["track"], resolved["dt"])
    summary = summarize(track)
    print("s1,s2,s3,s4")
    print(",".join(io.fmt(v) for v in summary.as_array()))
    if resolved["out"]:
        out = _out_dir(resolved)
        started = time.monotonic()
        config = {k: resolved[k] for k in ("track", "dt")}
        _emit(out, "summary.csv", lambda p: io.write_summary_csv(p, summary),
              "summarize", config, started)
        io.write_sidecar(out / "summary.csv", "summarize", config)
    return EXIT_OK


def cmd_reftable(args):
    resolved = _resolve(args, {
        "n_sims": 100_000, "kappa_range": (0.0, 100.0), "lambda_range": (0.0, 50.0),
        "dt": 0.5, "min_obs": 1500, "seed": 0, "shard_size": 1000,
        "out": None, "workers": None,
    })
    if resolved["n_sims"] < 1:
        raise ValidationError(f"--n-sims must be >= 1, got {resolved['n_sims']}")
    out = _out_dir(resolved)
    workers = _workers(resolved)
    started = time.monotonic()
    prior = PriorSpec(tuple(resolved["kappa_range"]), tuple(resolved["lambda_range"]))
    sim = SimConfig(dt=resolved["dt"], min_obs=resolved["min_obs"])
    config = {k: resolved[k] for k in
              ("n_sims", "kappa_range", "lambda_range", "dt", "min_obs", "seed",
               "shard_size")}
    config["kappa_range"] = list(prior.kappa_range)
    config["lambda_range"] = list(prior.lambda_range)
    table = _sharded_reftable(out, prior, sim, resolved, workers, config)
    _emit(out, "table.csv", lambda p: io.write_reference_table(p, table), "reftable",
          config, started)
    print(f"wrote {out / 'table.csv'}: {table.n_rows} rows, "
          f"{table.n_resampled} resampled, digest {io.sha256_file(out / 'table.csv')[:12]}")
    return EXIT_OK


def _sharded_reftable(out, prior, sim, resolved, workers, config):
    """Resumable shard-by-shard generation with digest verification."""
    n_sims = resolved["n_sims"]
    shard_size = max(1, resolved["shard_size"])
    seed = resolved["seed"]
    shard_dir = out / "shards"
    shard_dir.mkdir(exist_ok=True)
    state_path = shard_dir / "shards.json"
    state = {"config": config, "shards": {}}
    if state_path.exists():
        previous = json.loads(state_path.read_text())
        if previous.get("config") != config:
            raise ValidationError(
                f"existing shards in {shard_dir} were built with a different config; "
                "remove them or change --out"
            )
        state = previous
    edges = list(range(0, n_sims, shard_size)) + [n_sims]
    pending = []
    for index, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        name = f"shard_{index:05d}.npz"
        path = shard_dir / name
        record = state["shards"].get(name)
        if record is not None and path.exists():
            digest = io.sha256_file(path)
            if digest != record["sha256"]:
                raise RuntimeError(
                    f"shard digest mismatch on resume: {path} has {digest[:12]}, "
                    f"manifest says {record['sha256'][:12]}; refusing to reuse it"
                )
            continue
        pending.append((prior, sim, seed, name, lo, hi))

    done = len(state["shards"])
    total = len(edges) - 1

    def save(name, rows, resamples):
        nonlocal done
        path = shard_dir / name
        np.savez(path, rows=rows, resamples=resamples)
        state["shards"][name] = {"sha256": io.sha256_file(path), "rows": len(rows)}
        state_path.write_text(json.dumps(state, indent=2, sort_keys=True) + "\n")
        done += 1
        print(f"shard {name}: {len(rows)} rows ({done}/{total})", flush=True)

    if workers > 1 and len(pending) > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            # imap keeps shard order so each finished shard checkpoints at once
            for name, rows, resamples in pool.imap(_shard_task, pending):
                save(name, rows, resamples)
    else:
        for task in pending:
            save(*_shard_task(task))
    all_rows, total_resamples = [], 0
    for index in range(len(edges) - 1):
        with np.load(shard_dir / f"shard_{index:05d}.npz") as data:
            all_rows.append(data["rows"])
            total_resamples += int(data["resamples"])
    rows = np.vstack(all_rows)
    return ReferenceTable(
        params=rows[:, :2].copy(),
        summaries=rows[:, 2:].copy(),
        prior=prior,
        config=sim,
        seed=seed,
        n_resampled=total_resamples,
    )


def _shard_task(task):
    prior, sim, seed, name, lo, hi = task
    rows, resamples = reference_rows(prior, sim, seed, lo, hi)
    return name, rows, resamples


def cmd_fit(args):
    resolved = _resolve(args, {
        "table": None, "track": None, "summary": None, "method": "loclinear",
        "epsilon": 0.001, "transform": "none", "out": None, "seed": 0,
        "workers": None,
    })
    table = _load_table(resolved)
    if bool(resolved["track"]) == bool(resolved["summary"]):
        raise ValidationError("fit requires exactly one of --track or --summary")
    if resolved["track"]:
        if not Path(resolved["track"]).exists():
            raise ValidationError(f"track not found: {resolved['track']}")
        track = io.read_track_csv(resolved["track"], table.config.dt)
        s_obs = summarize(track).as_array()
    else:
        if not Path(resolved["summary"]).exists():
            raise ValidationError(f"summary not found: {resolved['summary']}")
        s_obs = io.read_summary_csv(resolved["summary"]).as_array()
    out = _out_dir(resolved)
    started = time.monotonic()
    posterior = fit(table, s_obs, resolved["method"], resolved["epsilon"],
                    transform=resolved["transform"])
    config = {k: resolved[k] for k in
              ("table", "track", "summary", "method", "epsilon", "transform")}
    _emit(out, "posterior.csv",
          lambda p: io.write_posterior(p, posterior, "fit", config), "fit",
          config, started)
    for name in ("kappa", "lambda"):
        median = weighted_quantile(posterior, name, 0.5)
        lo, hi = hpd_interval(posterior, name, 0.95)
        print(f"{name}: median {median:.6g}, 95% HPD [{lo:.6g}, {hi:.6g}]")
    return EXIT_OK


def _constraint(resolved):
    if resolved.get("no_constraint"):
        return None
    return (resolved["kappa_max"], resolved["lambda_max"])


def cmd_crossval(args):
    resolved = _resolve(args, {
        "table": None, "methods": list(METHODS), "epsilons": [0.1, 0.01, 0.005, 0.001],
        "n_rep": 100, "kappa_max": 70.0, "lambda_max": 25.0, "no_constraint": False,
        "seed": 0, "out": None, "workers": None, "check": False, "gnuplot": False,
    })
    table = _load_table(resolved)
    out = _out_dir(resolved)
    workers = _workers(resolved)
    started = time.monotonic()
    report = cross_validate(
        table,
        methods=resolved["methods"],
        epsilons=resolved["epsilons"],
        n_rep=resolved["n_rep"],
        constraint=_constraint(resolved),
        seed=resolved["seed"],
        workers=workers,
    )
    config = {k: resolved[k] for k in
              ("table", "methods", "epsilons", "n_rep", "kappa_max", "lambda_max",
               "no_constraint", "seed")}
    _emit(out, "crossval.csv", lambda p: io.write_crossval_csv(p, report.records),
          "crossval", config, started)
    io.write_sidecar(out / "crossval.csv", "crossval", config)
    metrics = {}
    for method in report.methods:
        for epsilon in report.epsilons:
            for param in ("kappa", "lambda"):
                key = f"{method}:eps={epsilon:g}:{param}"
                metrics[key] = {
                    "prediction_error": report.prediction_error(method, epsilon, param),
                    "md_index": report.md_index(method, epsilon, param),
                }
                print(f"{key}: error {metrics[key]['prediction_error']:.4g}, "
                      f"MD {metrics[key]['md_index']:.4g}")
    (out / "crossval_metrics.json").write_text(json.dumps(metrics, indent=2) + "\n")
    if resolved["gnuplot"]:
        (out / "crossval.gp").write_text(io.gnuplot_crossval("crossval.csv"))
    if resolved["check"]:
        eps_sorted = sorted(report.epsilons, reverse=True)
        if "rejection" in report.methods and len(eps_sorted) >= 2:
            for param in ("kappa", "lambda"):
                coarse = report.prediction_error("rejection", eps_sorted[0], param)
                fine = report.prediction_error("rejection", eps_sorted[-1], param)
                if not coarse > fine:
                    raise CheckFailure(
                        f"rejection {param} error at eps={eps_sorted[0]:g} ({coarse:.4g}) "
                        f"does not exceed eps={eps_sorted[-1]:g} ({fine:.4g})"
                    )
    return EXIT_OK


def cmd_coverage(args):
    resolved = _resolve(args, {
        "table": None, "methods": list(METHODS), "epsilons": [0.1, 0.001],
        "n_rep": 100, "kappa_max": 70.0, "lambda_max": 25.0, "no_constraint": False,
        "seed": 0, "out": None, "workers": None, "check": False, "gnuplot": False,
    })
    table = _load_table(resolved)
    out = _out_dir(resolved)
    workers = _workers(resolved)
    started = time.monotonic()
    crossval = cross_validate(
        table,
        methods=resolved["methods"],
        epsilons=resolved["epsilons"],
        n_rep=resolved["n_rep"],
        constraint=_constraint(resolved),
        seed=resolved["seed"],
        workers=workers,
    )
    report = coverage_report(crossval)
    config = {k: resolved[k] for k in
              ("table", "methods", "epsilons", "n_rep", "kappa_max", "lambda_max",
               "no_constraint", "seed")}
    _emit(out, "coverage.csv", lambda p: io.write_coverage_csv(p, crossval.records),
          "coverage", config, started)
    io.write_sidecar(out / "coverage.csv", "coverage", config)
    summary = {}
    for key, cov in report.coverage.items():
        method, epsilon, param = key
        label = f"{method}:eps={epsilon:g}:{param}"
        summary[label] = {
            "empirical_coverage": cov,
            "ks_statistic": report.ks_statistic[key],
            "ks_pvalue": report.ks_pvalue[key],
            "mean_p": float(np.mean(report.p_values[key])),
            "histogram": report.histogram[key].tolist(),
        }
        print(f"{label}: coverage {cov:.3f}, KS p {report.ks_pvalue[key]:.3g}, "
              f"mean p {summary[label]['mean_p']:.3f}")
    (out / "coverage_summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if resolved["gnuplot"]:
        (out / "coverage.gp").write_text(io.gnuplot_coverage("coverage.csv"))
    if resolved["check"]:
        for label, entry in summary.items():
            if entry["empirical_coverage"] < 0.90:
                raise CheckFailure(
                    f"{label}: empirical coverage {entry['empirical_coverage']:.3f} < 0.90"
                )
    return EXIT_OK


def cmd_rscan(args):
    resolved = _resolve(args, {
        "table": None, "r_values": [0.25, 1.0, 4.5], "kappa_values": [10.0, 40.0, 70.0],
        "n_per_cell": 50, "dt": 0.5, "n_obs": 1500, "methods": list(METHODS),
        "epsilon": 0.001, "seed": 0, "out": None, "workers": None,
        "check": False, "gnuplot": False,
    })
    table = _load_table(resolved)
    out = _out_dir(resolved)
    workers = _workers(resolved)
    started = time.monotonic()
    report = r_scan(
        table,
        r_values=resolved["r_values"],
        kappa_values=resolved["kappa_values"],
        n_per_cell=resolved["n_per_cell"],
        dt=resolved["dt"],
        methods=resolved["methods"],
        epsilon=resolved["epsilon"],
        seed=resolved["seed"],
        n_obs=resolved["n_obs"],
        workers=workers,
    )
    config = {k: resolved[k] for k in
              ("table", "r_values", "kappa_values", "n_per_cell", "dt", "n_obs",
               "methods", "epsilon", "seed")}
    _emit(out, "rscan.csv", lambda p: io.write_rscan_csv(p, report.records),
          "rscan", config, started)
    io.write_sidecar(out / "rscan.csv", "rscan", config)
    for method in resolved["methods"]:
        for r_value in resolved["r_values"]:
            err = report.mean_error_at(method, r_value, "lambda")
            print(f"{method}: R={r_value:g} lambda error {err:.4g}")
    if resolved["gnuplot"]:
        (out / "rscan.gp").write_text(io.gnuplot_rscan("rscan.csv"))
    if resolved["check"]:
        r_lo, r_hi = min(resolved["r_values"]), max(resolved["r_values"])
        for method in resolved["methods"]:
            low = report.mean_error_at(method, r_lo, "lambda")
            high = report.mean_error_at(method, r_hi, "lambda")
            if not high > low:
                raise CheckFailure(
                    f"{method}: lambda error at R={r_hi:g} ({high:.4g}) does not exceed "
                    f"R={r_lo:g} ({low:.4g})"
                )
    return EXIT_OK


def cmd_directfit(args):
    resolved = _resolve(args, {
        "latent": None, "a0": 1.0, "b0": 0.0, "kappa_grid_max": 200.0,
        "out": None, "seed": 0, "workers": None,
    })
    if not resolved["latent"]:
        raise ValidationError("directfit requires --latent")
    if not Path(resolved["latent"]).exists():
        raise ValidationError(f"latent path not found: {resolved['latent']}")
    latent = io.read_latent_csv(resolved["latent"])
    result = direct_fit(
        latent.durations, latent.turns,
        a0=resolved["a0"], b0=resolved["b0"],
        kappa_grid_max=resolved["kappa_grid_max"],
    )
    payload = {
        "lambda": {"median": result.lambda_median,
                   "interval": list(result.lambda_interval),
                   "point": result.lambda_point},
        "kappa": {"median": result.kappa_median,
                  "interval": list(result.kappa_interval),
                  "point": result.kappa_point,
                  "at_grid_bound": result.at_grid_bound},
    }
    print(json.dumps(payload, indent=2))
    if resolved["out"]:
        out = _out_dir(resolved)
        (out / "directfit.json").write_text(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


ORACLE_SETTINGS = {
    "f_V": [{"kappa": 0.5}, {"kappa": 2.0}, {"kappa": 10.0}],
    "f_Z": [{"kappa": 0.0, "lam": 1.0}, {"kappa": 5.0, "lam": 2.0},
            {"kappa": 20.0, "lam": 0.5}],
    "f_S": [{"kappa": 5.0, "lam": 2.0, "n": 3, "c": 4.0},
            {"kappa": 0.0, "lam": 1.0, "n": 1, "c": 2.0},
            {"kappa": 10.0, "lam": 3.0, "n": 5, "c": 3.0}],
}


def cmd_oracle_check(args):
    resolved = _resolve(args, {"n_draws": 100_000, "seed": 0, "out": None,
                               "workers": None})
    out = _out_dir(resolved)
    n_draws = resolved["n_draws"]
    started = time.monotonic()
    config = {"n_draws": n_draws, "seed": resolved["seed"]}
    failures = []
    results = {}
    for name, settings in ORACLE_SETTINGS.items():
        for index, setting in enumerate(settings):
            if name == "f_V":
                grid = densities.f_v_grid(setting["kappa"])
                sampler = densities.cos_vm_sampler(setting["kappa"])
                norm = densities.f_v_normalization(setting["kappa"])
                norm_tol = 1e-6
            elif name == "f_Z":
                grid = densities.f_z_grid(setting["kappa"], setting["lam"])
                sampler = densities.cos_vm_exp_sampler(setting["kappa"], setting["lam"])
                norm = densities.f_z_normalization(setting["kappa"], setting["lam"])
                norm_tol = 1e-5
            else:
                grid = densities.f_s_grid(setting["kappa"], setting["lam"],
                                          setting["n"], setting["c"])
                sampler = densities.cos_vm_shifted_gamma_sampler(
                    setting["kappa"], setting["lam"], setting["n"], setting["c"])
                norm = densities.f_s_normalization(setting["kappa"], setting["lam"],
                                                   setting["n"], setting["c"])
                norm_tol = 1e-5
            check = densities.density_mc_check(
                grid, sampler, n_draws, rng=stream(resolved["seed"], index))
            label = f"{name}[{index}]"
            ok = check.passed and abs(norm - 1.0) <= norm_tol
            results[label] = {
                "setting": setting,
                "normalization": norm,
                "ks_distance": check.ks_distance,
                "ks_critical": check.critical,
                "passed": ok,
            }
            stem = f"density_{name.lower()}_{index}"
            io.write_density_grid_csv(out / f"{stem}.csv", grid)
            print(f"{label}: normalization {norm:.8f}, KS {check.ks_distance:.5f} "
                  f"(crit {check.critical:.5f}) -> {'pass' if ok else 'FAIL'}")
            if not ok:
                failures.append(label)
    (out / "oracle_check.json").write_text(json.dumps(results, indent=2) + "\n")
    io.append_manifest(out, out / "oracle_check.json", "oracle-check", config,
                       time.monotonic() - started)
    if failures:
        raise CheckFailure("density checks failed: " + ", ".join(failures))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "observe": cmd_observe,
    "summarize": cmd_summarize,
    "reftable": cmd_reftable,
    "fit": cmd_fit,
    "crossval": cmd_crossval,
    "coverage": cmd_coverage,
    "rscan": cmd_rscan,
    "directfit": cmd_directfit,
    "oracle-check": cmd_oracle_check,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CheckFailure as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (StepturnError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
