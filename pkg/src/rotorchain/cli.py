"""Command-line entry point: config parsing, experiment dispatch, result files.

Configuration is a flat key=value text file; command-line flags override file
values.  Every run writes a JSON manifest next to its results; re-running a
manifest (pass it as --config) reproduces the result files byte for byte.

Exit statuses: 0 success, 2 configuration error, 3 runtime or
statistically-degenerate error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .dynamics import IntegratorConfig, check_dt_budget, default_dt
from .equilibrium import McmcConfig
from .experiments import (
    ExperimentSpec,
    run_bad_event_watch,
    run_clt_test,
    run_correlation,
    run_exit_histogram,
    run_field_response,
    run_scaling_sweep,
    run_winding_trace,
)
from .model import ILL_DEFINED, ModelParams
from .stats import DegenerateFitError
from .theory import default_support, moments, timescale, winding_distribution

#: environment variable naming the default output directory
OUTDIR_ENV = "ROTORCHAIN_OUTDIR"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

SUBCOMMAND_KIND = {
    "simulate": "winding-trace",
    "exits": "exit-histogram",
    "sweep": "scaling-sweep",
    "clt": "clt-test",
    "correlate": "correlation",
    "field": "field-response",
    "badwatch": "bad-event-watch",
    "theory": None,  # pure printout, no dynamics
}

#: every key a config file may set, with its parser
CONFIG_KEYS = {
    "kind": str,
    "N": int,
    "J": float,
    "sigma": float,
    "B": float,
    "dt": float,
    "max_time": float,
    "record_stride": int,
    "seed": int,
    "replicas": int,
    "k": int,
    "K": int,
    "epsilon": float,
    "r": int,
    "delta": float,
    "proposal_width": float,
    "burn_in": int,
    "thinning": int,
    "grid": str,
    "horizon_tcenters": float,
    "samples": int,
    "format": str,
    "out": str,
}

DEFAULTS = {
    "B": 0.0,
    "record_stride": 1,
    "seed": 0,
    "replicas": 1,
    "k": 1,
    "epsilon": 0.5,
    "r": 8,
    "delta": 0.3,
    "proposal_width": 0.8,
    "burn_in": 300,
    "thinning": 10,
    "horizon_tcenters": 50.0,
    "samples": 10000,
    "format": "csv",
}


class ConfigError(ValueError):
    pass


def parse_config_file(path: str) -> dict:
    """Read a flat key=value config file, or the config block of a manifest.

    Unknown keys are rejected with the list of valid keys.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    raw: dict[str, str] = {}
    if text.lstrip().startswith("{"):
        manifest = json.loads(text)
        raw = {k: str(v) for k, v in manifest.get("config", {}).items()}
    else:
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
    out = {}
    for key, value in raw.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(
                f"unknown config key {key!r}; valid keys: {', '.join(sorted(CONFIG_KEYS))}"
            )
        out[key] = CONFIG_KEYS[key](value)
    return out


def resolve_config(subcommand: str, args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags (flags win); validate."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(parse_config_file(args.config))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    kind = SUBCOMMAND_KIND[subcommand]
    if kind is not None:
        cfg["kind"] = kind
    elif "kind" in cfg:
        cfg.pop("kind")
    for required in ("N", "J", "sigma"):
        if required not in cfg:
            raise ConfigError(f"missing required parameter {required!r}")
    params = ModelParams(N=cfg["N"], J=cfg["J"], sigma=cfg["sigma"], field_B=cfg.get("B", 0.0))
    if "dt" not in cfg:
        cfg["dt"] = default_dt(params)
    check_dt_budget(params, cfg["dt"])  # raises naming the violated rule
    if cfg["format"] not in ("csv", "jsonl"):
        raise ConfigError(f"format must be csv or jsonl, got {cfg['format']!r}")
    if "max_time" not in cfg:
        horizon = cfg["horizon_tcenters"] * timescale(params, 0.0).t_center
        cfg["max_time"] = horizon
    return cfg


def build_spec(cfg: dict) -> ExperimentSpec:
    params = ModelParams(N=cfg["N"], J=cfg["J"], sigma=cfg["sigma"], field_B=cfg.get("B", 0.0))
    integrator = IntegratorConfig(
        dt=cfg["dt"],
        max_time=cfg["max_time"],
        record_stride=cfg["record_stride"],
        seed=cfg["seed"],
    )
    mcmc = McmcConfig(
        proposal_width=cfg["proposal_width"],
        burn_in_sweeps=cfg["burn_in"],
        thinning_sweeps=cfg["thinning"],
        seed=cfg["seed"],
    )
    grid = ()
    if cfg.get("grid"):
        triples = []
        for part in cfg["grid"].split(";"):
            n_, j_, s_ = part.split(",")
            triples.append((int(n_), float(j_), float(s_)))
        grid = tuple(triples)
    return ExperimentSpec(
        kind=cfg["kind"],
        params=params,
        integrator=integrator,
        mcmc=mcmc,
        replicas=cfg["replicas"],
        start_winding=cfg.get("k", 0),
        sweep_grid=grid,
    )


def _format_value(v):
    if isinstance(v, float):
        return repr(v)  # shortest round-trip decimal
    if v is ILL_DEFINED:
        return "ILL_DEFINED"
    if v is None:
        return ""
    return v


def write_results(records: list[dict], path: str, fmt: str) -> None:
    """Write row-oriented records as RFC-4180 CSV or JSONL."""
    if fmt not in ("csv", "jsonl"):
        raise ConfigError(f"unknown output format {fmt!r}")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    if fmt == "csv":
        fieldnames = list(records[0].keys()) if records else []
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(fieldnames)
            for rec in records:
                writer.writerow([_format_value(rec[k]) for k in fieldnames])
    else:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                enc = {
                    k: ("ILL_DEFINED" if v is ILL_DEFINED else v) for k, v in rec.items()
                }
                fh.write(json.dumps(enc) + "\n")


def trajectory_records(traj) -> list[dict]:
    rows = []
    for i in range(len(traj)):
        row = {"t": float(traj.times[i])}
        w = traj.windings[i]
        row["winding"] = "ILL_DEFINED" if np.isnan(w) else int(w)
        for name, vals in traj.observables.items():
            row[name] = float(vals[i])
        rows.append(row)
    return rows


def exit_records(records) -> list[dict]:
    rows = []
    for i, rec in enumerate(records):
        rows.append(
            {
                "replica": i,
                "start_winding": rec.start_winding,
                "exit_time": rec.exit_time,
                "exit_target": rec.exit_target if not rec.censored else None,
                "censored": rec.censored,
            }
        )
    return rows


def write_manifest(path: str, subcommand: str, cfg: dict, outputs: list[str], started: str, finished: str | None):
    manifest = {
        "subcommand": subcommand,
        "config": {k: cfg[k] for k in sorted(cfg) if k != "out"},
        "seed": cfg["seed"],
        "code_version": __version__,
        "started": started,
        "finished": finished,
        "outputs": outputs,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(cfg: dict) -> str:
    return cfg.get("out") or os.environ.get(OUTDIR_ENV) or "."


def _timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def run_subcommand(subcommand: str, cfg: dict) -> list[str]:
    """Execute one subcommand; returns the list of files written."""
    outdir = _outdir(cfg)
    os.makedirs(outdir, exist_ok=True)
    fmt = cfg["format"]
    ext = "csv" if fmt == "csv" else "jsonl"
    manifest_path = os.path.join(outdir, f"{subcommand}_manifest.json")
    started = _timestamp()
    outputs: list[str] = []
    write_manifest(manifest_path, subcommand, cfg, outputs, started, None)

    if subcommand == "theory":
        params = ModelParams(N=cfg["N"], J=cfg["J"], sigma=cfg["sigma"], field_B=cfg.get("B", 0.0))
        mom = moments(params.kappa)
        ts = timescale(params, cfg["epsilon"])
        K = cfg.get("K") or default_support(params)
        dist = winding_distribution(params, K)
        print(f"kappa         = {params.kappa!r}")
        print(f"m             = {mom.m!r}")
        print(f"s2            = {mom.s2!r}")
        print(f"beta3         = {mom.beta3!r}")
        print(f"t_center      = {ts.t_center!r}   (log {ts.log_t_center!r})")
        print(f"t_lower(eps)  = {ts.t_lower!r}")
        print(f"t_upper(eps)  = {ts.t_upper!r}")
        for k, prob in zip(dist.support, dist.probabilities):
            print(f"P(W = {int(k):+d})     = {prob!r}")
        rows = [
            {"k": int(k), "probability": float(prob)}
            for k, prob in zip(dist.support, dist.probabilities)
        ]
        path = os.path.join(outdir, f"theory_winding.{ext}")
        write_results(rows, path, fmt)
        outputs.append(path)
    else:
        spec = build_spec(cfg)
        if subcommand == "simulate":
            traj = run_winding_trace(spec)
            path = os.path.join(outdir, f"trace.{ext}")
            write_results(trajectory_records(traj), path, fmt)
            outputs.append(path)
        elif subcommand == "exits":
            records, fit = run_exit_histogram(spec, cfg["k"])
            path = os.path.join(outdir, f"exits.{ext}")
            write_results(exit_records(records), path, fmt)
            outputs.append(path)
            fit_path = os.path.join(outdir, "exit_fit.json")
            with open(fit_path, "w", encoding="utf-8") as fh:
                json.dump(asdict(fit), fh, indent=2, sort_keys=True)
                fh.write("\n")
            outputs.append(fit_path)
            print(
                f"rate={fit.rate_mle!r} ks_stat={fit.ks_statistic!r} "
                f"ks_p={fit.ks_pvalue!r} censored={fit.n_censored}"
            )
        elif subcommand == "sweep":
            rows = run_scaling_sweep(spec)
            path = os.path.join(outdir, f"sweep.{ext}")
            write_results(rows, path, fmt)
            outputs.append(path)
        elif subcommand == "clt":
            result = run_clt_test(spec, n_samples=cfg["samples"])
            rows = [
                {"k": int(k), "probability": float(prob)}
                for k, prob in zip(result.distribution.support, result.distribution.probabilities)
            ]
            path = os.path.join(outdir, f"clt.{ext}")
            write_results(rows, path, fmt)
            outputs.append(path)
            print(
                f"chi2_p={result.chi2_pvalue!r} ad_p={result.normality_pvalue!r} "
                f"scale={result.scale!r} n={result.n_samples}"
            )
        elif subcommand == "correlate":
            res = run_correlation(spec, n_samples=cfg["samples"])
            rows = [{"phase": k, "midchain_correlation": v} for k, v in sorted(res.items())]
            path = os.path.join(outdir, f"correlation.{ext}")
            write_results(rows, path, fmt)
            outputs.append(path)
            for row in rows:
                print(f"phase {row['phase']}: correlation = {row['midchain_correlation']!r}")
        elif subcommand == "field":
            res = run_field_response(spec, cfg.get("B", 0.0))
            rows = [{"phase": k, "magnetization": v} for k, v in sorted(res.items())]
            path = os.path.join(outdir, f"field.{ext}")
            write_results(rows, path, fmt)
            outputs.append(path)
            for row in rows:
                print(f"phase {row['phase']}: magnetization = {row['magnetization']!r}")
        elif subcommand == "badwatch":
            frac = run_bad_event_watch(spec, cfg["r"], cfg["delta"])
            path = os.path.join(outdir, f"badwatch.{ext}")
            write_results(
                [{"r": cfg["r"], "delta": cfg["delta"], "bad_fraction": frac}], path, fmt
            )
            outputs.append(path)
            print(f"bad-event fraction = {frac!r}")
        else:
            raise ConfigError(f"unknown subcommand {subcommand!r}")

    write_manifest(manifest_path, subcommand, cfg, outputs, started, _timestamp())
    return outputs + [manifest_path]


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotorchain",
        description="Langevin and equilibrium experiments for the periodic XY rotor chain",
    )
    sub = parser.add_subparsers(dest="subcommand")
    for name, kind in SUBCOMMAND_KIND.items():
        sp = sub.add_parser(name, help=f"run the {kind or 'theory printout'} experiment")
        sp.add_argument("--config", type=str, default=None, help="key=value file or a manifest JSON")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", type=str, default=None, help=f"output dir (default ${OUTDIR_ENV} or .)")
        sp.add_argument("--format", type=str, default=None, choices=("csv", "jsonl"))
        sp.add_argument("--N", type=int, default=None)
        sp.add_argument("--J", type=float, default=None)
        sp.add_argument("--sigma", type=float, default=None)
        sp.add_argument("--B", type=float, default=None)
        sp.add_argument("--dt", type=float, default=None)
        sp.add_argument("--max-time", dest="max_time", type=float, default=None)
        sp.add_argument("--record-stride", dest="record_stride", type=int, default=None)
        sp.add_argument("--replicas", type=int, default=None)
        sp.add_argument("--k", type=int, default=None)
        sp.add_argument("--K", type=int, default=None)
        sp.add_argument("--epsilon", type=float, default=None)
        sp.add_argument("--r", type=int, default=None)
        sp.add_argument("--delta", type=float, default=None)
        sp.add_argument("--samples", type=int, default=None)
        sp.add_argument("--grid", type=str, default=None, help="semicolon-separated N,J,sigma triples")
        sp.add_argument("--burn-in", dest="burn_in", type=int, default=None)
        sp.add_argument("--thinning", dest="thinning", type=int, default=None)
        sp.add_argument("--proposal-width", dest="proposal_width", type=float, default=None)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    if not args.subcommand:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = resolve_config(args.subcommand, args)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        run_subcommand(args.subcommand, cfg)
    except DegenerateFitError as exc:
        print(f"degenerate statistics: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, RuntimeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
