"""Command-line entry point: generate scenarios, run algorithms, sweep axes.

Exit codes: 0 success, 1 usage or config error, 2 runtime failure,
3 ran to completion but some users are unserved or miss their QoS.
Outputs carry the run manifest (seed, scenario hash, algorithm, code
version) so every CSV is traceable and reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import traceback
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import scenario as scn
from .metrics import rate_cdf
from .model import ValidationError
from .qos import LOG_UTILITY
from .runner import ALGORITHMS, MODES, PHASES, evaluate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_UNSERVED = 3

OUT_ENV = "QOSCELL_OUT"

SWEEP_AXES = ("gamma", "femto_count", "user_count")


def _default_out() -> str:
    return os.environ.get(OUT_ENV, ".")


def _manifest_lines(manifest: dict) -> str:
    return "".join(f"# {k} = {manifest[k]}\n" for k in sorted(manifest))


def _write_csv(path: Path, manifest: dict, header: str, rows: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_manifest_lines(manifest))
        fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _load_config_file(path: str) -> scn.DeploymentConfig:
    text = Path(path).read_text(encoding="utf-8")
    sections = scn._parse_sections(text)
    if "deployment" not in sections:
        raise ValidationError(f"{path}: missing [deployment] section")
    kv = scn._kv(sections["deployment"], "deployment")
    kwargs = {}
    ints = {"n_macro", "micro_per_macro", "femto_per_macro", "users_per_macro", "seed"}
    floats = {"area_m", "noise_dbm", "gamma", "t_max"}
    for key, val in kv.items():
        if key in ints:
            kwargs[key] = int(val)
        elif key in floats:
            kwargs[key] = float(val)
        elif key == "shadowing_db":
            kwargs[key] = None if val == "none" else float(val)
        elif key == "powers_dbm":
            kwargs[key] = tuple(float(v) for v in val.split(","))
        elif key == "rb_budgets":
            kwargs[key] = tuple(int(v) for v in val.split(","))
        elif key == "qos_variant":
            kwargs[key] = val
        else:
            raise ValidationError(f"{path}: unknown deployment field {key!r}")
    return scn.DeploymentConfig(**kwargs)


def _config_from_args(args) -> scn.DeploymentConfig:
    if args.config:
        config = _load_config_file(args.config)
    elif args.preset:
        config = scn.preset(args.preset, seed=args.seed)
    else:
        config = scn.DeploymentConfig()
    overrides = {}
    for field, attr in (("n_macro", "macro"), ("micro_per_macro", "micro"),
                        ("femto_per_macro", "femto"), ("users_per_macro", "users")):
        if getattr(args, attr) is not None:
            overrides[field] = getattr(args, attr)
    for field in ("gamma", "t_max", "area_m", "shadowing_db"):
        if getattr(args, field, None) is not None:
            overrides[field] = getattr(args, field)
    if args.qos is not None:
        overrides["qos_variant"] = args.qos
    if args.seed is not None:
        overrides["seed"] = args.seed
    return replace(config, **overrides)


def cmd_generate(args) -> int:
    config = _config_from_args(args)
    scenario = scn.generate(config)
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"scenario_{config.qos_variant}_seed{config.seed}.txt" if out.is_dir() else out
    scn.save(scenario, path)
    echo = {
        "scenario": str(path),
        "sha256": scn.scenario_hash(scenario),
        "n_bs": scenario.n_bs,
        "n_users": scenario.n_users,
        "qos_variant": scenario.qos_variant,
        "gamma": config.gamma,
        "seed": config.seed,
    }
    if config.qos_variant == "outage":
        echo["t_max"] = config.t_max
    print(json.dumps(echo, indent=2))
    return EXIT_OK


def _percentiles(report) -> dict:
    if report.served == 0:
        return {}
    cdf = report.cdf
    return {f"p{int(100 * p):02d}": cdf.percentile(p) for p in (0.05, 0.10, 0.25, 0.50)}


def cmd_run(args) -> int:
    scenario = scn.load(args.scenario)
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)

    result = evaluate(scenario, algo=args.algo, phase=args.phase, mode=args.mode,
                      max_iters=args.max_iters)
    report = result.report

    manifest = {
        "tool": "qoscell",
        "version": __version__,
        "command": "run",
        "scenario": str(args.scenario),
        "scenario_sha256": scn.scenario_hash(scenario),
        "seed": scenario.rng_seed,
        "algorithm": args.algo,
        "phase": args.phase,
        "mode": "stochastic" if scenario.qos_variant == "outage" else args.mode,
    }

    payload = {
        "manifest": manifest,
        "served": report.served,
        "unserved": report.unserved,
        "qos_violations": report.qos_violations,
        "sum_utility": report.sum_utility,
        "avg_utility": report.avg_utility,
        "objective": report.objective,
        "iterations": report.iterations,
        "converged": report.converged,
        "converged_at": report.converged_at,
        "scaled_users": report.scaled_users,
        "global_outage_prob": report.global_outage_prob,
        "log10_no_outage": report.log10_no_outage,
        "rate_percentiles": _percentiles(report),
    }
    with open(out / "report.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if report.served:
        cdf = rate_cdf(report.rates)
        rows = [f"{repr(p)},{repr(v)}"
                for p, v in zip(cdf.probabilities, cdf.samples)]
    else:
        rows = []
    _write_csv(out / "cdf.csv", manifest, "probability,rate", rows)

    if result.association is not None and result.association.trace:
        n_bs = scenario.n_bs
        header = ("iteration,objective,"
                  + ",".join(f"mu_{j}" for j in range(n_bs)) + ","
                  + ",".join(f"demand_{j}" for j in range(n_bs)) + ","
                  + ",".join(f"load_{j}" for j in range(n_bs)))
        rows = []
        for rec in result.association.trace:
            rows.append(f"{rec.iteration},{repr(rec.objective)},"
                        + ",".join(repr(float(m)) for m in rec.mu) + ","
                        + ",".join(str(int(d)) for d in rec.demand) + ","
                        + ",".join(str(int(l)) for l in rec.load))
        _write_csv(out / "trace.csv", manifest, header, rows)

    if not args.no_figures:
        from .plots import render_cdf, render_trace
        if report.served:
            render_cdf({args.algo: report.rates}, out / "cdf.png",
                       title=f"{args.algo} ({scenario.qos_variant})")
        if result.association is not None and result.association.trace:
            render_trace(
                [{"iteration": r.iteration, "objective": r.objective, "mu": r.mu}
                 for r in result.association.trace],
                out / "trace.png", title=f"{args.algo} association rounds")

    print(json.dumps({k: payload[k] for k in
                      ("served", "unserved", "qos_violations", "sum_utility",
                       "objective", "converged")}, indent=2))
    if report.unserved > 0 or report.qos_violations > 0:
        return EXIT_UNSERVED
    return EXIT_OK


def _sweep_cell(base_config: scn.DeploymentConfig, axis: str, value: float,
                algo: str, seed: int, phase: str, mode: str) -> dict:
    config = replace(base_config, seed=seed)
    if axis == "gamma":
        config = replace(config, gamma=float(value))
    elif axis == "femto_count":
        config = replace(config, femto_per_macro=int(value))
    elif axis == "user_count":
        config = replace(config, users_per_macro=int(value))
    scenario = scn.generate(config)
    result = evaluate(scenario, algo=algo, phase=phase, mode=mode)
    report = result.report
    return {
        "value": value,
        "algorithm": algo,
        "seed": seed,
        "sum_utility": report.sum_utility,
        "avg_utility": report.avg_utility,
        "log10_no_outage": report.log10_no_outage,
        "p10_rate": report.cdf.percentile(0.10) if report.served else None,
        "unserved": report.unserved,
        "converged": report.converged,
    }


def _aggregate(cells: list[dict], axis: str) -> list[dict]:
    keys = sorted({(c["value"], c["algorithm"]) for c in cells})
    rows = []
    for value, algo in keys:
        group = [c for c in cells if c["value"] == value and c["algorithm"] == algo]
        row = {"axis": axis, "value": value, "algorithm": algo, "n_seeds": len(group)}
        for metric in ("sum_utility", "avg_utility", "log10_no_outage", "p10_rate"):
            vals = [c[metric] for c in group if c[metric] is not None]
            finite = [v for v in vals if np.isfinite(v)]
            if finite:
                row[f"{metric}_median"] = float(np.median(finite))
                row[f"{metric}_p25"] = float(np.percentile(finite, 25))
                row[f"{metric}_p75"] = float(np.percentile(finite, 75))
            else:
                row[f"{metric}_median"] = row[f"{metric}_p25"] = row[f"{metric}_p75"] = None
        row["unserved_median"] = float(np.median([c["unserved"] for c in group]))
        row["converged_frac"] = float(np.mean([1.0 if c["converged"] else 0.0 for c in group]))
        rows.append(row)
    return rows


def cmd_sweep(args) -> int:
    if not args.values:
        print("sweep needs --values", file=sys.stderr)
        return EXIT_USAGE
    base = _config_from_args(args)
    algos = args.algos.split(",")
    for a in algos:
        if a not in ALGORITHMS:
            print(f"unknown algorithm {a!r}", file=sys.stderr)
            return EXIT_USAGE
    seeds = args.seeds
    values = args.values
    out = Path(args.out or _default_out())
    out.mkdir(parents=True, exist_ok=True)

    cells = []
    failures = []
    jobs = []
    for vi, value in enumerate(values):
        for ai, algo in enumerate(algos):
            for si, seed in enumerate(seeds):
                jobs.append(((vi, ai, si), (base, args.axis, value, algo, seed,
                                            args.phase, args.mode)))

    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = {pool.submit(_sweep_cell, *params): key for key, params in jobs}
            results = {}
            for fut in concurrent.futures.as_completed(futures):
                key = futures[fut]
                try:
                    results[key] = fut.result()
                except Exception as exc:  # per-cell failure, sweep continues
                    failures.append((key, repr(exc)))
            cells = [results[k] for k, _ in jobs if k in results]
    else:
        for key, params in jobs:
            try:
                cells.append(_sweep_cell(*params))
            except Exception as exc:
                failures.append((key, repr(exc)))

    manifest = {
        "tool": "qoscell",
        "version": __version__,
        "command": "sweep",
        "axis": args.axis,
        "values": ";".join(str(v) for v in values),
        "algorithms": ";".join(algos),
        "seeds": ";".join(str(s) for s in seeds),
        "qos_variant": base.qos_variant,
        "phase": args.phase,
        "mode": args.mode,
    }
    rows = _aggregate(cells, args.axis)
    metrics = ("sum_utility", "avg_utility", "log10_no_outage", "p10_rate")
    header = ("axis,value,algorithm,n_seeds,"
              + ",".join(f"{m}_{s}" for m in metrics for s in ("median", "p25", "p75"))
              + ",unserved_median,converged_frac")
    lines = []
    for row in rows:
        cells_txt = [row["axis"], _fmt(row["value"]), row["algorithm"], str(row["n_seeds"])]
        for m in metrics:
            for s in ("median", "p25", "p75"):
                cells_txt.append(_fmt(row[f"{m}_{s}"]))
        cells_txt.append(_fmt(row["unserved_median"]))
        cells_txt.append(_fmt(row["converged_frac"]))
        lines.append(",".join(cells_txt))
    csv_path = out / f"sweep_{args.axis}_{base.qos_variant}.csv"
    _write_csv(csv_path, manifest, header, lines)

    if failures:
        fail_lines = [f"{k},{err}" for k, err in failures]
        _write_csv(out / f"sweep_{args.axis}_{base.qos_variant}_failures.csv",
                   manifest, "cell,error", fail_lines)

    if not args.no_figures and rows:
        from .plots import render_sweep
        metric = "log10_no_outage" if base.qos_variant == "outage" else "avg_utility"
        render_sweep(rows, args.axis, metric,
                     out / f"sweep_{args.axis}_{base.qos_variant}.png",
                     title=f"{args.axis} sweep ({base.qos_variant})")

    print(json.dumps({"csv": str(csv_path), "cells": len(cells),
                      "failures": len(failures)}, indent=2))
    return EXIT_OK if not failures else EXIT_RUNTIME


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="deployment config file")
    p.add_argument("--preset", help="named preset: sec6, sec6-rate, sec6-outage")
    p.add_argument("--seed", type=int, default=None, help="scenario seed")
    p.add_argument("--macro", type=int, default=None, help="number of macro BSs")
    p.add_argument("--micro", type=int, default=None, help="micro BSs per macro")
    p.add_argument("--femto", type=int, default=None, help="femto BSs per macro")
    p.add_argument("--users", type=int, default=None, help="users per macro")
    p.add_argument("--qos", choices=("rate", "outage"), default=None)
    p.add_argument("--gamma", type=float, default=None, help="rate threshold, bits/s")
    p.add_argument("--t-max", dest="t_max", type=float, default=None,
                   help="max outage probability")
    p.add_argument("--area-m", dest="area_m", type=float, default=None)
    p.add_argument("--shadowing-db", dest="shadowing_db", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qoscell",
        description="QoS-driven cell association and RB distribution in HetNets")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a scenario file")
    _add_config_flags(g)
    g.add_argument("--out", help=f"output directory or file (default ${OUT_ENV} or .)")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run one algorithm on a scenario file")
    r.add_argument("scenario", help="scenario file from `qoscell generate`")
    r.add_argument("--algo", choices=ALGORITHMS, default="distributed")
    r.add_argument("--phase", choices=PHASES, default="association",
                   help="'rb' adds the leftover-RB distribution phase")
    r.add_argument("--mode", choices=MODES, default="static")
    r.add_argument("--max-iters", type=int, default=100)
    r.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    r.add_argument("--no-figures", action="store_true")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="sweep an axis over algorithms and seeds")
    _add_config_flags(s)
    s.add_argument("--axis", dest="axis", choices=SWEEP_AXES, required=True)
    s.add_argument("--values", type=lambda v: [float(x) for x in v.split(",")],
                   help="comma-separated axis values")
    s.add_argument("--algos", default="distributed,max-sinr")
    s.add_argument("--seeds", type=lambda v: [int(x) for x in v.split(",")],
                   default=[0], help="comma-separated seeds")
    s.add_argument("--phase", choices=PHASES, default="association")
    s.add_argument("--mode", choices=MODES, default="stochastic")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    s.add_argument("--no-figures", action="store_true")
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ValidationError, scn.ScenarioFormatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
