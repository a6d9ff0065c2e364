"""Command-line experiment runner.

    saoco run    --config cfg.json [--out-dir DIR]
    saoco sweep  --config cfg.json [--threads N] [--out-dir DIR]
    saoco report --trace t.csv ... [--summary s.csv ...] [--out-dir DIR]

Exit codes: 0 success, 2 invalid config, 3 runtime numerical failure.
The OCO_SEED environment variable overrides the config seed when set.
Trace/summary CSVs are deterministic for a given config; timestamps live
only in the metadata sidecar JSON.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError
from .experiments import (
    ExperimentConfig,
    config_hash,
    load_config,
    run_experiment,
    run_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _apply_seed_override(cfg: ExperimentConfig) -> ExperimentConfig:
    override = os.environ.get("OCO_SEED")
    if override is None:
        return cfg
    try:
        seed = int(override)
    except ValueError as exc:
        raise ConfigError(f"OCO_SEED must be an integer, got {override!r}") from exc
    return dataclasses.replace(cfg, seed=seed)


def _prefix(cfg: ExperimentConfig) -> str:
    return cfg.out_prefix or f"{cfg.kind}_{config_hash(cfg)}"


def _write_meta(path: Path, payload: dict) -> None:
    payload = dict(payload)
    payload["created_at"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=float)
        fh.write("\n")


def _cmd_run(args) -> int:
    cfg = _apply_seed_override(load_config(args.config))
    if cfg.kind == "sweep":
        raise ConfigError("config kind 'sweep' must be run via the sweep command")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_experiment(cfg)
    prefix = _prefix(cfg)

    files = {}
    if result.trace is not None:
        trace_path = out_dir / f"{prefix}_trace.csv"
        result.trace.write_csv(trace_path)
        files["trace"] = str(trace_path)
    if result.bound_report is not None:
        bound_path = out_dir / f"{prefix}_bound.json"
        with open(bound_path, "w") as fh:
            json.dump(result.bound_report.to_dict(), fh, indent=2)
            fh.write("\n")
        files["bound_report"] = str(bound_path)

    meta = {
        "kind": cfg.kind,
        "seed": cfg.seed,
        "config_hash": config_hash(cfg),
        "files": files,
        **result.metadata,
    }
    if result.trace is not None:
        meta["dynamic_regret"] = result.regret
    _write_meta(out_dir / f"{prefix}_meta.json", meta)
    print(f"run ok: {prefix} -> {out_dir}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _apply_seed_override(load_config(args.config))
    if cfg.kind != "sweep":
        raise ConfigError(f"sweep command needs a config of kind 'sweep', got {cfg.kind!r}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_sweep(cfg, threads=args.threads)
    prefix = _prefix(cfg)

    summary_path = out_dir / f"{prefix}_summary.csv"
    result.write_csv(summary_path)
    files = {"summary": str(summary_path)}
    if cfg.write_traces:
        for i, per_rep in enumerate(result.point_results):
            for rep, res in enumerate(per_rep):
                if res.trace is None:
                    continue
                path = out_dir / f"{prefix}_T{res.config.horizon}_rep{rep}_trace.csv"
                res.trace.write_csv(path)

    slope = result.slope
    _write_meta(
        out_dir / f"{prefix}_meta.json",
        {
            "kind": "sweep",
            "experiment": cfg.experiment,
            "seed": cfg.seed,
            "config_hash": config_hash(cfg),
            "slope": slope,
            "rows": result.rows,
            "files": files,
        },
    )
    slope_txt = "NaN" if np.isnan(slope) else f"{slope:.6f}"
    print(f"sweep ok: {prefix} slope={slope_txt} -> {summary_path}")
    return EXIT_OK


def _cmd_report(args) -> int:
    from . import plots  # matplotlib import deferred to the report path

    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    rendered = []
    for trace in args.trace or []:
        target = out_dir / (Path(trace).stem + "_regret.png") if out_dir else None
        rendered.append(plots.render_trace_figure(trace, target))
    for summary in args.summary or []:
        target = out_dir / (Path(summary).stem + "_scaling.png") if out_dir else None
        rendered.append(plots.render_scaling_figure(summary, target))
    if not rendered:
        raise ConfigError("report needs at least one --trace or --summary CSV")
    for path in rendered:
        print(f"figure: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="saoco", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out-dir", default=".")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a horizon grid and fit the scaling slope")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out-dir", default=".")
    p_sweep.add_argument("--threads", type=int, default=1)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_report = sub.add_parser("report", help="render figures from emitted CSVs")
    p_report.add_argument("--trace", action="append")
    p_report.add_argument("--summary", action="append")
    p_report.add_argument("--out-dir", default=None)
    p_report.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
