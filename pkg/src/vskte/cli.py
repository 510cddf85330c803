"""Command-line interface.

Subcommands
-----------
simulate   env + policy -> trajectory file (one JSON record per round)
test       trajectory file + method flags -> test outcome as JSON on stdout
calibrate  config file -> per-replication CSV, summary JSON, hist/QQ CSVs
power      config file with scenario (and optional T) sweep -> power.csv
reproduce  named desk-scale presets (fig1, fig2, fig3-*, table2-blob)

The master seed can be overridden with the VSKTE_SEED environment variable.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .harness import (
    PRESETS,
    ExperimentConfig,
    run_experiment,
    run_method,
    run_preset,
    simulate_trajectory,
    write_power_csv,
)
from .trajectory import load_jsonl, save_jsonl

_METHOD_CHOICES = ("vs-dr-kte", "dr-kte", "cadr", "aw-aipw", "aw-aipw-two-point")


def _load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SystemExit(f"{path}: invalid JSON ({exc})") from None
    try:
        cfg = ExperimentConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise SystemExit(f"{path}: {exc}") from None
    return _apply_seed_env(cfg)


def _apply_seed_env(cfg: ExperimentConfig) -> ExperimentConfig:
    seed = os.environ.get("VSKTE_SEED")
    if seed is not None:
        cfg.master_seed = int(seed)
    return cfg


def _cmd_simulate(args) -> int:
    cfg = ExperimentConfig(
        env=json.loads(args.env),
        policy=json.loads(args.policy),
        t_len=args.T,
        n_replications=1,
        master_seed=args.seed,
    )
    cfg = _apply_seed_env(cfg)
    traj = simulate_trajectory(cfg, cfg.master_seed)
    save_jsonl(traj, args.out)
    print(f"wrote {len(traj)} rounds to {args.out}")
    return 0


def _cmd_test(args) -> int:
    traj = load_jsonl(args.trajectory)
    cfg = ExperimentConfig(
        t_len=len(traj), n_replications=1, split=args.split, alpha=args.alpha,
        ridge=args.ridge, nuisance=args.nuisance, methods=(args.method,),
    )
    result = run_method(args.method, traj, cfg)
    print(json.dumps({"method": args.method, **result}, indent=2))
    return 0


def _cmd_calibrate(args) -> int:
    cfg = _load_config(args.config)
    if args.jobs:
        cfg.n_jobs = args.jobs
    report = run_experiment(cfg)
    report.write(args.outdir)
    print(json.dumps({m: {"reject_rate": a["reject_rate"], "ks": a["ks"]}
                      for m, a in report.aggregates.items()}, indent=2))
    return 0


def _cmd_power(args) -> int:
    cfg = _load_config(args.config)
    if args.jobs:
        cfg.n_jobs = args.jobs
    scenarios = args.scenarios.split(",") if args.scenarios else [
        cfg.env.get("scenario", "I")]
    t_values = [int(v) for v in args.T_sweep.split(",")] if args.T_sweep else [cfg.t_len]
    rows = []
    for scenario in scenarios:
        for t_len in t_values:
            sub = dataclasses.replace(cfg)
            sub.env = dict(cfg.env, scenario=scenario)
            sub.t_len = t_len
            report = run_experiment(sub)
            rows.extend(report.summary_rows())
    write_power_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_reproduce(args) -> int:
    seed = os.environ.get("VSKTE_SEED")
    run_preset(
        args.preset, args.outdir, n_jobs=args.jobs or 1,
        n_replications=args.reps, t_len=args.T,
        master_seed=int(seed) if seed is not None else None,
    )
    print(f"preset {args.preset} written to {args.outdir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vskte",
        description="Kernel treatment effect tests for adaptively logged data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a logged trajectory")
    p.add_argument("--env", default='{"kind": "synthetic"}',
                   help="environment JSON, e.g. '{\"kind\": \"synthetic\", \"scenario\": \"II\"}'")
    p.add_argument("--policy", default='{"kind": "eps_greedy"}',
                   help="policy JSON, e.g. '{\"kind\": \"etc\", \"t0\": 15}'")
    p.add_argument("--T", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("test", help="run a test on a trajectory file")
    p.add_argument("trajectory")
    p.add_argument("--method", choices=_METHOD_CHOICES, default="vs-dr-kte")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--split", choices=("alternating", "contiguous"),
                   default="alternating")
    p.add_argument("--ridge", type=float, default=1e-2)
    p.add_argument("--nuisance", choices=("hat", "crossfit"), default="hat")
    p.set_defaults(func=_cmd_test)

    p = sub.add_parser("calibrate", help="Monte-Carlo calibration report")
    p.add_argument("--config", required=True, help="experiment config JSON file")
    p.add_argument("--outdir", required=True)
    p.add_argument("--jobs", type=int, default=0)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("power", help="rejection-rate table over scenarios")
    p.add_argument("--config", required=True)
    p.add_argument("--scenarios", default="", help="comma list, e.g. II,III,IV")
    p.add_argument("--T-sweep", default="", help="comma list of trajectory lengths")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=0)
    p.set_defaults(func=_cmd_power)

    p = sub.add_parser("reproduce", help="run a named desk-scale preset")
    p.add_argument("preset", choices=sorted(PRESETS))
    p.add_argument("--outdir", required=True)
    p.add_argument("--jobs", type=int, default=0)
    p.add_argument("--reps", type=int, default=None,
                   help="override the preset's replication count")
    p.add_argument("--T", type=int, default=None,
                   help="override the preset's trajectory length")
    p.set_defaults(func=_cmd_reproduce)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
