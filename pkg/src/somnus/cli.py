"""Command-line entry point: ``somnus run | bound | equivalence``."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from typing import Sequence

from .algos import Ftarl, SbExp3
from .bounds import THEOREMS, required_params, theoretical_bound
from .config import ConfigError, ExperimentConfig
from .core import InvalidParameter, SomnusError
from .envs import random_env
from .harness import EpisodeError, lockstep_gap, run_experiment, write_trace_csv

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_MONITOR = 3

# flag -> theoretical_bound keyword
BOUND_FLAGS = {
    "gt": "g_T", "sum_a": "sum_a", "sum_conf": "sum_conf", "n_arms": "n_arms", "horizon": "horizon",
    "max_active": "max_active", "n_experts": "n_experts", "switches": "switches", "eta": "eta",
    "gamma": "gamma", "beta": "beta", "delta": "delta",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="somnus", description="Sleeping-bandit experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True, help="experiment config (JSON, schema 1)")
    run.add_argument("--replicates", type=int, help="override the replicate count")
    run.add_argument("--seed", type=int, help="override the base seed")
    run.add_argument("--horizon", type=int, help="override the horizon")
    run.add_argument("--out", help="output directory (default: current directory)")
    run.add_argument("--trace", action="store_true", help="also write a per-round trace CSV")
    run.add_argument("--no-monitors", action="store_true", help="disable the per-round monitors")

    bound = sub.add_parser("bound", help="evaluate a closed-form regret bound")
    bound.add_argument("--theorem", required=True, choices=sorted(THEOREMS))
    bound.add_argument("--gt", type=float, help="number of arms ever active")
    bound.add_argument("--sum-a", type=float, help="sum of active-set sizes")
    bound.add_argument("--sum-conf", type=float, help="sum of all confidences")
    bound.add_argument("-K", "--n-arms", type=float)
    bound.add_argument("-T", "--horizon", type=float)
    bound.add_argument("-A", "--max-active", type=float)
    bound.add_argument("-M", "--n-experts", type=float)
    bound.add_argument("-S", "--switches", type=float)
    bound.add_argument("--eta", type=float)
    bound.add_argument("--gamma", type=float)
    bound.add_argument("--beta", type=float)
    bound.add_argument("--delta", type=float)

    eq = sub.add_parser("equivalence", help="Shannon-FTARL vs SB-EXP3 distribution gap")
    eq.add_argument("--T", dest="horizon", type=int, default=500)
    eq.add_argument("--seed", type=int, default=0)
    eq.add_argument("-K", "--n-arms", type=int, default=8)
    eq.add_argument("--eta", type=float, default=0.1)
    eq.add_argument("--gamma", type=float, default=0.0)
    return parser


def _error(msg: str, code: int) -> int:
    print(f"somnus: error: {msg}", file=sys.stderr)
    return code


def cmd_run(args, hooks=()) -> int:
    try:
        cfg = ExperimentConfig.load(args.config)
        over = {}
        if args.replicates is not None:
            over["replicates"] = args.replicates
        if args.seed is not None:
            over["base_seed"] = args.seed
        if args.horizon is not None:
            over["horizon"] = args.horizon
        if args.no_monitors:
            over["monitors"] = False
        if over:
            cfg = replace(cfg, **over)
            cfg.validate(args.config)
    except ConfigError as exc:
        return _error(str(exc), EXIT_CONFIG)

    out = args.out or "."
    want_trace = args.trace or cfg.trace is not None
    try:
        report = run_experiment(cfg, hooks=hooks, record=want_trace)
    except ConfigError as exc:
        return _error(f"{args.config}: {exc}", EXIT_CONFIG)
    except EpisodeError as exc:
        where = f" (replicate {exc.replicate})" if exc.replicate is not None else ""
        return _error(f"{args.config}: {exc}{where}", EXIT_ERROR)
    except SomnusError as exc:
        return _error(f"{args.config}: {exc}", EXIT_ERROR)

    os.makedirs(out, exist_ok=True)
    report_path = os.path.join(out, cfg.report or "report.json")
    with open(report_path, "w") as fh:
        fh.write(report.to_json())
    if want_trace:
        write_trace_csv(os.path.join(out, cfg.trace or "trace.csv"), report.records)
    print(report.summary_line())
    if report.violations:
        first = report.violations[0]
        return _error(f"{len(report.violations)} monitor violation(s); first: {first['monitor']} at "
                      f"round {first['round']} of replicate {first['replicate']}", EXIT_MONITOR)
    return EXIT_OK


def cmd_bound(args) -> int:
    params = {BOUND_FLAGS[k]: v for k, v in vars(args).items() if k in BOUND_FLAGS and v is not None}
    try:
        value = theoretical_bound(args.theorem, **params)
    except InvalidParameter as exc:
        flags = ", ".join("--" + k.replace("_", "-") for k, v in BOUND_FLAGS.items()
                          if v in required_params(args.theorem))
        return _error(f"{exc} (flags: {flags})", EXIT_CONFIG)
    print(f"{value:.6f}")
    return EXIT_OK


def cmd_equivalence(args) -> int:
    try:
        env = random_env(args.n_arms, args.horizon, args.seed)
        gaps = lockstep_gap(SbExp3(args.eta, args.gamma), Ftarl(args.eta, args.n_arms, args.gamma, "shannon"),
                            env, args.horizon, args.seed)
    except InvalidParameter as exc:
        return _error(str(exc), EXIT_CONFIG)
    gap = float(gaps.max()) if gaps.size else 0.0
    print(f"max elementwise distribution gap over {args.horizon} rounds: {gap:.3e}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None, hooks=()) -> int:
    """Run the CLI; ``hooks`` are per-round callbacks passed to the episode runner."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    if args.command == "run":
        return cmd_run(args, hooks)
    if args.command == "bound":
        return cmd_bound(args)
    return cmd_equivalence(args)


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":  # pragma: no cover
    main_entry()
