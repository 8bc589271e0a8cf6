"""Command line entry point.

    fedsparse run <config.yaml> [--out DIR] [--seed S]
    fedsparse sweep <config.yaml> [--out DIR] [--seed S] [--jobs N]

Exit codes: 0 success, 1 runtime failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .ingest import FormatError
from .runner import run_experiment, run_sweep


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedsparse", description="Federated sparse-training simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a single experiment")
    run_p.add_argument("config", help="path to the experiment config file")
    run_p.add_argument("--out", default=None, help="override the output directory")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")

    sweep_p = sub.add_parser("sweep", help="run a grid of experiments")
    sweep_p.add_argument("config", help="path to the experiment config file (with a sweep block)")
    sweep_p.add_argument("--out", default=None, help="override the output directory")
    sweep_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    sweep_p.add_argument("--jobs", type=int, default=1, help="parallel sweep cells")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.command == "run":
            records = run_experiment(cfg, args.out)
            final = records[-1]
            print(f"done: {len(records)} epochs, test_score={final.test_score:.6g}")
        else:
            results = run_sweep(cfg, args.out, jobs=args.jobs)
            failed = [r for r in results if r["status"] != "ok"]
            print(f"sweep done: {len(results)} cells, {len(failed)} failed")
            for r in failed:
                print(f"  {r['out_dir']}: {r['status']}", file=sys.stderr)
            if failed:
                return 1
    except (ConfigError, FormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
