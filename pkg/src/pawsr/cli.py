"""Command line interface: run / validate / demo."""

from __future__ import annotations

import argparse
import sys

from .harness import ExperimentConfig, demo_config, run_experiment, summary_text


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pawsr",
        description="Weighted sum rate precoder optimization experiments "
                    "(per-antenna power constrained downlink MIMO).")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the sweep described by a JSON config")
    run.add_argument("--config", required=True, help="JSON experiment config")
    run.add_argument("--out", help="output CSV path (overrides config 'out')")
    run.add_argument("--trace-out", help="optional per-iteration trace CSV")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True)

    demo = sub.add_parser("demo", help="run the built-in 2-user, 4-antenna setup")
    demo.add_argument("--out", default="demo_results.csv")
    demo.add_argument("--trace-out")
    demo.add_argument("--realizations", type=int, default=200)
    demo.add_argument("--seed", type=int, default=1)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            ExperimentConfig.from_json(args.config)
            print("config ok")
            return 0
        if args.command == "run":
            config = ExperimentConfig.from_json(args.config)
            out = args.out or config.out
            if not out:
                print("error: no output path (pass --out or set 'out' in the config)",
                      file=sys.stderr)
                return 2
            summary = run_experiment(config, out, args.trace_out)
        else:  # demo
            config = demo_config(realizations=args.realizations, seed=args.seed)
            summary = run_experiment(config, args.out, args.trace_out)
        print(summary_text(summary), end="")
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
