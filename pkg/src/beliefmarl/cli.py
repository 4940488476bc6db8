"""Command-line entry points: ``beliefmarl train`` and ``beliefmarl eval``."""

from __future__ import annotations

import argparse
import sys

from . import harness
from .config import AblationFlags, parse_config
from .errors import ConfigError, TrainingFault


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beliefmarl",
        description="Train or evaluate belief-augmented cooperative agents.")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run a training configuration")
    train.add_argument("--config", default=None, help="flat key=value config file")
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--env", default=None,
                       help="task name, e.g. 2s-9x9-3p-2f or spread-3")
    train.add_argument("--ablation", default=None,
                       help="comma list: no_intr,no_filters,no_kl,no_L2_norm,"
                            "obs_rew,no_critic_w,no_standard_critic")
    train.add_argument("--out", default=None, help="output directory")

    ev = sub.add_parser("eval", help="evaluate a saved snapshot")
    ev.add_argument("--snapshot", required=True)
    ev.add_argument("--episodes", type=int, required=True)
    ev.add_argument("--seed", type=int, required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            overrides = {}
            if args.seed is not None:
                overrides["seed"] = args.seed
            if args.env is not None:
                overrides["env"] = args.env
            if args.ablation is not None:
                overrides["ablation"] = AblationFlags.from_csv(args.ablation)
            config = parse_config(args.config, overrides)
            out = harness.run(config, out_dir=args.out)
            print(f"run complete: {out}")
        else:
            mean_return = harness.evaluate(args.snapshot, args.episodes, args.seed)
            print(f"mean episodic reward over {args.episodes} episodes: {mean_return}")
        return 0
    except (ConfigError, TrainingFault, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
