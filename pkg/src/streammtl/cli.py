"""Command-line entry points.

Subcommands:
  generate   write a synthetic dataset to CSV
  run        execute an experiment config (JSON) and write result files
  report     consolidate summary.json files under a directory into a table
"""

from __future__ import annotations

import argparse
import sys

from .datasets import SyntheticConfig, generate_synthetic, save_csv
from .errors import StreamMTLError
from .harness import ExperimentConfig, consolidate_report, run_many


def _parse_seed(text: str):
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise argparse.ArgumentTypeError("empty seed")
    values = []
    for p in parts:
        try:
            values.append(int(p))
        except ValueError:
            raise argparse.ArgumentTypeError(f"seed {p!r} is not an integer") from None
    return values[0] if len(values) == 1 else values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streammtl",
        description="Online multi-task learning experiments over simulated topologies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset to CSV")
    gen.add_argument("--out", required=True, help="output file (or directory with --per-task-dir)")
    gen.add_argument("--tasks", type=int, default=5)
    gen.add_argument("--samples", type=int, default=2000, help="samples per task")
    gen.add_argument("--rotation", type=float, default=0.45, help="radians between consecutive tasks")
    gen.add_argument("--noise", type=float, default=0.1, help="label flip probability")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument(
        "--per-task-dir",
        action="store_true",
        help="write one task_<k>.csv per task instead of a single task_id file",
    )

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, help="JSON config path")
    run.add_argument(
        "--seed",
        type=_parse_seed,
        default=None,
        help="override config seed; comma-separated list for a sweep",
    )
    run.add_argument("--out", default=None, help="override output directory")
    run.add_argument("--rounds", type=int, default=None, help="override round count")

    rep = sub.add_parser("report", help="consolidate results into one table")
    rep.add_argument("--results", required=True, help="directory to scan for summary.json")
    rep.add_argument("--out", default=None, help="consolidated CSV path")
    return parser


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = SyntheticConfig(
        K=args.tasks,
        n_per_task=args.samples,
        rotation_step=args.rotation,
        noise=args.noise,
        seed=args.seed,
    )
    streams, manifest = generate_synthetic(cfg)
    save_csv(streams, args.out, per_task_dir=args.per_task_dir)
    ratios = ", ".join(f"{r:.3f}" for r in manifest.positive_ratios)
    print(
        f"wrote {manifest.K} tasks x {manifest.counts[0]} samples "
        f"(d={manifest.d}) to {args.out}; positive ratios: {ratios}"
    )
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output_dir = args.out
    if args.rounds is not None:
        cfg.rounds = args.rounds
    cfg.validate()
    results, aggregate = run_many(cfg)
    for res in results:
        s = res.summary
        err = "-" if s["final_avg_err"] is None else f"{s['final_avg_err']:.4f}"
        reach = "-" if s["rounds_to_target"] is None else str(s["rounds_to_target"])
        reg = "-" if s["regret"] is None else f"{s['regret']:.2f}"
        print(
            f"[seed {res.seed}] final_avg_err={err} rounds_to_target={reach} "
            f"regret={reg} messages={s['total_messages']} -> {res.out_dir}"
        )
    if isinstance(cfg.seed, list):
        stats = aggregate.get("final_avg_err")
        if stats:
            print(
                f"aggregate over {len(results)} seeds: "
                f"final_avg_err mean={stats['mean']:.4f} std={stats['std']:.4f}"
            )
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    rows, table = consolidate_report(args.results, args.out)
    if not rows:
        print(f"no summary.json files under {args.results}")
        return 1
    print(table)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "generate": cmd_generate,
        "run": cmd_run,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except StreamMTLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
