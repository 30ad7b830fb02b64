"""Command-line interface.

Subcommands: generate, pretrain, evaluate, ablate-window, ablate-labels,
ablate-notes. Every command accepts --config/--seed/--out; failures exit
nonzero after printing one structured JSON error line to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
import traceback
from pathlib import Path

from .. import corpus
from .ablations import ablate_note_types, ablate_reduced_labels, ablate_window
from .assessment import MODES, evaluate_checkpoint
from .config import RunConfig, TASKS, load_config, save_config
from .pretraining import pretrain


def _add_common(parser: argparse.ArgumentParser, needs_data: bool = False):
    parser.add_argument("--config", type=Path, default=None, help="YAML run config")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--out", type=Path, required=True, help="output directory")
    parser.add_argument(
        "--paper-scale",
        action="store_true",
        help="start from published-scale defaults instead of desk-scale ones",
    )
    if needs_data:
        parser.add_argument(
            "--data", type=Path, default=None, help="dataset root (default: config data_dir)"
        )


def _resolve_config(args) -> RunConfig:
    base = RunConfig.paper_scale() if args.paper_scale else RunConfig()
    config = load_config(args.config, base=base) if args.config else base
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def _resolve_data(args, config: RunConfig) -> Path:
    return Path(args.data) if getattr(args, "data", None) else Path(config.data_dir)


def cmd_generate(args) -> int:
    config = _resolve_config(args)
    splits = corpus.generate_synthetic(config.synth, config.seed)
    corpus.write_dataset(
        args.out,
        splits,
        corpus.variable_names(config.synth),
        generator_config=config.synth.to_dict(),
        seed=config.seed,
    )
    save_config(Path(args.out) / "run_config.yaml", config)
    counts = {split: len(stays) for split, stays in splits.items()}
    print(json.dumps({"status": "ok", "command": "generate", "stays": counts}))
    return 0


def cmd_pretrain(args) -> int:
    config = _resolve_config(args)
    result = pretrain(config, data_dir=_resolve_data(args, config), out_dir=args.out)
    print(
        json.dumps(
            {
                "status": "ok",
                "command": "pretrain",
                "checkpoint": result.checkpoint_path,
                "final_train_loss": result.epoch_logs[-1]["train_loss"],
            }
        )
    )
    return 0


def cmd_evaluate(args) -> int:
    config = _resolve_config(args)
    outcome = evaluate_checkpoint(
        args.checkpoint,
        _resolve_data(args, config),
        out_dir=args.out,
        tasks=tuple(args.tasks),
        modes=tuple(args.modes),
        seed=config.seed,
    )
    print(
        json.dumps(
            {
                "status": "ok",
                "command": "evaluate",
                "metrics": outcome["records"],
            }
        )
    )
    return 0


def cmd_ablate_window(args) -> int:
    config = _resolve_config(args)
    table = ablate_window(
        config,
        _resolve_data(args, config),
        out_dir=args.out,
        sizes=tuple(args.sizes),
        n_seeds=args.n_seeds,
    )
    print(json.dumps({"status": "ok", "command": "ablate-window", "rows": table["rows"]}))
    return 0


def cmd_ablate_labels(args) -> int:
    config = _resolve_config(args)
    table = ablate_reduced_labels(
        args.checkpoint,
        _resolve_data(args, config),
        out_dir=args.out,
        fractions=tuple(args.fractions),
        n_seeds=args.n_seeds,
        task=args.task,
    )
    print(
        json.dumps(
            {
                "status": "ok",
                "command": "ablate-labels",
                "crossover_fraction": table["crossover_fraction"],
            }
        )
    )
    return 0


def cmd_ablate_notes(args) -> int:
    config = _resolve_config(args)
    table = ablate_note_types(
        config, _resolve_data(args, config), target_task=args.task, out_dir=args.out
    )
    print(
        json.dumps(
            {
                "status": "ok",
                "command": "ablate-notes",
                "removed_order": table["removed_order"],
            }
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmncl",
        description="Multi-modal neighborhood contrastive learning on paired EHR data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    _add_common(p)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("pretrain", help="contrastive pretraining")
    _add_common(p, needs_data=True)
    p.set_defaults(handler=cmd_pretrain)

    p = sub.add_parser("evaluate", help="probe and zero-shot metrics for a checkpoint")
    _add_common(p, needs_data=True)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--tasks", nargs="+", default=list(TASKS), choices=list(TASKS))
    p.add_argument("--modes", nargs="+", default=list(MODES), choices=list(MODES))
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("ablate-window", help="window-size ablation")
    _add_common(p, needs_data=True)
    p.add_argument("--sizes", nargs="+", type=int, default=[8, 16, 24, 48])
    p.add_argument("--n-seeds", type=int, default=1)
    p.set_defaults(handler=cmd_ablate_window)

    p = sub.add_parser("ablate-labels", help="reduced-label comparison")
    _add_common(p, needs_data=True)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--fractions", nargs="+", type=float, default=[0.01, 0.03, 0.1, 0.3, 1.0])
    p.add_argument("--n-seeds", type=int, default=1)
    p.add_argument("--task", default="mortality", choices=list(TASKS))
    p.set_defaults(handler=cmd_ablate_labels)

    p = sub.add_parser("ablate-notes", help="greedy note-type removal")
    _add_common(p, needs_data=True)
    p.add_argument("--task", default="mortality", choices=list(TASKS))
    p.set_defaults(handler=cmd_ablate_notes)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s:%(name)s:%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except Exception as exc:  # single structured line, nonzero exit
        print(
            json.dumps({"status": "error", "error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        traceback.print_exc(file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
