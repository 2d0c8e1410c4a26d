"""Command-line interface: train, evaluate, analyze, play-fixture."""
from __future__ import annotations

import argparse
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import analysis, tetris
from .algorithms import TrainingDiverged
from .harness import (
    PRESETS,
    AgentConfig,
    config_from_text,
    evaluate,
    train,
)

_OVERRIDE_FLAGS = [f.name for f in fields(AgentConfig)]


def parse_policy(text: str):
    """Policy specs: 'softmax:TAU', 'eps:EPS', 'greedy', 'final-tau'."""
    if text == "greedy":
        return ("epsilon", 0.0)
    if text == "final-tau":
        return ("final-tau", None)
    if ":" in text:
        kind, value = text.split(":", 1)
        if kind == "softmax":
            return ("softmax", float(value))
        if kind == "eps":
            return ("epsilon", float(value))
    raise argparse.ArgumentTypeError(f"unrecognized policy spec {text!r}")


def _add_config_flags(parser):
    parser.add_argument("--preset", choices=sorted(PRESETS))
    parser.add_argument("--config", type=Path, help="flat key=value config file")
    for f in fields(AgentConfig):
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, dest=f.name, type=(str if f.type == "str" else
                                                     int if f.type == "int" else float))


def _resolve_config(args) -> AgentConfig:
    config = PRESETS[args.preset] if args.preset else AgentConfig()
    if args.config:
        config = replace(config, **config_from_text(args.config.read_text()))
    overrides = {name: getattr(args, name) for name in _OVERRIDE_FLAGS
                 if getattr(args, name) is not None}
    return replace(config, **overrides)


def _build_parser():
    parser = argparse.ArgumentParser(prog="tdtetris")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training experiment")
    _add_config_flags(p_train)
    p_train.add_argument("--out-dir", type=Path, required=True)

    p_eval = sub.add_parser("evaluate", help="evaluate a checkpoint")
    p_eval.add_argument("--checkpoint", type=Path, required=True)
    p_eval.add_argument("--episodes", type=int, default=100)
    p_eval.add_argument("--policy", type=parse_policy, default=("final-tau", None))
    p_eval.add_argument("--seed", type=int, default=0)

    p_an = sub.add_parser("analyze", help="post-hoc analysis reports")
    an_sub = p_an.add_subparsers(dest="report", required=True)
    for name in ("value-gap", "selection"):
        p = an_sub.add_parser(name)
        p.add_argument("--checkpoint", type=Path, required=True)
        p.add_argument("--episodes", type=int, default=1000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", type=Path, required=True)
        if name == "value-gap":
            p.add_argument("--policy", type=parse_policy,
                           default=("final-tau", None))

    p_play = sub.add_parser("play-fixture",
                            help="dump the afterstate of one placement")
    p_play.add_argument("--board", type=Path,
                        help="ASCII board file ('.'/'#'); default empty")
    p_play.add_argument("--variant", choices=(tetris.SZ_VARIANT,
                                              tetris.TETRIS10_VARIANT),
                        default=tetris.SZ_VARIANT)
    p_play.add_argument("--piece", required=True,
                        choices=sorted(tetris.ROTATIONS))
    p_play.add_argument("--rotation", type=int, default=0)
    p_play.add_argument("--column", type=int, default=0)
    return parser


def _cmd_train(args) -> int:
    config = _resolve_config(args)
    try:
        out = train(config, args.out_dir)
    except TrainingDiverged as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 1
    print(f"run written to {out}")
    return 0


def _cmd_evaluate(args) -> int:
    if not args.checkpoint.exists():
        print(f"checkpoint not found: {args.checkpoint}", file=sys.stderr)
        return 1
    result = evaluate(args.checkpoint, args.episodes, args.policy, args.seed)
    print(f"episodes={args.episodes}")
    print(f"mean_score={result.mean!r}")
    print(f"sd_score={result.sd!r}")
    print(f"exploratory_mean={result.exploratory_mean!r}")
    return 0


def _cmd_analyze(args) -> int:
    if not args.checkpoint.exists():
        print(f"checkpoint not found: {args.checkpoint}", file=sys.stderr)
        return 1
    if args.report == "value-gap":
        out = analysis.write_value_report(args.out_dir, args.checkpoint,
                                          args.episodes, args.seed,
                                          args.policy)
    else:
        out = analysis.write_selection_report(args.out_dir, args.checkpoint,
                                              args.episodes, args.seed)
    print(f"report written to {out}")
    return 0


def _cmd_play_fixture(args) -> int:
    height, width = tetris.BOARD_SHAPE[args.variant]
    if args.board:
        if not args.board.exists():
            print(f"board fixture not found: {args.board}", file=sys.stderr)
            return 1
        board = tetris.Board.from_ascii(args.board.read_text())
    else:
        board = tetris.Board.empty(height, width)
    placements = tetris.enumerate_actions(board.width, args.piece)
    placement = tetris.Placement(args.rotation, args.column)
    if placement not in placements:
        print(f"invalid placement for piece {args.piece}: "
              f"rotation={args.rotation} column={args.column}",
              file=sys.stderr)
        return 1
    after, cleared, terminal = tetris.afterstate(board, args.piece, placement)
    print(after.to_ascii())
    print(f"rows_cleared={cleared}")
    print(f"terminal={terminal}")
    print(f"holes={tetris.count_holes(after)}")
    print(f"reward={tetris.shaped_reward(after, args.variant)!r}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {
        "train": _cmd_train,
        "evaluate": _cmd_evaluate,
        "analyze": _cmd_analyze,
        "play-fixture": _cmd_play_fixture,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
