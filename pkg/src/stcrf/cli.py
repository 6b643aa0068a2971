"""Command-line entry point.

Exit codes: 0 success, 1 invalid input (bad options, missing or malformed
files), 2 failure while running (diverged training, internal errors).
Settings resolve as: command-line flag, then run config file, then default.
Relative output paths are placed under ``--out-dir``.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import torch

from .config import load_run_config
from .data import (RELATIVE_MODES, load_dataset_config, load_split, read_manifest,
                   write_manifest)
from .evaluation import evaluate, plot_trajectories, run_ablation
from .intention import (LabelerConfig, intention_stats, label_window, write_labels,
                        write_stats_csv)
from .training import ABLATIONS, Checkpoint, NonFiniteLoss, train

log = logging.getLogger("stcrf")


class UsageError(ValueError):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _global_flags(parser, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(None),
                        help="random seed (overrides the config file)")
    parser.add_argument("-v", "--verbose", action="count", default=default(0),
                        help="more log output; repeat for debug")
    parser.add_argument("--out-dir", default=default("."),
                        help="directory for relative output paths (default: .)")


def _window_source(parser, split_default=None):
    parser.add_argument("--dataset", help="dataset config file")
    parser.add_argument("--windows", help="window manifest (instead of --dataset)")
    parser.add_argument("--split", default=split_default,
                        help="dataset split (default: %(default)s; all files if unset)")


def _labeler_flags(parser):
    parser.add_argument("--d-lat", type=float, help="lateral threshold in metres (0.1)")
    parser.add_argument("--d-lon", type=float, help="relative speed threshold (0.2)")
    parser.add_argument("--delta-t", type=float, help="look-ahead in seconds (0.8)")
    parser.add_argument("--v-ref", type=float, help="reference speed in m/s (1.0)")
    parser.add_argument("--frame-interval", type=float,
                        help="seconds per frame when reading a manifest (0.4)")


def build_parser():
    parser = Parser(prog="stcrf", description="Intention-aware pedestrian trajectory prediction.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=Parser)
    sub.required = True

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        _global_flags(p, suppress=True)
        return p

    p = command("prepare", "Cut track files into observation/prediction windows.")
    _window_source(p)
    p.add_argument("--obs-len", type=int, default=8)
    p.add_argument("--pred-len", type=int, default=12)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--out", default="windows.txt", help="manifest path (default: %(default)s)")

    p = command("label", "Label every frame of every window with intention codes.")
    _window_source(p)
    _labeler_flags(p)
    p.add_argument("--obs-len", type=int, default=8)
    p.add_argument("--pred-len", type=int, default=12)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--out", default="labels.txt", help="labels path (default: %(default)s)")
    p.add_argument("--manifest-out", default="windows.txt",
                   help="manifest written next to the labels when reading --dataset")

    p = command("stats", "Percentage of frames per intention as CSV.")
    _window_source(p)
    _labeler_flags(p)
    p.add_argument("--obs-len", type=int, default=8)
    p.add_argument("--pred-len", type=int, default=12)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--out", help="CSV path (default: standard output)")

    for name, text in (("train", "Train a model from a run config."),
                       ("ablate", "Train and evaluate the three CRF-loss configurations.")):
        p = command(name, text)
        p.add_argument("--config", required=True, help="run config file")
        p.add_argument("--epochs", type=int)
        p.add_argument("--learning-rate", type=float)
        p.add_argument("--optimizer", choices=("sgd", "adam"))
        p.add_argument("--batch-size", type=int)
        p.add_argument("--relative-mode", choices=RELATIVE_MODES)
        p.add_argument("--d-f", type=int, help="feature width of the encoder")
        if name == "train":
            p.add_argument("--ablate", choices=sorted(ABLATIONS), default="none")
            p.add_argument("--checkpoint", help="output checkpoint (default: from config)")
        else:
            p.add_argument("--out", default="ablation.csv",
                           help="combined CSV (default: %(default)s)")

    p = command("evaluate", "ADE/FDE of a checkpoint on a split.")
    p.add_argument("--checkpoint", required=True)
    _window_source(p, split_default="test")
    p.add_argument("--out", default="report.csv", help="per-scene CSV (default: %(default)s)")
    p.add_argument("--paper-literal", action="store_true",
                   help="divide the summed error by N only, not by N times the horizon")

    p = command("plot", "Draw observed, true and predicted paths of one window.")
    p.add_argument("--checkpoint", required=True)
    _window_source(p, split_default="test")
    p.add_argument("--index", type=int, default=0, help="window index (default: 0)")
    p.add_argument("--out", default="trajectories.png")
    return parser


def _out(args, path):
    path = Path(path)
    if not path.is_absolute():
        path = Path(args.out_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _require_file(path, what):
    if not Path(path).is_file():
        raise FileNotFoundError(f"{what} not found: {path}")


def _load_windows(args, obs_len, pred_len, stride=1):
    """Windows plus the dataset's frame interval (None for manifests)."""
    if bool(args.dataset) == bool(args.windows):
        raise UsageError("give exactly one of --dataset or --windows")
    if args.windows:
        _require_file(args.windows, "window manifest")
        windows = read_manifest(args.windows)
        interval = None
    else:
        _require_file(args.dataset, "dataset config")
        cfg = load_dataset_config(args.dataset)
        if args.split is not None and args.split not in cfg.splits:
            raise UsageError(f"{args.dataset}: no '{args.split}' split")
        for f in cfg.files(args.split):
            _require_file(f, "track file")
        windows = load_split(cfg, args.split, obs_len, pred_len, stride)
        interval = cfg.frame_interval
    if not windows:
        raise UsageError("no complete windows in the input")
    return windows, interval


def _labeler(args, interval):
    values = {k: getattr(args, k) for k in ("d_lat", "d_lon", "delta_t", "v_ref")
              if getattr(args, k) is not None}
    interval = args.frame_interval or interval or 0.4
    return LabelerConfig(frame_interval=interval, **values)


def cmd_prepare(args):
    windows, _ = _load_windows(args, args.obs_len, args.pred_len, args.stride)
    out = _out(args, args.out)
    write_manifest(windows, out)
    print(f"{len(windows)} windows -> {out}")


def cmd_label(args):
    windows, interval = _load_windows(args, args.obs_len, args.pred_len, args.stride)
    config = _labeler(args, interval)
    out = _out(args, args.out)
    write_labels([label_window(w, config) for w in windows], out)
    if args.dataset:
        write_manifest(windows, _out(args, args.manifest_out))
    print(f"{len(windows)} windows labeled -> {out}")


def cmd_stats(args):
    windows, interval = _load_windows(args, args.obs_len, args.pred_len, args.stride)
    stats = intention_stats(windows, _labeler(args, interval))
    if args.out:
        with open(_out(args, args.out), "w") as fh:
            write_stats_csv(stats, fh)
    else:
        write_stats_csv(stats, sys.stdout)


def _run_setup(args):
    _require_file(args.config, "run config")
    run = load_run_config(args.config)
    run = run.with_overrides(epochs=args.epochs, learning_rate=args.learning_rate,
                             optimizer=args.optimizer, batch_size=args.batch_size,
                             relative_mode=args.relative_mode, d_f=args.d_f, seed=args.seed)
    if not run.dataset:
        raise UsageError(f"{args.config}: 'dataset' is not set")
    _require_file(run.dataset, "dataset config")
    data = load_dataset_config(run.dataset)
    if run.train_split not in data.splits:
        raise UsageError(f"{run.dataset}: no '{run.train_split}' split")

    def split(name):
        for f in data.files(name):
            _require_file(f, "track file")
        windows = load_split(data, name, run.model.obs_len, run.model.pred_len, run.stride)
        if not windows:
            raise UsageError(f"split '{name}' has no complete windows")
        return windows

    return run, data, split


def cmd_train(args):
    run, data, split = _run_setup(args)
    train_cfg = replace(run.train, **ABLATIONS[args.ablate])
    val = split(run.val_split) if run.val_split else None
    out = _out(args, args.checkpoint or run.checkpoint)
    ckpt = train(split(run.train_split), train_cfg, run.model,
                 run.labeler(data.frame_interval), val_windows=val, checkpoint_path=out)
    best = ckpt.history[ckpt.epoch - 1]
    print(f"epoch {ckpt.epoch}: ADE {best['val_ade']:.4f} FDE {best['val_fde']:.4f} -> {out}")


def cmd_ablate(args):
    run, data, split = _run_setup(args)
    eval_split = run.test_split if run.test_split in data.splits else run.train_split
    out = _out(args, args.out)
    rows = run_ablation(split(run.train_split), split(eval_split), run.train, run.model,
                        run.labeler(data.frame_interval), out)
    for row in rows:
        print(f"{row['config']:<10} ADE {row['ade']:.4f} FDE {row['fde']:.4f}")


def _load_checkpoint(path):
    _require_file(path, "checkpoint")
    return Checkpoint.load(path)


def cmd_evaluate(args):
    ckpt = _load_checkpoint(args.checkpoint)
    cfg = ckpt.model_config
    windows, _ = _load_windows(args, cfg["obs_len"], cfg["pred_len"])
    report = evaluate(ckpt, windows, paper_literal=args.paper_literal)
    report.write_csv(_out(args, args.out))
    print(f"ADE {report.ade:.4f} FDE {report.fde:.4f} over {report.windows} windows")


def cmd_plot(args):
    ckpt = _load_checkpoint(args.checkpoint)
    cfg = ckpt.model_config
    windows, _ = _load_windows(args, cfg["obs_len"], cfg["pred_len"])
    if not 0 <= args.index < len(windows):
        raise UsageError(f"--index must be in [0, {len(windows) - 1}]")
    window = windows[args.index]
    pred, _, _ = ckpt.build_model().predict_window(window)
    out = _out(args, args.out)
    plot_trajectories(window, pred, out, title=f"{window.scene} @ frame {window.start_frame}")
    print(out)


COMMANDS = {"prepare": cmd_prepare, "label": cmd_label, "stats": cmd_stats,
            "train": cmd_train, "ablate": cmd_ablate, "evaluate": cmd_evaluate,
            "plot": cmd_plot}


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(message)s")
    logging.captureWarnings(True)
    if args.seed is not None:
        np.random.seed(args.seed)
        torch.manual_seed(args.seed)
    try:
        COMMANDS[args.command](args)
    except NonFiniteLoss as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.debug("unhandled", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
