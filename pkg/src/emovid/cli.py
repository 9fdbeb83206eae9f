"""Command-line interface.

Subcommands: fixture, train, evaluate, predict, fuse, plot-embeddings.
Exit codes: 0 success, 1 validation error, 2 runtime failure.
"""

import argparse
import csv
import sys
from pathlib import Path

from . import fixtures, harness, metrics, taxonomy
from .config import RunConfig, load_config
from .data import parse_annotations


def _add_taxonomy_args(p):
    p.add_argument("--labels", required=True, help="labels file, one per line")
    p.add_argument("--embeddings", required=True, help="word-vector text file")


def build_parser():
    ap = argparse.ArgumentParser(prog="emovid",
                                 description="Body/context video emotion toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixture", help="generate a synthetic dataset")
    p.add_argument("--root", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=8)
    p.add_argument("--frames", type=int, default=12)
    p.add_argument("--image-size", type=int, default=32)
    p.add_argument("--separable", action=argparse.BooleanOptionalAction, default=True)

    p = sub.add_parser("train", help="train one network")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--train-annotations", required=True)
    p.add_argument("--val-annotations", required=True)
    p.add_argument("--root", required=True)
    _add_taxonomy_args(p)
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--streams", choices=("rgb_bc", "rgb_b", "flow_b"))
    p.add_argument("--epochs", type=int)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--image-size", type=int)

    p = sub.add_parser("evaluate", help="score a predictions file")
    p.add_argument("--predictions", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--out", help="write the report JSON here (default stdout)")

    p = sub.add_parser("predict", help="run inference from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--segments", type=int, help="segments at test time")
    p.add_argument("--out", required=True)

    p = sub.add_parser("fuse", help="average score fusion of prediction files")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out", required=True)

    p = sub.add_parser("plot-embeddings",
                       help="write the 2-d PCA projection of label embeddings as CSV")
    _add_taxonomy_args(p)
    p.add_argument("--out", required=True)
    return ap


def _cmd_fixture(args):
    ds = fixtures.generate_fixture(args.root, args.seed, args.instances,
                                   args.frames, args.image_size, args.separable)
    print(f"wrote {len(ds)} instances under {args.root}")


def _cmd_train(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = cfg.with_overrides(streams=args.streams, epochs=args.epochs,
                             max_steps=args.max_steps, seed=args.seed, lr=args.lr,
                             batch_size=args.batch_size, image_size=args.image_size)
    tax = taxonomy.load_taxonomy(args.labels, args.embeddings)
    train_set = parse_annotations(args.train_annotations, args.root, "train")
    val_set = parse_annotations(args.val_annotations, args.root, "val")
    run_dir = harness.train(cfg, train_set, val_set, tax, args.out)
    ers = harness.read_history_ers(run_dir / "history.csv")
    best = harness.select_best_epoch(ers)
    print(f"run complete: {run_dir}; best epoch {best} (val ERS {ers[best]:.5f})")


def _cmd_evaluate(args):
    ds = parse_annotations(args.annotations, args.root, "val")
    preds, _ = harness.read_predictions(args.predictions)
    report = metrics.evaluate(preds, ds)
    text = report.to_json(indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    print(f"mAP={report.m_ap:.5f} mRA={report.m_ra:.5f} "
          f"mR2={report.m_r2:.5f} ERS={report.ers:.5f}", file=sys.stderr)


def _cmd_predict(args):
    ds = parse_annotations(args.annotations, args.root, "test")
    harness.predict(args.checkpoint, ds, args.out, k_test=args.segments)
    print(f"wrote predictions for {len(ds)} instances to {args.out}")


def _cmd_fuse(args):
    harness.fuse_scores(args.inputs, args.out)
    print(f"fused {len(args.inputs)} files into {args.out}")


def _cmd_plot_embeddings(args):
    tax = taxonomy.load_taxonomy(args.labels, args.embeddings)
    proj = taxonomy.pca_project(tax, k=2)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "x", "y"])
        for lab, (x, y) in zip(tax.labels, proj):
            w.writerow([lab, f"{x:.6f}", f"{y:.6f}"])
    print(f"wrote {len(tax.labels)} projected labels to {args.out}")


_COMMANDS = {
    "fixture": _cmd_fixture,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "predict": _cmd_predict,
    "fuse": _cmd_fuse,
    "plot-embeddings": _cmd_plot_embeddings,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
