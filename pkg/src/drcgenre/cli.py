"""Command line entry point: ``drcgenre <command> ...``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import tempfile
from pathlib import Path

import numpy as np

from .audio_io import read_wav, write_synthetic_dataset, write_wav
from .compressor import CompressorSettings, compress
from .experiment import format_table, load_dataset, run_sweep
from .features import FEATURE_NAMES, extract_feature_vector
from .svm import load_model, predict_ovo, save_model, train_ovo

log = logging.getLogger("drcgenre")


def write_feature_csv(values, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FEATURE_NAMES)
        w.writerow([repr(float(v)) for v in values])


def read_feature_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or tuple(rows[0]) != FEATURE_NAMES:
        raise ValueError(f"{path}: expected a header of {len(FEATURE_NAMES)} feature names and one row")
    return np.array([float(v) for v in rows[1]])


def load_feature_dir(root):
    """Read ``<root>/<genre>/*.csv`` (or ``*.wav``, extracted on the fly)."""
    X, y = [], []
    for genre_dir in sorted(p for p in Path(root).iterdir() if p.is_dir()):
        files = sorted(genre_dir.glob("*.csv")) or sorted(genre_dir.glob("*.wav"))
        for f in files:
            if f.suffix == ".csv":
                X.append(read_feature_csv(f))
            else:
                X.append(extract_feature_vector(read_wav(f)).to_array())
            y.append(genre_dir.name)
    if not X:
        raise ValueError(f"no <genre>/*.csv or <genre>/*.wav files under {root}")
    return np.vstack(X), y


def _gamma(value):
    return value if value == "auto" else float(value)


def cmd_compress(args):
    settings = CompressorSettings(args.threshold, args.ratio, args.knee, args.attack, args.release, args.makeup)
    clipped = write_wav(compress(read_wav(args.inp), settings), args.out)
    if clipped:
        log.warning("%d sample(s) clipped to full scale", clipped)
    return 0


def cmd_features(args):
    write_feature_csv(extract_feature_vector(read_wav(args.inp)).to_array(), args.out)
    return 0


def cmd_train(args):
    X, y = load_feature_dir(args.features)
    model = train_ovo(X, y, gamma=_gamma(args.gamma), C=args.C)
    save_model(model, args.model)
    print(f"trained {len(model.pairwise_models)} pairwise models on {len(y)} clips, "
          f"{len(model.class_labels)} classes, gamma={model.gamma:.6g}")
    return 0


def cmd_evaluate(args):
    model = load_model(args.model)
    X, y = load_feature_dir(args.features)
    pred = predict_ovo(model, X)
    acc = float(np.mean([p == t for p, t in zip(pred, y)]))
    print(f"accuracy {acc:.4f} on {len(y)} clips")
    return 0


def cmd_sweep(args):
    with tempfile.TemporaryDirectory() as tmp:
        if args.synthetic:
            root = write_synthetic_dataset(Path(tmp) / "data", clips_per_genre=args.clips_per_genre, seed=args.seed)
        elif args.data:
            root = Path(args.data)
        else:
            raise SystemExit("sweep needs --data <root> or --synthetic")
        report = run_sweep(load_dataset(root), iterations=args.iterations, seed=args.seed,
                           test_fraction=args.test_fraction, gamma=_gamma(args.gamma), C=args.C,
                           workers=args.workers)
    report.to_csv(args.out)
    if args.json:
        report.to_json(args.json)
    print(format_table(report, args.top))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="drcgenre", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="apply the compressor to a WAV file")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--threshold", type=float, required=True, help="dB")
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--knee", type=float, default=0.0, help="dB")
    p.add_argument("--attack", type=float, default=0.0, help="seconds")
    p.add_argument("--release", type=float, default=0.0, help="seconds")
    p.add_argument("--makeup", type=float, default=0.0, help="dB")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("features", help="write the 21 clip features of a WAV file as CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_features)

    for name, func, helptext in (("train", cmd_train, "fit a one-vs-one SVM"),
                                 ("evaluate", cmd_evaluate, "score a saved model")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--features", required=True, help="directory of <genre>/*.csv or <genre>/*.wav")
        p.add_argument("--model", required=True)
        if name == "train":
            p.add_argument("--gamma", default="auto")
            p.add_argument("--C", type=float, default=1.0)
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="rank the 90 compressor settings by test accuracy")
    p.add_argument("--data", help="GTZAN-layout root: <root>/<genre>/*.wav")
    p.add_argument("--synthetic", action="store_true", help="generate a synthetic dataset instead")
    p.add_argument("--clips-per-genre", type=int, default=20, help="synthetic dataset size")
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--gamma", default="auto")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="CSV report")
    p.add_argument("--json", help="optional JSON report with per-iteration detail")
    p.add_argument("--top", type=int, default=5)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
