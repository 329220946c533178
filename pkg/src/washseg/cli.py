"""Command-line entry point: synth, train, infer, score, eval, inspect.

Every command exits 0 on success; failures print a single
``error: <origin>: <message>`` line to stderr and exit nonzero. Seeds are
mandatory for synth/train so reruns are reproducible byte for byte.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import evaluation, pipeline, scoring, synth
from .model import ArchConfig, GestureNet, TrainHyper, train
from .signal_data import load_corpus, load_csv


def _fail(origin: str, message: str) -> int:
    print(f"error: {origin}: {message}", file=sys.stderr)
    return 1


def cmd_synth(args) -> int:
    if args.spec:
        with open(args.spec) as f:
            spec = synth.GenSpec.from_text(f.read())
        if args.seed is not None:
            spec.seed = args.seed
    else:
        spec = synth.GenSpec(seed=args.seed)
    if args.participants:
        spec.participants = args.participants
    if args.locations:
        spec.locations = args.locations
    corpus = synth.generate(spec)
    synth.write_corpus(corpus, args.out)
    stats = synth.describe(corpus)
    print(json.dumps(stats, indent=2))
    return 0


def cmd_train(args) -> int:
    corpus = load_corpus(args.data)
    arch = ArchConfig()
    if args.arch_config:
        with open(args.arch_config) as f:
            arch = ArchConfig.from_text(f.read())
    hyper = TrainHyper(lr=args.lr, batch=args.batch, epochs=args.epochs, seed=args.seed)
    model = GestureNet(arch, seed=args.seed)
    windows = evaluation.fold_windows(
        corpus, arch.input_length, args.stride,
        max_windows=args.max_windows, rng=np.random.default_rng(args.seed),
    )
    logs = train(model, windows, hyper, verbose=not args.quiet)
    bits = model.save(args.out)
    log_path = args.out + ".log.csv"
    with open(log_path, "w") as f:
        f.write("epoch,loss,accuracy\n")
        for entry in logs:
            f.write(f"{entry.epoch},{entry.loss:.9g},{entry.accuracy:.9g}\n")
    print(f"saved {args.out} ({bits / 1000.0:.1f} Kbit), log at {log_path}")
    return 0


def cmd_infer(args) -> int:
    model = GestureNet.load(args.checkpoint)
    series = load_csv(args.series)
    stride = 1 if args.smooth in ("mtv", "mtv+tmf") else 64
    track = pipeline.infer_track(model, series, stride=stride)
    track = pipeline.smooth(track, "none" if args.smooth == "none" else args.smooth)
    pipeline.export_track_csv(args.out, track, series)
    svg_path = os.path.splitext(args.out)[0] + ".svg"
    pipeline.export_timeline_svg(svg_path, track, series.rate_hz)
    print(f"wrote {args.out} and {svg_path}")
    return 0


def cmd_score(args) -> int:
    if args.track:
        rows = np.genfromtxt(args.track, delimiter=",", names=True)
        track = pipeline.LabelTrack(labels=rows["predicted"].astype(np.int64))
        rate = args.rate_hz
    else:
        if not (args.checkpoint and args.series):
            return _fail("score", "need either --track or --checkpoint with --series")
        model = GestureNet.load(args.checkpoint)
        series = load_csv(args.series)
        raw = pipeline.infer_track(model, series, stride=1)
        track = pipeline.smooth(raw, "mtv+tmf")
        rate = series.rate_hz
    durations = pipeline.gesture_durations(track, rate)
    report = scoring.score(durations)
    text = report.to_json()
    if args.out:
        with open(args.out, "w") as f:
            f.write(text + "\n")
    print(text)
    return 0


def cmd_eval(args) -> int:
    corpus = load_corpus(args.data)
    kind = {"user-dep": "user-dependent", "lopo": "lopo", "lolo": "lolo"}[args.split]
    split = evaluation.make_split(corpus, kind)
    hyper = TrainHyper(lr=args.lr, batch=args.batch, epochs=args.epochs, seed=args.seed)
    results = evaluation.run_evaluation(
        split,
        hyper=hyper,
        window_stride=args.stride,
        max_windows=args.max_windows,
        verbose=not args.quiet,
    )
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "metrics.json"), "w") as f:
        f.write(evaluation.report_to_json(results) + "\n")
    for fold, metrics in results.items():
        if fold == "_aggregate":
            continue
        m = metrics["mtv+tmf"]
        with open(os.path.join(args.out, f"{fold}_confusion.csv"), "w") as f:
            f.write(evaluation.confusion_to_csv(m.confusion))
        with open(os.path.join(args.out, f"{fold}_participants.csv"), "w") as f:
            f.write(evaluation.per_participant_csv(m.per_participant_accuracy))
    print(json.dumps(results["_aggregate"], indent=2))
    return 0


def cmd_inspect(args) -> int:
    model = GestureNet.load(args.checkpoint)
    report = model.size_report()
    print(model.config.to_text().strip())
    print(f"parameters: {report['parameter_count']}")
    print(f"payload bits: {report['payload_bits']}")
    print(f"serialized size: {report['total_kbits']:.3f} Kbit")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="washseg")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True, help="output corpus directory")
    sp.add_argument("--spec", help="generator key-value config file")
    sp.add_argument("--participants", type=int, default=0)
    sp.add_argument("--locations", type=int, default=0)
    sp.set_defaults(func=cmd_synth)

    tp = sub.add_parser("train", help="train a model on a corpus directory")
    tp.add_argument("--data", required=True)
    tp.add_argument("--seed", type=int, required=True)
    tp.add_argument("--out", required=True, help="output checkpoint path")
    tp.add_argument("--arch-config", help="architecture key-value file")
    tp.add_argument("--epochs", type=int, default=500)
    tp.add_argument("--lr", type=float, default=0.001)
    tp.add_argument("--batch", type=int, default=256)
    tp.add_argument("--stride", type=int, default=1, help="training window stride")
    tp.add_argument("--max-windows", type=int, default=None)
    tp.add_argument("--quiet", action="store_true")
    tp.set_defaults(func=cmd_train)

    ip = sub.add_parser("infer", help="label one series with a trained model")
    ip.add_argument("--checkpoint", required=True)
    ip.add_argument("--series", required=True)
    ip.add_argument("--smooth", choices=["none", "mtv", "tmf", "mtv+tmf"], default="mtv+tmf")
    ip.add_argument("--out", required=True, help="label-track CSV path")
    ip.set_defaults(func=cmd_infer)

    scp = sub.add_parser("score", help="score a label track or a series")
    scp.add_argument("--track", help="label-track CSV from `infer`")
    scp.add_argument("--checkpoint")
    scp.add_argument("--series")
    scp.add_argument("--rate-hz", type=float, default=50.0)
    scp.add_argument("--out")
    scp.set_defaults(func=cmd_score)

    ep = sub.add_parser("eval", help="train+evaluate under a split protocol")
    ep.add_argument("--data", required=True)
    ep.add_argument("--split", choices=["user-dep", "lopo", "lolo"], default="user-dep")
    ep.add_argument("--seed", type=int, required=True)
    ep.add_argument("--out", required=True, help="output report directory")
    ep.add_argument("--epochs", type=int, default=500)
    ep.add_argument("--lr", type=float, default=0.001)
    ep.add_argument("--batch", type=int, default=256)
    ep.add_argument("--stride", type=int, default=1)
    ep.add_argument("--max-windows", type=int, default=None)
    ep.add_argument("--quiet", action="store_true")
    ep.set_defaults(func=cmd_eval)

    np_ = sub.add_parser("inspect", help="dump a checkpoint's architecture and size")
    np_.add_argument("--checkpoint", required=True)
    np_.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface module errors with their origin
        return _fail(type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
