"""synthvid command line: generate, inspect, serve, stats, export-frames."""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .config import GeneratorConfig, apply_overrides, config_hash, load_config, validate_config
from .dataset_io import generate_dataset, inspect_video, read_video
from .server import serve
from .stats import AnalysisOptions, analyze_dataset, correlate_metrics, read_accuracy_csv


def _resolve_config(args) -> GeneratorConfig:
    if args.config:
        cfg = load_config(args.config, args.set or None)
    else:
        cfg = apply_overrides(GeneratorConfig(), args.set) if args.set else GeneratorConfig()
    return validate_config(cfg)


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config JSON file (defaults used when omitted)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", default=[],
                   help="override a config key (value parsed as JSON)")


def _parse_bind(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    return (host or "0.0.0.0", int(port))


def cmd_generate(args) -> int:
    cfg = _resolve_config(args)
    result = generate_dataset(cfg, args.out, count=args.count, workers=args.workers)
    print(f"wrote {len(result.new_files)} new videos "
          f"({result.skipped} already valid) into {args.out}")
    print(f"config hash {result.manifest.config_hash}")
    return 0


def cmd_inspect(args) -> int:
    info = inspect_video(args.file)
    print(f"{args.file}: {info['frames']}x{info['height']}x{info['width']}x3 "
          f"uint8 @ {info['fps']} fps, seed {info['seed']}")
    print(f"payload sha256 {info['payload_sha256']}")
    if args.frames:
        for i, digest in enumerate(info["frame_sha256"]):
            print(f"frame {i:5d} {digest}")
    return 0


def cmd_hash(args) -> int:
    print(config_hash(_resolve_config(args)))
    return 0


def cmd_show_config(args) -> int:
    print(_resolve_config(args).to_json())
    return 0


def cmd_serve(args) -> int:
    cfg = _resolve_config(args)
    serve(cfg, _parse_bind(args.bind), max_batch=args.max_batch)
    return 0


def cmd_stats(args) -> int:
    options = AnalysisOptions(
        frame_sample=args.frame_sample,
        video_sample=args.video_sample,
        frames_per_video=args.frames_per_video,
        seed=args.seed,
        allow_small=args.allow_small,
    )
    reports = []
    for dataset in args.dataset:
        report = analyze_dataset(
            dataset, options,
            reference=args.reference,
            features_path=args.features,
            ref_features_path=args.ref_features,
        )
        reports.append((os.path.basename(os.path.normpath(dataset)), report))
        print(f"{dataset}: alpha={report.spectrum_alpha:.4f} "
              f"diversity={report.diversity_logdet:.4f}")

    if args.out:
        payload = (reports[0][1].to_dict() if len(reports) == 1
                   else {name: r.to_dict() for name, r in reports})
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    if args.csv:
        import csv as _csv
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            writer = _csv.writer(fh)
            writer.writerow(["dataset", "metric", "value"])
            for name, report in reports:
                for metric, value in report.metric_rows():
                    writer.writerow([name, metric, repr(value)])
    if args.accuracy:
        accuracies = read_accuracy_csv(args.accuracy)
        joined = [name for name, _ in reports if name in accuracies]
        if len(joined) < 3:
            print(f"accuracy join: {len(joined)} dataset(s) matched; "
                  "need >= 3 for correlations, skipping")
        else:
            correlations = correlate_metrics(reports, accuracies)
            for metric, r in correlations.items():
                print(f"pearson r({metric}, accuracy) = {r:+.4f}")
            if args.out:
                with open(args.out, "r", encoding="utf-8") as fh:
                    payload = json.load(fh)
                payload["correlations"] = correlations
                with open(args.out, "w", encoding="utf-8") as fh:
                    json.dump(payload, fh, indent=2)
    return 0


def cmd_export_frames(args) -> int:
    from PIL import Image

    video = read_video(args.file)
    os.makedirs(args.out, exist_ok=True)
    step = max(1, args.every)
    for t in range(0, len(video), step):
        Image.fromarray(video.frames[t]).save(os.path.join(args.out, f"{t:05d}.png"))
    print(f"exported {len(range(0, len(video), step))} frames to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="synthvid",
                                     description="procedural video datasets")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a fixed-size dataset + manifest")
    _add_config_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--count", type=int, default=None,
                   help="video count (default: config dataset_size or 9537 for textured levels)")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel workers (capped by SYNTHVID_THREADS)")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("inspect", help="print a video file's header and checksums")
    p.add_argument("file")
    p.add_argument("--frames", action="store_true", help="also print per-frame checksums")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("hash", help="print the canonical config hash")
    _add_config_args(p)
    p.set_defaults(func=cmd_hash)

    p = sub.add_parser("config", help="print the resolved config JSON")
    _add_config_args(p)
    p.set_defaults(func=cmd_show_config)

    p = sub.add_parser("serve", help="stream videos over TCP")
    _add_config_args(p)
    p.add_argument("--bind", default="0.0.0.0:7447", help="host:port to listen on")
    p.add_argument("--max-batch", type=int, default=8,
                   help="largest GET count served per request")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("stats", help="analyze dataset statistics")
    p.add_argument("--dataset", action="append", required=True,
                   help="dataset directory (repeatable)")
    p.add_argument("--reference", help="reference dataset directory for distances")
    p.add_argument("--features", help=".sfea feature file for this dataset")
    p.add_argument("--ref-features", help=".sfea feature file for the reference")
    p.add_argument("--accuracy", help="CSV (dataset,accuracy) for correlation")
    p.add_argument("--out", help="write report JSON here")
    p.add_argument("--csv", help="write flat metric CSV here")
    p.add_argument("--frame-sample", type=int, default=10000)
    p.add_argument("--video-sample", type=int, default=1000)
    p.add_argument("--frames-per-video", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-small", action="store_true",
                   help="permit datasets smaller than the sample sizes")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export-frames", help="dump frames of a .svid file as PNGs")
    p.add_argument("file")
    p.add_argument("--out", required=True)
    p.add_argument("--every", type=int, default=1, help="export every k-th frame")
    p.set_defaults(func=cmd_export_frames)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
