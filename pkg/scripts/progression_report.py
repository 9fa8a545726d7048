#!/usr/bin/env python3
"""Generate desk-scale datasets for the whole level progression and report
their statistics (spectrum exponent, color model, diversity), optionally
correlating each metric against a downstream-accuracy CSV.

Example:
    python scripts/make_texture_pool.py --out /tmp/pool --count 256
    python scripts/progression_report.py --workdir /tmp/progression \
        --pool /tmp/pool --videos 100 --accuracy my_accuracies.csv

The accuracy CSV needs columns `dataset,accuracy` where dataset names match
the level labels (static_circles, moving_circles, ...).
"""

import argparse
import csv
import dataclasses
import json
import os
import sys
import warnings

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from synthvid.config import GeneratorConfig, Level, TextureSource
from synthvid.dataset_io import generate_dataset
from synthvid.stats import (
    AnalysisOptions,
    analyze_dataset,
    correlate_metrics,
    read_accuracy_csv,
)


def level_config(level: Level, pool: str | None, args) -> GeneratorConfig:
    texture = TextureSource.solid()
    if level.has_textures:
        if pool is None:
            raise SystemExit("textured_shapes needs --pool")
        texture = TextureSource.static_pool(pool)
    return dataclasses.replace(
        GeneratorConfig(),
        level=level,
        width=args.resolution,
        height=args.resolution,
        duration_range=(args.min_frames, args.max_frames),
        object_count_range=(5, 15),
        texture_source=texture,
        global_seed=args.seed,
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", required=True)
    parser.add_argument("--pool", help="static texture pool for the textured level")
    parser.add_argument("--videos", type=int, default=100, help="videos per level")
    parser.add_argument("--resolution", type=int, default=128)
    parser.add_argument("--min-frames", type=int, default=16)
    parser.add_argument("--max-frames", type=int, default=24)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--accuracy", help="CSV of dataset,accuracy to correlate against")
    parser.add_argument("--frame-sample", type=int, default=500)
    parser.add_argument("--video-sample", type=int, default=100)
    args = parser.parse_args()

    levels = list(Level)
    if args.pool is None:
        levels = [l for l in levels if not l.has_textures]
        print("no --pool given; skipping textured_shapes")

    options = AnalysisOptions(
        frame_sample=args.frame_sample,
        video_sample=args.video_sample,
        frames_per_video=16,
        seed=args.seed,
        allow_small=True,
    )

    reports = []
    for level in levels:
        cfg = level_config(level, args.pool, args)
        out = os.path.join(args.workdir, level.label)
        print(f"[{level.label}] generating {args.videos} videos -> {out}")
        generate_dataset(cfg, out, count=args.videos)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = analyze_dataset(out, options)
        reports.append((level.label, report))
        print(f"[{level.label}] alpha={report.spectrum_alpha:+.3f} "
              f"diversity={report.diversity_logdet:.1f}")

    csv_path = os.path.join(args.workdir, "progression_metrics.csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "metric", "value"])
        for name, report in reports:
            for metric, value in report.metric_rows():
                writer.writerow([name, metric, repr(value)])
    print(f"metrics -> {csv_path}")

    payload = {name: report.to_dict() for name, report in reports}
    if args.accuracy:
        correlations = correlate_metrics(reports, read_accuracy_csv(args.accuracy))
        payload["correlations"] = correlations
        for metric, r in correlations.items():
            print(f"pearson r({metric}, accuracy) = {r:+.3f}")

    json_path = os.path.join(args.workdir, "progression_report.json")
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2)
    print(f"report -> {json_path}")


if __name__ == "__main__":
    main()
