#!/usr/bin/env python3
"""Build a synthetic texture pool directory for the textured levels.

Static pools are flat directories of PNGs; dynamic pools are directories of
subdirectories holding numerically named frames. The patterns here (two-tone
blocks/stripes/checkers and tinted multiscale noise) are deliberately cheap
stand-ins: point the generator at any directory of real texture images for
full-scale runs.

Usage:
    python scripts/make_texture_pool.py --out pools/static --count 256
    python scripts/make_texture_pool.py --out pools/dynamic --count 32 \
        --videos --frames 24
"""

import argparse
import os

import numpy as np
from PIL import Image


def two_tone(rs, h, w):
    c1 = rs.randint(0, 256, 3)
    c2 = rs.randint(0, 256, 3)
    kind = rs.randint(3)
    if kind == 0:
        scale = rs.choice([2, 3, 4, 6, 8, 12])
        mask = rs.rand(h // scale + 1, w // scale + 1) > 0.5
        mask = np.kron(mask, np.ones((scale, scale), bool))[:h, :w]
    elif kind == 1:
        period = rs.randint(4, 20)
        ang = rs.uniform(0, np.pi)
        yy, xx = np.mgrid[0:h, 0:w]
        phase = rs.uniform(0, 2 * np.pi)
        mask = np.sin(2 * np.pi * (np.cos(ang) * xx + np.sin(ang) * yy) / period + phase) > 0
    else:
        s = rs.randint(3, 16)
        yy, xx = np.mgrid[0:h, 0:w]
        mask = ((xx // s + yy // s) % 2).astype(bool)
    return np.where(mask[:, :, None], c1[None, None, :], c2[None, None, :]).astype(np.uint8)


def tinted_noise(rs, h, w):
    tint = rs.randint(40, 256, 3).astype(float)
    acc = np.zeros((h, w))
    for scale in (1, 2, 4, 8, 16):
        layer = rs.standard_normal((h // scale + 1, w // scale + 1))
        acc += scale * np.kron(layer, np.ones((scale, scale)))[:h, :w]
    acc = (acc - acc.mean()) / (acc.std() + 1e-9)
    shade = 1.0 + rs.uniform(0.15, 0.5) * acc
    return np.clip(tint[None, None, :] * shade[:, :, None], 0, 255).astype(np.uint8)


def texture(rs, h, w):
    return two_tone(rs, h, w) if rs.rand() < 0.5 else tinted_noise(rs, h, w)


def texture_video(rs, h, w, frames):
    """Smoothly evolving texture: crossfade between two keyframes."""
    a = texture(rs, h, w).astype(float)
    b = texture(rs, h, w).astype(float)
    out = []
    for t in range(frames):
        alpha = t / max(frames - 1, 1)
        out.append(np.clip((1 - alpha) * a + alpha * b, 0, 255).astype(np.uint8))
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True)
    parser.add_argument("--count", type=int, default=256)
    parser.add_argument("--size", type=int, default=96)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--videos", action="store_true",
                        help="build a texture-video pool instead of static images")
    parser.add_argument("--frames", type=int, default=16, help="frames per texture video")
    args = parser.parse_args()

    rs = np.random.RandomState(args.seed)
    os.makedirs(args.out, exist_ok=True)
    for i in range(args.count):
        if args.videos:
            sub = os.path.join(args.out, f"tex_{i:05d}")
            os.makedirs(sub, exist_ok=True)
            for t, frame in enumerate(texture_video(rs, args.size, args.size, args.frames)):
                Image.fromarray(frame).save(os.path.join(sub, f"{t}.png"))
        else:
            Image.fromarray(texture(rs, args.size, args.size)).save(
                os.path.join(args.out, f"tex_{i:05d}.png"))
    kind = "texture videos" if args.videos else "images"
    print(f"wrote {args.count} {kind} to {args.out}")


if __name__ == "__main__":
    main()
