"""Parsers for the .svid container and the dataset manifest.

Container layout (little-endian):
    "SVID" | u16 version | u32 H | u32 W | u32 T | u16 fps | u8 dtype | u64 seed
followed by T*H*W*3 raw uint8 RGB bytes.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"SVID"
VERSION = 1
_HEADER = struct.Struct("<4sHIIIHBQ")
HEADER_SIZE = _HEADER.size


class VideoFormatError(ValueError):
    pass


@dataclass
class Video:
    """One decoded video: raw frames plus its provenance seed."""

    frames: np.ndarray  # (T, H, W, 3) uint8
    fps: int
    seed: int
    index: int | None = None

    @property
    def shape(self):
        return self.frames.shape


def parse_video_bytes(buf: bytes, index: int | None = None) -> Video:
    if len(buf) < HEADER_SIZE:
        raise VideoFormatError(f"{len(buf)} bytes is shorter than the header")
    magic, version, h, w, t, fps, dtype, seed = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise VideoFormatError(f"bad magic {magic!r}")
    if version != VERSION or dtype != 0:
        raise VideoFormatError(f"unsupported version/dtype {version}/{dtype}")
    payload = buf[HEADER_SIZE:]
    if len(payload) != t * h * w * 3:
        raise VideoFormatError(f"payload {len(payload)} bytes, expected {t * h * w * 3}")
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(t, h, w, 3)
    return Video(frames=frames, fps=fps, seed=seed, index=index)


def read_video_file(path: str, index: int | None = None) -> Video:
    with open(path, "rb") as fh:
        return parse_video_bytes(fh.read(), index=index)


def load_manifest(dataset_dir: str) -> dict:
    with open(os.path.join(dataset_dir, "manifest.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)


class DiskDataset:
    """Random access over a generated dataset directory (manifest optional)."""

    def __init__(self, root: str):
        self.root = root
        try:
            self.manifest = load_manifest(root)
            names = [v["filename"] for v in self.manifest["videos"]]
        except FileNotFoundError:
            self.manifest = None
            names = sorted(n for n in os.listdir(root) if n.endswith(".svid"))
        self._names = names

    def __len__(self) -> int:
        return len(self._names)

    def __getitem__(self, index: int) -> Video:
        return read_video_file(os.path.join(self.root, self._names[index]), index=index)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]
