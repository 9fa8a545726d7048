"""The frame-block unit shared by generation, storage, and streaming."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class VideoTensor:
    """T x H x W x 3 uint8 RGB frames plus fps and provenance seed."""

    frames: np.ndarray
    fps: int
    seed: int = 0

    def __post_init__(self):
        f = self.frames
        if f.ndim != 4 or f.shape[3] != 3:
            raise ValueError(f"frames must be (T, H, W, 3), got {f.shape}")
        if f.dtype != np.uint8:
            raise ValueError(f"frames must be uint8, got {f.dtype}")
        if 0 in f.shape[:3]:
            raise ValueError(f"T, H, W must all be positive, got {f.shape}")

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.frames.shape

    def __len__(self) -> int:
        return self.frames.shape[0]
