"""Appearance sources: image pools, texture-video pools, crops, mixtures.

Pool layout on disk (documented in the README): static pools are flat
directories of .png/.ppm images; texture-video pools are directories of
subdirectories, each holding numerically named frame images. Entries are
addressed by lexicographically sorted identifier, which is the canonical
index order everywhere.
"""

from __future__ import annotations

import os
import re
import threading
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .config import GeneratorConfig
from .geometry import ShapeGeometry
from .rng import RngStream
from .video import VideoTensor

IMAGE_EXTS = (".png", ".ppm")

STATIC_IMAGES = "static_images"
TEXTURE_VIDEOS = "texture_videos"

_FRAME_NAME = re.compile(r"^(\d+)\.(png|ppm)$")


class PoolError(Exception):
    pass


class PoolEmpty(PoolError):
    pass


class PathUnreadable(PoolError):
    pass


class MissingFrames(PoolError):
    pass


@dataclass(eq=False)
class TexturePool:
    root: str
    kind: str
    entries: list[str]
    skipped: int = 0
    _frames: dict = field(default_factory=dict, repr=False)  # entry -> frame paths
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __len__(self) -> int:
        return len(self.entries)

    def image(self, entry: str) -> np.ndarray:
        """Decoded RGB array for a static entry, LRU-cached."""
        return self._load(os.path.join(self.root, entry))

    def frame_paths(self, entry: str) -> list[str]:
        paths = self._frames.get(entry)
        if not paths:
            raise MissingFrames(f"entry {entry!r} has no frames")
        return paths

    def video_frame(self, entry: str, t: int) -> np.ndarray:
        """Frame min(t, last) of a texture-video entry."""
        paths = self.frame_paths(entry)
        return self._load(paths[min(t, len(paths) - 1)])

    def _load(self, path: str) -> np.ndarray:
        with self._lock:
            hit = self._cache.pop(path, None)
            if hit is not None:
                self._cache[path] = hit  # refresh LRU order
                return hit
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
        with self._lock:
            self._cache[path] = arr
            while len(self._cache) > 256:
                self._cache.pop(next(iter(self._cache)))
        return arr


def _readable_image(path: str) -> bool:
    try:
        with Image.open(path) as im:
            im.verify()
        return True
    except Exception:
        return False


def load_pool(path: str, kind: str | None = None, entry_cap: int | None = None) -> TexturePool:
    """Enumerate a pool directory; entries sorted, unreadable items skipped."""
    if not os.path.isdir(path):
        raise PathUnreadable(f"pool path {path!r} is not a readable directory")
    names = sorted(os.listdir(path))
    files = [n for n in names if os.path.isfile(os.path.join(path, n))
             and n.lower().endswith(IMAGE_EXTS)]
    dirs = [n for n in names if os.path.isdir(os.path.join(path, n))]
    if kind is None:
        kind = STATIC_IMAGES if files else TEXTURE_VIDEOS

    skipped = 0
    entries: list[str] = []
    frames: dict[str, list[str]] = {}
    if kind == STATIC_IMAGES:
        for name in files:
            if _readable_image(os.path.join(path, name)):
                entries.append(name)
            else:
                skipped += 1
    elif kind == TEXTURE_VIDEOS:
        for name in dirs:
            sub = os.path.join(path, name)
            frame_files = sorted(
                (m.group(0) for m in map(_FRAME_NAME.match, sorted(os.listdir(sub))) if m),
                key=lambda f: int(f.split(".")[0]),
            )
            if frame_files:
                entries.append(name)
                frames[name] = [os.path.join(sub, f) for f in frame_files]
            else:
                skipped += 1
    else:
        raise ValueError(f"unknown pool kind {kind!r}")

    if entry_cap is not None:
        entries = entries[:entry_cap]
        frames = {e: frames[e] for e in entries if e in frames}
    if not entries:
        raise PoolEmpty(f"pool {path!r} has no usable {kind} entries")
    return TexturePool(root=path, kind=kind, entries=entries, skipped=skipped, _frames=frames)


def mirror_indices(n: int, length: int) -> np.ndarray:
    """Reflect 0..n-1 into [0, length): 0,1,..,L-1,L-1,..,1,0,0,1,..."""
    idx = np.arange(n) % (2 * length)
    return np.where(idx >= length, 2 * length - 1 - idx, idx)


def mirror_tile(img: np.ndarray, min_h: int, min_w: int) -> np.ndarray:
    """Mirror-tile img up to at least (min_h, min_w); identity when large enough."""
    h, w = img.shape[:2]
    if h >= min_h and w >= min_w:
        return img
    rows = mirror_indices(max(h, min_h), h)
    cols = mirror_indices(max(w, min_w), w)
    return img[np.ix_(rows, cols)]


def patch_size_for(geometry: ShapeGeometry) -> tuple[int, int]:
    """(height, width) of the crop window covering the shape's local bbox."""
    x0, y0, x1, y1 = geometry.local_bbox()
    return (max(1, int(np.ceil(y1 - y0))), max(1, int(np.ceil(x1 - x0))))


def _draw_window(pool: TexturePool, rng: RngStream, geometry: ShapeGeometry,
                 frame0: np.ndarray) -> tuple[int, int, int, int]:
    bh, bw = patch_size_for(geometry)
    th, tw = max(frame0.shape[0], bh), max(frame0.shape[1], bw)
    x0 = rng.randint(tw - bw + 1)
    y0 = rng.randint(th - bh + 1)
    return (x0, y0, bw, bh)


def crop_window(img: np.ndarray, window: tuple[int, int, int, int]) -> np.ndarray:
    x0, y0, w, h = window
    tiled = mirror_tile(img, y0 + h, x0 + w)
    return tiled[y0:y0 + h, x0:x0 + w]


def sample_crop(pool: TexturePool, rng: RngStream, geometry: ShapeGeometry) -> np.ndarray:
    """Random crop matching the geometry's bbox from a random pool entry.

    Draw order: entry index, window x, window y. Images smaller than the
    window are mirror-tiled before cropping.
    """
    if pool.kind != STATIC_IMAGES:
        raise ValueError("sample_crop needs a static-image pool")
    entry = pool.entries[rng.randint(len(pool.entries))]
    img = pool.image(entry)
    return crop_window(img, _draw_window(pool, rng, geometry, img))


def sample_dynamic_window(pool: TexturePool, rng: RngStream,
                          geometry: ShapeGeometry) -> tuple[str, tuple[int, int, int, int]]:
    """Entry plus a fixed crop window for a texture-video appearance.

    The window stays constant across frames; only the underlying frame
    content changes with t.
    """
    if pool.kind != TEXTURE_VIDEOS:
        raise ValueError("sample_dynamic_window needs a texture-video pool")
    entry = pool.entries[rng.randint(len(pool.entries))]
    frame0 = pool.video_frame(entry, 0)
    return entry, _draw_window(pool, rng, geometry, frame0)


def dynamic_patch(pool: TexturePool, entry: str, window: tuple[int, int, int, int],
                  t: int) -> np.ndarray:
    """Patch for frame t: same window, frame content clamped to the last frame."""
    return crop_window(pool.video_frame(entry, t), window)


def resize_nearest(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbor resize via index arithmetic (bit-deterministic)."""
    h, w = img.shape[:2]
    rows = np.minimum((np.arange(out_h) + 0.5) * (h / out_h), h - 1).astype(np.int64)
    cols = np.minimum((np.arange(out_w) + 0.5) * (w / out_w), w - 1).astype(np.int64)
    return img[np.ix_(rows, cols)]


def static_video_from_image(image: np.ndarray, t_frames: int, size: tuple[int, int],
                            fps: int, seed: int = 0) -> VideoTensor:
    """T identical frames of the image resized to (height, width)."""
    if t_frames < 1:
        raise ValueError(f"t_frames must be >= 1, got {t_frames}")
    h, w = size
    frame = resize_nearest(np.asarray(image, dtype=np.uint8), h, w)
    frames = np.repeat(frame[None, :, :, :], t_frames, axis=0)
    return VideoTensor(frames=frames, fps=fps, seed=seed)


def compose_mixture(mixture, rng: RngStream):
    """Pick one mixture component by cumulative-ratio bucket of a single draw."""
    u = rng.unit()
    acc = 0.0
    for comp in mixture:
        acc += comp.ratio
        if u < acc:
            return comp
    return mixture[-1]


_pool_registry: dict[tuple, TexturePool] = {}
_registry_lock = threading.Lock()


def get_pool(path: str, kind: str | None = None, entry_cap: int | None = None) -> TexturePool:
    """Process-wide pool cache; pools are immutable after load and shared."""
    key = (os.path.abspath(path), kind, entry_cap)
    with _registry_lock:
        pool = _pool_registry.get(key)
    if pool is None:
        pool = load_pool(path, kind=kind, entry_cap=entry_cap)
        with _registry_lock:
            pool = _pool_registry.setdefault(key, pool)
    return pool


class PoolSet:
    """Lazy resolver for every pool a config can reference."""

    def __init__(self, cfg: GeneratorConfig):
        self.cfg = cfg

    def texture_pool(self) -> TexturePool:
        src = self.cfg.texture_source
        if src.kind == "static_pool":
            return get_pool(src.path, STATIC_IMAGES, self.cfg.pool_entry_cap)
        if src.kind == "dynamic_pool":
            return get_pool(src.path, TEXTURE_VIDEOS, self.cfg.pool_entry_cap)
        raise PoolEmpty("config has no texture pool (solid_color source)")

    def background_pool(self) -> TexturePool:
        src = self.cfg.texture_source
        if src.kind != "static_pool":
            raise PoolEmpty("pool_image background requires a static_pool texture source")
        return get_pool(src.path, STATIC_IMAGES, self.cfg.pool_entry_cap)

    def image_pool(self, path: str) -> TexturePool:
        return get_pool(path, STATIC_IMAGES, self.cfg.pool_entry_cap)
