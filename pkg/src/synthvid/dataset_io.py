"""Dataset persistence and the index-addressed generation pipeline.

Video container (.svid): a fixed 29-byte little-endian header
    magic "SVID" | u16 version | u32 H | u32 W | u32 T | u16 fps
    | u8 dtype (0 = uint8) | u64 seed
followed by T*H*W*3 raw payload bytes. Raw frames, no codec: compression
artifacts would contaminate the spectrum and color analyses and break
bit-exactness across the disk / on-the-fly / server routes.

Video k of a dataset is a pure function of (config, k): all three routes
share synthesize_video and therefore agree byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import textures
from .config import GeneratorConfig, config_hash, validate_config
from .raster import render_video
from .rng import MIXTURE_STREAM, SCENE_STREAM, derive_video_seed, video_stream
from .scene import sample_scene
from .textures import PoolSet, compose_mixture, static_video_from_image
from .video import VideoTensor

MAGIC = b"SVID"
VERSION = 1
_HEADER = struct.Struct("<4sHIIIHBQ")
HEADER_SIZE = _HEADER.size  # 29 bytes

TEXTURED_DATASET_SIZE = 9537  # default fixed size for texture/crop datasets

TOOL_VERSION = "synthvid-0.1.0"

MANIFEST_NAME = "manifest.json"


class VideoFileError(Exception):
    pass


class BadMagic(VideoFileError):
    pass


class TruncatedPayload(VideoFileError):
    pass


class ManifestMismatch(Exception):
    """Output directory was generated from a different config."""


def video_file_bytes(video: VideoTensor) -> bytes:
    t, h, w, _ = video.frames.shape
    header = _HEADER.pack(MAGIC, VERSION, h, w, t, video.fps, 0, video.seed)
    return header + video.frames.tobytes()


def parse_video_bytes(buf: bytes) -> VideoTensor:
    if len(buf) < HEADER_SIZE:
        raise TruncatedPayload(f"{len(buf)} bytes is shorter than the {HEADER_SIZE}-byte header")
    magic, version, h, w, t, fps, dtype, seed = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}")
    if version != VERSION:
        raise BadMagic(f"unsupported version {version}")
    if dtype != 0:
        raise BadMagic(f"unsupported dtype code {dtype}")
    expected = t * h * w * 3
    payload = buf[HEADER_SIZE:]
    if len(payload) != expected:
        raise TruncatedPayload(f"payload is {len(payload)} bytes, header promises {expected}")
    frames = np.frombuffer(payload, dtype=np.uint8).reshape(t, h, w, 3).copy()
    return VideoTensor(frames=frames, fps=fps, seed=seed)


def write_video(video: VideoTensor, path: str) -> None:
    """Atomic write: temp file in the same directory, then rename."""
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        fh.write(video_file_bytes(video))
    os.replace(tmp, path)


def read_video(path: str) -> VideoTensor:
    with open(path, "rb") as fh:
        return parse_video_bytes(fh.read())


def read_header(path: str) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
    if len(head) < HEADER_SIZE:
        raise TruncatedPayload(f"{path}: file shorter than header")
    magic, version, h, w, t, fps, dtype, seed = _HEADER.unpack(head)
    if magic != MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise BadMagic(f"{path}: unsupported version {version}")
    return {"height": h, "width": w, "frames": t, "fps": fps, "dtype": dtype,
            "seed": seed, "payload_bytes": t * h * w * 3}


def synthesize_video(cfg: GeneratorConfig, index: int,
                     pools: PoolSet | None = None) -> VideoTensor:
    """Video `index` of the dataset described by cfg; pure and index-addressed."""
    seed = derive_video_seed(cfg.global_seed, index)
    if pools is None:
        pools = PoolSet(cfg)
    mix_rng = video_stream(cfg.global_seed, index, MIXTURE_STREAM)
    if len(cfg.mixture) > 1:
        comp = compose_mixture(cfg.mixture, mix_rng)
    else:
        comp = cfg.mixture[0]
    if comp.kind == "generator":
        rng = video_stream(cfg.global_seed, index, SCENE_STREAM)
        return render_video(sample_scene(cfg, rng, pools, seed=seed))
    if comp.kind == "static_images":
        pool = pools.image_pool(comp.path)
        entry = pool.entries[mix_rng.randint(len(pool.entries))]
        duration = mix_rng.randint_range(*cfg.duration_range)
        return static_video_from_image(pool.image(entry), duration,
                                       (cfg.height, cfg.width), cfg.fps, seed=seed)
    if comp.kind == "real_videos":
        names = sorted(n for n in os.listdir(comp.path) if n.endswith(".svid"))
        if not names:
            raise textures.PoolEmpty(f"no .svid files under {comp.path!r}")
        return read_video(os.path.join(comp.path, names[mix_rng.randint(len(names))]))
    raise ValueError(f"unknown mixture kind {comp.kind!r}")


@dataclass
class Manifest:
    config_hash: str
    global_seed: int
    video_count: int
    tool_version: str
    videos: list[dict]  # {"filename", "seed", "frames"}

    def to_dict(self) -> dict:
        return {
            "config_hash": self.config_hash,
            "global_seed": self.global_seed,
            "video_count": self.video_count,
            "tool_version": self.tool_version,
            "videos": self.videos,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Manifest":
        return cls(
            config_hash=data["config_hash"],
            global_seed=data["global_seed"],
            video_count=data["video_count"],
            tool_version=data["tool_version"],
            videos=list(data["videos"]),
        )


def load_manifest(out_dir: str) -> Manifest | None:
    path = os.path.join(out_dir, MANIFEST_NAME)
    if not os.path.exists(path):
        return None
    with open(path, "r", encoding="utf-8") as fh:
        return Manifest.from_dict(json.load(fh))


def _video_filename(index: int) -> str:
    return f"{index:06d}.svid"


def _existing_valid(path: str, expected_seed: int) -> bool:
    try:
        head = read_header(path)
    except (VideoFileError, OSError):
        return False
    if head["seed"] != expected_seed:
        return False
    return os.path.getsize(path) == HEADER_SIZE + head["payload_bytes"]


def default_dataset_size(cfg: GeneratorConfig) -> int | None:
    if cfg.dataset_size is not None:
        return cfg.dataset_size
    uses_textures = cfg.level.has_textures and cfg.texture_source.kind != "solid_color"
    return TEXTURED_DATASET_SIZE if uses_textures else None


def resolve_workers(requested: int | None = None) -> int:
    workers = requested if requested is not None else 1
    cap = os.environ.get("SYNTHVID_THREADS")
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, workers)


def _generate_one(cfg: GeneratorConfig, out_dir: str, index: int) -> str:
    name = _video_filename(index)
    write_video(synthesize_video(cfg, index), os.path.join(out_dir, name))
    return name


@dataclass
class GenerateResult:
    manifest: Manifest
    new_files: list[str]
    skipped: int


def generate_dataset(cfg: GeneratorConfig, out_dir: str, count: int | None = None,
                     workers: int | None = None) -> GenerateResult:
    """Write videos 0..N-1 plus a manifest; resumable and deterministic.

    Existing valid files are skipped. The manifest lands only after every
    video is on disk, so a failed run is recognizable by its absence.
    """
    validate_config(cfg)
    if count is None:
        count = default_dataset_size(cfg)
    if count is None:
        raise ValueError("count required: config is on-the-fly with no default size")

    os.makedirs(out_dir, exist_ok=True)
    chash = config_hash(cfg)
    previous = load_manifest(out_dir)
    if previous is not None and previous.config_hash != chash:
        raise ManifestMismatch(
            f"{out_dir} was generated with config {previous.config_hash[:12]}..., "
            f"current config is {chash[:12]}...")

    seeds = [derive_video_seed(cfg.global_seed, k) for k in range(count)]
    todo = []
    for k in range(count):
        if not _existing_valid(os.path.join(out_dir, _video_filename(k)), seeds[k]):
            todo.append(k)

    workers = resolve_workers(workers)
    new_files: list[str] = []
    if todo:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                new_files = list(pool.map(_generate_one, [cfg] * len(todo),
                                          [out_dir] * len(todo), todo, chunksize=1))
        else:
            pools = PoolSet(cfg)
            for k in todo:
                name = _video_filename(k)
                write_video(synthesize_video(cfg, k, pools), os.path.join(out_dir, name))
                new_files.append(name)

    videos = []
    for k in range(count):
        head = read_header(os.path.join(out_dir, _video_filename(k)))
        videos.append({"filename": _video_filename(k), "seed": seeds[k],
                       "frames": head["frames"]})
    manifest = Manifest(config_hash=chash, global_seed=cfg.global_seed,
                        video_count=count, tool_version=TOOL_VERSION, videos=videos)
    tmp = os.path.join(out_dir, MANIFEST_NAME + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest.to_dict(), fh, indent=2)
    os.replace(tmp, os.path.join(out_dir, MANIFEST_NAME))
    return GenerateResult(manifest=manifest, new_files=new_files, skipped=count - len(todo))


def on_the_fly_iterator(cfg: GeneratorConfig, start_index: int = 0):
    """Unbounded deterministic stream of videos; video k matches disk video k."""
    validate_config(cfg)
    if start_index < 0:
        raise ValueError(f"start_index must be >= 0, got {start_index}")
    pools = PoolSet(cfg)
    k = start_index
    while True:
        yield synthesize_video(cfg, k, pools)
        k += 1


def payload_checksum(video: VideoTensor) -> str:
    return hashlib.sha256(video.frames.tobytes()).hexdigest()


def inspect_video(path: str) -> dict:
    """Header fields plus whole-payload and per-frame sha256 checksums."""
    video = read_video(path)
    head = read_header(path)
    head["payload_sha256"] = payload_checksum(video)
    head["frame_sha256"] = [hashlib.sha256(f.tobytes()).hexdigest() for f in video.frames]
    return head
