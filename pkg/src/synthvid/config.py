"""Dataset recipes: one GeneratorConfig fully describes one dataset.

The flat JSON form (see docs/config_schema.json) is the on-disk and on-wire
config format; `config_hash` over its canonical serialization is how the
manifest and the streaming server detect drift.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any

LEVEL_NAMES = (
    "static_circles",
    "moving_circles",
    "moving_shapes",
    "transforming_shapes",
    "accelerating_shapes",
    "textured_shapes",
)


class Level(IntEnum):
    """Progression levels; each adds one property on top of the previous."""

    STATIC_CIRCLES = 0
    MOVING_CIRCLES = 1
    MOVING_SHAPES = 2
    TRANSFORMING_SHAPES = 3
    ACCELERATING_SHAPES = 4
    TEXTURED_SHAPES = 5

    @property
    def has_motion(self) -> bool:
        return self >= Level.MOVING_CIRCLES

    @property
    def has_shape_variety(self) -> bool:
        return self >= Level.MOVING_SHAPES

    @property
    def has_transforms(self) -> bool:
        return self >= Level.TRANSFORMING_SHAPES

    @property
    def has_acceleration(self) -> bool:
        return self >= Level.ACCELERATING_SHAPES

    @property
    def has_textures(self) -> bool:
        return self >= Level.TEXTURED_SHAPES

    @property
    def label(self) -> str:
        return LEVEL_NAMES[int(self)]

    @classmethod
    def from_label(cls, name: str) -> "Level":
        try:
            return cls(LEVEL_NAMES.index(name))
        except ValueError:
            raise ValueError(f"unknown level {name!r}; expected one of {LEVEL_NAMES}") from None


class Background(IntEnum):
    BLACK = 0
    RANDOM_COLOR = 1
    POOL_IMAGE = 2

    @property
    def label(self) -> str:
        return ("black", "random_color", "pool_image")[int(self)]

    @classmethod
    def from_label(cls, name: str) -> "Background":
        labels = ("black", "random_color", "pool_image")
        if name not in labels:
            raise ValueError(f"unknown background {name!r}; expected one of {labels}")
        return cls(labels.index(name))


TEXTURE_KINDS = ("solid_color", "static_pool", "dynamic_pool")


@dataclass(frozen=True)
class TextureSource:
    """Appearance source for shapes at the textured level.

    `saturated` wraps the source with a per-object random color offset added
    to every crop (the saturated-texture dataset variant).
    """

    kind: str = "solid_color"
    path: str | None = None
    saturated: bool = False

    @classmethod
    def solid(cls) -> "TextureSource":
        return cls("solid_color")

    @classmethod
    def static_pool(cls, path: str, saturated: bool = False) -> "TextureSource":
        return cls("static_pool", path, saturated)

    @classmethod
    def dynamic_pool(cls, path: str, saturated: bool = False) -> "TextureSource":
        return cls("dynamic_pool", path, saturated)


MIXTURE_KINDS = ("generator", "static_images", "real_videos")


@dataclass(frozen=True)
class MixtureComponent:
    """One sub-source of a mixed dataset and its sampling ratio."""

    kind: str
    ratio: float
    path: str | None = None


@dataclass(frozen=True)
class GeneratorConfig:
    """Full recipe for one dataset in the progression.

    Defaults: 256x256 at 25 fps,
    duration uniform over [100, 200] frames, speeds in [1.2, 3.0] px/frame,
    acceleration in [-0.06, 0.06] px/frame^2, rotation in [-pi/100, pi/100]
    rad/frame, scale/shear rates in [-0.005, 0.005] per axis per frame.
    Object count and radius-scale defaults are tool choices with no deeper
    significance; both are fully exposed here.
    """

    level: Level = Level.ACCELERATING_SHAPES
    width: int = 256
    height: int = 256
    fps: int = 25
    duration_range: tuple[int, int] = (100, 200)
    object_count_range: tuple[int, int] = (5, 30)
    mean_radius: float = 25.6
    radius_min: float = 4.0
    radius_max: float | None = None  # None -> 0.75 * min(width, height)
    speed_range: tuple[float, float] = (1.2, 3.0)
    speed_multiplier: float = 1.0
    accel_range: tuple[float, float] = (-0.06, 0.06)
    rotation_range: tuple[float, float] = (-math.pi / 100, math.pi / 100)
    scale_rate_range: tuple[float, float] = (-0.005, 0.005)
    shear_rate_range: tuple[float, float] = (-0.005, 0.005)
    background: Background = Background.BLACK
    texture_source: TextureSource = field(default_factory=TextureSource.solid)
    pool_entry_cap: int | None = None  # use only the first N sorted pool entries
    mixture: tuple[MixtureComponent, ...] = (MixtureComponent("generator", 1.0),)
    dataset_size: int | None = None  # None = on-the-fly
    global_seed: int = 0

    def radius_bounds(self) -> tuple[float, float]:
        hi = self.radius_max
        if hi is None:
            hi = 0.75 * min(self.width, self.height)
        return (self.radius_min, hi)

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": self.level.label,
            "width": self.width,
            "height": self.height,
            "fps": self.fps,
            "duration_range": list(self.duration_range),
            "object_count_range": list(self.object_count_range),
            "mean_radius": self.mean_radius,
            "radius_min": self.radius_min,
            "radius_max": self.radius_max,
            "speed_range": list(self.speed_range),
            "speed_multiplier": self.speed_multiplier,
            "accel_range": list(self.accel_range),
            "rotation_range": list(self.rotation_range),
            "scale_rate_range": list(self.scale_rate_range),
            "shear_rate_range": list(self.shear_rate_range),
            "background": self.background.label,
            "texture_kind": self.texture_source.kind,
            "texture_path": self.texture_source.path,
            "texture_saturated": self.texture_source.saturated,
            "pool_entry_cap": self.pool_entry_cap,
            "mixture": [
                {"kind": m.kind, "ratio": m.ratio, "path": m.path} for m in self.mixture
            ],
            "dataset_size": self.dataset_size,
            "global_seed": self.global_seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GeneratorConfig":
        known = set(cls().to_dict())
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")

        def rng2(key, cast):
            if key not in data:
                return None
            lo, hi = data[key]
            return (cast(lo), cast(hi))

        kwargs: dict[str, Any] = {}
        if "level" in data:
            kwargs["level"] = Level.from_label(data["level"])
        for key in ("width", "height", "fps"):
            if key in data:
                kwargs[key] = int(data[key])
        for key, cast in (("duration_range", int), ("object_count_range", int)):
            r = rng2(key, cast)
            if r is not None:
                kwargs[key] = r
        for key in ("mean_radius", "radius_min", "speed_multiplier"):
            if key in data:
                kwargs[key] = float(data[key])
        if "radius_max" in data:
            kwargs["radius_max"] = None if data["radius_max"] is None else float(data["radius_max"])
        for key in ("speed_range", "accel_range", "rotation_range",
                    "scale_rate_range", "shear_rate_range"):
            r = rng2(key, float)
            if r is not None:
                kwargs[key] = r
        if "background" in data:
            kwargs["background"] = Background.from_label(data["background"])
        if {"texture_kind", "texture_path", "texture_saturated"} & set(data):
            kwargs["texture_source"] = TextureSource(
                kind=data.get("texture_kind", "solid_color"),
                path=data.get("texture_path"),
                saturated=bool(data.get("texture_saturated", False)),
            )
        if "pool_entry_cap" in data:
            kwargs["pool_entry_cap"] = (
                None if data["pool_entry_cap"] is None else int(data["pool_entry_cap"])
            )
        if "mixture" in data:
            kwargs["mixture"] = tuple(
                MixtureComponent(m["kind"], float(m["ratio"]), m.get("path"))
                for m in data["mixture"]
            )
        if "dataset_size" in data:
            kwargs["dataset_size"] = None if data["dataset_size"] is None else int(data["dataset_size"])
        if "global_seed" in data:
            kwargs["global_seed"] = int(data["global_seed"])
        return cls(**kwargs)

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_json(cls, text: str) -> "GeneratorConfig":
        return cls.from_dict(json.loads(text))


class ConfigError(ValueError):
    """Raised by validate_config; carries every violated invariant."""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("invalid config:\n  " + "\n  ".join(violations))


def config_violations(cfg: GeneratorConfig) -> list[str]:
    """All violated invariants, each named with its error class."""
    bad: list[str] = []

    def check_range(name, rng, lo_floor=None):
        lo, hi = rng
        if lo > hi:
            bad.append(f"InvalidRange: {name} lower bound {lo} > upper bound {hi}")
        if lo_floor is not None and lo < lo_floor:
            bad.append(f"InvalidRange: {name} lower bound {lo} < {lo_floor}")

    if cfg.width <= 0 or cfg.height <= 0:
        bad.append(f"InvalidRange: canvas {cfg.width}x{cfg.height} must be positive")
    if cfg.fps <= 0:
        bad.append(f"InvalidRange: fps {cfg.fps} must be positive")
    check_range("duration_range", cfg.duration_range, lo_floor=1)
    check_range("object_count_range", cfg.object_count_range, lo_floor=0)
    check_range("speed_range", cfg.speed_range, lo_floor=0.0)
    check_range("accel_range", cfg.accel_range)
    check_range("rotation_range", cfg.rotation_range)
    check_range("scale_rate_range", cfg.scale_rate_range)
    check_range("shear_rate_range", cfg.shear_rate_range)
    if cfg.mean_radius <= 0:
        bad.append(f"InvalidRange: mean_radius {cfg.mean_radius} must be positive")
    if cfg.speed_multiplier < 0:
        bad.append(f"InvalidRange: speed_multiplier {cfg.speed_multiplier} must be >= 0")
    rmin, rmax = cfg.radius_bounds()
    if rmin <= 0 or rmin > rmax:
        bad.append(f"InvalidRange: radius bounds [{rmin}, {rmax}] must satisfy 0 < min <= max")
    if cfg.dataset_size is not None and cfg.dataset_size <= 0:
        bad.append(f"InvalidRange: dataset_size {cfg.dataset_size} must be positive when fixed")
    if cfg.pool_entry_cap is not None and cfg.pool_entry_cap <= 0:
        bad.append(f"InvalidRange: pool_entry_cap {cfg.pool_entry_cap} must be positive")

    if cfg.texture_source.kind not in TEXTURE_KINDS:
        bad.append(f"InvalidRange: texture kind {cfg.texture_source.kind!r} not in {TEXTURE_KINDS}")
    needs_path = cfg.texture_source.kind in ("static_pool", "dynamic_pool")
    if needs_path and not cfg.texture_source.path:
        bad.append(f"MissingPool: texture kind {cfg.texture_source.kind!r} needs a pool path")
    if cfg.texture_source.path is not None and not os.path.isdir(cfg.texture_source.path):
        bad.append(f"MissingPool: texture pool {cfg.texture_source.path!r} is not a readable directory")
    if cfg.background == Background.POOL_IMAGE and cfg.texture_source.kind != "static_pool":
        bad.append("MissingPool: pool_image background requires a static_pool texture source")

    total = 0.0
    for i, comp in enumerate(cfg.mixture):
        if comp.kind not in MIXTURE_KINDS:
            bad.append(f"InvalidMixture: component {i} kind {comp.kind!r} not in {MIXTURE_KINDS}")
        if comp.ratio < 0:
            bad.append(f"InvalidMixture: component {i} ratio {comp.ratio} < 0")
        total += comp.ratio
        if comp.kind in ("static_images", "real_videos"):
            if not comp.path:
                bad.append(f"InvalidMixture: component {i} ({comp.kind}) needs a path")
            elif not os.path.isdir(comp.path):
                bad.append(f"MissingPool: mixture source {comp.path!r} is not a readable directory")
    if not cfg.mixture:
        bad.append("InvalidMixture: mixture must have at least one component")
    elif abs(total - 1.0) > 1e-9:
        bad.append(f"InvalidMixture: ratios sum to {total!r}, expected 1 within 1e-9")

    return bad


def validate_config(cfg: GeneratorConfig) -> GeneratorConfig:
    """Return cfg unchanged iff every invariant holds; else raise ConfigError."""
    bad = config_violations(cfg)
    if bad:
        raise ConfigError(bad)
    return cfg


def config_hash(cfg: GeneratorConfig) -> str:
    """sha256 over the canonical (sorted, compact) JSON form."""
    canonical = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(path: str, overrides: list[str] | None = None) -> GeneratorConfig:
    """Read a config file and apply `key=value` overrides, unvalidated."""
    with open(path, "r", encoding="utf-8") as fh:
        cfg = GeneratorConfig.from_json(fh.read())
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    return cfg


def apply_overrides(cfg: GeneratorConfig, overrides: list[str]) -> GeneratorConfig:
    """Apply `--set key=value` pairs; values parse as JSON, else raw strings."""
    data = cfg.to_dict()
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in data:
            raise ValueError(f"unknown config key {key!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        data[key] = value
    return GeneratorConfig.from_dict(data)
