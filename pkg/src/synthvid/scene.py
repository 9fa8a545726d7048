"""Initial-scene sampling: one call turns (config, stream) into a SceneSpec.

Draw order is part of the determinism contract. Per scene: duration,
background, object count; then per object: shape kind, geometry, position,
appearance, kinematics. Parameters gated off by the progression level are
never drawn.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geometry as geom
from . import textures
from .config import Background, GeneratorConfig, Level
from .geometry import ShapeGeometry
from .rng import RngStream

MAX_GEOMETRY_RETRIES = 16

SOLID = "solid"
STATIC_TEXTURE = "static_texture"
DYNAMIC_TEXTURE = "dynamic_texture"


@dataclass(eq=False)
class Appearance:
    """What fills a shape: a solid color or a texture patch.

    Texture patches are anchored at the shape's local bbox origin so the
    pattern rides rigidly with the shape under all transforms. Dynamic
    appearances keep (pool, entry, window) and crop per frame; `offset` is
    the per-object saturation color, already baked into static patches.
    """

    kind: str
    color: tuple[int, int, int] | None = None
    patch: np.ndarray | None = None
    anchor: tuple[float, float] = (0.0, 0.0)
    pool_path: str | None = None
    entry: str | None = None
    window: tuple[int, int, int, int] | None = None
    offset: tuple[int, int, int] | None = None


@dataclass(eq=False)
class ObjectState:
    """One shape's geometry, appearance, and kinematic state at some frame."""

    geometry: ShapeGeometry
    appearance: Appearance
    depth: int
    position: np.ndarray  # (2,) canvas coords of the shape centroid
    direction: float
    speed: float
    accel: float
    rotation_rate: float
    scale_rate: tuple[float, float]
    shear_rate: tuple[float, float]
    transform: np.ndarray = field(default_factory=lambda: np.eye(2, 3))
    # accumulated per-frame increments about the centroid, 2x3 affine


@dataclass(eq=False)
class SceneSpec:
    objects: list[ObjectState]
    background: object  # (r, g, b) tuple or HxWx3 uint8 image
    duration: int
    canvas: tuple[int, int]  # (width, height)
    fps: int
    seed: int = 0
    level: Level = Level.ACCELERATING_SHAPES


def sample_radius(rng: RngStream, mean_radius: float,
                  bounds: tuple[float, float] | None = None) -> float:
    """Exponentially distributed size: -mean * ln(u), clamped to bounds."""
    r = rng.exponential(mean_radius)
    if bounds is not None:
        r = min(max(r, bounds[0]), bounds[1])
    return r


def _sample_polygon(rng: RngStream, kind: str, bound_radius: float) -> ShapeGeometry:
    k = 3 if kind == geom.TRIANGLE else 4
    for _ in range(MAX_GEOMETRY_RETRIES):
        verts = np.empty((k, 2))
        for i in range(k):
            r = bound_radius * math.sqrt(rng.unit())  # uniform over the disk
            theta = rng.uniform(-math.pi, math.pi)
            verts[i] = (r * math.cos(theta), r * math.sin(theta))
        if geom.polygon_area(verts) >= geom.MIN_POLYGON_AREA:
            return geom.polygon(kind, verts)
    return geom.regular_polygon(kind, bound_radius)


def sample_geometry(rng: RngStream, cfg: GeneratorConfig, kind: str) -> ShapeGeometry:
    """Circle radius, or polygon vertices inside a bounding circle whose
    radius follows the same exponential law."""
    r = sample_radius(rng, cfg.mean_radius, cfg.radius_bounds())
    if kind == geom.CIRCLE:
        return geom.circle(r)
    return _sample_polygon(rng, kind, r)


@dataclass(frozen=True)
class Kinematics:
    direction: float
    speed: float
    accel: float
    rotation_rate: float
    scale_rate: tuple[float, float]
    shear_rate: tuple[float, float]


def sample_kinematics(rng: RngStream, cfg: GeneratorConfig) -> Kinematics:
    """Per-object motion latents; features above the config level stay zero."""
    lvl = cfg.level
    direction = speed = 0.0
    if lvl.has_motion:
        direction = rng.uniform(-math.pi, math.pi)
        speed = rng.uniform(*cfg.speed_range) * cfg.speed_multiplier
    rotation = sx = sy = hx = hy = 0.0
    if lvl.has_transforms:
        rotation = rng.uniform(*cfg.rotation_range)
        sx = rng.uniform(*cfg.scale_rate_range)
        sy = rng.uniform(*cfg.scale_rate_range)
        hx = rng.uniform(*cfg.shear_rate_range)
        hy = rng.uniform(*cfg.shear_rate_range)
    accel = rng.uniform(*cfg.accel_range) if lvl.has_acceleration else 0.0
    return Kinematics(direction, speed, accel, rotation, (sx, sy), (hx, hy))


def _rgb(rng: RngStream) -> tuple[int, int, int]:
    return (rng.randint(256), rng.randint(256), rng.randint(256))


def _saturate(patch: np.ndarray, offset: tuple[int, int, int]) -> np.ndarray:
    shifted = patch.astype(np.int16) + np.asarray(offset, dtype=np.int16)
    return np.clip(shifted, 0, 255).astype(np.uint8)


def sample_appearance(rng: RngStream, cfg: GeneratorConfig, shape: ShapeGeometry,
                      pools: textures.PoolSet | None) -> Appearance:
    src = cfg.texture_source
    if not cfg.level.has_textures or src.kind == "solid_color":
        return Appearance(kind=SOLID, color=_rgb(rng))

    if pools is None:
        pools = textures.PoolSet(cfg)
    pool = pools.texture_pool()
    x0, y0, _, _ = shape.local_bbox()
    anchor = (x0, y0)
    if src.kind == "static_pool":
        patch = textures.sample_crop(pool, rng, shape)
        offset = _rgb(rng) if src.saturated else None
        if offset is not None:
            patch = _saturate(patch, offset)
        return Appearance(kind=STATIC_TEXTURE, patch=patch, anchor=anchor, offset=offset)

    entry, window = textures.sample_dynamic_window(pool, rng, shape)
    offset = _rgb(rng) if src.saturated else None
    return Appearance(kind=DYNAMIC_TEXTURE, anchor=anchor, pool_path=pool.root,
                      entry=entry, window=window, offset=offset)


def _sample_background(rng: RngStream, cfg: GeneratorConfig,
                       pools: textures.PoolSet | None):
    if cfg.background == Background.BLACK:
        return (0, 0, 0)
    if cfg.background == Background.RANDOM_COLOR:
        return _rgb(rng)
    if pools is None:
        pools = textures.PoolSet(cfg)
    pool = pools.background_pool()
    entry = pool.entries[rng.randint(len(pool.entries))]
    return textures.resize_nearest(pool.image(entry), cfg.height, cfg.width)


def sample_object(rng: RngStream, cfg: GeneratorConfig, depth: int,
                  pools: textures.PoolSet | None) -> ObjectState:
    if cfg.level.has_shape_variety:
        kind = geom.ALL_KINDS[rng.randint(3)]
    else:
        kind = geom.CIRCLE
    shape = sample_geometry(rng, cfg, kind)
    position = np.array([rng.uniform(0.0, cfg.width), rng.uniform(0.0, cfg.height)])
    appearance = sample_appearance(rng, cfg, shape, pools)
    kin = sample_kinematics(rng, cfg)
    return ObjectState(
        geometry=shape,
        appearance=appearance,
        depth=depth,
        position=position,
        direction=kin.direction,
        speed=kin.speed,
        accel=kin.accel,
        rotation_rate=kin.rotation_rate,
        scale_rate=kin.scale_rate,
        shear_rate=kin.shear_rate,
    )


def sample_scene(cfg: GeneratorConfig, rng: RngStream,
                 pools: textures.PoolSet | None = None, seed: int = 0) -> SceneSpec:
    """Sample duration, background, and all objects for one video.

    Depth equals placement order: later objects occlude earlier ones.
    """
    duration = rng.randint_range(*cfg.duration_range)
    background = _sample_background(rng, cfg, pools)
    count = rng.randint_range(*cfg.object_count_range)
    objects = [sample_object(rng, cfg, depth, pools) for depth in range(count)]
    return SceneSpec(
        objects=objects,
        background=background,
        duration=duration,
        canvas=(cfg.width, cfg.height),
        fps=cfg.fps,
        seed=seed,
        level=cfg.level,
    )
