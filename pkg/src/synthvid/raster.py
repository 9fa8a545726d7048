"""Software renderer: painter's-algorithm scanline fill of scene states.

Pixels sample at their centers ((col + 0.5, row + 0.5)); membership is a
hard in/out test (no anti-aliasing) so renders are bit-deterministic.
Circle membership is inclusive (<= r); polygon membership is the even-odd
crossing rule with a strict x < crossing comparison. Objects paint in list
order, which sample_scene guarantees is ascending depth -- later shapes
overwrite earlier ones where they overlap.
"""

from __future__ import annotations

import math

import numpy as np

from . import textures
from .motion import step_state
from .scene import DYNAMIC_TEXTURE, SOLID, ObjectState, SceneSpec
from .video import VideoTensor


def mirror_lookup(patch: np.ndarray, iu: np.ndarray, iv: np.ndarray) -> np.ndarray:
    """Texel fetch with mirror tiling outside the patch."""
    ph, pw = patch.shape[:2]
    iu = iu % (2 * pw)
    iu = np.where(iu >= pw, 2 * pw - 1 - iu, iu)
    iv = iv % (2 * ph)
    iv = np.where(iv >= ph, 2 * ph - 1 - iv, iv)
    return patch[iv, iu]


def map_texture(patch: np.ndarray, anchor: tuple[float, float],
                local_x, local_y) -> np.ndarray:
    """RGB at an object-local coordinate: nearest texel, mirror-tiled.

    The anchor is the local-frame position of the patch origin; because the
    lookup happens in local coordinates the pattern translates, rotates,
    scales, and shears rigidly with the shape.
    """
    iu = np.floor(np.asarray(local_x) - anchor[0]).astype(np.int64)
    iv = np.floor(np.asarray(local_y) - anchor[1]).astype(np.int64)
    return mirror_lookup(patch, iu, iv)


_row_cache: dict[int, np.ndarray] = {}


def _row_indices(n: int) -> np.ndarray:
    rows = _row_cache.get(n)
    if rows is None:
        rows = np.arange(n)
        rows.setflags(write=False)
        _row_cache[n] = rows
    return rows


def _circle_spans(radius, inv, shift, ys):
    """Per-row inclusive x-interval of the transformed circle, world coords.

    Circle centroids are (0, 0) by construction, so membership is
    |A (p - shift)|^2 <= r^2, a per-row quadratic in dx.
    """
    a00, a01, a10, a11 = inv
    q00 = a00 * a00 + a10 * a10
    q01 = a00 * a01 + a10 * a11
    q11 = a01 * a01 + a11 * a11
    dy = ys - shift[1]
    b = 2.0 * q01 * dy
    c = q11 * dy * dy - radius * radius
    disc = b * b - 4.0 * q00 * c
    ok = disc >= 0.0
    if ok.all():
        rows = _row_indices(len(ys))
    elif not ok.any():
        return []
    else:
        rows = np.nonzero(ok)[0]
        b = b[rows]
        disc = disc[rows]
    half = 0.5 / q00
    sq = np.sqrt(disc)
    lo = (-b - sq) * half + shift[0]
    hi = (-b + sq) * half + shift[0]
    xl = np.ceil(lo - 0.5).astype(np.int64)
    xr = np.floor(hi - 0.5).astype(np.int64) + 1
    return [(rows, xl, xr)]


def _polygon_spans(verts_world, ys):
    """Per-row half-open x-intervals from even-odd edge crossings."""
    k = len(verts_world)
    cross = np.full((len(ys), k), np.inf)
    counts = np.zeros(len(ys), dtype=np.int8)
    j = k - 1
    for i in range(k):
        xi, yi = verts_world[i]
        xj, yj = verts_world[j]
        j = i
        if yi == yj:
            continue
        hits = (yi > ys) != (yj > ys)
        xc = xi + (ys - yi) * (xj - xi) / (yj - yi)
        cross[:, i] = np.where(hits, xc, np.inf)
        counts += hits
    cross.sort(axis=1)
    spans = []
    for base in (0, 2):
        if base + 1 >= k:
            break
        ok = counts >= base + 2
        if ok.all():
            rows = _row_indices(len(ys))
            sub = cross
        elif not ok.any():
            break
        else:
            rows = np.nonzero(ok)[0]
            sub = cross[rows]
        xl = np.ceil(sub[:, base] - 0.5).astype(np.int64)
        xr = np.ceil(sub[:, base + 1] - 0.5).astype(np.int64)
        spans.append((rows, xl, xr))
    return spans


def _mask_from_spans(spans, h, w, x_origin):
    # at most two spans per row, so int8 cannot overflow
    diff = np.zeros((h, w + 1), dtype=np.int8)
    filled = False
    for rows, xl, xr in spans:
        xl = np.clip(xl - x_origin, 0, w)
        xr = np.clip(xr - x_origin, 0, w)
        sel = xr > xl
        if sel.any():
            filled = True
            diff[rows[sel], xl[sel]] += 1
            diff[rows[sel], xr[sel]] -= 1
    if not filled:
        return None
    return diff.cumsum(axis=1)[:, :-1] > 0


def _saturate(patch: np.ndarray, offset) -> np.ndarray:
    shifted = patch.astype(np.int16) + np.asarray(offset, dtype=np.int16)
    return np.clip(shifted, 0, 255).astype(np.uint8)


def _paint(frame: np.ndarray, state: ObjectState, t: int) -> None:
    height, width = frame.shape[:2]
    m = state.transform
    linear = m[:, :2]
    g = state.geometry
    # world(x) = linear @ x + shift; the centroid lands exactly on position
    shift = m[:, 2] + state.position - g.centroid

    det = linear[0, 0] * linear[1, 1] - linear[0, 1] * linear[1, 0]
    if abs(det) < 1e-12:
        return
    inv = (linear[1, 1] / det, -linear[0, 1] / det,
           -linear[1, 0] / det, linear[0, 0] / det)

    verts_world = None
    if g.kind == "circle":
        r = g.radius
        cx, cy = linear @ g.centroid + shift
        ex = r * math.hypot(linear[0, 0], linear[0, 1])
        ey = r * math.hypot(linear[1, 0], linear[1, 1])
        xmin, xmax, ymin, ymax = cx - ex, cx + ex, cy - ey, cy + ey
    else:
        verts_world = g.vertices @ linear.T + shift
        xmin, ymin = verts_world.min(axis=0)
        xmax, ymax = verts_world.max(axis=0)
    x0 = max(0, int(math.floor(xmin)))
    y0 = max(0, int(math.floor(ymin)))
    x1 = min(width, int(math.ceil(xmax)) + 1)
    y1 = min(height, int(math.ceil(ymax)) + 1)
    if x0 >= x1 or y0 >= y1:
        return

    ys = np.arange(y0, y1) + 0.5
    if g.kind == "circle":
        spans = _circle_spans(g.radius, inv, shift, ys)
    else:
        spans = _polygon_spans(verts_world, ys)
    mask = _mask_from_spans(spans, y1 - y0, x1 - x0, x0)
    if mask is None:
        return

    app = state.appearance
    target = frame[y0:y1, x0:x1]
    if app.kind == SOLID:
        target[mask] = np.asarray(app.color, dtype=np.uint8)
        return

    if app.kind == DYNAMIC_TEXTURE:
        pool = textures.get_pool(app.pool_path, textures.TEXTURE_VIDEOS)
        patch = textures.dynamic_patch(pool, app.entry, app.window, t)
        if app.offset is not None:
            patch = _saturate(patch, app.offset)
    else:
        patch = app.patch
    yy, xx = np.nonzero(mask)
    wx = (x0 + xx) + 0.5 - shift[0]
    wy = (y0 + yy) + 0.5 - shift[1]
    lx = inv[0] * wx + inv[1] * wy
    ly = inv[2] * wx + inv[3] * wy
    target[yy, xx] = map_texture(patch, app.anchor, lx, ly)


def render_frame(scene: SceneSpec, states: list[ObjectState], t: int = 0,
                 out: np.ndarray | None = None) -> np.ndarray:
    """Render one frame from per-object states; background first, then
    objects in ascending depth order."""
    width, height = scene.canvas
    frame = out if out is not None else np.empty((height, width, 3), dtype=np.uint8)
    bg = scene.background
    if isinstance(bg, np.ndarray):
        frame[:] = bg
    else:
        frame[:] = np.asarray(bg, dtype=np.uint8)
    for state in states:
        _paint(frame, state, t)
    return frame


def _is_static(scene: SceneSpec) -> bool:
    for s in scene.objects:
        if s.speed != 0.0 or s.accel != 0.0 or s.rotation_rate != 0.0:
            return False
        if s.scale_rate != (0.0, 0.0) or s.shear_rate != (0.0, 0.0):
            return False
        if s.appearance.kind == DYNAMIC_TEXTURE:
            return False
    return True


def render_video(scene: SceneSpec) -> VideoTensor:
    """All T frames; frame t uses the t-step state of every object."""
    width, height = scene.canvas
    frames = np.empty((scene.duration, height, width, 3), dtype=np.uint8)
    if _is_static(scene):
        render_frame(scene, scene.objects, 0, out=frames[0])
        frames[1:] = frames[0]
    else:
        states = scene.objects
        for t in range(scene.duration):
            render_frame(scene, states, t, out=frames[t])
            if t + 1 < scene.duration:
                states = [step_state(s) for s in states]
    return VideoTensor(frames=frames, fps=scene.fps, seed=scene.seed)
