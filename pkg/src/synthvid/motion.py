"""Frame-to-frame kinematics.

Contract (the oracles in the tests hold the implementation to it):
  position <- position + speed * (cos d, sin d)
  speed    <- max(0, speed + accel)            # no direction reversal
  M        <- D @ M,  D = ShearX(hx) @ ShearY(hy) @ Rot(w) @ Scale(1+sx, 1+sy)
with D taken about the shape centroid. Each shear factor is applied as its
own unimodular matrix, so det(M) after t frames is exactly ((1+sx)(1+sy))^t.
"""

from __future__ import annotations

import math
from dataclasses import replace
from functools import lru_cache

import numpy as np

from .scene import ObjectState


def increment_linear(rotation_rate: float, scale_rate, shear_rate) -> np.ndarray:
    """2x2 linear part of the per-frame transform increment."""
    sx, sy = scale_rate
    hx, hy = shear_rate
    c, s = math.cos(rotation_rate), math.sin(rotation_rate)
    scale = np.array([[1.0 + sx, 0.0], [0.0, 1.0 + sy]])
    rot = np.array([[c, -s], [s, c]])
    shear_x = np.array([[1.0, hx], [0.0, 1.0]])
    shear_y = np.array([[1.0, 0.0], [hy, 1.0]])
    return shear_x @ shear_y @ rot @ scale


def about_centroid(linear: np.ndarray, centroid: np.ndarray) -> np.ndarray:
    """Affine 3x3 applying `linear` about a fixed point."""
    m = np.eye(3)
    m[:2, :2] = linear
    m[:2, 2] = centroid - linear @ centroid
    return m


def to_h3(transform: np.ndarray) -> np.ndarray:
    m = np.eye(3)
    m[:2, :] = transform
    return m


@lru_cache(maxsize=1024)
def _cached_increment(rotation_rate, sx, sy, hx, hy, cx, cy) -> np.ndarray:
    d = about_centroid(increment_linear(rotation_rate, (sx, sy), (hx, hy)),
                       np.array([cx, cy]))
    d.setflags(write=False)
    return d


def _advance(state: ObjectState, steps: int):
    """Apply the recurrence `steps` times; returns (position, speed, transform).

    Shared by step_state and object_at_frame so random access is bit-identical
    to iterative stepping.
    """
    ux, uy = math.cos(state.direction), math.sin(state.direction)
    px, py = float(state.position[0]), float(state.position[1])
    speed = state.speed
    m = to_h3(state.transform)
    cx, cy = state.geometry.centroid
    d = _cached_increment(state.rotation_rate, state.scale_rate[0], state.scale_rate[1],
                          state.shear_rate[0], state.shear_rate[1], float(cx), float(cy))
    for _ in range(steps):
        px += speed * ux
        py += speed * uy
        speed = max(0.0, speed + state.accel)
        m = d @ m
    return np.array([px, py]), speed, m[:2, :]


def step_state(state: ObjectState) -> ObjectState:
    """One frame forward; pure, input untouched."""
    position, speed, transform = _advance(state, 1)
    return replace(state, position=position, speed=speed, transform=transform)


def object_at_frame(initial: ObjectState, t: int) -> ObjectState:
    """State after t frames; equals t chained step_state calls bit-for-bit."""
    if t < 0:
        raise ValueError(f"frame index must be >= 0, got {t}")
    if t == 0:
        return replace(initial)
    position, speed, transform = _advance(initial, t)
    return replace(initial, position=position, speed=speed, transform=transform)
