"""Shape primitives in object-local coordinates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CIRCLE = "circle"
TRIANGLE = "triangle"
QUADRILATERAL = "quadrilateral"

POLYGON_KINDS = (TRIANGLE, QUADRILATERAL)
ALL_KINDS = (CIRCLE, TRIANGLE, QUADRILATERAL)

MIN_POLYGON_AREA = 1.0  # px^2; below this a polygon is degenerate


def polygon_area(vertices: np.ndarray) -> float:
    """Unsigned shoelace area of a simple polygon."""
    x, y = vertices[:, 0], vertices[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    """Area centroid (shoelace-weighted); affine-equivariant, which keeps
    rendered mask centroids glued to the kinematic position under transforms."""
    x, y = vertices[:, 0], vertices[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    signed_area = 0.5 * float(np.sum(cross))
    if abs(signed_area) < 1e-12:
        return vertices.mean(axis=0)
    cx = float(np.sum((x + np.roll(x, -1)) * cross)) / (6.0 * signed_area)
    cy = float(np.sum((y + np.roll(y, -1)) * cross)) / (6.0 * signed_area)
    return np.array([cx, cy])


@dataclass(frozen=True, eq=False)
class ShapeGeometry:
    """A circle or a simple polygon, with its centroid in the local frame.

    Quadrilateral vertices are stored angle-sorted about their mean so the
    boundary is non-self-intersecting.
    """

    kind: str
    radius: float | None = None
    vertices: np.ndarray | None = None  # (k, 2) float64, local frame
    centroid: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        if self.kind == CIRCLE:
            if self.radius is None or self.radius <= 0:
                raise ValueError(f"circle radius must be positive, got {self.radius}")
        elif self.kind in POLYGON_KINDS:
            expected = 3 if self.kind == TRIANGLE else 4
            if self.vertices is None or self.vertices.shape != (expected, 2):
                raise ValueError(f"{self.kind} needs {expected} vertices")
            if polygon_area(self.vertices) < MIN_POLYGON_AREA:
                raise ValueError(f"{self.kind} area below {MIN_POLYGON_AREA} px^2")
        else:
            raise ValueError(f"unknown shape kind {self.kind!r}")

    def local_bbox(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) in the local frame."""
        if self.kind == CIRCLE:
            cx, cy = self.centroid
            r = self.radius
            return (cx - r, cy - r, cx + r, cy + r)
        mn = self.vertices.min(axis=0)
        mx = self.vertices.max(axis=0)
        return (float(mn[0]), float(mn[1]), float(mx[0]), float(mx[1]))


def circle(radius: float) -> ShapeGeometry:
    return ShapeGeometry(CIRCLE, radius=radius)


def polygon(kind: str, vertices: np.ndarray) -> ShapeGeometry:
    verts = np.asarray(vertices, dtype=np.float64)
    if kind == QUADRILATERAL:
        angles = np.arctan2(*(verts - verts.mean(axis=0)).T[::-1])
        verts = verts[np.argsort(angles, kind="stable")]
    return ShapeGeometry(kind, vertices=verts, centroid=polygon_centroid(verts))


def regular_polygon(kind: str, radius: float) -> ShapeGeometry:
    """Fallback for repeatedly degenerate samples: a regular k-gon."""
    k = 3 if kind == TRIANGLE else 4
    ang = -0.5 * np.pi + 2.0 * np.pi * np.arange(k) / k
    verts = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return polygon(kind, verts)


def geometry_equal(a: ShapeGeometry, b: ShapeGeometry) -> bool:
    if a.kind != b.kind:
        return False
    if a.kind == CIRCLE:
        return a.radius == b.radius and np.array_equal(a.centroid, b.centroid)
    return np.array_equal(a.vertices, b.vertices) and np.array_equal(a.centroid, b.centroid)
