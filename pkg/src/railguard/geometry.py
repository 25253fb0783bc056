"""Bounding-box and distance primitives underlying proximity and evaluation.

All operations are pure functions on immutable values; coordinates are
continuous (detector outputs are fractional pixels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from . import _kernels


class Point(NamedTuple):
    x: float
    y: float

    def validate(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got {self!r}")


class BoundingBox(NamedTuple):
    """Axis-aligned box in corner form: x1 <= x2, y1 <= y2. Zero area allowed."""

    x1: float
    y1: float
    x2: float
    y2: float

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def area(self) -> float:
        return self.width * self.height

    def validate(self) -> None:
        for v in self:
            if not math.isfinite(v):
                raise ValueError(f"bounding box coordinates must be finite, got {self!r}")
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"bounding box corners out of order: {self!r}")


@dataclass(frozen=True)
class Polyline:
    """Ordered vertex chain; the track centerline representation.

    Consecutive duplicate vertices are permitted (degenerate segments are
    treated as points).
    """

    vertices: tuple[Point, ...]

    def __post_init__(self):
        if len(self.vertices) < 1:
            raise ValueError("polyline needs at least one vertex")
        for v in self.vertices:
            v.validate()

    def __len__(self) -> int:
        return len(self.vertices)


def bbox_center(b: BoundingBox) -> Point:
    """Midpoint of the box; satisfies 2*c == corner sums exactly."""
    return Point((b.x1 + b.x2) / 2.0, (b.y1 + b.y2) / 2.0)


def euclidean_distance(a: Point, b: Point) -> float:
    return _kernels.euclidean(a.x, a.y, b.x, b.y)


def point_to_polyline_distance(p: Point, line: Polyline) -> float:
    """Minimum endpoint-clamped distance from p to any segment of the line."""
    xs = [v.x for v in line.vertices]
    ys = [v.y for v in line.vertices]
    return _kernels.point_polyline_distance(p.x, p.y, xs, ys)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over union area; 0 when the union has zero area."""
    return _kernels.iou(a.x1, a.y1, a.x2, a.y2, b.x1, b.y1, b.x2, b.y2)
