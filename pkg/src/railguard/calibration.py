"""Pixel-to-meter calibration: the unit bridge between image-space distances
and the metric alert threshold.

Two variants: a scalar meters-per-pixel scale for fixed-scale scenes, and a
3x3 ground-plane homography for perspective scenes where scale varies with
image row.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from typing import Union

from .errors import HorizonError, InvalidCalibration, ParseError
from .geometry import Point, euclidean_distance

log = logging.getLogger("railguard.calibration")

# |w'| at or below this is treated as the vanishing line: the numerical
# cliff where ground positions stop existing.
HORIZON_EPS = 1e-9
_MIN_DET = 1e-12

Matrix3 = tuple[tuple[float, float, float], ...]


@dataclass(frozen=True)
class ScalarCalibration:
    """Uniform scale: ground = pixel * meters_per_pixel."""

    meters_per_pixel: float

    def __post_init__(self):
        s = self.meters_per_pixel
        if not (isinstance(s, (int, float)) and math.isfinite(s) and s > 0):
            raise InvalidCalibration(f"meters_per_pixel must be finite and > 0, got {s!r}")
        object.__setattr__(self, "meters_per_pixel", float(s))


@dataclass(frozen=True)
class HomographyCalibration:
    """Homogeneous map from image coordinates to ground-plane meters."""

    matrix: Matrix3

    def __post_init__(self):
        m = self.matrix
        if len(m) != 3 or any(len(row) != 3 for row in m):
            raise InvalidCalibration("homography matrix must be 3x3")
        rows = tuple(tuple(float(v) for v in row) for row in m)
        for row in rows:
            for v in row:
                if not math.isfinite(v):
                    raise InvalidCalibration("homography entries must be finite")
        if abs(_det3(rows)) <= _MIN_DET:
            raise InvalidCalibration("homography matrix is singular")
        object.__setattr__(self, "matrix", rows)

    def inverse_matrix(self) -> Matrix3:
        return _inv3(self.matrix)


Calibration = Union[ScalarCalibration, HomographyCalibration]


def _det3(m: Matrix3) -> float:
    (a, b, c), (d, e, f), (g, h, i) = m
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def _inv3(m: Matrix3) -> Matrix3:
    (a, b, c), (d, e, f), (g, h, i) = m
    det = _det3(m)
    return (
        ((e * i - f * h) / det, (c * h - b * i) / det, (b * f - c * e) / det),
        ((f * g - d * i) / det, (a * i - c * g) / det, (c * d - a * f) / det),
        ((d * h - e * g) / det, (b * g - a * h) / det, (a * e - b * d) / det),
    )


def _apply_homogeneous(m: Matrix3, p: Point) -> Point:
    x = m[0][0] * p.x + m[0][1] * p.y + m[0][2]
    y = m[1][0] * p.x + m[1][1] * p.y + m[1][2]
    w = m[2][0] * p.x + m[2][1] * p.y + m[2][2]
    if abs(w) <= HORIZON_EPS:
        raise HorizonError(f"point {p!r} maps to the vanishing line (|w'|={abs(w):.3e})")
    return Point(x / w, y / w)


def project_to_ground(c: Calibration, p: Point) -> Point:
    """Map an image point to ground-plane meters.

    Raises HorizonError for points at/above the vanishing line under a
    homography.
    """
    if isinstance(c, ScalarCalibration):
        s = c.meters_per_pixel
        return Point(p.x * s, p.y * s)
    return _apply_homogeneous(c.matrix, p)


def image_from_ground(c: Calibration, ground: Point) -> Point:
    """Inverse mapping: ground-plane meters to image pixels."""
    if isinstance(c, ScalarCalibration):
        s = c.meters_per_pixel
        return Point(ground.x / s, ground.y / s)
    return _apply_homogeneous(c.inverse_matrix(), ground)


def metric_distance(c: Calibration, a: Point, b: Point) -> float:
    """Ground-plane distance in meters between two image points."""
    return euclidean_distance(project_to_ground(c, a), project_to_ground(c, b))


def default_calibration() -> ScalarCalibration:
    """Fallback when no calibration file is supplied: pixels read as meters.

    The alert threshold is metric, so running uncalibrated is only honest
    if loudly flagged.
    """
    log.warning(
        "no calibration supplied; interpreting pixel units as meters "
        "(meters_per_pixel=1.0)"
    )
    return ScalarCalibration(1.0)


def parse_calibration(document: str) -> Calibration:
    """Parse and invariant-check a calibration JSON document.

    Unknown fields are rejected.
    """
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"calibration document is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError("calibration document must be a JSON object")
    kind = payload.get("type")
    if kind == "scalar":
        _require_keys(payload, {"type", "meters_per_pixel"})
        value = payload["meters_per_pixel"]
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise InvalidCalibration("meters_per_pixel must be a number")
        return ScalarCalibration(value)
    if kind == "homography":
        _require_keys(payload, {"type", "matrix"})
        matrix = payload["matrix"]
        if (
            not isinstance(matrix, list)
            or len(matrix) != 3
            or any(not isinstance(r, list) or len(r) != 3 for r in matrix)
            or any(
                not isinstance(v, (int, float)) or isinstance(v, bool)
                for r in matrix
                for v in r
            )
        ):
            raise InvalidCalibration("matrix must be a 3x3 array of numbers")
        return HomographyCalibration(tuple(tuple(row) for row in matrix))
    raise ParseError(f"unknown calibration type: {kind!r}")


def load_calibration(path: str) -> Calibration:
    with open(path, encoding="utf-8") as fh:
        return parse_calibration(fh.read())


def _require_keys(payload: dict, expected: set[str]) -> None:
    extra = set(payload) - expected
    missing = expected - set(payload)
    if missing:
        raise ParseError(f"calibration document missing fields: {sorted(missing)}")
    if extra:
        raise ParseError(f"calibration document has unknown fields: {sorted(extra)}")
