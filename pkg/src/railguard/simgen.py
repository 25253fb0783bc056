"""Deterministic synthetic-scenario generator.

Actors move on the ground plane in meters; pixel-space detections are derived
through the scenario calibration, so the analytic ground truth is exact no
matter how the projection distorts. Noise touches only the emitted
detections, never the oracle. Randomness comes from numpy's PCG64 generator
seeded per scenario, which makes every stream byte-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .calibration import Calibration, ScalarCalibration, image_from_ground, parse_calibration
from .errors import ParseError
from .geometry import BoundingBox, Point, Polyline, point_to_polyline_distance
from .ingest import CLASS_LABELS, Detection, FrameRecord, StreamHeader
from .metrics import GroundTruthFrame

OBJECT_CLASSES = tuple(c for c in CLASS_LABELS if c != "track")


@dataclass(frozen=True)
class ActorSpec:
    class_label: str  # person | object
    start: tuple[float, float]  # meters
    velocity: tuple[float, float]  # meters/second
    box_size: tuple[float, float]  # meters (width, height)
    confidence: float | tuple[float, float] = 0.9  # constant, or uniform (lo, hi)

    def __post_init__(self):
        if self.class_label not in OBJECT_CLASSES:
            raise ValueError(f"actor class must be one of {OBJECT_CLASSES}")
        if not (self.box_size[0] > 0 and self.box_size[1] > 0):
            raise ValueError("actor box size must be positive")
        conf = self.confidence
        if isinstance(conf, tuple):
            lo, hi = conf
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError(f"confidence range must be within [0, 1], got {conf}")
        elif not 0.0 <= conf <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {conf}")


@dataclass(frozen=True)
class NoiseSpec:
    center_jitter_px: float = 0.0
    false_positive_rate: float = 0.0
    miss_rate: float = 0.0

    def __post_init__(self):
        if self.center_jitter_px < 0:
            raise ValueError("center jitter must be >= 0")
        for name in ("false_positive_rate", "miss_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    @property
    def silent(self) -> bool:
        return (
            self.center_jitter_px == 0.0
            and self.false_positive_rate == 0.0
            and self.miss_rate == 0.0
        )


@dataclass(frozen=True)
class Scenario:
    seed: int
    duration_s: float
    fps: float
    track: tuple[tuple[float, float], ...]  # ground-plane polyline, meters
    actors: tuple[ActorSpec, ...]
    noise: NoiseSpec
    calibration: Calibration
    frame_width: int = 1920
    frame_height: int = 1080
    source_id: str = ""
    track_box_size_m: float = 0.5
    track_confidence: float = 0.9

    def __post_init__(self):
        if self.fps <= 0 or self.duration_s <= 0:
            raise ValueError("fps and duration_s must be positive")
        if len(self.track) < 1:
            raise ValueError("track needs at least one vertex")
        if not self.source_id:
            object.__setattr__(self, "source_id", f"simgen-{self.seed}")

    @property
    def frame_count(self) -> int:
        return max(1, int(round(self.duration_s * self.fps)))

    def track_polyline(self) -> Polyline:
        return Polyline(tuple(Point(x, y) for x, y in self.track))


@dataclass
class GroundTruthBundle:
    """Noise-free truth emitted alongside a generated stream."""

    scenario: Scenario
    true_frames: list[GroundTruthFrame]
    actor_distances: list[list[float]]  # [actor][frame] ground distance, meters
    clipped: list[tuple[int, str]] = field(default_factory=list)

    def breach_frames(self, actor_index: int, threshold_m: float) -> frozenset[int]:
        return frozenset(
            k
            for k, d in enumerate(self.actor_distances[actor_index])
            if d <= threshold_m
        )

    def breach_intervals(self, actor_index: int, threshold_m: float) -> list[tuple[int, int]]:
        """Breach frames collapsed into inclusive [start, end] intervals."""
        intervals: list[tuple[int, int]] = []
        for k in sorted(self.breach_frames(actor_index, threshold_m)):
            if intervals and k == intervals[-1][1] + 1:
                intervals[-1] = (intervals[-1][0], k)
            else:
                intervals.append((k, k))
        return intervals


def frame_time_s(k: int, fps: float) -> float:
    return k / fps


def actor_position(actor: ActorSpec, t: float) -> Point:
    return Point(actor.start[0] + actor.velocity[0] * t, actor.start[1] + actor.velocity[1] * t)


def actor_ground_distance(scenario: Scenario, actor_index: int, k: int) -> float:
    """Noise-free ground distance from an actor's center to the track, frame k."""
    actor = scenario.actors[actor_index]
    p = actor_position(actor, frame_time_s(k, scenario.fps))
    return point_to_polyline_distance(p, scenario.track_polyline())


def breach_oracle(scenario: Scenario, actor_index: int, threshold_m: float) -> frozenset[int]:
    """Exact breach frames from the motion model alone (never the emitted stream)."""
    return frozenset(
        k
        for k in range(scenario.frame_count)
        if actor_ground_distance(scenario, actor_index, k) <= threshold_m
    )


def _ground_box_to_pixels(
    cal: Calibration, center: Point, size_m: tuple[float, float]
) -> BoundingBox:
    # box symmetric around the projected center so that bbox_center on the
    # emitted box recovers the ground center's image position
    pc = image_from_ground(cal, center)
    half_w = size_m[0] / 2.0
    half_h = size_m[1] / 2.0
    if isinstance(cal, ScalarCalibration):
        phw = half_w / cal.meters_per_pixel
        phh = half_h / cal.meters_per_pixel
    else:
        lo = image_from_ground(cal, Point(center.x - half_w, center.y - half_h))
        hi = image_from_ground(cal, Point(center.x + half_w, center.y + half_h))
        phw = abs(hi.x - lo.x) / 2.0
        phh = abs(hi.y - lo.y) / 2.0
    return BoundingBox(pc.x - phw, pc.y - phh, pc.x + phw, pc.y + phh)


def _clip_box(box: BoundingBox, width: int, height: int) -> tuple[BoundingBox, bool]:
    x1 = min(max(box.x1, 0.0), float(width))
    y1 = min(max(box.y1, 0.0), float(height))
    x2 = min(max(box.x2, 0.0), float(width))
    y2 = min(max(box.y2, 0.0), float(height))
    clipped_box = BoundingBox(x1, y1, x2, y2)
    return clipped_box, clipped_box != box


def _draw_confidence(rng: np.random.Generator, model: float | tuple[float, float]) -> float:
    if isinstance(model, tuple):
        lo, hi = model
        return float(rng.uniform(lo, hi))
    return float(model)


def generate(
    scenario: Scenario,
) -> tuple[StreamHeader, list[FrameRecord], GroundTruthBundle]:
    """Produce a wire-format stream plus its analytic ground truth.

    Identical scenarios (same seed included) generate byte-identical streams.
    """
    rng = np.random.Generator(np.random.PCG64(scenario.seed))
    cal = scenario.calibration
    header = StreamHeader(
        source_id=scenario.source_id,
        frame_width=scenario.frame_width,
        frame_height=scenario.frame_height,
        fps=float(scenario.fps),
    )
    track_size = (scenario.track_box_size_m, scenario.track_box_size_m)
    track_pixel_boxes = []
    clipped: list[tuple[int, str]] = []
    for i, (gx, gy) in enumerate(scenario.track):
        box = _ground_box_to_pixels(cal, Point(gx, gy), track_size)
        track_pixel_boxes.append((i, box))

    frames: list[FrameRecord] = []
    true_frames: list[GroundTruthFrame] = []
    actor_distances: list[list[float]] = [[] for _ in scenario.actors]
    noise = scenario.noise

    for k in range(scenario.frame_count):
        t = frame_time_s(k, scenario.fps)
        timestamp_ms = int(round(1000.0 * k / scenario.fps))
        true_boxes: list[tuple[str, BoundingBox]] = []
        detections: list[Detection] = []

        for i, box in track_pixel_boxes:
            box, was_clipped = _clip_box(box, scenario.frame_width, scenario.frame_height)
            if was_clipped:
                clipped.append((k, f"track:{i}"))
            true_boxes.append(("track", box))
            detections.append(Detection("track", box, scenario.track_confidence))

        for a, actor in enumerate(scenario.actors):
            center = actor_position(actor, t)
            actor_distances[a].append(
                point_to_polyline_distance(center, scenario.track_polyline())
            )
            box = _ground_box_to_pixels(cal, center, actor.box_size)
            box, was_clipped = _clip_box(box, scenario.frame_width, scenario.frame_height)
            if was_clipped:
                clipped.append((k, f"{actor.class_label}:{a}"))
            true_boxes.append((actor.class_label, box))
            detections.append(
                Detection(actor.class_label, box, _draw_confidence(rng, actor.confidence))
            )

        # detector noise: jitter, misses, spurious boxes (emitted stream only)
        if noise.center_jitter_px > 0.0:
            jittered = []
            for d in detections:
                dx, dy = rng.normal(0.0, noise.center_jitter_px, size=2)
                b = d.bbox
                moved, was_clipped = _clip_box(
                    BoundingBox(b.x1 + dx, b.y1 + dy, b.x2 + dx, b.y2 + dy),
                    scenario.frame_width,
                    scenario.frame_height,
                )
                if was_clipped:
                    clipped.append((k, f"jitter:{d.class_label}"))
                jittered.append(Detection(d.class_label, moved, d.confidence))
            detections = jittered
        if noise.miss_rate > 0.0:
            detections = [d for d in detections if rng.random() >= noise.miss_rate]
        if noise.false_positive_rate > 0.0 and rng.random() < noise.false_positive_rate:
            label = OBJECT_CLASSES[int(rng.integers(len(OBJECT_CLASSES)))]
            w = float(rng.uniform(10.0, 80.0))
            h = float(rng.uniform(10.0, 80.0))
            x = float(rng.uniform(0.0, scenario.frame_width - w))
            y = float(rng.uniform(0.0, scenario.frame_height - h))
            detections.append(
                Detection(
                    label,
                    BoundingBox(x, y, x + w, y + h),
                    float(rng.uniform(0.25, 1.0)),
                )
            )

        frames.append(FrameRecord(k, timestamp_ms, tuple(detections)))
        true_frames.append(GroundTruthFrame(k, tuple(true_boxes)))

    bundle = GroundTruthBundle(scenario, true_frames, actor_distances, clipped)
    return header, frames, bundle


def ground_truth_frames(bundle: GroundTruthBundle) -> list[FrameRecord]:
    """Bundle truth as wire-format frames with confidence fixed at 1.0."""
    records = []
    for gt in bundle.true_frames:
        timestamp_ms = int(round(1000.0 * gt.frame_index / bundle.scenario.fps))
        records.append(
            FrameRecord(
                gt.frame_index,
                timestamp_ms,
                tuple(Detection(label, box, 1.0) for label, box in gt.boxes),
            )
        )
    return records


# --- scenario file ------------------------------------------------------------

def parse_scenario(document: str) -> Scenario:
    """Parse a scenario JSON document (see README for the schema)."""
    try:
        payload = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ParseError(f"scenario document is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ParseError("scenario document must be a JSON object")
    try:
        actors = tuple(_parse_actor(a) for a in payload.get("actors", []))
        noise = NoiseSpec(**payload.get("noise", {}))
        cal_payload = payload.get("calibration", {"type": "scalar", "meters_per_pixel": 1.0})
        calibration = parse_calibration(json.dumps(cal_payload))
        optional = {
            key: payload[key]
            for key in (
                "frame_width",
                "frame_height",
                "source_id",
                "track_box_size_m",
                "track_confidence",
            )
            if key in payload
        }
        return Scenario(
            seed=int(payload["seed"]),
            duration_s=float(payload["duration_s"]),
            fps=float(payload["fps"]),
            track=tuple((float(x), float(y)) for x, y in payload["track"]),
            actors=actors,
            noise=noise,
            calibration=calibration,
            **optional,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"invalid scenario document: {exc}") from exc


def _parse_actor(payload: dict) -> ActorSpec:
    conf = payload.get("confidence", {"constant": 0.9})
    if isinstance(conf, dict):
        if "constant" in conf:
            model: float | tuple[float, float] = float(conf["constant"])
        elif "uniform" in conf:
            lo, hi = conf["uniform"]
            model = (float(lo), float(hi))
        else:
            raise ValueError(f"unknown confidence model: {conf}")
    else:
        model = float(conf)
    return ActorSpec(
        class_label=payload["class"],
        start=(float(payload["start"][0]), float(payload["start"][1])),
        velocity=(float(payload["velocity"][0]), float(payload["velocity"][1])),
        box_size=(float(payload["box_size"][0]), float(payload["box_size"][1])),
        confidence=model,
    )


def load_scenario(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
