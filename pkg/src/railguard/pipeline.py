"""Runtime core: per-frame centerline assembly, proximity classification
against the metric threshold, and the debounced alert state machine.

Objects are keyed by (class, rank of x-center) within each frame; there is
no cross-frame identity tracking, so keys are only stable for scenes where
objects keep their left-to-right order.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator

from .calibration import Calibration, HorizonError, project_to_ground
from .geometry import Polyline, bbox_center, euclidean_distance, point_to_polyline_distance
from .ingest import FrameRecord, StreamHeader

DISTANCE_MODES = ("center_to_center", "center_to_polyline")

RAISED = "raised"
CLEARED = "cleared"


@dataclass(frozen=True)
class PipelineConfig:
    threshold_m: float = 1.0
    min_track_confidence: float = 0.25
    min_object_confidence: float = 0.25
    debounce_frames: int = 3
    release_frames: int = 5
    hysteresis_m: float = 0.2
    distance_mode: str = "center_to_center"

    def __post_init__(self):
        if not self.threshold_m > 0:
            raise ValueError(f"threshold_m must be > 0, got {self.threshold_m}")
        if self.debounce_frames < 1:
            raise ValueError(f"debounce_frames must be >= 1, got {self.debounce_frames}")
        if self.release_frames < 1:
            raise ValueError(f"release_frames must be >= 1, got {self.release_frames}")
        if self.hysteresis_m < 0:
            raise ValueError(f"hysteresis_m must be >= 0, got {self.hysteresis_m}")
        for name in ("min_track_confidence", "min_object_confidence"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.distance_mode not in DISTANCE_MODES:
            raise ValueError(
                f"distance_mode must be one of {DISTANCE_MODES}, got {self.distance_mode!r}"
            )


@dataclass(frozen=True)
class ProximityStatus:
    frame_index: int
    object_key: str
    distance_m: float | None  # None = unknown (no track, or unprojectable)
    breach: bool


@dataclass(frozen=True)
class AlertEvent:
    kind: str  # RAISED | CLEARED
    object_key: str
    frame_index: int
    timestamp_ms: int
    distance_m: float | None


@dataclass(frozen=True)
class _ObjectState:
    breach_run: int = 0
    clear_run: int = 0
    active: bool = False


@dataclass(frozen=True)
class AlertState:
    """Per-object debounce counters; at most one run counter is nonzero."""

    objects: dict[str, _ObjectState] = field(default_factory=dict)


@dataclass
class RunSummary:
    frames: int = 0
    statuses: int = 0
    breaches: int = 0
    unknown_distances: int = 0
    alerts_raised: int = 0
    alerts_cleared: int = 0
    timings_s: dict[str, float] = field(default_factory=dict)


def build_track_centerline(frame: FrameRecord, cfg: PipelineConfig) -> Polyline | None:
    """Polyline through confident track-box centers, far-to-near (y ascending).

    None when no track detection passes the confidence filter.
    """
    centers = [
        bbox_center(d.bbox)
        for d in frame.detections
        if d.class_label == "track" and d.confidence >= cfg.min_track_confidence
    ]
    if not centers:
        return None
    centers.sort(key=lambda c: (c.y, c.x))
    return Polyline(tuple(centers))


def keyed_objects(frame: FrameRecord, cfg: PipelineConfig):
    """(key, center, detection) per qualifying person/object.

    Keys rank detections of one class by x-center within the frame; they are
    positional, not tracked identities.
    """
    by_class: dict[str, list] = {}
    for d in frame.detections:
        if d.class_label == "track" or d.confidence < cfg.min_object_confidence:
            continue
        by_class.setdefault(d.class_label, []).append((bbox_center(d.bbox), d))
    keyed = []
    for label in sorted(by_class):
        entries = sorted(by_class[label], key=lambda e: (e[0].x, e[0].y))
        keyed.extend((f"{label}:{i}", c, d) for i, (c, d) in enumerate(entries))
    return keyed


def _ground_centerline(centerline: Polyline | None, cal: Calibration) -> Polyline | None:
    if centerline is None:
        return None
    try:
        return Polyline(tuple(project_to_ground(cal, v) for v in centerline.vertices))
    except HorizonError:
        return None


def classify_frame(
    frame: FrameRecord, cal: Calibration, cfg: PipelineConfig
) -> list[ProximityStatus]:
    """Distance-to-track classification for every qualifying person/object.

    Distance is measured in ground meters; a missing centerline or an
    unprojectable point yields an unknown distance, which never breaches.
    """
    ground_line = _ground_centerline(build_track_centerline(frame, cfg), cal)
    statuses = []
    for key, center, _det in keyed_objects(frame, cfg):
        distance = None
        if ground_line is not None:
            try:
                gp = project_to_ground(cal, center)
            except HorizonError:
                gp = None
            if gp is not None:
                if cfg.distance_mode == "center_to_center":
                    distance = min(
                        euclidean_distance(gp, v) for v in ground_line.vertices
                    )
                else:
                    distance = point_to_polyline_distance(gp, ground_line)
        breach = distance is not None and distance <= cfg.threshold_m
        statuses.append(ProximityStatus(frame.frame_index, key, distance, breach))
    return statuses


def step_alert_state(
    state: AlertState,
    frame_index: int,
    timestamp_ms: int,
    statuses: Iterable[ProximityStatus],
    cfg: PipelineConfig,
) -> tuple[AlertState, list[AlertEvent]]:
    """Advance the debounced alert machine by one frame.

    A breach run of debounce_frames raises; release_frames of verified-far
    frames (beyond threshold + hysteresis) or absences clears. Unknown
    distances freeze neither way: they reset both runs.
    """
    objects = dict(state.objects)
    events: list[AlertEvent] = []
    seen: set[str] = set()

    def update(key: str, distance: float | None, present: bool) -> None:
        st = objects.get(key, _ObjectState())
        if present and distance is not None and distance <= cfg.threshold_m:
            run = st.breach_run + 1
            if not st.active and run >= cfg.debounce_frames:
                events.append(AlertEvent(RAISED, key, frame_index, timestamp_ms, distance))
                st = _ObjectState(active=True)
            else:
                st = replace(st, breach_run=run, clear_run=0)
        elif present and distance is None:
            # unverifiable: breaks both runs, no progress either way
            st = replace(st, breach_run=0, clear_run=0)
        elif not present or distance > cfg.threshold_m + cfg.hysteresis_m:
            run = st.clear_run + 1
            if st.active and run >= cfg.release_frames:
                events.append(AlertEvent(CLEARED, key, frame_index, timestamp_ms, distance))
                st = _ObjectState(active=False)
            else:
                st = replace(st, breach_run=0, clear_run=run)
        else:
            # inside the hysteresis band: neither near enough nor far enough
            st = replace(st, breach_run=0, clear_run=0)
        if st.active or st.breach_run or st.clear_run:
            objects[key] = st
        else:
            objects.pop(key, None)

    for status in sorted(statuses, key=lambda s: s.object_key):
        seen.add(status.object_key)
        update(status.object_key, status.distance_m, present=True)
    for key in sorted(set(objects) - seen):
        update(key, None, present=False)
    return AlertState(objects), events


class StreamProcessor:
    """Stateful per-stream pipeline; one instance per ingestion session."""

    def __init__(self, header: StreamHeader, cal: Calibration, cfg: PipelineConfig):
        self.header = header
        self.cal = cal
        self.cfg = cfg
        self.state = AlertState()
        self.summary = RunSummary(timings_s={"classify": 0.0, "alerts": 0.0})

    def process_frame(
        self, frame: FrameRecord
    ) -> tuple[list[ProximityStatus], list[AlertEvent]]:
        t0 = time.perf_counter()
        statuses = classify_frame(frame, self.cal, self.cfg)
        t1 = time.perf_counter()
        self.state, events = step_alert_state(
            self.state, frame.frame_index, frame.timestamp_ms, statuses, self.cfg
        )
        t2 = time.perf_counter()

        s = self.summary
        s.frames += 1
        s.statuses += len(statuses)
        s.breaches += sum(1 for st in statuses if st.breach)
        s.unknown_distances += sum(1 for st in statuses if st.distance_m is None)
        s.alerts_raised += sum(1 for e in events if e.kind == RAISED)
        s.alerts_cleared += sum(1 for e in events if e.kind == CLEARED)
        s.timings_s["classify"] += t1 - t0
        s.timings_s["alerts"] += t2 - t1
        return statuses, events


def run_stream(
    header: StreamHeader,
    frames: Iterable[FrameRecord],
    cal: Calibration,
    cfg: PipelineConfig,
) -> tuple[list[ProximityStatus], list[AlertEvent], RunSummary]:
    """Single-pass run over a full stream; outputs in frame order."""
    processor = StreamProcessor(header, cal, cfg)
    all_statuses: list[ProximityStatus] = []
    all_events: list[AlertEvent] = []
    for frame in frames:
        statuses, events = processor.process_frame(frame)
        all_statuses.extend(statuses)
        all_events.extend(events)
    return all_statuses, all_events, processor.summary


def iter_stream(
    header: StreamHeader,
    frames: Iterable[FrameRecord],
    cal: Calibration,
    cfg: PipelineConfig,
) -> Iterator[tuple[FrameRecord, list[ProximityStatus], list[AlertEvent]]]:
    """Streaming variant of run_stream for constant-memory consumers."""
    processor = StreamProcessor(header, cal, cfg)
    for frame in frames:
        statuses, events = processor.process_frame(frame)
        yield frame, statuses, events


def format_alert(event: AlertEvent) -> str:
    """Canonical one-line JSON for an alert event."""
    return json.dumps(
        {
            "kind": event.kind,
            "object_key": event.object_key,
            "frame_index": event.frame_index,
            "timestamp_ms": event.timestamp_ms,
            "distance_m": event.distance_m,
        },
        separators=(",", ":"),
        ensure_ascii=False,
    )


def format_status(status: ProximityStatus) -> str:
    """Canonical one-line JSON for a proximity status."""
    return json.dumps(
        {
            "frame_index": status.frame_index,
            "object_key": status.object_key,
            "distance_m": status.distance_m,
            "breach": status.breach,
        },
        separators=(",", ":"),
        ensure_ascii=False,
    )
