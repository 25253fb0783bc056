"""Frame loop: video in, wire-format detection stream out.

Selected frames are normalized (divided by the 255 intensity maximum) before
inference; the per-frame [min, max] of the normalized image is emitted as the
intensity digest, which the engine's validator checks for [0, 1] membership.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO

import numpy as np

from .detectors import ModelLoadError, build_detector
from .resample import resample_indices
from .sidecar import EMPTY_SIDECAR, TrackSidecar

WIRE_CLASSES = ("track", "person", "object")


class VideoError(Exception):
    """The input video cannot be opened or decoded."""


@dataclass
class AdapterConfig:
    video_path: str
    model: str = "motion"
    target_frames: int | None = None  # None: one record per source frame
    class_map: dict[str, str] = field(default_factory=lambda: {"moving": "object"})
    confidence_floor: float = 0.25
    track_sidecar: TrackSidecar = field(default_factory=lambda: EMPTY_SIDECAR)
    source_id: str = ""

    def __post_init__(self):
        for src, dst in self.class_map.items():
            if dst not in WIRE_CLASSES:
                raise ValueError(
                    f"class map target {dst!r} for {src!r} is not one of {WIRE_CLASSES}"
                )
        if not 0.0 <= self.confidence_floor <= 1.0:
            raise ValueError(f"confidence floor must be in [0, 1], got {self.confidence_floor}")
        if self.target_frames is not None and self.target_frames < 1:
            raise ValueError(f"target frame count must be >= 1, got {self.target_frames}")


def _dumps(payload: dict) -> str:
    return json.dumps(payload, separators=(",", ":"), ensure_ascii=False)


def _open_video(path: str):
    import cv2

    capture = cv2.VideoCapture(path)
    if not capture.isOpened():
        raise VideoError(f"cannot open video: {path}")
    count = int(capture.get(cv2.CAP_PROP_FRAME_COUNT))
    if count <= 0:
        # some containers misreport; count by decoding once, then reopen
        count = 0
        while capture.read()[0]:
            count += 1
        capture.release()
        if count == 0:
            raise VideoError(f"video has no decodable frames: {path}")
        capture = cv2.VideoCapture(path)
    width = int(capture.get(cv2.CAP_PROP_FRAME_WIDTH))
    height = int(capture.get(cv2.CAP_PROP_FRAME_HEIGHT))
    fps = float(capture.get(cv2.CAP_PROP_FPS)) or 30.0
    return capture, count, width, height, fps


def _clip_box(box, width, height):
    x1, y1, x2, y2 = box
    x1 = min(max(x1, 0.0), float(width))
    x2 = min(max(x2, 0.0), float(width))
    y1 = min(max(y1, 0.0), float(height))
    y2 = min(max(y2, 0.0), float(height))
    return (x1, y1, x2, y2)


def run_adapter(cfg: AdapterConfig, out: IO[str]) -> int:
    """Emit the wire-format stream for a video; returns frames written.

    Raises VideoError / ModelLoadError / SidecarError for the CLI to report
    as machine-readable error JSON.
    """
    detector = build_detector(cfg.model)
    capture, n_source, width, height, fps = _open_video(cfg.video_path)
    target = cfg.target_frames if cfg.target_frames is not None else n_source
    if target > n_source:
        raise VideoError(
            f"requested {target} frames but the video has only {n_source}"
        )
    selected = resample_indices(n_source, target)
    wanted = set(selected)

    source_id = cfg.source_id or f"adapter:{cfg.video_path}"
    out.write(
        _dumps(
            {
                "type": "header",
                "source_id": source_id,
                "frame_width": width,
                "frame_height": height,
                "fps": fps,
            }
        )
        + "\n"
    )

    written = 0
    source_index = -1
    try:
        while written < len(selected):
            ok, frame = capture.read()
            if not ok:
                raise VideoError(
                    f"decode stopped at frame {source_index + 1} of {n_source}"
                )
            source_index += 1
            if source_index not in wanted:
                continue
            normalized = frame.astype(np.float32) / 255.0
            digest = (float(normalized.min()), float(normalized.max()))

            detections = []
            for box in cfg.track_sidecar.boxes_for(source_index):
                detections.append(("track", _clip_box(box, width, height), 1.0))
            for label, box, confidence in detector.detect(normalized):
                wire_class = cfg.class_map.get(label)
                if wire_class is None or confidence < cfg.confidence_floor:
                    continue
                detections.append((wire_class, _clip_box(box, width, height), confidence))

            out.write(
                _dumps(
                    {
                        "type": "frame",
                        "frame_index": written,
                        "timestamp_ms": int(round(source_index * 1000.0 / fps)),
                        "detections": [
                            {
                                "class": wire_class,
                                "bbox": [float(v) for v in box],
                                "confidence": float(min(1.0, max(0.0, confidence))),
                            }
                            for wire_class, box, confidence in detections
                        ],
                        "intensity_digest": [digest[0], digest[1]],
                    }
                )
                + "\n"
            )
            written += 1
    finally:
        capture.release()
    return written
