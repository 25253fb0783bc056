"""Detection wire format: the boundary between any detector and the engine.

Line-delimited JSON, one object per line, UTF-8. The first line is a header
record; every following line is a frame record. The canonical writer and the
parser are exact inverses on valid data, byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator

from .errors import InvalidResample, OrderError, ParseError, SchemaError
from .geometry import BoundingBox

CLASS_LABELS = ("track", "person", "object")

_HEADER_KEYS = {"type", "source_id", "frame_width", "frame_height", "fps"}
_FRAME_KEYS = {"type", "frame_index", "timestamp_ms", "detections"}
_FRAME_OPTIONAL_KEYS = {"intensity_digest"}
_DETECTION_KEYS = {"class", "bbox", "confidence"}


@dataclass(frozen=True)
class Detection:
    class_label: str
    bbox: BoundingBox
    confidence: float

    def validate(self) -> None:
        if self.class_label not in CLASS_LABELS:
            raise ValueError(f"unknown class label {self.class_label!r}")
        self.bbox.validate()
        if not (
            isinstance(self.confidence, float)
            and math.isfinite(self.confidence)
            and 0.0 <= self.confidence <= 1.0
        ):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence!r}")


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int
    timestamp_ms: int
    detections: tuple[Detection, ...] = field(default_factory=tuple)
    intensity_digest: tuple[float, float] | None = None

    def validate(self) -> None:
        if not isinstance(self.frame_index, int) or self.frame_index < 0:
            raise ValueError(f"frame_index must be a non-negative integer, got {self.frame_index!r}")
        if not isinstance(self.timestamp_ms, int) or self.timestamp_ms < 0:
            raise ValueError(f"timestamp_ms must be a non-negative integer, got {self.timestamp_ms!r}")
        for d in self.detections:
            d.validate()


@dataclass(frozen=True)
class StreamHeader:
    source_id: str
    frame_width: int
    frame_height: int
    fps: float

    def validate(self) -> None:
        if not isinstance(self.source_id, str):
            raise ValueError("source_id must be a string")
        for name in ("frame_width", "frame_height"):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if not (isinstance(self.fps, float) and math.isfinite(self.fps) and self.fps > 0):
            raise ValueError(f"fps must be finite and > 0, got {self.fps!r}")


def resample_indices(n_source: int, m_target: int) -> list[int]:
    """Uniformly spaced source indices covering [0, n_source-1].

    index_k = round_half_up(k * (n-1) / (m-1)) for m >= 2, computed in exact
    integer arithmetic so every implementation agrees bit-for-bit; m == 1
    yields [0].
    """
    if n_source <= 0 or m_target <= 0:
        raise InvalidResample(f"counts must be positive, got n={n_source} m={m_target}")
    if m_target > n_source:
        raise InvalidResample(f"cannot resample {n_source} frames up to {m_target}")
    if m_target == 1:
        return [0]
    span = n_source - 1
    den = m_target - 1
    # round-half-up of k*span/den == floor((2*k*span + den) / (2*den))
    return [(2 * k * span + den) // (2 * den) for k in range(m_target)]


def check_normalization(sample_intensities: Iterable[float]) -> bool:
    """True iff every sampled intensity lies in [0, 1].

    Validates that an adapter divided 8-bit pixel data by the 255 maximum
    before emitting its digest. NaN fails.
    """
    values = list(sample_intensities)
    if not values:
        raise ValueError("empty intensity sample")
    return all(0.0 <= v <= 1.0 for v in values)


# --- canonical serialization -------------------------------------------------

def _dumps(obj) -> str:
    # shortest round-trip float repr is json's default; no whitespace
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def format_header(header: StreamHeader) -> str:
    header.validate()
    return _dumps(
        {
            "type": "header",
            "source_id": header.source_id,
            "frame_width": header.frame_width,
            "frame_height": header.frame_height,
            "fps": float(header.fps),
        }
    )


def format_frame(frame: FrameRecord) -> str:
    frame.validate()
    payload = {
        "type": "frame",
        "frame_index": frame.frame_index,
        "timestamp_ms": frame.timestamp_ms,
        "detections": [
            {
                "class": d.class_label,
                "bbox": [float(d.bbox.x1), float(d.bbox.y1), float(d.bbox.x2), float(d.bbox.y2)],
                "confidence": float(d.confidence),
            }
            for d in frame.detections
        ],
    }
    if frame.intensity_digest is not None:
        payload["intensity_digest"] = [float(v) for v in frame.intensity_digest]
    return _dumps(payload)


def write_stream(header: StreamHeader, frames: Iterable[FrameRecord]) -> Iterator[str]:
    """Yield canonical wire-format lines (without trailing newlines)."""
    yield format_header(header)
    for frame in frames:
        yield format_frame(frame)


def dump_stream(header: StreamHeader, frames: Iterable[FrameRecord], fh: IO[str]) -> None:
    for line in write_stream(header, frames):
        fh.write(line)
        fh.write("\n")


# --- parsing ------------------------------------------------------------------

def _as_number(value, what: str, line: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{what} must be a number, got {value!r}", line)
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(f"{what} must be finite", line)
    return value


def _as_int(value, what: str, line: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{what} must be an integer, got {value!r}", line)
    return value


def _check_keys(payload: dict, required: set, optional: set, what: str, line: int) -> None:
    keys = set(payload)
    missing = required - keys
    extra = keys - required - optional
    if missing:
        raise SchemaError(f"{what} missing fields: {sorted(missing)}", line)
    if extra:
        raise SchemaError(f"{what} has unknown fields: {sorted(extra)}", line)


def _parse_detection(payload, line: int) -> Detection:
    if not isinstance(payload, dict):
        raise SchemaError("detection must be an object", line)
    _check_keys(payload, _DETECTION_KEYS, set(), "detection", line)
    label = payload["class"]
    if label not in CLASS_LABELS:
        raise SchemaError(
            f"class must be one of {list(CLASS_LABELS)}, got {label!r}", line
        )
    bbox = payload["bbox"]
    if not isinstance(bbox, list) or len(bbox) != 4:
        raise SchemaError("bbox must be an array of 4 numbers", line)
    x1, y1, x2, y2 = (_as_number(v, "bbox coordinate", line) for v in bbox)
    if x2 < x1 or y2 < y1:
        raise SchemaError(f"bbox corners out of order: {bbox}", line)
    confidence = _as_number(payload["confidence"], "confidence", line)
    if not 0.0 <= confidence <= 1.0:
        raise SchemaError(f"confidence out of range [0, 1]: {confidence}", line)
    return Detection(label, BoundingBox(x1, y1, x2, y2), confidence)


def _parse_frame(payload: dict, line: int) -> FrameRecord:
    _check_keys(payload, _FRAME_KEYS, _FRAME_OPTIONAL_KEYS, "frame record", line)
    frame_index = _as_int(payload["frame_index"], "frame_index", line)
    if frame_index < 0:
        raise SchemaError(f"frame_index must be >= 0, got {frame_index}", line)
    timestamp_ms = _as_int(payload["timestamp_ms"], "timestamp_ms", line)
    if timestamp_ms < 0:
        raise SchemaError(f"timestamp_ms must be >= 0, got {timestamp_ms}", line)
    raw = payload["detections"]
    if not isinstance(raw, list):
        raise SchemaError("detections must be an array", line)
    detections = tuple(_parse_detection(d, line) for d in raw)
    digest = None
    if "intensity_digest" in payload:
        raw_digest = payload["intensity_digest"]
        if not isinstance(raw_digest, list) or len(raw_digest) != 2:
            raise SchemaError("intensity_digest must be a [min, max] pair", line)
        digest = tuple(_as_number(v, "intensity_digest value", line) for v in raw_digest)
    return FrameRecord(frame_index, timestamp_ms, detections, digest)


def _parse_header(payload: dict, line: int) -> StreamHeader:
    _check_keys(payload, _HEADER_KEYS, set(), "header record", line)
    source_id = payload["source_id"]
    if not isinstance(source_id, str):
        raise SchemaError("source_id must be a string", line)
    width = _as_int(payload["frame_width"], "frame_width", line)
    height = _as_int(payload["frame_height"], "frame_height", line)
    if width <= 0 or height <= 0:
        raise SchemaError("frame dimensions must be positive", line)
    fps = _as_number(payload["fps"], "fps", line)
    if fps <= 0:
        raise SchemaError(f"fps must be > 0, got {fps}", line)
    return StreamHeader(source_id, width, height, fps)


def _decode_line(line_text: str, line: int) -> dict:
    try:
        payload = json.loads(line_text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", line) from exc
    if not isinstance(payload, dict):
        raise ParseError("record must be a JSON object", line)
    return payload


def parse_stream(lines: Iterable[str]) -> tuple[StreamHeader, Iterator[FrameRecord]]:
    """Parse a wire-format stream into its header and a lazy frame iterator.

    Blank lines are ignored. Every yielded record has been invariant-checked;
    frame_index must be strictly increasing and timestamp_ms non-decreasing.
    """
    it = iter(lines)
    line_no = 0
    header: StreamHeader | None = None
    for line_text in it:
        line_no += 1
        if not line_text.strip():
            continue
        payload = _decode_line(line_text, line_no)
        if payload.get("type") != "header":
            raise SchemaError("first record must be a header", line_no)
        header = _parse_header(payload, line_no)
        break
    if header is None:
        raise ParseError("empty stream: no header record", line_no or 1)

    def frames() -> Iterator[FrameRecord]:
        nonlocal line_no
        last_index = -1
        last_ts = -1
        for line_text in it:
            line_no += 1
            if not line_text.strip():
                continue
            payload = _decode_line(line_text, line_no)
            kind = payload.get("type")
            if kind == "header":
                raise SchemaError("unexpected second header record", line_no)
            if kind != "frame":
                raise SchemaError(f"unknown record type: {kind!r}", line_no)
            frame = _parse_frame(payload, line_no)
            if frame.frame_index <= last_index:
                raise OrderError(
                    f"frame_index {frame.frame_index} not greater than previous {last_index}",
                    line_no,
                )
            if frame.timestamp_ms < last_ts:
                raise OrderError(
                    f"timestamp_ms {frame.timestamp_ms} decreased from {last_ts}",
                    line_no,
                )
            last_index = frame.frame_index
            last_ts = frame.timestamp_ms
            yield frame

    return header, frames()


def read_stream(path_or_fh) -> tuple[StreamHeader, Iterator[FrameRecord]]:
    """parse_stream over a path or an open text handle; file stays lazy."""
    if hasattr(path_or_fh, "read"):
        return parse_stream(path_or_fh)
    fh = open(path_or_fh, encoding="utf-8")
    header, frames = parse_stream(fh)

    def closing() -> Iterator[FrameRecord]:
        try:
            yield from frames
        finally:
            fh.close()

    return header, closing()
