"""Track-box sidecar annotations.

The paper-style track class needs a custom-trained model the public cannot
obtain, so track boxes may instead come from an annotation file:

    {"static": [[x1,y1,x2,y2], ...],
     "frames": {"12": [[x1,y1,x2,y2], ...]}}

`static` boxes apply to every frame; a `frames` entry (keyed by the source
frame index) replaces them for that frame. Sidecar boxes are annotations, so
they carry confidence 1.0.
"""

from __future__ import annotations

import json

Box = tuple[float, float, float, float]


class SidecarError(Exception):
    pass


def _check_box(raw) -> Box:
    if not (isinstance(raw, list) and len(raw) == 4):
        raise SidecarError(f"track box must be [x1,y1,x2,y2], got {raw!r}")
    x1, y1, x2, y2 = (float(v) for v in raw)
    if x2 < x1 or y2 < y1:
        raise SidecarError(f"track box corners out of order: {raw!r}")
    return (x1, y1, x2, y2)


class TrackSidecar:
    def __init__(self, static: list[Box], per_frame: dict[int, list[Box]]):
        self.static = static
        self.per_frame = per_frame

    @classmethod
    def load(cls, path: str) -> "TrackSidecar":
        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SidecarError(f"cannot read track sidecar {path}: {exc}") from exc
        if not isinstance(payload, dict):
            raise SidecarError("track sidecar must be a JSON object")
        static = [_check_box(b) for b in payload.get("static", [])]
        per_frame = {
            int(index): [_check_box(b) for b in boxes]
            for index, boxes in payload.get("frames", {}).items()
        }
        return cls(static, per_frame)

    def boxes_for(self, source_index: int) -> list[Box]:
        return self.per_frame.get(source_index, self.static)


EMPTY_SIDECAR = TrackSidecar([], {})
