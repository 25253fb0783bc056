"""Adapter command line.

    railguard-adapter --video clip.avi --model motion --frames 1000 \
        --map moving=person --track-sidecar track.json --min-conf 0.25

Failures (unreadable video, model load, bad sidecar) exit nonzero with one
machine-readable error JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from .adapter import AdapterConfig, VideoError, run_adapter
from .detectors import ModelLoadError
from .sidecar import EMPTY_SIDECAR, SidecarError, TrackSidecar

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VIDEO = 3
EXIT_MODEL = 4


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": {"kind": kind, "message": message}}) + "\n")
    return code


def _parse_map(entries: list[str]) -> dict[str, str]:
    mapping = {}
    for entry in entries:
        source, sep, target = entry.partition("=")
        if not sep or not source or not target:
            raise ValueError(f"--map expects detector-label=wire-class, got {entry!r}")
        mapping[source] = target
    return mapping


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="railguard-adapter",
        description="Run a detector over a video and emit the detection wire format",
    )
    parser.add_argument("--video", required=True, metavar="PATH")
    parser.add_argument(
        "--model",
        default="motion",
        metavar="NAME",
        help="'motion', 'none', or 'torchvision:<model>' (default: motion)",
    )
    parser.add_argument(
        "--frames",
        type=int,
        default=None,
        metavar="M",
        help="resample to M frames (default: every source frame)",
    )
    parser.add_argument(
        "--map",
        action="append",
        default=None,
        metavar="LABEL=CLASS",
        help="detector label to wire class, repeatable (default: moving=object)",
    )
    parser.add_argument("--track-sidecar", metavar="PATH", help="track-box annotation JSON")
    parser.add_argument("--min-conf", type=float, default=0.25, help="confidence floor")
    parser.add_argument("--source-id", default="", help="header source_id override")
    parser.add_argument("--out", metavar="PATH", help="write the stream here instead of stdout")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        class_map = _parse_map(args.map) if args.map else {"moving": "object"}
        sidecar = TrackSidecar.load(args.track_sidecar) if args.track_sidecar else EMPTY_SIDECAR
        cfg = AdapterConfig(
            video_path=args.video,
            model=args.model,
            target_frames=args.frames,
            class_map=class_map,
            confidence_floor=args.min_conf,
            track_sidecar=sidecar,
            source_id=args.source_id,
        )
    except (ValueError, SidecarError) as exc:
        return _fail("bad_arguments", str(exc), EXIT_USAGE)

    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8") as fh:
                run_adapter(cfg, fh)
        else:
            run_adapter(cfg, sys.stdout)
    except ModelLoadError as exc:
        return _fail("model_load_failed", str(exc), EXIT_MODEL)
    except VideoError as exc:
        return _fail("video_unreadable", str(exc), EXIT_VIDEO)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
