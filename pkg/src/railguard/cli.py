"""Command-line frontend: analyze, evaluate, simulate, report, serve.

Exit codes: 0 success (alerts are data, not errors), 2 usage, 3 parse/schema
failure, 4 calibration failure, 5 empty ground truth. Diagnostic verbosity is
controlled by the RAILGUARD_LOG environment variable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import calibration as cal_mod
from . import metrics as metrics_mod
from . import report as report_mod
from . import simgen as simgen_mod
from .errors import InvalidCalibration, ParseError, RailguardError, RangeError
from .ingest import dump_stream, read_stream
from .pipeline import (
    PipelineConfig,
    StreamProcessor,
    build_track_centerline,
    format_alert,
    format_status,
    keyed_objects,
)
from .serve import run_service

log = logging.getLogger("railguard.cli")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CALIBRATION = 4
EXIT_EMPTY_GT = 5

_DISTANCE_MODES = {"center": "center_to_center", "polyline": "center_to_polyline"}


def _configure_logging() -> None:
    level_name = os.environ.get("RAILGUARD_LOG", "warning").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(
        level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )


def _usage_error(parser: argparse.ArgumentParser, message: str) -> int:
    print(parser.format_usage(), file=sys.stderr, end="")
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _require_file(parser, path: str, what: str) -> int | None:
    if path != "-" and not Path(path).is_file():
        return _usage_error(parser, f"{what} not found: {path}")
    return None


def _load_calibration(path: str | None):
    if path is None:
        return cal_mod.default_calibration()
    return cal_mod.load_calibration(path)


def _pipeline_config(args) -> PipelineConfig:
    return PipelineConfig(
        threshold_m=args.threshold_m,
        debounce_frames=args.debounce,
        release_frames=args.release,
        hysteresis_m=args.hysteresis_m,
        distance_mode=_DISTANCE_MODES[args.distance_mode],
    )


def _open_detections(path: str):
    if path == "-":
        return read_stream(sys.stdin)
    return read_stream(path)


# --- analyze -----------------------------------------------------------------

def _overlay_record(frame, statuses, cfg) -> dict:
    centerline = build_track_centerline(frame, cfg)
    by_key = {key: (center, det) for key, center, det in keyed_objects(frame, cfg)}
    objects = []
    for status in statuses:
        center, det = by_key[status.object_key]
        objects.append(
            {
                "object_key": status.object_key,
                "bbox": list(det.bbox),
                "center": [center.x, center.y],
                "distance_m": status.distance_m,
                "breach": status.breach,
            }
        )
    return {
        "type": "overlay",
        "frame_index": frame.frame_index,
        "centerline": None
        if centerline is None
        else [[v.x, v.y] for v in centerline.vertices],
        "track_boxes": [
            list(d.bbox) for d in frame.detections if d.class_label == "track"
        ],
        "objects": objects,
    }


def cmd_analyze(parser, args) -> int:
    if (err := _require_file(parser, args.detections, "detections stream")) is not None:
        return err
    if args.calibration and (err := _require_file(parser, args.calibration, "calibration file")) is not None:
        return err
    if (args.emit_status or args.emit_overlay) and not args.out:
        return _usage_error(parser, "--emit-status/--emit-overlay require --out DIR")
    try:
        cal = _load_calibration(args.calibration)
    except (RailguardError, OSError) as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    cfg = _pipeline_config(args)

    out_dir = Path(args.out) if args.out else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
    alert_fh = open(out_dir / "alerts.jsonl", "w", encoding="utf-8") if out_dir else sys.stdout
    status_fh = (
        open(out_dir / "status.jsonl", "w", encoding="utf-8")
        if out_dir and args.emit_status
        else None
    )
    overlay_fh = (
        open(out_dir / "overlay.jsonl", "w", encoding="utf-8")
        if out_dir and args.emit_overlay
        else None
    )
    try:
        header, frames = _open_detections(args.detections)
        processor = StreamProcessor(header, cal, cfg)
        for frame in frames:
            statuses, events = processor.process_frame(frame)
            for event in events:
                alert_fh.write(format_alert(event) + "\n")
            if status_fh is not None:
                for status in statuses:
                    status_fh.write(format_status(status) + "\n")
            if overlay_fh is not None:
                overlay_fh.write(
                    json.dumps(_overlay_record(frame, statuses, cfg), separators=(",", ":"))
                    + "\n"
                )
    except ParseError as exc:
        print(f"stream error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    finally:
        for fh in (status_fh, overlay_fh):
            if fh is not None:
                fh.close()
        if out_dir is not None:
            alert_fh.close()
    s = processor.summary
    log.info(
        "processed %d frames: %d breaches, %d raised, %d cleared, %d unknown distances",
        s.frames, s.breaches, s.alerts_raised, s.alerts_cleared, s.unknown_distances,
    )
    if out_dir is not None:
        (out_dir / "summary.json").write_text(
            json.dumps(
                {
                    "source_id": header.source_id,
                    "frames": s.frames,
                    "statuses": s.statuses,
                    "breaches": s.breaches,
                    "unknown_distances": s.unknown_distances,
                    "alerts_raised": s.alerts_raised,
                    "alerts_cleared": s.alerts_cleared,
                    "timings_s": s.timings_s,
                },
                indent=2,
            )
            + "\n",
            encoding="utf-8",
        )
    return EXIT_OK


# --- evaluate -----------------------------------------------------------------

def cmd_evaluate(parser, args) -> int:
    for path, what in ((args.detections, "predictions stream"), (args.gt, "ground-truth stream")):
        if (err := _require_file(parser, path, what)) is not None:
            return err
    try:
        pred_header, pred_frames = _open_detections(args.detections)
        preds = {f.frame_index: list(f.detections) for f in pred_frames}
        gt_header, gt_frames = read_stream(args.gt)
        gt = {
            f.frame_index: [(d.class_label, d.bbox) for d in f.detections]
            for f in gt_frames
        }
    except ParseError as exc:
        print(f"stream error: {exc}", file=sys.stderr)
        return EXIT_PARSE

    matches = metrics_mod.match_stream_frames(preds, gt, args.iou, args.class_label)
    ap = metrics_mod.average_precision(matches)
    grid = metrics_mod.CONFIDENCE_GRID
    curve = metrics_mod.pr_curve(matches, grid)
    gt_total = sum(m.ground_truth_count for m in matches)
    doc = {
        "class": args.class_label,
        "iou_threshold": args.iou,
        "counts": {
            "true_positives": sum(m.true_positives for m in matches),
            "false_positives": sum(m.false_positives for m in matches),
            "false_negatives": sum(m.false_negatives for m in matches),
            "ground_truth": gt_total,
            "predictions": sum(len(m.records) for m in matches),
        },
        "ap": ap,
        "config": {
            "ap_method": "all_point_interpolation",
            "zero_prediction_precision": 1.0,
            "matching": "greedy_confidence_desc",
            "grid": "0.00:1.00:0.01",
        },
        "curve": [
            {
                "threshold": p.threshold,
                "precision": p.precision,
                "recall": p.recall,
                "f1": p.f1,
            }
            for p in curve
        ],
    }
    rendered = json.dumps(doc, indent=2)
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "metrics.json").write_text(rendered + "\n", encoding="utf-8")
        _write_curve_csv(out_dir / "pr_curve.csv", "recall,precision", ((p.recall, p.precision) for p in curve))
        _write_curve_csv(out_dir / "f1_curve.csv", "confidence,f1", ((p.threshold, p.f1) for p in curve))
    else:
        print(rendered)
    if gt_total == 0:
        log.warning("ground truth is empty for class %r; AP emitted as 0", args.class_label)
        return EXIT_EMPTY_GT
    return EXIT_OK


def _write_curve_csv(path: Path, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for a, b in rows:
            fh.write(f"{a!r},{b!r}\n")


# --- simulate -----------------------------------------------------------------

def cmd_simulate(parser, args) -> int:
    if (err := _require_file(parser, args.scenario, "scenario file")) is not None:
        return err
    try:
        scenario = simgen_mod.load_scenario(args.scenario)
    except (ParseError, InvalidCalibration) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    header, frames, bundle = simgen_mod.generate(scenario)
    if not args.out:
        dump_stream(header, frames, sys.stdout)
        return EXIT_OK
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "stream.jsonl", "w", encoding="utf-8") as fh:
        dump_stream(header, frames, fh)
    with open(out_dir / "ground_truth.jsonl", "w", encoding="utf-8") as fh:
        dump_stream(header, simgen_mod.ground_truth_frames(bundle), fh)
    intervals = {
        "threshold_m": args.threshold_m,
        "actors": [
            {
                "index": i,
                "class": actor.class_label,
                "breach_intervals": [
                    list(iv) for iv in bundle.breach_intervals(i, args.threshold_m)
                ],
            }
            for i, actor in enumerate(scenario.actors)
        ],
    }
    (out_dir / "breach_intervals.json").write_text(
        json.dumps(intervals, indent=2) + "\n", encoding="utf-8"
    )
    if bundle.clipped:
        log.warning("%d projected boxes were clipped to frame bounds", len(bundle.clipped))
    return EXIT_OK


# --- report --------------------------------------------------------------------

_THIRD_KEY = {"track_detection": "computational_time_s", "object_detection": "f1_score"}


def cmd_report(parser, args) -> int:
    if (err := _require_file(parser, args.rows, "rows file")) is not None:
        return err
    kind = args.kind
    try:
        raw = json.loads(Path(args.rows).read_text(encoding="utf-8"))
        rows = [
            report_mod.MethodRow(
                method=entry["method"],
                accuracy=float(entry["accuracy"]),
                precision_recall=float(entry["precision_recall"]),
                third=float(entry[_THIRD_KEY[kind]]),
            )
            for entry in raw
        ]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"rows error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        text = report_mod.render_comparison_table(rows, kind)
        csv_text = report_mod.render_comparison_csv(rows, kind)
    except RangeError as exc:
        print(f"rows error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "table.txt").write_text(text, encoding="utf-8")
        (out_dir / "table.csv").write_text(csv_text, encoding="utf-8")
    else:
        print(text, end="")
    return EXIT_OK


# --- serve ----------------------------------------------------------------------

def cmd_serve(parser, args) -> int:
    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        return _usage_error(parser, f"--listen must be HOST:PORT, got {args.listen!r}")
    if args.calibration and (err := _require_file(parser, args.calibration, "calibration file")) is not None:
        return err
    try:
        cal = _load_calibration(args.calibration)
    except (RailguardError, OSError) as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    cfg = _pipeline_config(args)
    run_service(host, int(port_text), cal, cfg, args.webhook, alert_writer=sys.stdout)
    return EXIT_OK


# --- parser wiring ---------------------------------------------------------------

def _add_pipeline_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--calibration", metavar="PATH", help="calibration JSON file")
    sub.add_argument("--threshold-m", type=float, default=1.0, help="alert distance threshold in meters")
    sub.add_argument("--debounce", type=int, default=3, help="consecutive breach frames before raising")
    sub.add_argument("--release", type=int, default=5, help="consecutive clear frames before clearing")
    sub.add_argument("--hysteresis-m", type=float, default=0.2, help="extra clearance margin in meters")
    sub.add_argument(
        "--distance-mode",
        choices=sorted(_DISTANCE_MODES),
        default="center",
        help="distance to nearest track-box center, or to the full centerline",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="railguard",
        description="Railway proximity-alert engine over detection streams",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_analyze = subs.add_parser("analyze", help="run the alert pipeline over a detection stream")
    p_analyze.add_argument("--detections", required=True, metavar="PATH|-", help="wire-format stream ('-' for stdin)")
    _add_pipeline_flags(p_analyze)
    p_analyze.add_argument("--emit-status", action="store_true", help="also write per-object status lines")
    p_analyze.add_argument("--emit-overlay", action="store_true", help="also write overlay geometry sidecar")
    p_analyze.add_argument("--out", metavar="DIR", help="write outputs into DIR instead of stdout")

    p_eval = subs.add_parser("evaluate", help="score predictions against ground truth")
    p_eval.add_argument("--detections", required=True, metavar="PATH|-")
    p_eval.add_argument("--gt", required=True, metavar="PATH")
    p_eval.add_argument("--iou", type=float, default=0.5, help="IoU threshold for matching")
    p_eval.add_argument("--class", dest="class_label", choices=["track", "person", "object"], default="person")
    p_eval.add_argument("--out", metavar="DIR")

    p_sim = subs.add_parser("simulate", help="generate a synthetic detection stream")
    p_sim.add_argument("--scenario", required=True, metavar="PATH")
    p_sim.add_argument("--threshold-m", type=float, default=1.0, help="threshold for the breach-interval document")
    p_sim.add_argument("--out", metavar="DIR")

    p_report = subs.add_parser("report", help="render method comparison tables")
    p_report.add_argument("--rows", required=True, metavar="PATH", help="JSON array of method rows")
    p_report.add_argument("--kind", choices=sorted(report_mod.TABLE_KINDS), required=True)
    p_report.add_argument("--out", metavar="DIR")

    p_serve = subs.add_parser("serve", help="network ingestion service")
    p_serve.add_argument("--listen", required=True, metavar="HOST:PORT")
    p_serve.add_argument("--webhook", metavar="URL", help="POST alert events to this URL")
    _add_pipeline_flags(p_serve)

    handlers = {
        "analyze": (p_analyze, cmd_analyze),
        "evaluate": (p_eval, cmd_evaluate),
        "simulate": (p_sim, cmd_simulate),
        "report": (p_report, cmd_report),
        "serve": (p_serve, cmd_serve),
    }
    parser.set_defaults(_handlers=handlers)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    sub_parser, handler = args._handlers[args.command]
    return handler(sub_parser, args)


if __name__ == "__main__":
    sys.exit(main())
