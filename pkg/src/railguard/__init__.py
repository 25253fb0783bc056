"""Railway proximity-alert engine.

Consumes per-frame object detections over a line-delimited JSON wire format,
reconstructs the track centerline, measures metric distance from persons and
moving objects to the track, and raises debounced alerts when the distance
threshold is breached. Ships an evaluation harness (IoU matching, PR/F1/AP
curves, comparison tables) and a deterministic scenario generator.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .calibration import (
    Calibration,
    HomographyCalibration,
    ScalarCalibration,
    metric_distance,
    parse_calibration,
    project_to_ground,
)
from .geometry import BoundingBox, Point, Polyline, bbox_center, euclidean_distance, iou, point_to_polyline_distance
from .ingest import (
    CLASS_LABELS,
    Detection,
    FrameRecord,
    StreamHeader,
    check_normalization,
    parse_stream,
    resample_indices,
    write_stream,
)
from .metrics import (
    CurvePoint,
    GroundTruthFrame,
    MatchResult,
    average_precision,
    f1_confidence_curve,
    match_detections,
    pr_curve,
)
from .pipeline import (
    AlertEvent,
    AlertState,
    PipelineConfig,
    ProximityStatus,
    RunSummary,
    build_track_centerline,
    classify_frame,
    run_stream,
    step_alert_state,
)
from .report import MethodRow, render_comparison_csv, render_comparison_table
from .simgen import ActorSpec, GroundTruthBundle, NoiseSpec, Scenario, breach_oracle, generate

__version__ = "0.1.0"
