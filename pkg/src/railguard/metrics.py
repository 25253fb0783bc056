"""Detection-evaluation harness: IoU matching, PR/F1 curves, average precision.

Matching is greedy in descending confidence with fully pinned tie-breaks so
results are reproducible bit-for-bit across runs and platforms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .geometry import BoundingBox, iou as box_iou
from .ingest import Detection

log = logging.getLogger("railguard.metrics")

DEFAULT_IOU_THRESHOLD = 0.5
CONFIDENCE_GRID = tuple(i / 100 for i in range(101))


@dataclass(frozen=True)
class GroundTruthFrame:
    frame_index: int
    boxes: tuple[tuple[str, BoundingBox], ...]


@dataclass(frozen=True)
class MatchedPair:
    pred_index: int
    gt_index: int
    iou: float
    confidence: float


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching one frame's predictions against its ground truth.

    `records` holds (confidence, matched) per evaluated prediction in greedy
    order; it is what threshold sweeps and AP consume.
    """

    true_positives: int
    false_positives: int
    false_negatives: int
    pairs: tuple[MatchedPair, ...]
    records: tuple[tuple[float, bool], ...]

    @property
    def ground_truth_count(self) -> int:
        return self.true_positives + self.false_negatives


@dataclass(frozen=True)
class CurvePoint:
    threshold: float
    precision: float
    recall: float
    f1: float


def _greedy_order(preds: Sequence[Detection], class_filter: str) -> list[int]:
    indexed = [i for i, p in enumerate(preds) if p.class_label == class_filter]
    # descending confidence; ties by ascending x1 then y1, then input order
    indexed.sort(key=lambda i: (-preds[i].confidence, preds[i].bbox.x1, preds[i].bbox.y1, i))
    return indexed


def match_detections(
    preds: Sequence[Detection],
    gt: Sequence[tuple[str, BoundingBox]],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
    class_filter: str = "person",
) -> MatchResult:
    """Greedily match predictions of one class against ground-truth boxes.

    Each prediction (in descending confidence) takes the unmatched same-class
    ground-truth box of highest IoU when that IoU reaches the threshold;
    leftovers are false positives / false negatives.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in [0, 1], got {iou_threshold}")
    gt_indices = [j for j, (label, _) in enumerate(gt) if label == class_filter]
    taken: set[int] = set()
    pairs: list[MatchedPair] = []
    records: list[tuple[float, bool]] = []
    for i in _greedy_order(preds, class_filter):
        pred = preds[i]
        best_j = -1
        best_iou = 0.0
        for j in gt_indices:
            if j in taken:
                continue
            overlap = box_iou(pred.bbox, gt[j][1])
            if overlap > best_iou:
                best_iou = overlap
                best_j = j
        if best_j >= 0 and best_iou >= iou_threshold and best_iou > 0.0:
            taken.add(best_j)
            pairs.append(MatchedPair(i, best_j, best_iou, pred.confidence))
            records.append((pred.confidence, True))
        else:
            records.append((pred.confidence, False))
    tp = len(pairs)
    return MatchResult(
        true_positives=tp,
        false_positives=len(records) - tp,
        false_negatives=len(gt_indices) - tp,
        pairs=tuple(pairs),
        records=tuple(records),
    )


def _flatten(matches: Iterable[MatchResult]) -> tuple[np.ndarray, np.ndarray, int]:
    confs: list[float] = []
    flags: list[bool] = []
    gt_total = 0
    for m in matches:
        gt_total += m.ground_truth_count
        for conf, matched in m.records:
            confs.append(conf)
            flags.append(matched)
    return np.asarray(confs, dtype=float), np.asarray(flags, dtype=bool), gt_total


def _point(threshold: float, tp: int, fp: int, gt_total: int) -> CurvePoint:
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 0.0 if gt_total == 0 else tp / gt_total
    denom = precision + recall
    f1 = 0.0 if denom == 0 else 2.0 * precision * recall / denom
    return CurvePoint(threshold, precision, recall, f1)


def pr_curve(
    matches: Sequence[MatchResult], thresholds: Sequence[float]
) -> list[CurvePoint]:
    """Precision/recall/F1 at each confidence threshold.

    Counts only predictions with confidence >= t; precision at zero
    predictions is defined as 1.0 so the curve stays total.
    """
    if len(thresholds) == 0:
        raise ValueError("threshold grid must be non-empty")
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("threshold grid must be sorted ascending")
    confs, flags, gt_total = _flatten(matches)
    points = []
    for t in thresholds:
        above = confs >= t
        tp = int(np.count_nonzero(above & flags))
        fp = int(np.count_nonzero(above & ~flags))
        points.append(_point(float(t), tp, fp, gt_total))
    return points


def f1_confidence_curve(
    matches: Sequence[MatchResult], thresholds: Sequence[float] = CONFIDENCE_GRID
) -> list[CurvePoint]:
    """F1 over the standard 0.00..1.00 step 0.01 confidence grid."""
    return pr_curve(matches, thresholds)


def average_precision(matches: Sequence[MatchResult]) -> float:
    """All-point interpolated AP: area under the precision envelope over recall.

    Dataset-level predictions are ranked by descending confidence (stable in
    frame order for ties). AP is 0 when no ground truth exists.
    """
    confs, flags, gt_total = _flatten(matches)
    if gt_total == 0:
        log.warning("average_precision: no ground truth boxes; AP defined as 0")
        return 0.0
    if confs.size == 0:
        return 0.0
    order = np.argsort(-confs, kind="stable")
    tp_cum = np.cumsum(flags[order].astype(np.int64))
    ranks = np.arange(1, confs.size + 1)
    precision = tp_cum / ranks
    recall = tp_cum / gt_total
    # precision envelope: best precision at any recall >= r
    mrec = np.concatenate(([0.0], recall))
    mpre = np.concatenate(([1.0], precision))
    for k in range(mpre.size - 2, -1, -1):
        if mpre[k] < mpre[k + 1]:
            mpre[k] = mpre[k + 1]
    steps = np.nonzero(np.diff(mrec) > 0)[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def match_stream_frames(
    pred_frames: Mapping[int, Sequence[Detection]],
    gt_frames: Mapping[int, Sequence[tuple[str, BoundingBox]]],
    iou_threshold: float = DEFAULT_IOU_THRESHOLD,
    class_filter: str = "person",
) -> list[MatchResult]:
    """Match per frame over the union of prediction and ground-truth frames."""
    results = []
    for frame_index in sorted(set(pred_frames) | set(gt_frames)):
        results.append(
            match_detections(
                pred_frames.get(frame_index, ()),
                gt_frames.get(frame_index, ()),
                iou_threshold,
                class_filter,
            )
        )
    return results
