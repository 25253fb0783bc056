"""Shared test utilities: independent oracles and random stream builders.

Oracles here deliberately re-derive results from first principles (dense
sampling, rasterization, naive recounting) instead of calling the code paths
they check.
"""

import random

import numpy as np

from railguard.geometry import BoundingBox
from railguard.ingest import CLASS_LABELS, Detection, FrameRecord, StreamHeader


# --- geometry oracles ---------------------------------------------------------

def dense_polyline_distance(point, vertices, samples=100_000):
    """Min distance to a polyline by brute-force sampling of every segment."""
    px, py = point
    if len(vertices) == 1:
        return float(np.hypot(vertices[0][0] - px, vertices[0][1] - py))
    best = np.inf
    for (ax, ay), (bx, by) in zip(vertices, vertices[1:]):
        t = np.linspace(0.0, 1.0, samples)
        xs = ax + t * (bx - ax)
        ys = ay + t * (by - ay)
        best = min(best, float(np.min(np.hypot(xs - px, ys - py))))
    return best


def raster_iou(a, b):
    """IoU of integer-coordinate boxes by counting unit pixels."""
    xs = [a[0], a[2], b[0], b[2]]
    ys = [a[1], a[3], b[1], b[3]]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0 or y1 == y0:
        return 0.0
    gx, gy = np.meshgrid(np.arange(x0, x1), np.arange(y0, y1), indexing="ij")

    def inside(box):
        return (gx >= box[0]) & (gx < box[2]) & (gy >= box[1]) & (gy < box[3])

    in_a = inside(a)
    in_b = inside(b)
    union = int(np.count_nonzero(in_a | in_b))
    if union == 0:
        return 0.0
    return float(np.count_nonzero(in_a & in_b)) / float(union)


# --- metrics oracles ------------------------------------------------------------

def oracle_iou(a, b):
    """Independent IoU formulation (area-based, not the kernel's)."""
    ix0 = max(a.x1, b.x1)
    iy0 = max(a.y1, b.y1)
    ix1 = min(a.x2, b.x2)
    iy1 = min(a.y2, b.y2)
    inter = max(0.0, ix1 - ix0) * max(0.0, iy1 - iy0)
    area_a = (a.x2 - a.x1) * (a.y2 - a.y1)
    area_b = (b.x2 - b.x1) * (b.y2 - b.y1)
    union = area_a + area_b - inter
    return 0.0 if union <= 0.0 else inter / union


def naive_match_counts(preds, gts, iou_threshold, class_label, conf_floor):
    """(tp, fp, gt_count) by naive greedy re-matching above a confidence floor."""
    order = sorted(
        (i for i, p in enumerate(preds)
         if p.class_label == class_label and p.confidence >= conf_floor),
        key=lambda i: (-preds[i].confidence, preds[i].bbox.x1, preds[i].bbox.y1, i),
    )
    gt_boxes = [(j, box) for j, (label, box) in enumerate(gts) if label == class_label]
    used = set()
    tp = 0
    for i in order:
        best_j, best = None, 0.0
        for j, box in gt_boxes:
            if j in used:
                continue
            overlap = oracle_iou(preds[i].bbox, box)
            if overlap > best:
                best, best_j = overlap, j
        if best_j is not None and best >= iou_threshold:
            used.add(best_j)
            tp += 1
    return tp, len(order) - tp, len(gt_boxes)


def oracle_curve_point(frame_pairs, threshold, iou_threshold, class_label):
    """(precision, recall) by full per-threshold recount over all frames."""
    tp = fp = gt_total = 0
    for preds, gts in frame_pairs:
        t, f, g = naive_match_counts(preds, gts, iou_threshold, class_label, threshold)
        tp += t
        fp += f
        gt_total += g
    precision = 1.0 if tp + fp == 0 else tp / (tp + fp)
    recall = 0.0 if gt_total == 0 else tp / gt_total
    return precision, recall


def oracle_average_precision(records, gt_total):
    """AP by exhaustive prefix enumeration and stepwise envelope integration.

    records: (confidence, is_tp) tuples in dataset frame order.
    """
    if gt_total == 0:
        return 0.0
    ranked = sorted(range(len(records)), key=lambda i: -records[i][0])
    points = []
    tp = 0
    for rank, idx in enumerate(ranked, start=1):
        if records[idx][1]:
            tp += 1
        points.append((tp / gt_total, tp / rank))
    ap = 0.0
    prev_recall = 0.0
    for recall in sorted({r for r, _ in points}):
        if recall <= prev_recall:
            continue
        envelope = max(p for r, p in points if r >= recall)
        ap += (recall - prev_recall) * envelope
        prev_recall = recall
    return ap


# --- stream builders --------------------------------------------------------------

def random_stream(seed, n_frames=50, max_detections=4):
    """A schema-valid randomized stream for round-trip and pipeline tests."""
    rng = random.Random(seed)
    header = StreamHeader(
        source_id=f"random-{seed}",
        frame_width=rng.choice([640, 1280, 1920]),
        frame_height=rng.choice([480, 720, 1080]),
        fps=float(rng.choice([10, 25, 30])),
    )
    frames = []
    ts = 0
    index = 0
    for _ in range(n_frames):
        detections = []
        for _ in range(rng.randint(0, max_detections)):
            x1 = rng.uniform(0, header.frame_width - 10)
            y1 = rng.uniform(0, header.frame_height - 10)
            detections.append(
                Detection(
                    rng.choice(CLASS_LABELS),
                    BoundingBox(x1, y1, x1 + rng.uniform(0, 50), y1 + rng.uniform(0, 50)),
                    rng.random(),
                )
            )
        digest = None
        if rng.random() < 0.5:
            lo = rng.random()
            digest = (lo, min(1.0, lo + rng.random() * (1 - lo)))
        frames.append(FrameRecord(index, ts, tuple(detections), digest))
        index += rng.randint(1, 3)
        ts += rng.randint(0, 90)
    return header, frames
