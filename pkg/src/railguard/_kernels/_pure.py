"""Pure-Python geometry kernels.

Reference backend; `_native` is the compiled mirror of these functions.
Formulas and operation order must stay identical in both so results are
bit-for-bit interchangeable.
"""

import math

BACKEND = "pure"


def _dist(dx, dy):
    # sqrt form (not hypot): C sqrt is correctly rounded, so the compiled
    # backend produces bit-identical values; coordinates are pixels/meters,
    # far from the overflow range where hypot would matter
    return math.sqrt(dx * dx + dy * dy)


def euclidean(ax, ay, bx, by):
    return _dist(ax - bx, ay - by)


def point_segment_distance(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    seg = dx * dx + dy * dy
    if seg == 0.0:
        return _dist(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg
    # measure clamped cases against the endpoint itself: interpolating
    # a + 1.0*(b-a) can miss b by a cancellation error
    if t <= 0.0:
        return _dist(px - ax, py - ay)
    if t >= 1.0:
        return _dist(px - bx, py - by)
    return _dist(px - (ax + t * dx), py - (ay + t * dy))


def point_polyline_distance(px, py, xs, ys):
    n = len(xs)
    if n == 1:
        return _dist(px - xs[0], py - ys[0])
    best = math.inf
    for i in range(n - 1):
        d = point_segment_distance(px, py, xs[i], ys[i], xs[i + 1], ys[i + 1])
        if d < best:
            best = d
    return best


def iou(ax1, ay1, ax2, ay2, bx1, by1, bx2, by2):
    iw = min(ax2, bx2) - max(ax1, bx1)
    if iw <= 0.0:
        iw = 0.0
    ih = min(ay2, by2) - max(ay1, by1)
    if ih <= 0.0:
        ih = 0.0
    inter = iw * ih
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    if union <= 0.0:
        # two zero-area boxes: defined as 0 to keep matching total
        return 0.0
    return inter / union
