# cython: language_level=3, boundscheck=False, cdivision=True
"""Compiled geometry kernels; mirrors `_pure` exactly."""

from libc.math cimport sqrt, INFINITY

BACKEND = "native"


cdef inline double _dist(double dx, double dy) nogil:
    return sqrt(dx * dx + dy * dy)


def euclidean(double ax, double ay, double bx, double by):
    return _dist(ax - bx, ay - by)


cdef inline double _seg_dist(double px, double py,
                             double ax, double ay,
                             double bx, double by) nogil:
    cdef double dx = bx - ax
    cdef double dy = by - ay
    cdef double seg = dx * dx + dy * dy
    cdef double t
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


def point_segment_distance(double px, double py,
                           double ax, double ay,
                           double bx, double by):
    return _seg_dist(px, py, ax, ay, bx, by)


def point_polyline_distance(double px, double py, xs, ys):
    cdef Py_ssize_t n = len(xs)
    cdef Py_ssize_t i
    cdef double best = INFINITY
    cdef double d, x0, y0, x1, y1
    if n == 1:
        return _dist(px - <double>xs[0], py - <double>ys[0])
    x1 = xs[0]
    y1 = ys[0]
    for i in range(n - 1):
        x0 = x1
        y0 = y1
        x1 = xs[i + 1]
        y1 = ys[i + 1]
        d = _seg_dist(px, py, x0, y0, x1, y1)
        if d < best:
            best = d
    return best


def iou(double ax1, double ay1, double ax2, double ay2,
        double bx1, double by1, double bx2, double by2):
    cdef double iw = min(ax2, bx2) - max(ax1, bx1)
    if iw <= 0.0:
        iw = 0.0
    cdef double ih = min(ay2, by2) - max(ay1, by1)
    if ih <= 0.0:
        ih = 0.0
    cdef double inter = iw * ih
    cdef double union_ = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    if union_ <= 0.0:
        return 0.0
    return inter / union_
