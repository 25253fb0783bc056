"""Benchmark: compiled geometry kernels vs the pure-Python fallback.

Run from the repo root after an editable install:

    python3 benchmarks/bench_kernels.py
"""

import random
import time

from railguard._kernels import available_backends


def _timed(fn, reps=3):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_backend(backend, workload):
    points, segments, boxes, polyline = workload

    def run_segments():
        dist = backend.point_segment_distance
        for (px, py), (ax, ay, bx, by) in zip(points, segments):
            dist(px, py, ax, ay, bx, by)

    def run_iou():
        iou = backend.iou
        for a, b in boxes:
            iou(a[0], a[1], a[2], a[3], b[0], b[1], b[2], b[3])

    def run_polyline():
        dist = backend.point_polyline_distance
        xs, ys = polyline
        for px, py in points:
            dist(px, py, xs, ys)

    return {
        "segment distance": _timed(run_segments),
        "iou": _timed(run_iou),
        "polyline distance": _timed(run_polyline),
    }


def make_workload(n=200_000, rng=None):
    rng = rng or random.Random(7)
    points = [(rng.uniform(0, 1000), rng.uniform(0, 1000)) for _ in range(n)]
    segments = [
        (rng.uniform(0, 1000), rng.uniform(0, 1000), rng.uniform(0, 1000), rng.uniform(0, 1000))
        for _ in range(n)
    ]

    def box():
        x1, y1 = rng.uniform(0, 900), rng.uniform(0, 900)
        return (x1, y1, x1 + rng.uniform(1, 100), y1 + rng.uniform(1, 100))

    boxes = [(box(), box()) for _ in range(n)]
    verts = sorted(rng.uniform(0, 1000) for _ in range(8))
    polyline = (verts, [rng.uniform(0, 1000) for _ in verts])
    return points[: n // 10], segments[: n // 10], boxes[: n // 10], polyline


def main():
    backends = available_backends()
    if len(backends) < 2:
        print("native backend not built; benchmarking pure backend only")
    workload = make_workload()
    results = {b.BACKEND: bench_backend(b, workload) for b in backends}
    names = sorted(next(iter(results.values())))
    width = max(len(n) for n in names) + 2
    header = "kernel".ljust(width) + "".join(f"{b:>12}" for b in results)
    if "native" in results and "pure" in results:
        header += f"{'speedup':>12}"
    print(header)
    for name in names:
        row = name.ljust(width)
        for backend_name in results:
            row += f"{results[backend_name][name] * 1000:>10.2f}ms"
        if "native" in results and "pure" in results:
            row += f"{results['pure'][name] / results['native'][name]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
