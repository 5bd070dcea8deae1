"""Benchmark the compiled kernels against the pure-NumPy fallback.

The backend is frozen at import time from STYLEFORGE_BACKEND, so each backend
is measured in its own subprocess and the parent prints a comparison table.

    python3 benchmarks/bench_kernels.py             # both backends
    python3 benchmarks/bench_kernels.py --backend numpy
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time


def _time(fn, iters: int, warmup: int = 2) -> float:
    for _ in range(warmup):
        fn()
    t0 = time.perf_counter()
    for _ in range(iters):
        fn()
    return (time.perf_counter() - t0) / iters * 1000.0  # ms


def run_worker(backend: str) -> dict:
    os.environ["STYLEFORGE_BACKEND"] = backend
    import numpy as np

    from styleforge.fixtures import fixture_track
    from styleforge.kernels import (backend_name, conv2d_backward,
                                    conv2d_forward, im2col)
    from styleforge.simcore import CameraConfig, VehicleState, render_observation

    assert backend_name() == backend, f"backend flag ignored: {backend_name()}"
    geom = fixture_track("test")
    camera = CameraConfig()
    results = {}

    # camera render: one full 64x64 ground-plane ray cast
    states = []
    for s in np.linspace(0.0, geom.total_length, 64, endpoint=False):
        x, y = geom.point_at(float(s))
        states.append(VehicleState(x=x, y=y, heading=geom.heading_at(float(s)),
                                   speed=15.0))

    def render_all():
        for st in states:
            render_observation(st, geom, camera)

    results["render 64 frames"] = {"ms": _time(render_all, iters=5), "iters": 5}

    # centerline projection: one query per call, 5000 calls
    rng = np.random.default_rng(0)
    xs = rng.uniform(-50.0, 650.0, size=5000)
    ys = rng.uniform(-50.0, 650.0, size=5000)

    def nearest_all():
        for x, y in zip(xs, ys):
            geom.nearest(float(x), float(y))

    results["nearest x5000"] = {"ms": _time(nearest_all, iters=3), "iters": 3}

    # convolution: the dominant training layer (batch 64, 24->36, 30x30, k5 s2)
    x = rng.standard_normal((64, 24, 30, 30))
    w = rng.standard_normal((36, 24, 5, 5)) * 0.05
    b = rng.standard_normal(36) * 0.01
    y, cols = conv2d_forward(x, w, b, 2)
    g = rng.standard_normal(y.shape)

    results["conv2d forward"] = {
        "ms": _time(lambda: conv2d_forward(x, w, b, 2), iters=10), "iters": 10}
    results["conv2d backward"] = {
        "ms": _time(lambda: conv2d_backward(x.shape, w, 2, cols, g), iters=10),
        "iters": 10}
    results["im2col"] = {
        "ms": _time(lambda: im2col(x, 5, 5, 2), iters=10), "iters": 10}

    return {"backend": backend, "results": results}


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--backend", choices=["numba", "numpy"],
                    help="measure a single backend and print JSON")
    args = ap.parse_args()

    if args.backend:
        print(json.dumps(run_worker(args.backend)))
        return 0

    reports = {}
    for backend in ("numba", "numpy"):
        env = dict(os.environ, STYLEFORGE_BACKEND=backend)
        print(f"measuring {backend} backend ...", file=sys.stderr, flush=True)
        out = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--backend", backend],
            env=env, capture_output=True, text=True, check=True)
        reports[backend] = json.loads(out.stdout)["results"]

    names = list(reports["numba"])
    width = max(len(n) for n in names)
    print(f"{'workload':<{width}}  {'numba ms':>10}  {'numpy ms':>10}  {'speedup':>8}")
    for name in names:
        a = reports["numba"][name]["ms"]
        b = reports["numpy"][name]["ms"]
        print(f"{name:<{width}}  {a:>10.2f}  {b:>10.2f}  {b / a:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
