"""Throughput of one batch on the numba and pure-numpy kernel paths."""

from __future__ import annotations

import time

from . import _accel
from .core import DisparityConfig
from .pipeline import pair_batches, process_batch
from .synth import MVSEC_LIKE_RIG, generate_stereo_events, random_scene


def bench_batches(sizes=(15000, 30000), seed: int = 0, rig=MVSEC_LIKE_RIG):
    """One synthetic stream large enough for the biggest batch; returns {n: (left, right, vel)}."""
    spec = random_scene(seed, rig, num_events=max(sizes), overshoot=1.2)
    left, right, _, _ = generate_stereo_events(spec, rig)
    out = {}
    for n in sizes:
        pairs = pair_batches(left, right, n)
        if not pairs:
            raise RuntimeError(f"synthetic stream too short for a {n}-event batch")
        out[n] = (*pairs[0], spec.vel)
    return out


def time_batch(left, right, vel, rig, cfg, repeat: int = 3) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        process_batch(left, right, vel, rig, cfg)
        best = min(best, time.perf_counter() - t0)
    return best


def run_bench(sizes=(15000, 30000), repeat: int = 3, backends=None, cfg=None, seed: int = 0):
    """Rows of ``{backend, events, seconds, us_per_event, events_per_s}``.

    Each backend is warmed up once (numba compilation) before timing.
    """
    cfg = cfg or DisparityConfig()
    rig = MVSEC_LIKE_RIG
    batches = bench_batches(sizes, seed, rig)
    if backends is None:
        backends = ["numba", "numpy"] if _accel.HAVE_NUMBA else ["numpy"]
    saved = _accel.USE_NUMBA
    rows = []
    try:
        for name in backends:
            _accel.USE_NUMBA = name == "numba"
            left, right, vel = batches[min(sizes)]
            process_batch(left, right, vel, rig, cfg)
            for n in sizes:
                left, right, vel = batches[n]
                sec = time_batch(left, right, vel, rig, cfg, repeat)
                rows.append(
                    {
                        "backend": name,
                        "events": n,
                        "seconds": sec,
                        "us_per_event": 1e6 * sec / n,
                        "events_per_s": n / sec,
                    }
                )
    finally:
        _accel.USE_NUMBA = saved
    return rows


def format_rows(rows) -> str:
    lines = [f"{'backend':<8} {'events':>8} {'seconds':>9} {'us/event':>9} {'events/s':>11}"]
    for r in rows:
        lines.append(
            f"{r['backend']:<8} {r['events']:>8d} {r['seconds']:>9.4f} {r['us_per_event']:>9.2f} {r['events_per_s']:>11.0f}"
        )
    return "\n".join(lines)
