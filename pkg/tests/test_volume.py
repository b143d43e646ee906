import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evstereo.core import NO_TIMESTAMP, CameraRig, DisparityConfig, EventBatch, Velocity
from evstereo.synth import Plane, SceneSpec, generate_stereo_events
from evstereo.volume import (
    build_left_volume,
    build_right_volume,
    build_timestamp_volumes,
    round_half_away,
)

RIG = CameraRig(f=300.0, cx=31.5, cy=23.5, b=0.1, width=64, height=48)
CFG = DisparityConfig(d_min=0, d_max=11, window=5)


def reference_volume(events, vel, rig, cfg, t_ref, right, sync=True):
    """Per-event, per-slice loop written from the projection equations."""
    acc = np.zeros((cfg.num_disparities, rig.height, rig.width), dtype=np.int64)
    for k, d in enumerate(range(cfg.d_min, cfg.d_max + 1)):
        for t, x, y, p in events:
            xs, ys = float(x), float(y)
            if sync:
                xn, yn = (x - rig.cx) / rig.f, (y - rig.cy) / rig.f
                inv_z = d / rig.fb
                wx, wy, wz = vel.w
                vx, vy, vz = vel.v
                u = inv_z * (-vx + xn * vz) + (xn * yn * wx - (1 + xn * xn) * wy + yn * wz)
                w = inv_z * (-vy + yn * vz) + ((1 + yn * yn) * wx - xn * yn * wy - xn * wz)
                xs = x + rig.f * u * (t_ref - t)
                ys = y + rig.f * w * (t_ref - t)
            xi = math.copysign(math.floor(abs(xs) + 0.5), xs)
            yi = math.copysign(math.floor(abs(ys) + 0.5), ys)
            if right:
                xi += d
            if 0 <= xi < rig.width and 0 <= yi < rig.height:
                acc[k, int(yi), int(xi)] += p
    return np.sign(acc).astype(np.int8)


def random_batch(rng, n, rig=RIG):
    t = np.sort(rng.uniform(0, 0.05, n))
    x = rng.integers(0, rig.width, n)
    y = rng.integers(0, rig.height, n)
    p = rng.choice([-1, 1], n)
    return EventBatch.from_events(zip(t, x, y, p))


def random_velocity(rng, scale=1.0):
    return Velocity(scale * rng.normal(size=3), scale * rng.normal(size=3))


def test_rounding_ties_away_from_zero():
    assert round_half_away([0.5, 1.5, 2.5, -0.5, -1.5, 0.49]).tolist() == [1, 2, 3, -1, -2, 0]


def test_empty_batch_all_zero(backend):
    vol = build_left_volume(EventBatch.empty(), Velocity.zero(), RIG, CFG)
    assert vol.values.shape == (12, 48, 64)
    assert not vol.values.any()


def test_single_event_zero_velocity(backend):
    vol = build_left_volume(EventBatch.from_events([(0.0, 7, 9, 1)]), Velocity.zero(), RIG, CFG)
    for d in range(12):
        assert vol.at(7, 9, d) == 1
        assert np.count_nonzero(vol.slice(d)) == 1


@pytest.mark.parametrize("pols,expected", [([1, 1, -1], 1), ([1, -1], 0), ([-1, -1, 1], -1)])
def test_sign_reduction(backend, pols, expected):
    events = [(0.001 * i, 4, 4, p) for i, p in enumerate(pols)]
    vol = build_left_volume(EventBatch.from_events(events), Velocity.zero(), RIG, CFG)
    assert vol.at(4, 4, 0) == expected


def test_right_volume_translation(backend):
    vol = build_right_volume(EventBatch.from_events([(0.0, 10, 5, 1)]), Velocity.zero(), RIG, CFG)
    assert vol.at(16, 5, 6) == 1
    assert np.count_nonzero(vol.slice(6)) == 1
    assert vol.at(10, 5, 0) == 1


def test_right_d0_matches_left(backend, rng):
    batch = random_batch(rng, 300)
    vel = random_velocity(rng)
    left = build_left_volume(batch, vel, RIG, CFG)
    right = build_right_volume(batch, vel, RIG, CFG)
    assert np.array_equal(left.slice(0), right.slice(0))


def test_right_out_of_bounds_dropped(backend):
    vol = build_right_volume(EventBatch.from_events([(0.0, 60, 5, 1)]), Velocity.zero(), RIG, CFG)
    assert vol.at(63, 5, 3) == 1
    for d in range(4, 12):
        assert not vol.slice(d).any()


def test_timestamp_volume_examples(backend):
    empty_l, empty_r = build_timestamp_volumes(EventBatch.empty(), EventBatch.empty(), Velocity.zero(), RIG, CFG)
    assert np.all(empty_l.values == NO_TIMESTAMP) and np.all(empty_r.values == NO_TIMESTAMP)
    two = EventBatch.from_events([(0.1, 3, 3, 1), (0.2, 3, 3, -1)])
    tl, tr = build_timestamp_volumes(two, two, Velocity.zero(), RIG, CFG)
    assert tl.values[0, 3, 3] == 0.2
    assert tr.values[2, 3, 5] == 0.2
    one = EventBatch.from_events([(0.3, 8, 2, 1)])
    tl, _ = build_timestamp_volumes(one, one, Velocity.zero(), RIG, CFG)
    for d in range(12):
        assert tl.occupied[d].sum() == 1 and tl.values[d, 2, 8] == 0.3


@pytest.mark.parametrize("right", [False, True])
def test_matches_reference_loop(backend, rng, right):
    for _ in range(5):
        batch = random_batch(rng, 200)
        vel = random_velocity(rng, 3.0)
        build = build_right_volume if right else build_left_volume
        got = build(batch, vel, RIG, CFG).values
        want = reference_volume(batch, vel, RIG, CFG, batch.t_last, right)
        assert np.array_equal(got, want)


def test_domain_invariant(backend, rng):
    vol = build_left_volume(random_batch(rng, 2000), random_velocity(rng, 5.0), RIG, CFG)
    assert set(np.unique(vol.values)) <= {-1, 0, 1}


def test_pure_rotation_identical_left_slices(backend, rng):
    for _ in range(5):
        vel = Velocity([0, 0, 0], rng.normal(size=3) * 4)
        vol = build_left_volume(random_batch(rng, 500), vel, RIG, CFG)
        for d in range(1, 12):
            assert np.array_equal(vol.slice(d), vol.slice(0))


def test_sync_off_zero_velocity_identity(backend, rng):
    batch = random_batch(rng, 500)
    for build in (build_left_volume, build_right_volume):
        a = build(batch, Velocity.zero(), RIG, CFG, sync=True)
        b = build(batch, Velocity.zero(), RIG, CFG, sync=False)
        assert np.array_equal(a.values, b.values)


def test_sync_off_ignores_velocity(backend, rng):
    batch = random_batch(rng, 300)
    a = build_left_volume(batch, random_velocity(rng, 5.0), RIG, CFG, sync=False)
    b = build_left_volume(batch, Velocity.zero(), RIG, CFG)
    assert np.array_equal(a.values, b.values)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    batch = random_batch(rng, 150)
    vel = random_velocity(rng, 2.0)
    perm = rng.permutation(len(batch))
    # keep the same t_ref; events carry their own timestamps
    shuffled = EventBatch(x=batch.x[perm], y=batch.y[perm], t=batch.t[perm], p=batch.p[perm])
    t_ref = batch.t_last
    for build in (build_left_volume, build_right_volume):
        a = build(batch, vel, RIG, CFG, t_ref=t_ref)
        b = build(shuffled, vel, RIG, CFG, t_ref=t_ref)
        assert np.array_equal(a.values, b.values)


def test_focus_at_true_disparity():
    rig = CameraRig(f=226.38, cx=86.0, cy=65.0, b=0.1, width=172, height=130)
    cfg = DisparityConfig(d_min=0, d_max=31, window=9)
    rng = np.random.default_rng(3)
    d_true = 14
    plane = Plane.from_pixels(rig, d_true, (40, 130, 30, 100), rng, density=0.08)
    spec = SceneSpec([plane], Velocity([1.5, -0.8, 2.0], [0.4, -0.6, 0.9]), 0.02, event_rate=400.0, seed=1)
    left, _, _, _ = generate_stereo_events(spec, rig)
    vol = build_left_volume(left, spec.vel, rig, cfg)
    counts = np.count_nonzero(vol.values, axis=(1, 2))
    for d in range(32):
        if abs(d - d_true) >= 3:
            assert counts[d_true] <= counts[d]
