import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evstereo.core import NO_TIMESTAMP, UNDEFINED_COST, EventDisparityVolume, TimestampVolume
from evstereo.cost import (
    WindowSpec,
    intersection_cost_volume,
    iou_cost_volume,
    iou_from_sums,
    pixel_intersection,
    pixel_union,
    timestamp_cost_volume,
    timestamp_term,
    time_cost_volume,
    window_area,
    window_sum,
)


def brute_window_sum(field, side):
    """Direct double loop over each pixel's truncated window."""
    h, w = field.shape
    a = (side - 1) // 2
    out = np.zeros((h, w), dtype=np.int64)
    for r in range(h):
        for c in range(w):
            s = 0
            for rr in range(r - a, r - a + side):
                for cc in range(c - a, c - a + side):
                    if 0 <= rr < h and 0 <= cc < w:
                        s += int(field[rr, cc])
            out[r, c] = s
    return out


def vol(values, d_min=0):
    values = np.asarray(values, dtype=np.int8)
    return EventDisparityVolume(values, d_min, d_min + values.shape[0] - 1, 0.0)


@pytest.mark.parametrize("a,b,u,i", [(1, 0, 1, 0), (0, 0, 0, 0), (1, -1, 1, 0), (1, 1, 1, 1), (-1, -1, 1, 1), (0, -1, 1, 0)])
def test_pixel_operators(a, b, u, i):
    assert pixel_union(a, b) == u
    assert pixel_intersection(a, b) == i


def test_operators_symmetric():
    vals = np.array([-1, 0, 1])
    a, b = np.meshgrid(vals, vals)
    assert np.array_equal(pixel_union(a, b), pixel_union(b, a))
    assert np.array_equal(pixel_intersection(a, b), pixel_intersection(b, a))


def test_window_spec():
    assert WindowSpec(24).anchor == 11
    assert WindowSpec(3).anchor == 1
    assert WindowSpec(1).anchor == 0
    with pytest.raises(ValueError):
        WindowSpec(0)
    with pytest.raises(ValueError):
        WindowSpec(30).check_shape(20, 40)


def test_window_sum_examples(backend):
    out = window_sum(np.ones((5, 5), dtype=np.int8), WindowSpec(3))
    assert out[2, 2] == 9 and out[0, 0] == 4 and out[4, 4] == 4 and out[0, 2] == 6
    assert not window_sum(np.zeros((5, 5), dtype=np.int8), WindowSpec(3)).any()
    single = np.zeros((5, 5), dtype=np.int8)
    single[2, 2] = 1
    got = window_sum(single, WindowSpec(3))
    expected = np.zeros((5, 5), dtype=np.int64)
    expected[1:4, 1:4] = 1
    assert np.array_equal(got, expected)


def test_even_window_offset(backend):
    field = np.zeros((6, 6), dtype=np.int8)
    field[2, 2] = 1
    got = window_sum(field, WindowSpec(4))
    # anchor 1: pixel (r, c) covers rows r-1..r+2
    assert np.array_equal(np.argwhere(got == 1).min(0), [0, 0])
    assert np.array_equal(np.argwhere(got == 1).max(0), [3, 3])


@pytest.mark.parametrize("side", [1, 3, 8, 24])
def test_window_sum_matches_brute_force(backend, side, rng):
    for _ in range(4):
        h, w = rng.integers(side, 40, 2)
        field = rng.integers(0, 2, (h, w)).astype(np.int8)
        assert np.array_equal(window_sum(field, WindowSpec(side)), brute_window_sum(field, side))


def test_window_sum_batches_leading_axis(backend, rng):
    field = rng.integers(0, 2, (3, 17, 23))
    got = window_sum(field, WindowSpec(5))
    for k in range(3):
        assert np.array_equal(got[k], brute_window_sum(field[k], 5))


def test_window_area(backend):
    area = window_area(30, 40, WindowSpec(24))
    assert area.max() == 576
    assert area[0, 0] == 13 * 13
    assert area[15, 20] == 576


def test_iou_examples():
    assert iou_from_sums(np.array(3), np.array(5)) == pytest.approx(-0.6)
    assert iou_from_sums(np.array(0), np.array(0)) == UNDEFINED_COST


def test_identical_volumes_give_minus_one(backend, rng):
    v = rng.choice([-1, 0, 1], (4, 20, 20), p=[0.1, 0.8, 0.1])
    costs = iou_cost_volume(vol(v), vol(v), WindowSpec(5))
    defined = costs.c_u > 0
    assert np.all(costs.c_iou[defined] == -1.0)
    assert np.all(costs.c_iou[~defined] == UNDEFINED_COST)


def test_eventless_window_sentinel(backend):
    costs = iou_cost_volume(vol(np.zeros((2, 8, 8))), vol(np.zeros((2, 8, 8))), WindowSpec(3))
    assert np.all(np.isposinf(costs.cost))


def test_volume_mismatch_rejected():
    with pytest.raises(ValueError):
        iou_cost_volume(vol(np.zeros((2, 8, 8))), vol(np.zeros((3, 8, 8))), WindowSpec(3))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 3, 8]))
def test_cost_bounds_and_symmetry(seed, side):
    rng = np.random.default_rng(seed)
    a = rng.choice([-1, 0, 1], (3, 16, 16))
    b = rng.choice([-1, 0, 1], (3, 16, 16))
    spec = WindowSpec(side)
    ab = iou_cost_volume(vol(a), vol(b), spec)
    ba = iou_cost_volume(vol(b), vol(a), spec)
    assert np.array_equal(ab.c_i, ba.c_i) and np.array_equal(ab.c_u, ba.c_u)
    assert np.all(ab.c_i >= 0) and np.all(ab.c_i <= ab.c_u)
    assert np.all(ab.c_u <= window_area(16, 16, spec))
    defined = ab.c_u > 0
    assert np.all((ab.c_iou[defined] >= -1) & (ab.c_iou[defined] <= 0))


def test_intersection_cost(backend, rng):
    a = rng.choice([-1, 0, 1], (3, 12, 12))
    b = rng.choice([-1, 0, 1], (3, 12, 12))
    costs = intersection_cost_volume(vol(a), vol(b), WindowSpec(3))
    defined = costs.c_u > 0
    assert np.array_equal(costs.cost[defined], -costs.c_i[defined])
    assert costs.kind == "intersection"


def test_timestamp_term_examples():
    assert timestamp_term(0.5, 0.5, 1) == 1.0
    assert timestamp_term(0.0, 1.0, 1) == 0.5
    assert timestamp_term(NO_TIMESTAMP, 1.0, 1) == 0.0
    assert timestamp_term(1.0, NO_TIMESTAMP, 3) == 0.0
    assert timestamp_term(0.0, 2.0, 4, alpha=0.5) == pytest.approx(1 / 8)


def test_timestamp_cost_volume(backend, rng):
    shape = (2, 10, 10)
    tl = np.where(rng.random(shape) < 0.3, rng.uniform(0, 1, shape), NO_TIMESTAMP)
    tr = np.where(rng.random(shape) < 0.3, rng.uniform(0, 1, shape), NO_TIMESTAMP)
    c_u = rng.integers(0, 5, shape)
    spec = WindowSpec(3)
    got = timestamp_cost_volume(TimestampVolume(tl, 0, 1), TimestampVolume(tr, 0, 1), c_u, spec)
    terms = np.zeros(shape)
    for idx in np.ndindex(shape):
        if tl[idx] != NO_TIMESTAMP and tr[idx] != NO_TIMESTAMP and c_u[idx] > 0:
            terms[idx] = 1.0 / ((abs(tl[idx] - tr[idx]) + 1.0) * c_u[idx])
    for k in range(2):
        want = -np.array([[terms[k][max(r - 1, 0) : r + 2, max(c - 1, 0) : c + 2].sum() for c in range(10)] for r in range(10)])
        want = np.where(c_u[k] > 0, want, UNDEFINED_COST)
        np.testing.assert_allclose(got[k], want, rtol=1e-12)


def test_time_cost_volume_kind(backend):
    v = np.zeros((2, 6, 6), dtype=np.int8)
    v[:, 2, 2] = 1
    t = np.full((2, 6, 6), NO_TIMESTAMP)
    t[:, 2, 2] = 0.1
    costs = time_cost_volume(vol(v), vol(v), TimestampVolume(t, 0, 1), TimestampVolume(t, 0, 1), WindowSpec(3))
    assert costs.kind == "time"
    assert costs.cost[0, 2, 2] == pytest.approx(-1.0)
