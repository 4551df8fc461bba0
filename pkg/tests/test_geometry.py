import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphabpp import _kernels
from alphabpp.geometry import (
    BinSpec,
    Flb,
    GeometryError,
    ItemDims,
    OutOfBoundsError,
    PackAction,
    PlacementError,
    action_mask,
    decode_action,
    encode_action,
    is_feasible,
    oriented_dims,
    place,
    region_max_height,
    stable_support,
    support_stats,
)
from oracles import brute_mask, brute_place, random_heightmap

BIN10 = BinSpec(10, 10, 10)


def test_bin_volume():
    assert BinSpec(10, 10, 10).volume() == 1000
    assert BinSpec(3, 4, 5).volume() == 60
    with pytest.raises(GeometryError):
        BinSpec(0, 1, 1)


@pytest.mark.parametrize(
    "d, o, expected",
    [((3, 2, 4), 0, (3, 2, 4)), ((3, 2, 4), 1, (2, 3, 4)), ((2, 2, 5), 1, (2, 2, 5))],
)
def test_oriented_dims(d, o, expected):
    assert oriented_dims(ItemDims(*d), o) == ItemDims(*expected)


def test_oriented_dims_rejects_bad_orientation():
    with pytest.raises(GeometryError):
        oriented_dims(ItemDims(1, 2, 3), 2)


def test_region_max_height():
    hm = np.zeros((3, 3), dtype=np.int64)
    assert region_max_height(hm, ItemDims(2, 2, 1), Flb(0, 0)) == 0
    hm[0, 0] = 4
    assert region_max_height(hm, ItemDims(2, 2, 1), Flb(0, 0)) == 4
    hm[2, 2] = 7
    assert region_max_height(hm, ItemDims(1, 1, 1), Flb(2, 2)) == 7
    with pytest.raises(OutOfBoundsError):
        region_max_height(hm, ItemDims(2, 2, 1), Flb(2, 2))


def test_place_examples():
    hm = np.zeros((3, 3), dtype=np.int64)
    a = place(hm, ItemDims(2, 2, 2), Flb(0, 0))
    expected = np.array([[2, 2, 0], [2, 2, 0], [0, 0, 0]])
    np.testing.assert_array_equal(a, expected)
    assert not hm.any(), "input map must not be mutated"
    b = place(a, ItemDims(2, 2, 1), Flb(1, 1))
    np.testing.assert_array_equal(b, [[2, 2, 0], [2, 3, 3], [0, 3, 3]])
    c = place(hm, ItemDims(1, 1, 10), Flb(0, 0), H=10)
    assert c[0, 0] == 10
    with pytest.raises(PlacementError):
        place(c, ItemDims(1, 1, 1), Flb(0, 0), H=10)


def test_support_stats_examples():
    hm = np.zeros((4, 4), dtype=np.int64)
    assert support_stats(hm, ItemDims(2, 2, 1), Flb(1, 1)) == (1.0, 4)
    hm[0, 0] = 1
    assert support_stats(hm, ItemDims(2, 2, 1), Flb(0, 0)) == (0.25, 1)
    hm[0, 1] = hm[1, 0] = 1
    assert support_stats(hm, ItemDims(2, 2, 1), Flb(0, 0)) == (0.75, 3)


def test_feasibility_rules():
    assert not stable_support(0.75, 3)
    assert stable_support(1.0, 4)
    assert stable_support(0.96, 2)
    assert stable_support(0.60, 4), "thresholds are inclusive"
    assert not stable_support(0.59, 4)
    assert stable_support(0.80, 3)
    hm = np.zeros((10, 10), dtype=np.int64)
    assert is_feasible(hm, BIN10, ItemDims(2, 2, 2), Flb(0, 0))
    assert not is_feasible(hm, BIN10, ItemDims(2, 2, 2), Flb(9, 0))


def test_inclusive_threshold_exact_fraction():
    # 4x5 footprint with 12 of 20 cells at the top and all corners supported -> 12/20 = 0.60
    hm = np.zeros((4, 5), dtype=np.int64)
    hm[:, :] = 3
    hm[1:3, 1:4] = 0  # 6 lower interior cells
    hm[0, 2] = hm[3, 2] = 0  # two more lower edge cells -> 8 lower, 12 at top
    assert support_stats(hm, ItemDims(4, 5, 1), Flb(0, 0)) == (0.6, 4)
    assert is_feasible(hm, BinSpec(4, 5, 10), ItemDims(4, 5, 1), Flb(0, 0))


def test_action_mask_empty_bin_grid():
    hm = BIN10.empty_heightmap()
    mask = action_mask(hm, BIN10, [ItemDims(2, 2, 2)], 0)
    assert mask.shape == (1, 1, 10, 10)
    expected = np.zeros((10, 10), dtype=bool)
    expected[:9, :9] = True
    np.testing.assert_array_equal(mask[0, 0], expected)


def test_action_mask_sentinel_all_false():
    mask = action_mask(BIN10.empty_heightmap(), BIN10, [ItemDims(0, 0, 0)], 0)
    assert not mask.any()


def test_action_mask_matches_brute_force_random(rng):
    for _ in range(25):
        hm = random_heightmap(rng, 10, 10, 10)
        got = action_mask(hm, BIN10, [ItemDims(3, 4, 2)], 1)
        np.testing.assert_array_equal(got, brute_mask(hm, 10, 10, 10, [(3, 4, 2)], 1))


def test_action_encoding_roundtrip():
    bin = BinSpec(4, 3, 5)
    b, k = 2, 1
    n = bin.W * bin.L * b * (k + 1)
    for i in range(n):
        a = decode_action(i, bin, b)
        assert encode_action(a, bin, b) == i
    assert encode_action(PackAction(1, 1, 2, 1), bin, b) == ((1 * 2 + 1) * 4 + 2) * 3 + 1


@settings(max_examples=200, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    w=st.integers(1, 5),
    l=st.integers(1, 5),
    h=st.integers(1, 5),
)
def test_place_properties(seed, w, l, h):
    r = np.random.default_rng(seed)
    hm = random_heightmap(r, 8, 8, 20)
    x, y = int(r.integers(0, 8 - w + 1)), int(r.integers(0, 8 - l + 1))
    out = place(hm, ItemDims(w, l, h), Flb(x, y))
    assert (out >= hm).all()
    fp = out[x : x + w, y : y + l]
    assert (fp == fp.flat[0]).all()
    np.testing.assert_array_equal(out, brute_place(hm, w, l, h, x, y))
    ratio, corners = support_stats(hm, ItemDims(w, l, h), Flb(x, y))
    assert 0 < ratio <= 1 and 0 <= corners <= 4
    if ratio == 1:
        assert corners == 4


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_mask_soundness(seed):
    r = np.random.default_rng(seed)
    hm = random_heightmap(r, 10, 10, 10)
    d = ItemDims(*map(int, r.integers(1, 6, size=3)))
    mask = action_mask(hm, BIN10, [d], 1)
    for o, _, x, y in zip(*np.nonzero(mask)):
        od = oriented_dims(d, int(o))
        place(hm, od, Flb(int(x), int(y)), H=10)


def test_numba_and_numpy_kernels_agree(rng):
    if not _kernels.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    for _ in range(200):
        hm = random_heightmap(rng, 10, 10, 10).astype(np.int64)
        w, l, h = map(int, rng.integers(1, 7, size=3))
        a = _kernels.feasibility_plane_numpy(hm, 10, w, l, h, 0.6, 0.8, 0.95)
        b = _kernels.feasibility_plane_numba(hm, 10, w, l, h, 0.6, 0.8, 0.95)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
        x, y = int(rng.integers(0, 10 - w + 1)), int(rng.integers(0, 10 - l + 1))
        np.testing.assert_array_equal(
            _kernels.place_numpy(hm, w, l, h, x, y), _kernels.place_numba(hm, w, l, h, x, y)
        )
