import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from alphabpp import augment as aug
from alphabpp.geometry import BinSpec, Flb, ItemDims, action_mask, is_feasible, oriented_dims, place
from alphabpp.policy import SearchSample, featurize_arrays
from alphabpp.sim import SimConfig
from oracles import random_heightmap

BIN5 = BinSpec(5, 5, 5)


def search_flb(hm, d, flb, sym, bin):
    """Every FLB in the transformed frame that reproduces the transformed placement."""
    target = aug.transform_heightmap(place(hm, d, flb), sym, shape_flexible=True)
    thm = aug.transform_heightmap(hm, sym, shape_flexible=True)
    td = aug.transform_item(d, sym)
    tb = aug.transformed_bin(bin, sym)
    hits = []
    for x in range(tb.W - td.w + 1):
        for y in range(tb.L - td.l + 1):
            if np.array_equal(place(thm, td, Flb(x, y)), target):
                hits.append(Flb(x, y))
    return hits


def test_transform_flb_examples_against_search_oracle():
    hm = BIN5.empty_heightmap()
    d = ItemDims(3, 2, 1)
    for sym, expected in [(aug.ROT180, Flb(2, 3)), (aug.FLIP, Flb(2, 0)), (aug.IDENTITY, Flb(0, 0))]:
        assert search_flb(hm, d, Flb(0, 0), sym, BIN5) == [expected]
        assert aug.transform_flb(Flb(0, 0), d, sym, BIN5) == expected
    for sym in aug.ALL_SYMMETRIES:
        assert search_flb(hm, d, Flb(0, 0), sym, BIN5) == [aug.transform_flb(Flb(0, 0), d, sym, BIN5)]


def test_transform_item_rules():
    d = ItemDims(3, 2, 4)
    assert aug.transform_item(d, aug.ROT90) == ItemDims(2, 3, 4)
    assert aug.transform_item(d, aug.ROT270) == ItemDims(2, 3, 4)
    assert aug.transform_item(d, aug.ROT180) == d
    assert aug.transform_item(d, aug.FLIP) == d


def test_heightmap_involutions(rng):
    hm = random_heightmap(rng, 6, 6, 9)
    np.testing.assert_array_equal(aug.transform_heightmap(hm, aug.IDENTITY), hm)
    twice = aug.transform_heightmap(aug.transform_heightmap(hm, aug.ROT180), aug.ROT180)
    np.testing.assert_array_equal(twice, hm)
    fl = aug.transform_heightmap(aug.transform_heightmap(hm, aug.FLIP), aug.FLIP)
    np.testing.assert_array_equal(fl, hm)


def test_group_closure_and_inverse(rng):
    hm = random_heightmap(rng, 6, 6, 9)
    group = set(aug.ALL_SYMMETRIES)
    for a in aug.ALL_SYMMETRIES:
        assert a.inverse() in group
        for b in aug.ALL_SYMMETRIES:
            c = a.compose(b)
            assert c in group
            direct = aug.transform_heightmap(aug.transform_heightmap(hm, b), a)
            np.testing.assert_array_equal(direct, aug.transform_heightmap(hm, c))
        back = aug.transform_heightmap(aug.transform_heightmap(hm, a), a.inverse())
        np.testing.assert_array_equal(back, hm)


def test_rectangular_bin_strict_mode():
    hm = np.zeros((4, 6), dtype=np.int64)
    with pytest.raises(aug.UnsupportedTransformError):
        aug.transform_heightmap(hm, aug.ROT90)
    assert aug.transform_heightmap(hm, aug.ROT90, shape_flexible=True).shape == (6, 4)
    assert aug.symmetries_for(BinSpec(4, 6, 5)) == aug.RECTANGULAR_SYMMETRIES
    assert {s.name for s in aug.RECTANGULAR_SYMMETRIES} == {"identity", "rot180", "flip", "flip*rot180"}


def test_fig3_one_hot_policy_moves_to_shifted_flb():
    buffer = (ItemDims(3, 2, 1),)
    pi = np.zeros((1, 1, 5, 5))
    pi[0, 0, 0, 0] = 1.0
    for sym in aug.ALL_SYMMETRIES:
        out = aug.transform_policy(pi, buffer, sym)
        target = aug.transform_flb(Flb(0, 0), buffer[0], sym, BIN5)
        expected = np.zeros((1, 1, 5, 5))
        expected[0, 0, target.x, target.y] = 1.0
        np.testing.assert_array_equal(out, expected)
    assert aug.transform_flb(Flb(0, 0), ItemDims(3, 2, 1), aug.ROT90, BIN5) == Flb(3, 0)
    assert aug.transform_flb(Flb(0, 0), ItemDims(3, 2, 1), aug.ROT270, BIN5) == Flb(0, 2)


def test_identity_policy_is_bit_identical(rng):
    buffer = (ItemDims(3, 2, 1), ItemDims(2, 2, 2))
    pi = rng.random((2, 2, 5, 5))
    pi[:, 0, 3:, :] = 0
    pi[:, 0, :, 4:] = 0
    pi[1, 0] = 0
    pi[1, 0, :4, :3] = rng.random((4, 3))
    pi[:, 1, 4:, :] = 0
    pi[:, 1, :, 4:] = 0
    assert np.array_equal(aug.transform_policy(pi, buffer, aug.IDENTITY), pi)


def test_uniform_policy_maps_to_uniform_over_transformed_mask(rng):
    hm = random_heightmap(rng, 5, 5, 5, style=2)
    buffer = (ItemDims(3, 2, 1),)
    mask = action_mask(hm, BIN5, buffer, 1)
    uniform = mask / mask.sum()
    for sym in aug.ALL_SYMMETRIES:
        thm, tbuf = aug.transform_state(hm, buffer, sym)
        tmask = action_mask(thm, BIN5, tbuf, 1)
        out = aug.transform_policy(uniform, buffer, sym)
        np.testing.assert_array_equal(out, tmask / tmask.sum())


def test_mass_outside_valid_region_is_internal_error():
    pi = np.zeros((1, 1, 5, 5))
    pi[0, 0, 4, 4] = 1.0
    with pytest.raises(AssertionError):
        aug.transform_policy(pi, (ItemDims(3, 2, 1),), aug.ROT90)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_equivariance_property(seed):
    r = np.random.default_rng(seed)
    bin = BinSpec(7, 7, 12)
    hm = random_heightmap(r, 7, 7, 12)
    d = ItemDims(*map(int, r.integers(1, 5, size=3)))
    x, y = int(r.integers(0, 7 - d.w + 1)), int(r.integers(0, 7 - d.l + 1))
    post = place(hm, d, Flb(x, y))
    for sym in aug.ALL_SYMMETRIES:
        tflb = aug.transform_flb(Flb(x, y), d, sym, bin)
        got = place(aug.transform_heightmap(hm, sym), aug.transform_item(d, sym), tflb)
        np.testing.assert_array_equal(got, aug.transform_heightmap(post, sym))
        assert is_feasible(hm, bin, d, Flb(x, y)) == is_feasible(
            aug.transform_heightmap(hm, sym), bin, aug.transform_item(d, sym), tflb
        )


def test_policy_mass_conserved_exactly(rng):
    buffer = (ItemDims(3, 2, 4), ItemDims(0, 0, 0), ItemDims(2, 5, 1))
    hm = random_heightmap(rng, 10, 10, 10)
    mask = action_mask(hm, BinSpec(), buffer, 1)
    pi = rng.random(mask.shape) * mask
    pi /= pi.sum()
    for sym in aug.ALL_SYMMETRIES:
        out = aug.transform_policy(pi, buffer, sym)
        assert math.fsum(out.ravel()) == math.fsum(pi.ravel())
        assert sorted(out.ravel()) == sorted(pi.ravel())
        back = aug.transform_policy(out, aug.transform_state(hm, buffer, sym)[1], sym.inverse())
        np.testing.assert_array_equal(back, pi)


def _sample(rng, cfg):
    hm = random_heightmap(rng, cfg.bin.W, cfg.bin.L, cfg.bin.H)
    buffer = (ItemDims(3, 2, 2),) * cfg.b
    mask = action_mask(hm, cfg.bin, buffer, cfg.k)
    pi = mask / max(mask.sum(), 1)
    return SearchSample(featurize_arrays(hm, buffer, cfg.bin), pi, mask, 0.3, 0.5, hm, buffer)


def test_augment_sample_counts(rng):
    cfg = SimConfig(bin=BinSpec(6, 6, 6))
    s = _sample(rng, cfg)
    outs = aug.augment_sample(s, cfg=cfg)
    assert len(outs) == 8
    assert {o.symmetry for o in outs} == set(aug.ALL_SYMMETRIES)
    assert all(o.z == 0.3 and o.priority == 0.5 for o in outs)
    assert aug.augment_sample(s, [aug.IDENTITY], cfg=cfg) == [s]
    rect = SimConfig(bin=BinSpec(4, 6, 6))
    assert len(aug.augment_sample(_sample(rng, rect), cfg=rect)) == 4
    for o in outs:
        np.testing.assert_array_equal(o.pi > 0, o.mask)
