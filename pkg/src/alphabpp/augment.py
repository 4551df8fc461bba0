"""Dihedral-symmetry augmentation of (height map, buffer, action probability) samples.

A symmetry is ``rotations`` counter-clockwise quarter turns (``np.rot90``)
followed by an optional flip of the x axis (rows). Under the geometry
convention an item's valid FLBs form a (W-w+1) x (L-l+1) grid anchored at the
origin, and a symmetry acts on that grid exactly as it acts on the height map.
So a policy plane is transformed by cutting out its valid FLB block,
rotating/flipping the block, and writing it back at the origin of the new
plane. The remaining border cells are zero.

Quarter turns swap an item's (w, l). The buffer item itself is swapped and
the orientation channel is kept, so oriented dims stay consistent for k = 0
and k = 1 alike.
"""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np

from .geometry import BinSpec, Flb, ItemDims, oriented_dims


class UnsupportedTransformError(ValueError):
    pass


class Symmetry(NamedTuple):
    rotations: int  # counter-clockwise quarter turns, 0..3
    flip: bool

    @property
    def name(self) -> str:
        rot = ("identity", "rot90", "rot180", "rot270")[self.rotations]
        if not self.flip:
            return rot
        return "flip" if self.rotations == 0 else f"flip*{rot}"

    @property
    def swaps_axes(self) -> bool:
        return self.rotations % 2 == 1

    def compose(self, other: "Symmetry") -> "Symmetry":
        """``self`` applied after ``other``."""
        # a flip conjugates a rotation into its inverse: F R^r = R^-r F
        if other.flip:
            return Symmetry((other.rotations - self.rotations) % 4, not self.flip)
        return Symmetry((self.rotations + other.rotations) % 4, self.flip)

    def inverse(self) -> "Symmetry":
        if self.flip:
            return self
        return Symmetry((-self.rotations) % 4, False)


IDENTITY = Symmetry(0, False)
ROT90 = Symmetry(1, False)
ROT180 = Symmetry(2, False)
ROT270 = Symmetry(3, False)
FLIP = Symmetry(0, True)
ALL_SYMMETRIES = tuple(Symmetry(r, f) for f in (False, True) for r in range(4))
RECTANGULAR_SYMMETRIES = tuple(s for s in ALL_SYMMETRIES if not s.swaps_axes)


def symmetries_for(bin: BinSpec, shape_flexible: bool = False) -> tuple:
    if bin.W == bin.L or shape_flexible:
        return ALL_SYMMETRIES
    return RECTANGULAR_SYMMETRIES


def _apply(grid: np.ndarray, sym: Symmetry) -> np.ndarray:
    out = np.rot90(grid, sym.rotations, axes=(0, 1))
    if sym.flip:
        out = out[::-1]
    return np.ascontiguousarray(out)


def _check_shape(shape, sym: Symmetry, shape_flexible: bool) -> None:
    if sym.swaps_axes and shape[0] != shape[1] and not shape_flexible:
        raise UnsupportedTransformError(f"{sym.name} on a rectangular {shape[0]}x{shape[1]} bin")


def transformed_bin(bin: BinSpec, sym: Symmetry) -> BinSpec:
    return BinSpec(bin.L, bin.W, bin.H) if sym.swaps_axes else bin


def transform_heightmap(hm: np.ndarray, sym: Symmetry, shape_flexible: bool = False) -> np.ndarray:
    _check_shape(hm.shape, sym, shape_flexible)
    return _apply(hm, sym)


def transform_item(d: ItemDims, sym: Symmetry) -> ItemDims:
    if sym.swaps_axes:
        return ItemDims(d.l, d.w, d.h)
    return d


def transform_flb(flb: Flb, d: ItemDims, sym: Symmetry, bin: BinSpec) -> Flb:
    """FLB of the transformed placement of footprint ``d`` placed at ``flb``."""
    x, y = flb
    W, L = bin.W, bin.L
    w, l = d.w, d.l
    for _ in range(sym.rotations):
        # np.rot90: cell (r, c) of an (W, L) grid moves to (L-1-c, r)
        x, y = L - y - l, x
        W, L, w, l = L, W, l, w
    if sym.flip:
        x = W - x - w
    return Flb(x, y)


def _transform_plane(plane: np.ndarray, d: ItemDims, sym: Symmetry) -> np.ndarray:
    W, L = plane.shape
    vw, vl = W - d.w + 1, L - d.l + 1
    out_shape = (L, W) if sym.swaps_axes else (W, L)
    out = np.zeros(out_shape, dtype=plane.dtype)
    if vw <= 0 or vl <= 0:
        if plane.any():
            raise AssertionError(f"mass on a plane whose item {tuple(d)} cannot fit")
        return out
    block = plane[:vw, :vl]
    if plane.any() and (plane[vw:].any() or plane[:, vl:].any()):
        raise AssertionError("policy mass outside the item's valid FLB region would be lost")
    nb = _apply(block, sym)
    out[: nb.shape[0], : nb.shape[1]] = nb
    return out


def transform_policy(policy: np.ndarray, buffer: Sequence[ItemDims], sym: Symmetry,
                     shape_flexible: bool = False) -> np.ndarray:
    """Transform a (k+1, b, W, L) tensor of per-action values (probabilities or a mask)."""
    k1, b, W, L = policy.shape
    _check_shape((W, L), sym, shape_flexible)
    out_shape = (k1, b, L, W) if sym.swaps_axes else (k1, b, W, L)
    out = np.zeros(out_shape, dtype=policy.dtype)
    for slot, item in enumerate(buffer):
        for o in range(k1):
            plane = policy[o, slot]
            if item.is_sentinel:
                if plane.any():
                    raise AssertionError(f"nonzero mass on sentinel slot {slot}")
                continue
            out[o, slot] = _transform_plane(plane, oriented_dims(item, o), sym)
    return out


def transform_state(hm, buffer, sym: Symmetry, shape_flexible: bool = False):
    return transform_heightmap(hm, sym, shape_flexible), tuple(transform_item(d, sym) for d in buffer)


def augment_sample(sample, syms: Sequence[Symmetry] | None = None, cfg=None, shape_flexible: bool = False):
    """One transformed copy of a training sample per symmetry.

    ``sample`` is a :class:`alphabpp.policy.SearchSample`. Each copy keeps the
    parent's ``z`` and priority; its features and mask are recomputed in the
    transformed frame.
    """
    from .geometry import action_mask
    from .policy import SearchSample, featurize_arrays

    if cfg is None:
        raise ValueError("augment_sample needs the SimConfig of the sample")
    if syms is None:
        syms = symmetries_for(cfg.bin, shape_flexible)
    k1, b = sample.pi.shape[:2]
    out = []
    for sym in syms:
        if sym == IDENTITY:
            out.append(sample)
            continue
        hm, buf = transform_state(sample.heightmap, sample.buffer, sym, shape_flexible)
        bin = transformed_bin(cfg.bin, sym)
        mask = action_mask(hm, bin, buf, k1 - 1, cfg.thresholds)
        pi = transform_policy(sample.pi, sample.buffer, sym, shape_flexible)
        out.append(
            SearchSample(
                features=featurize_arrays(hm, buf, bin),
                pi=pi,
                mask=mask,
                z=sample.z,
                priority=sample.priority,
                heightmap=hm,
                buffer=buf,
                symmetry=sym.compose(sample.symmetry),
            )
        )
    return out
