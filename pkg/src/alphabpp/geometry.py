"""Voxel-grid primitives: bins, items, height maps, placements and action masks.

Coordinate convention: ``x`` indexes the W axis (rows of the height map),
``y`` the L axis (columns), origin at the bin's front-left corner. An item
(w, l, h) with FLB (x, y) covers rows ``[x, x+w)`` and columns ``[y, y+l)``.

Action masks are stored as arrays of shape ``(k+1, b, W, L)`` so that the flat
C-order index is ``((orientation*b + slot)*W + x)*L + y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels

SUPPORT_THRESHOLDS = (0.60, 0.80, 0.95)


class GeometryError(ValueError):
    """Base class for invalid geometric requests."""


class OutOfBoundsError(GeometryError):
    pass


class PlacementError(GeometryError):
    pass


@dataclass(frozen=True)
class BinSpec:
    W: int = 10
    L: int = 10
    H: int = 10

    def __post_init__(self):
        if min(self.W, self.L, self.H) < 1:
            raise GeometryError(f"bin dimensions must be >= 1, got {self}")

    def volume(self) -> int:
        return self.W * self.L * self.H

    @property
    def shape(self) -> tuple[int, int]:
        return (self.W, self.L)

    def empty_heightmap(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=np.int64)


class ItemDims(NamedTuple):
    w: int
    l: int
    h: int

    def volume(self) -> int:
        return self.w * self.l * self.h

    @property
    def is_sentinel(self) -> bool:
        return self.w == 0 and self.l == 0 and self.h == 0


SENTINEL = ItemDims(0, 0, 0)


class Flb(NamedTuple):
    x: int
    y: int


class PackAction(NamedTuple):
    slot: int
    orientation: int
    x: int
    y: int

    @property
    def flb(self) -> Flb:
        return Flb(self.x, self.y)


def action_space_size(bin: BinSpec, b: int, k: int) -> int:
    return bin.W * bin.L * b * (k + 1)


def encode_action(a: PackAction, bin: BinSpec, b: int) -> int:
    return ((a.orientation * b + a.slot) * bin.W + a.x) * bin.L + a.y


def decode_action(index: int, bin: BinSpec, b: int) -> PackAction:
    rest, y = divmod(int(index), bin.L)
    rest, x = divmod(rest, bin.W)
    orientation, slot = divmod(rest, b)
    return PackAction(slot, orientation, x, y)


def as_item(d: Sequence[int]) -> ItemDims:
    return d if isinstance(d, ItemDims) else ItemDims(*(int(v) for v in d))


def oriented_dims(d: ItemDims, orientation: int) -> ItemDims:
    """Orientation 0 keeps (w, l, h); orientation 1 is the z-rotation (l, w, h)."""
    if orientation == 0:
        return d
    if orientation == 1:
        return ItemDims(d.l, d.w, d.h)
    raise GeometryError(f"orientation must be 0 or 1, got {orientation}")


def _check_footprint(hm: np.ndarray, d: ItemDims, flb: Flb) -> None:
    W, L = hm.shape
    x, y = flb
    if x < 0 or y < 0 or x + d.w > W or y + d.l > L:
        raise OutOfBoundsError(f"footprint {d.w}x{d.l} at {tuple(flb)} exceeds {W}x{L} map")


def region_max_height(hm: np.ndarray, d: ItemDims, flb: Flb) -> int:
    _check_footprint(hm, d, flb)
    x, y = flb
    return int(hm[x : x + d.w, y : y + d.l].max())


def place(hm: np.ndarray, d: ItemDims, flb: Flb, H: int | None = None) -> np.ndarray:
    """Return a new height map with the item resting on the highest footprint cell.

    ``H`` defaults to a bound-free placement; pass the bin height to enforce the
    ceiling.
    """
    _check_footprint(hm, d, flb)
    x, y = flb
    if H is not None and hm[x : x + d.w, y : y + d.l].max() + d.h > H:
        raise PlacementError(f"item {tuple(d)} at {tuple(flb)} would exceed ceiling {H}")
    return _kernels.place_kernel(np.ascontiguousarray(hm, dtype=np.int64), d.w, d.l, d.h, x, y)


def support_stats(hm: np.ndarray, d: ItemDims, flb: Flb) -> tuple[float, int]:
    """Fraction of footprint cells at the resting level, and how many of the 4 corners are."""
    _check_footprint(hm, d, flb)
    if d.w < 1 or d.l < 1:
        raise GeometryError("support is undefined for an empty footprint")
    x, y = flb
    region = hm[x : x + d.w, y : y + d.l]
    top = region.max()
    ratio = float((region == top).sum()) / (d.w * d.l)
    corners = sum(int(region[i, j] == top) for i, j in ((0, 0), (-1, 0), (0, -1), (-1, -1)))
    return ratio, corners


def stable_support(ratio: float, corners: int, thresholds=SUPPORT_THRESHOLDS) -> bool:
    t1, t2, t3 = thresholds
    eps = 1e-9
    return (ratio >= t1 - eps and corners == 4) or (ratio >= t2 - eps and corners >= 3) or ratio >= t3 - eps


def is_feasible(hm: np.ndarray, bin: BinSpec, d: ItemDims, flb: Flb, thresholds=SUPPORT_THRESHOLDS) -> bool:
    if d.w < 1 or d.l < 1 or d.h < 1:
        return False
    try:
        top = region_max_height(hm, d, flb)
    except OutOfBoundsError:
        return False
    if top + d.h > bin.H:
        return False
    return stable_support(*support_stats(hm, d, flb), thresholds=thresholds)


def feasibility_plane(hm: np.ndarray, bin: BinSpec, d: ItemDims, thresholds=SUPPORT_THRESHOLDS):
    """(feasible, resting level) for every FLB of one oriented item."""
    t1, t2, t3 = thresholds
    return _kernels.feasibility_plane(
        np.ascontiguousarray(hm, dtype=np.int64), bin.H, d.w, d.l, d.h, float(t1), float(t2), float(t3)
    )


def action_mask(
    hm: np.ndarray, bin: BinSpec, buffer: Sequence[ItemDims], k: int, thresholds=SUPPORT_THRESHOLDS
) -> np.ndarray:
    mask, _ = mask_and_levels(hm, bin, buffer, k, thresholds)
    return mask


def mask_and_levels(hm, bin: BinSpec, buffer: Sequence[ItemDims], k: int, thresholds=SUPPORT_THRESHOLDS):
    """Action mask plus the resting level of every action, both shaped (k+1, b, W, L)."""
    b = len(buffer)
    mask = np.zeros((k + 1, b, bin.W, bin.L), dtype=bool)
    levels = np.zeros((k + 1, b, bin.W, bin.L), dtype=np.int64)
    for slot, item in enumerate(buffer):
        if item.is_sentinel:
            continue
        for o in range(k + 1):
            d = oriented_dims(item, o)
            if o == 1 and d == item and k == 1:
                # square footprint: the rotated plane is a duplicate, still legal
                mask[1, slot] = mask[0, slot]
                levels[1, slot] = levels[0, slot]
                continue
            mask[o, slot], levels[o, slot] = feasibility_plane(hm, bin, d, thresholds)
    return mask, levels
