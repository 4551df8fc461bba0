"""Benchmark sequence generators (CUT-1, CUT-2, RS) and the dataset file format.

Cut kinds come from a guillotine partition of the bin, so replaying their
recorded placements fills the bin exactly. The dataset file is JSON lines: a
header record followed by one record per sequence::

    {"schema": "alphabpp.dataset", "version": 1, "kind": "cut1", "split": "test",
     "bin": [10, 10, 10], "count": 100, "master_seed": 7}
    {"id": 0, "kind": "cut1", "seed": 1234, "items": [[w, l, h], ...],
     "provenance": [[x, y, z], ...]}

``provenance[i]`` is the origin of ``items[i]``; it is ``null`` for RS.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import BinSpec, ItemDims, PackAction

MIN_DIM = 2
MAX_DIM = 5
RS_LENGTH = 50
KINDS = ("cut1", "cut2", "rs")

DATASET_SCHEMA = "alphabpp.dataset"
DATASET_VERSION = 1


class DatasetParseError(ValueError):
    pass


class PlacedItem(NamedTuple):
    dims: ItemDims
    origin: tuple  # (x, y, z)


@dataclass
class SequenceRecord:
    id: int
    kind: str
    bin: BinSpec
    items: list
    provenance: list | None = None
    seed: int = 0

    def __post_init__(self):
        self.items = [ItemDims(*map(int, d)) for d in self.items]
        if self.provenance is not None:
            self.provenance = [tuple(int(v) for v in o) for o in self.provenance]


@dataclass
class Dataset:
    records: list
    kind: str
    bin: BinSpec = field(default_factory=BinSpec)
    split: str = "test"
    master_seed: int = 0

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.kind, self.bin, self.split, self.master_seed) == (
            other.kind,
            other.bin,
            other.split,
            other.master_seed,
        ) and [vars(r) for r in self.records] == [vars(r) for r in other.records]


# -- cutting stock ---------------------------------------------------------


def gen_cut_items(bin: BinSpec, rng: np.random.Generator, extra_split_prob: float = 0.0,
                  min_dim: int = MIN_DIM, max_dim: int = MAX_DIM) -> list[PlacedItem]:
    """Guillotine-partition the bin until every piece has dims in [min_dim, max_dim].

    A piece is split while some axis exceeds ``max_dim``; the axis is drawn
    uniformly among the oversized ones and the offset uniformly over positions
    leaving both halves at least ``min_dim``. With ``extra_split_prob > 0`` an
    already-valid piece with a splittable axis is cut once more with that
    probability.
    """
    if min(bin.W, bin.L, bin.H) < min_dim:
        raise ValueError(f"bin {bin} has a dimension below {min_dim}")
    work = [((0, 0, 0), (bin.W, bin.L, bin.H))]
    done = []
    while work:
        origin, dims = work.pop()
        axes = [a for a in range(3) if dims[a] > max_dim]
        if not axes and extra_split_prob > 0:
            splittable = [a for a in range(3) if dims[a] >= 2 * min_dim]
            if splittable and rng.random() < extra_split_prob:
                axes = splittable
        if not axes:
            done.append(PlacedItem(ItemDims(*dims), origin))
            continue
        axis = axes[int(rng.integers(len(axes)))] if len(axes) > 1 else axes[0]
        size = dims[axis]
        cut = int(rng.integers(min_dim, size - min_dim + 1))
        lo_dims = list(dims)
        hi_dims = list(dims)
        lo_dims[axis] = cut
        hi_dims[axis] = size - cut
        hi_origin = list(origin)
        hi_origin[axis] += cut
        work.append((tuple(hi_origin), tuple(hi_dims)))
        work.append((origin, tuple(lo_dims)))
    return done


def sort_cut1(items: list[PlacedItem], rng: np.random.Generator) -> list[PlacedItem]:
    """Ascending z; items sharing a z are shuffled uniformly."""
    shuffled = [items[i] for i in rng.permutation(len(items))]
    return sorted(shuffled, key=lambda p: p.origin[2])


def _overlap(a0, a1, b0, b1) -> bool:
    return min(a1, b1) - max(a0, b0) > 0


def supports(a: PlacedItem, b: PlacedItem) -> bool:
    """True if ``a``'s top face touches ``b``'s bottom face with positive area."""
    (ax, ay, az), (bx, by, bz) = a.origin, b.origin
    return (
        az + a.dims.h == bz
        and _overlap(ax, ax + a.dims.w, bx, bx + b.dims.w)
        and _overlap(ay, ay + a.dims.l, by, by + b.dims.l)
    )


def sort_cut2(items: list[PlacedItem], rng: np.random.Generator) -> list[PlacedItem]:
    """Random topological order of the support relation."""
    n = len(items)
    waiting = [0] * n
    dependents = [[] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i != j and supports(items[i], items[j]):
                waiting[j] += 1
                dependents[i].append(j)
    ready = [i for i in range(n) if waiting[i] == 0]
    order = []
    while ready:
        pick = ready.pop(int(rng.integers(len(ready))))
        order.append(items[pick])
        for j in dependents[pick]:
            waiting[j] -= 1
            if waiting[j] == 0:
                ready.append(j)
    if len(order) != n:
        raise AssertionError("support relation has a cycle; input is not a valid tiling")
    return order


def gen_rs(rng: np.random.Generator, n_items: int = RS_LENGTH,
           min_dim: int = MIN_DIM, max_dim: int = MAX_DIM) -> list[ItemDims]:
    if n_items < 1:
        raise ValueError("n_items must be >= 1")
    dims = rng.integers(min_dim, max_dim + 1, size=(n_items, 3))
    return [ItemDims(*map(int, row)) for row in dims]


def item_universe(min_dim: int = MIN_DIM, max_dim: int = MAX_DIM) -> list[ItemDims]:
    r = range(min_dim, max_dim + 1)
    return [ItemDims(w, l, h) for w in r for l in r for h in r]


# -- datasets ----------------------------------------------------------------


def record_seed(master_seed: int, record_id: int, component: int = 0) -> int:
    """Per-record seed derived from (master seed, component tag, record id)."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(component), int(record_id)))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def make_record(kind: str, record_id: int, seed: int, bin: BinSpec = BinSpec(),
                rs_length: int = RS_LENGTH, extra_split_prob: float = 0.0) -> SequenceRecord:
    rng = np.random.default_rng(seed)
    if kind == "rs":
        return SequenceRecord(record_id, kind, bin, gen_rs(rng, rs_length), None, seed)
    if kind not in ("cut1", "cut2"):
        raise ValueError(f"unknown dataset kind {kind!r}; expected one of {KINDS}")
    placed = gen_cut_items(bin, rng, extra_split_prob)
    ordered = sort_cut1(placed, rng) if kind == "cut1" else sort_cut2(placed, rng)
    return SequenceRecord(record_id, kind, bin, [p.dims for p in ordered], [p.origin for p in ordered], seed)


def generate_dataset(kind: str, count: int, master_seed: int, bin: BinSpec = BinSpec(),
                     split: str = "test", rs_length: int = RS_LENGTH, extra_split_prob: float = 0.0,
                     jobs: int = 1) -> Dataset:
    if count < 1:
        raise ValueError("count must be >= 1")
    args = [(kind, i, record_seed(master_seed, i), bin, rs_length, extra_split_prob) for i in range(count)]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(jobs) as pool:
            records = list(pool.map(_make_record_star, args, chunksize=16))
    else:
        records = [make_record(*a) for a in args]
    return Dataset(records, kind, bin, split, master_seed)


def _make_record_star(args):
    return make_record(*args)


def dataset_lines(ds: Dataset) -> list[str]:
    header = {
        "schema": DATASET_SCHEMA,
        "version": DATASET_VERSION,
        "kind": ds.kind,
        "split": ds.split,
        "bin": [ds.bin.W, ds.bin.L, ds.bin.H],
        "count": len(ds.records),
        "master_seed": ds.master_seed,
    }
    out = [json.dumps(header, separators=(",", ":"))]
    for r in ds.records:
        rec = {
            "id": r.id,
            "kind": r.kind,
            "seed": r.seed,
            "items": [list(d) for d in r.items],
            "provenance": None if r.provenance is None else [list(o) for o in r.provenance],
        }
        out.append(json.dumps(rec, separators=(",", ":")))
    return out


def save_dataset(ds: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(dataset_lines(ds)) + "\n")


def load_dataset(path) -> Dataset:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DatasetParseError(f"{path}: cannot read dataset: {exc}") from exc
    if not lines:
        raise DatasetParseError(f"{path}: empty file")

    def parse(n, text):
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise DatasetParseError(f"{path}: line {n}: invalid JSON ({exc.msg})") from exc

    header = parse(1, lines[0])
    if not isinstance(header, dict) or header.get("schema") != DATASET_SCHEMA:
        raise DatasetParseError(f"{path}: line 1: missing dataset header")
    if header.get("version") != DATASET_VERSION:
        raise DatasetParseError(f"{path}: line 1: unsupported version {header.get('version')}")
    kind = header.get("kind")
    if kind not in KINDS:
        raise DatasetParseError(f"{path}: line 1: unknown kind {kind!r}")
    bin = BinSpec(*header["bin"])
    records = []
    for n, text in enumerate(lines[1:], start=2):
        if not text.strip():
            continue
        raw = parse(n, text)
        try:
            rec = SequenceRecord(int(raw["id"]), raw["kind"], bin, raw["items"], raw.get("provenance"),
                                 int(raw["seed"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetParseError(f"{path}: line {n}: malformed record ({exc})") from exc
        if any(len(d) != 3 for d in raw["items"]):
            raise DatasetParseError(f"{path}: line {n} (record {rec.id}): items must be dims triples")
        if rec.kind != kind:
            raise DatasetParseError(f"{path}: line {n} (record {rec.id}): kind {rec.kind!r} != header {kind!r}")
        if kind in ("cut1", "cut2"):
            if rec.provenance is None:
                raise DatasetParseError(f"{path}: line {n} (record {rec.id}): {kind} record lacks provenance")
            if len(rec.provenance) != len(rec.items) or any(len(o) != 3 for o in rec.provenance):
                raise DatasetParseError(f"{path}: line {n} (record {rec.id}): provenance does not match items")
        records.append(rec)
    if header.get("count") is not None and header["count"] != len(records):
        raise DatasetParseError(f"{path}: header count {header['count']} != {len(records)} records")
    return Dataset(records, kind, bin, header.get("split", "test"), int(header.get("master_seed", 0)))


# -- replay verification ---------------------------------------------------


@dataclass
class ReplayReport:
    record_id: int
    ok: bool
    steps: int
    utilization: float
    failed_step: int | None = None
    reason: str = ""


def replay_record(rec: SequenceRecord, trace: bool = False):
    """Pack a CUT record at its recorded origins and check it fills the bin.

    Every placement must be mask-legal in a b=1, k=0 simulator and rest at
    exactly the recorded z; the final utilization must be exactly 1.0.
    With ``trace`` the simulator episode is returned alongside the report.
    """
    from .sim import EpisodeResult, SimConfig, reset, step, utilization

    if rec.provenance is None:
        raise ValueError(f"record {rec.id} has no provenance to replay")
    cfg = SimConfig(bin=rec.bin)
    s0 = s = reset(rec.items, cfg)
    outcomes = []
    report = None
    for i, (x, y, z) in enumerate(rec.provenance):
        if s.terminal:
            report = ReplayReport(rec.id, False, i, utilization(s, cfg), i, "episode ended early")
            break
        if not (0 <= x < rec.bin.W and 0 <= y < rec.bin.L) or not s.mask[0, 0, x, y]:
            report = ReplayReport(rec.id, False, i, utilization(s, cfg), i, f"origin ({x},{y}) not mask-legal")
            break
        if s.levels[0, 0, x, y] != z:
            report = ReplayReport(rec.id, False, i, utilization(s, cfg), i,
                                  f"item rests at z={int(s.levels[0, 0, x, y])}, recorded z={z}")
            break
        out = step(s, PackAction(0, 0, x, y), rec.items, cfg)
        outcomes.append(out)
        s = out.next_state
    if report is None:
        util = utilization(s, cfg)
        ok = util == 1.0 and s.terminal
        report = ReplayReport(rec.id, ok, len(outcomes), util, None if ok else len(outcomes),
                              "" if ok else f"final utilization {util!r} != 1.0")
    if trace:
        total = sum(o.reward for o in outcomes)
        return report, cfg, EpisodeResult(outcomes, s, utilization(s, cfg), s.packed_count, total, s0)
    return report
