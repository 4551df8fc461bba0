"""Preventive online packing environment.

States are immutable values; :func:`step` returns a fresh state. The buffer is
an ordered array of ``b`` slots; the item taken from slot ``s`` is replaced in
place by the next sequence item, or by the zero-dimension sentinel once the
sequence is exhausted.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    SENTINEL,
    SUPPORT_THRESHOLDS,
    BinSpec,
    Flb,
    ItemDims,
    PackAction,
    action_space_size,
    as_item,
    decode_action,
    encode_action,
    mask_and_levels,
    oriented_dims,
    place,
)


class SimError(RuntimeError):
    pass


class InvalidSequenceError(SimError, ValueError):
    pass


class IllegalActionError(SimError):
    pass


class TerminalStateError(SimError):
    pass


@dataclass(frozen=True)
class SimConfig:
    bin: BinSpec = field(default_factory=BinSpec)
    buffer_size: int = 1
    orientations: int = 0
    reward_scale: float = 10.0
    gamma: float = 1.0
    thresholds: tuple = SUPPORT_THRESHOLDS

    def __post_init__(self):
        if self.buffer_size < 1:
            raise ValueError("buffer_size must be >= 1")
        if self.orientations not in (0, 1):
            raise ValueError("orientations (k) must be 0 or 1")
        if not self.reward_scale > 0:
            raise ValueError("reward_scale must be > 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")

    @property
    def b(self) -> int:
        return self.buffer_size

    @property
    def k(self) -> int:
        return self.orientations

    @property
    def n_actions(self) -> int:
        return action_space_size(self.bin, self.b, self.k)

    @property
    def mask_shape(self) -> tuple[int, int, int, int]:
        return (self.k + 1, self.b, self.bin.W, self.bin.L)


@dataclass(frozen=True, eq=False)
class SimState:
    heightmap: np.ndarray
    buffer: tuple
    cursor: int
    packed_volume: int
    packed_count: int
    cumulative_reward: float
    terminal: bool
    mask: np.ndarray = field(repr=False)
    levels: np.ndarray = field(repr=False)

    def key(self) -> bytes:
        """Hashable identity of the state (map + buffer + cursor)."""
        return self.heightmap.tobytes() + repr((self.buffer, self.cursor)).encode()

    def digest(self) -> str:
        return hashlib.sha1(self.key()).hexdigest()[:16]


@dataclass(frozen=True)
class StepOutcome:
    next_state: SimState
    reward: float
    placed_item: ItemDims
    placed_at: PackAction
    terminal: bool


def _make_state(hm, buffer, cursor, volume, count, cfg: SimConfig) -> SimState:
    mask, levels = mask_and_levels(hm, cfg.bin, buffer, cfg.k, cfg.thresholds)
    return SimState(
        heightmap=hm,
        buffer=buffer,
        cursor=cursor,
        packed_volume=volume,
        packed_count=count,
        cumulative_reward=cfg.reward_scale * volume / cfg.bin.volume(),
        terminal=not mask.any(),
        mask=mask,
        levels=levels,
    )


def validate_sequence(seq: Sequence, cfg: SimConfig) -> list[ItemDims]:
    items = [as_item(d) for d in seq]
    bin = cfg.bin
    for i, d in enumerate(items):
        if d.is_sentinel:
            continue
        if min(d) < 1:
            raise InvalidSequenceError(f"item {i} {tuple(d)} has a zero dimension")
        if d.w > bin.W or d.l > bin.L or d.h > bin.H:
            raise InvalidSequenceError(f"item {i} {tuple(d)} does not fit bin {bin.W}x{bin.L}x{bin.H}")
    return items


def reset(seq: Sequence, cfg: SimConfig) -> SimState:
    items = validate_sequence(seq, cfg)
    head = [items[i] if i < len(items) else SENTINEL for i in range(cfg.b)]
    return _make_state(cfg.bin.empty_heightmap(), tuple(head), min(cfg.b, len(items)), 0, 0, cfg)


def step(s: SimState, a: PackAction | int, seq: Sequence, cfg: SimConfig) -> StepOutcome:
    if s.terminal:
        raise TerminalStateError("cannot step a terminal state")
    if not isinstance(a, PackAction):
        a = decode_action(a, cfg.bin, cfg.b)
    if not (0 <= a.slot < cfg.b and 0 <= a.orientation <= cfg.k and 0 <= a.x < cfg.bin.W and 0 <= a.y < cfg.bin.L):
        raise IllegalActionError(f"action {a} outside the action space")
    if not s.mask[a.orientation, a.slot, a.x, a.y]:
        raise IllegalActionError(f"action {a} is masked out in state {s.digest()}")
    item = s.buffer[a.slot]
    d = oriented_dims(item, a.orientation)
    hm = place(s.heightmap, d, Flb(a.x, a.y), cfg.bin.H)
    buffer = list(s.buffer)
    cursor = s.cursor
    if cursor < len(seq):
        buffer[a.slot] = as_item(seq[cursor])
        cursor += 1
    else:
        buffer[a.slot] = SENTINEL
    nxt = _make_state(hm, tuple(buffer), cursor, s.packed_volume + item.volume(), s.packed_count + 1, cfg)
    reward = cfg.reward_scale * item.volume() / cfg.bin.volume()
    return StepOutcome(nxt, reward, item, a, nxt.terminal)


def legal_action_indices(s: SimState) -> np.ndarray:
    """Flat indices of legal actions, ascending (the documented enumeration order)."""
    if s.terminal:
        return np.zeros(0, dtype=np.int64)
    return np.flatnonzero(s.mask.ravel())


def legal_actions(s: SimState, cfg: SimConfig) -> list[PackAction]:
    return [decode_action(i, cfg.bin, cfg.b) for i in legal_action_indices(s)]


def utilization(s: SimState, cfg: SimConfig) -> float:
    return s.packed_volume / cfg.bin.volume()


def discounted_return(rewards: Sequence[float], gamma: float) -> float:
    total = 0.0
    for r in reversed(list(rewards)):
        total = r + gamma * total
    return total


@dataclass
class EpisodeResult:
    steps: list
    final_state: SimState
    utilization: float
    packed_count: int
    total_reward: float
    initial_state: SimState | None = None

    @property
    def rewards(self) -> list[float]:
        return [o.reward for o in self.steps]


# A policy for run_episode maps (state, cfg, rng) to an action.
Actor = Callable[[SimState, SimConfig, np.random.Generator], "PackAction | int"]


def run_episode(seq: Sequence, policy: Actor, cfg: SimConfig, rng=None) -> EpisodeResult:
    if rng is None:
        rng = np.random.default_rng(0)
    items = validate_sequence(seq, cfg)
    s0 = s = reset(items, cfg)
    outcomes = []
    while not s.terminal:
        a = policy(s, cfg, rng)
        out = step(s, a, items, cfg)
        outcomes.append(out)
        s = out.next_state
    return EpisodeResult(
        steps=outcomes,
        final_state=s,
        utilization=utilization(s, cfg),
        packed_count=s.packed_count,
        total_reward=discounted_return([o.reward for o in outcomes], cfg.gamma),
        initial_state=s0,
    )


# -- episode trace files ---------------------------------------------------

TRACE_SCHEMA = "alphabpp.trace"
TRACE_VERSION = 1


def trace_records(result: EpisodeResult, cfg: SimConfig, extra: list[dict] | None = None) -> list[dict]:
    """Header + one record per step.

    Step fields, in order: step, digest, slot, orientation, x, y, item, reward,
    mask_count, terminal, heightmap, then any per-step ``extra`` fields (the
    search dump adds root_visits / root_q).
    """
    s0 = result.initial_state
    header = {
        "schema": TRACE_SCHEMA,
        "version": TRACE_VERSION,
        "bin": [cfg.bin.W, cfg.bin.L, cfg.bin.H],
        "b": cfg.b,
        "k": cfg.k,
        "initial_heightmap": s0.heightmap.tolist() if s0 is not None else cfg.bin.empty_heightmap().tolist(),
        "initial_mask_count": int(s0.mask.sum()) if s0 is not None else 0,
    }
    rows = [header]
    for i, out in enumerate(result.steps):
        nxt = out.next_state
        row = {
            "step": i,
            "digest": nxt.digest(),
            "slot": out.placed_at.slot,
            "orientation": out.placed_at.orientation,
            "x": out.placed_at.x,
            "y": out.placed_at.y,
            "item": list(out.placed_item),
            "reward": out.reward,
            "mask_count": int(nxt.mask.sum()),
            "terminal": out.terminal,
            "heightmap": nxt.heightmap.tolist(),
        }
        if extra is not None and i < len(extra):
            row.update(extra[i])
        rows.append(row)
    return rows


def write_trace(path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


class TraceParseError(ValueError):
    pass


def read_trace(path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise TraceParseError(f"{path}: empty trace")
    try:
        rows = [json.loads(ln) for ln in lines]
    except json.JSONDecodeError as exc:
        raise TraceParseError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    header = rows[0]
    if header.get("schema") != TRACE_SCHEMA:
        raise TraceParseError(f"{path}: not a trace file (schema={header.get('schema')!r})")
    if header.get("version") != TRACE_VERSION:
        raise TraceParseError(f"{path}: unsupported trace version {header.get('version')}")
    for n, row in enumerate(rows[1:], start=2):
        if "heightmap" not in row or "step" not in row:
            raise TraceParseError(f"{path}: line {n}: step record lacks heightmap/step")
    return header, rows[1:]


__all__ = [
    "SimConfig",
    "SimState",
    "StepOutcome",
    "EpisodeResult",
    "reset",
    "step",
    "legal_actions",
    "legal_action_indices",
    "utilization",
    "run_episode",
    "discounted_return",
    "encode_action",
]
