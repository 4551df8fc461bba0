"""Self-play training: alternate collection rounds and prioritized update rounds."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .augment import augment_sample, symmetries_for
from .datagen import record_seed
from .mcts import SearchConfig, self_play_episode
from .policy import (
    LinearPolicy,
    PolicyParams,
    ReplayBuffer,
    TrainingDivergenceError,
    grad_step,
    loss,
    lr_schedule,
)
from .sim import SimConfig

log = logging.getLogger(__name__)

TRAIN_COMPONENT = 2


@dataclass
class TrainConfig:
    episodes: int = 200
    augment: bool = False
    lr: float = 1e-3
    lr_halve_every: int = 200
    batch_size: int = 32
    updates_per_episode: int = 4
    replay_capacity: int = 5000
    lam_p: float = 1e-5
    lam_v: float = 1e-5
    seed: int = 0


@dataclass
class TrainResult:
    params: PolicyParams
    curve: list = field(default_factory=list)
    losses: list = field(default_factory=list)


def train(sequences, sim_cfg: SimConfig, scfg: SearchConfig, tcfg: TrainConfig,
          params: PolicyParams | None = None, eval_samples=None) -> TrainResult:
    """Run ``tcfg.episodes`` self-play episodes cycling through ``sequences``.

    Episode ``e`` draws its randomness from a stream derived from
    (seed, e), and the update phase from a second (seed, -1) stream, so two
    runs that differ only in ``augment`` see the same sequence order.

    Besides the minibatch loss, each curve row records ``fresh_loss``: the
    loss of the current parameters on the episode's own (unaugmented)
    samples before any update uses them. Unlike the minibatch loss it is
    measured on the same kind of data with or without augmentation, so it
    is the quantity to compare across the two settings. When
    ``eval_samples`` is given, ``eval_loss`` on that fixed set is recorded too.
    """
    params = PolicyParams.zeros(sim_cfg) if params is None else params
    buffer = ReplayBuffer(tcfg.replay_capacity)
    update_rng = np.random.default_rng(record_seed(tcfg.seed, 0, component=TRAIN_COMPONENT + 100))
    syms = symmetries_for(sim_cfg.bin)
    result = TrainResult(params)
    n_updates = 0
    for ep in range(tcfg.episodes):
        seq = sequences[ep % len(sequences)]
        rng = np.random.default_rng(record_seed(tcfg.seed, ep, component=TRAIN_COMPONENT))
        sp = self_play_episode(seq, LinearPolicy(params), scfg, sim_cfg, rng)
        samples = sp.samples
        fresh = loss(params, samples, tcfg.lam_p, tcfg.lam_v) if samples else None
        if tcfg.augment:
            samples = [a for s in samples for a in augment_sample(s, syms, cfg=sim_cfg)]
        for s in samples:
            buffer.insert(s)
        ep_losses = []
        if len(buffer):
            for _ in range(tcfg.updates_per_episode):
                batch = buffer.sample(tcfg.batch_size, update_rng)
                lr = lr_schedule(n_updates, tcfg.lr, tcfg.lr_halve_every)
                try:
                    params, value = grad_step(params, batch, lr, tcfg.lam_p, tcfg.lam_v)
                except TrainingDivergenceError as exc:
                    raise TrainingDivergenceError(f"episode {ep}, update {n_updates}: {exc}") from exc
                n_updates += 1
                ep_losses.append(value)
        result.losses.extend(ep_losses)
        row = {
            "episode": ep,
            "reward": sp.episode.total_reward,
            "baseline": sp.baseline,
            "utilization": sp.episode.utilization,
            "packed": sp.episode.packed_count,
            "samples": len(samples),
            "updates": n_updates,
            "loss": float(np.mean(ep_losses)) if ep_losses else None,
            "fresh_loss": fresh,
        }
        if eval_samples:
            row["eval_loss"] = loss(params, eval_samples, tcfg.lam_p, tcfg.lam_v)
        result.curve.append(row)
        log.info("episode %d reward %.3f baseline %.3f loss %s", ep, row["reward"], row["baseline"], row["loss"])
    result.params = params
    return result


def plateau(values, n: int = 10) -> float:
    return float(np.mean(values[:n]))


def episodes_to_threshold(curve, threshold: float, window: int = 5, key: str = "loss"):
    """First episode whose trailing ``window``-episode mean of ``key`` is at or below ``threshold``."""
    losses = [r[key] for r in curve if r.get(key) is not None]
    eps = [r["episode"] for r in curve if r.get(key) is not None]
    for i in range(window - 1, len(losses)):
        if np.mean(losses[i - window + 1 : i + 1]) <= threshold:
            return eps[i]
    return None
