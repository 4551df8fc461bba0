"""PUCT tree search with baseline-relative rollout evaluation, and the self-play loop.

Values live in [-1, 1]: a trajectory's total reward minus the baseline return
(the greedy policy's return on the same sequence), divided by the reward
scale and clamped.

Visit bookkeeping: the root starts at 0 visits and every simulation passes
through it, so ``root.visits == sum(root.N)``. Any other node is created by
the simulation that first reaches it (1 visit), so for internal non-root
nodes ``visits == 1 + sum(N)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .datagen import item_universe
from .policy import SearchSample, initial_priority, featurize
from .sim import (
    EpisodeResult,
    SimConfig,
    SimState,
    TerminalStateError,
    legal_action_indices,
    reset,
    run_episode,
    step,
    utilization,
    validate_sequence,
)

LEAF_EVALS = ("rollout", "value")
SEQUENCE_MODES = ("known", "stochastic")


@dataclass
class SearchConfig:
    simulations: int = 100
    c_puct: float = 1.25
    temperature: float = 1.0
    leaf_eval: str = "rollout"
    sequence_mode: str = "known"
    filter_samples: bool = False
    absolute_z: bool = False
    dirichlet_alpha: float = 0.0
    dirichlet_fraction: float = 0.25
    universe: list = field(default_factory=item_universe)

    def __post_init__(self):
        if self.simulations < 1:
            raise ValueError("simulations must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.leaf_eval not in LEAF_EVALS:
            raise ValueError(f"leaf_eval must be one of {LEAF_EVALS}")
        if self.sequence_mode not in SEQUENCE_MODES:
            raise ValueError(f"sequence_mode must be one of {SEQUENCE_MODES}")


@dataclass
class EdgeStats:
    N: int = 0
    W_sum: float = 0.0
    P: float = 0.0

    @property
    def Q(self) -> float:
        return self.W_sum / self.N if self.N else 0.0


def uct_score(edge: EdgeStats, parent_visits: int, c_puct: float) -> float:
    """Q + c_puct * P * sqrt(parent_visits) / (1 + N)."""
    return edge.Q + c_puct * edge.P * math.sqrt(parent_visits) / (1 + edge.N)


def _clamp(v: float) -> float:
    return -1.0 if v < -1.0 else 1.0 if v > 1.0 else v


def relative_value(total_reward: float, baseline: float, reward_scale: float) -> float:
    return _clamp((total_reward - baseline) / reward_scale)


class Node:
    __slots__ = ("state", "actions", "P", "N", "W", "children", "visits", "expanded")

    def __init__(self, state: SimState):
        self.state = state
        self.actions = None
        self.P = None
        self.N = None
        self.W = None
        self.children = {}
        self.visits = 0
        self.expanded = False

    def expand(self, priors: np.ndarray) -> None:
        self.actions = legal_action_indices(self.state)
        p = priors[self.actions].astype(float)
        total = p.sum()
        self.P = p / total if total > 0 else np.full(len(p), 1.0 / len(p))
        self.N = np.zeros(len(self.actions), dtype=np.int64)
        self.W = np.zeros(len(self.actions))
        self.expanded = True

    def Q(self) -> np.ndarray:
        return np.divide(self.W, self.N, out=np.zeros_like(self.W), where=self.N > 0)

    def select(self, c_puct: float) -> int:
        """Edge index maximizing U; ties go to the highest prior, then the lowest action index."""
        u = self.Q() + c_puct * self.P * math.sqrt(self.N.sum()) / (1.0 + self.N)
        best = np.flatnonzero(u == u.max())
        if len(best) > 1:
            best = best[np.lexsort((self.actions[best], -self.P[best]))]
        return int(best[0])

    def edge(self, i: int) -> EdgeStats:
        return EdgeStats(int(self.N[i]), float(self.W[i]), float(self.P[i]))


def baseline_return(seq: Sequence, policy, cfg: SimConfig) -> float:
    """Total reward of the policy's greedy (argmax) episode over the whole sequence."""
    if len(seq) == 0:
        return 0.0
    return run_episode(seq, lambda s, c, r: policy.greedy(s, c), cfg).total_reward


def rollout_value(leaf_state: SimState, seq: Sequence, policy, prefix_reward: float, baseline: float,
                  cfg: SimConfig, rng: np.random.Generator) -> float:
    """Sample policy actions from the leaf to the end; score against the baseline."""
    s = leaf_state
    tail = 0.0
    while not s.terminal:
        out = step(s, policy.sample(s, cfg, rng), seq, cfg)
        tail += out.reward
        s = out.next_state
    return relative_value(prefix_reward + tail, baseline, cfg.reward_scale)


@dataclass
class SearchTree:
    root: Node
    pi: np.ndarray
    baseline: float

    @property
    def root_visits(self) -> dict:
        return {int(a): int(n) for a, n in zip(self.root.actions, self.root.N)}

    @property
    def root_q(self) -> dict:
        return {int(a): float(q) for a, q in zip(self.root.actions, self.root.Q())}


def visit_policy(root: Node, n_actions: int, temperature: float) -> np.ndarray:
    pi = np.zeros(n_actions)
    if temperature == 0:
        best = np.flatnonzero(root.N == root.N.max())
        best = best[np.lexsort((root.actions[best], -root.P[best]))]
        pi[root.actions[best[0]]] = 1.0
        return pi
    counts = root.N.astype(float)
    weights = (counts / counts.max()) ** (1.0 / temperature)
    pi[root.actions] = weights / weights.sum()
    return pi


def _simulation_sequence(seq, root_state: SimState, scfg: SearchConfig, rng):
    if scfg.sequence_mode == "known":
        return seq
    n_tail = len(seq) - root_state.cursor
    picks = rng.integers(len(scfg.universe), size=n_tail)
    return list(seq[: root_state.cursor]) + [scfg.universe[i] for i in picks]


def run_search(root_state: SimState, seq: Sequence, policy, scfg: SearchConfig, cfg: SimConfig,
               rng: np.random.Generator, baseline: float | None = None) -> SearchTree:
    if root_state.terminal:
        raise TerminalStateError("search needs a non-terminal root")
    seq = validate_sequence(seq, cfg)
    if baseline is None:
        baseline = baseline_return(seq, policy, cfg)
    root = Node(root_state)
    priors = policy.prior(root_state, cfg)
    root.expand(priors)
    if scfg.dirichlet_alpha > 0:
        noise = rng.dirichlet(np.full(len(root.P), scfg.dirichlet_alpha))
        root.P = (1 - scfg.dirichlet_fraction) * root.P + scfg.dirichlet_fraction * noise

    for _ in range(scfg.simulations):
        sim_seq = _simulation_sequence(seq, root_state, scfg, rng)
        node = root
        path = []
        while True:
            if node.state.terminal:
                value = relative_value(node.state.cumulative_reward, baseline, cfg.reward_scale)
                break
            i = node.select(scfg.c_puct)
            path.append((node, i))
            cursor = node.state.cursor
            key = (i, tuple(sim_seq[cursor]) if cursor < len(sim_seq) else None)
            child = node.children.get(key)
            if child is not None:
                node = child
                continue
            out = step(node.state, int(node.actions[i]), sim_seq, cfg)
            child = node.children[key] = Node(out.next_state)
            node = child
            s = child.state
            if s.terminal:
                value = relative_value(s.cumulative_reward, baseline, cfg.reward_scale)
            else:
                child.expand(policy.prior(s, cfg))
                if scfg.leaf_eval == "rollout":
                    value = rollout_value(s, sim_seq, policy, s.cumulative_reward, baseline, cfg, rng)
                else:
                    value = float(np.clip(policy.value(s, cfg), -1.0, 1.0))
            break
        node.visits += 1
        for parent, i in path:
            parent.N[i] += 1
            parent.W[i] += value
            parent.visits += 1

    pi = visit_policy(root, cfg.n_actions, scfg.temperature)
    return SearchTree(root, pi, baseline)


def search(root_state: SimState, seq: Sequence, policy, scfg: SearchConfig, cfg: SimConfig,
           rng: np.random.Generator, baseline: float | None = None) -> np.ndarray:
    """Visit-count policy over the flat action space for the root state."""
    return run_search(root_state, seq, policy, scfg, cfg, rng, baseline).pi


def check_backup_conservation(root: Node) -> None:
    """Assert the visit bookkeeping documented in the module docstring."""
    stack = [(root, True)]
    while stack:
        node, is_root = stack.pop()
        if not node.expanded:
            continue
        expected = node.N.sum() + (0 if is_root else 1)
        assert node.visits == expected, (node.visits, expected)
        per_edge = {}
        for (i, _), child in node.children.items():
            per_edge[i] = per_edge.get(i, 0) + child.visits
            stack.append((child, False))
        for i, n in per_edge.items():
            assert node.N[i] == n, (i, node.N[i], n)


def _sample_from(pi: np.ndarray, rng) -> int:
    c = np.cumsum(pi)
    return min(int(np.searchsorted(c, rng.random() * c[-1], side="right")), len(pi) - 1)


@dataclass
class SelfPlayResult:
    samples: list
    episode: EpisodeResult
    baseline: float
    trace_extra: list


def self_play_episode(seq: Sequence, policy, scfg: SearchConfig, cfg: SimConfig,
                      rng: np.random.Generator, act_temperature: float | None = None) -> SelfPlayResult:
    """Search at every step, act by sampling the visit policy, then label samples with z.

    ``act_temperature`` defaults to ``scfg.temperature``; 0 plays the most
    visited action.
    """
    items = validate_sequence(seq, cfg)
    baseline = baseline_return(items, policy, cfg)
    tau = scfg.temperature if act_temperature is None else act_temperature
    s0 = s = reset(items, cfg)
    pending, outcomes, extra = [], [], []
    while not s.terminal:
        tree = run_search(s, items, policy, scfg, cfg, rng, baseline)
        pi_train = visit_policy(tree.root, cfg.n_actions, 1.0)
        pending.append((featurize(s, cfg), pi_train.reshape(cfg.mask_shape), s, policy.value(s, cfg)))
        extra.append({"root_visits": tree.root_visits, "root_q": tree.root_q})
        pi_act = visit_policy(tree.root, cfg.n_actions, tau)
        a = int(np.argmax(pi_act)) if tau == 0 else _sample_from(pi_act, rng)
        out = step(s, a, items, cfg)
        outcomes.append(out)
        s = out.next_state
    total = sum(o.reward for o in outcomes)
    episode = EpisodeResult(outcomes, s, utilization(s, cfg), s.packed_count, total, s0)
    if scfg.absolute_z:
        z = _clamp(2.0 * total / cfg.reward_scale - 1.0)
    else:
        z = relative_value(total, baseline, cfg.reward_scale)
    samples = []
    if not (scfg.filter_samples and total <= baseline):
        for feats, pi, st, v in pending:
            samples.append(
                SearchSample(
                    features=feats,
                    pi=pi,
                    mask=st.mask.copy(),
                    z=z,
                    priority=initial_priority(v, z),
                    heightmap=st.heightmap,
                    buffer=st.buffer,
                )
            )
    return SelfPlayResult(samples, episode, baseline, extra)


def plan_episode(seq: Sequence, policy, scfg: SearchConfig, cfg: SimConfig, rng) -> SelfPlayResult:
    """Inference-mode episode: search each step and play the most visited action."""
    return self_play_episode(seq, policy, scfg, cfg, rng, act_temperature=0)


__all__ = [
    "SearchConfig",
    "EdgeStats",
    "uct_score",
    "baseline_return",
    "rollout_value",
    "search",
    "run_search",
    "self_play_episode",
    "plan_episode",
]
