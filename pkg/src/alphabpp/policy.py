"""Action-selection policies, features, the training loss and prioritized replay.

Every policy exposes the same four hooks used by the planner and the
benchmark harness:

* ``prior(state, cfg)``  - flat probability vector over the action space,
  zero off the mask;
* ``value(state, cfg)``  - scalar estimate in [-1, 1];
* ``greedy(state, cfg)`` - deterministic action (the baseline policy);
* ``sample(state, cfg, rng)`` - stochastic action (used for rollouts).

Calling a policy object samples, which makes it an ``Actor`` for
:func:`alphabpp.sim.run_episode`.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .augment import IDENTITY, Symmetry
from .geometry import BinSpec, PackAction, decode_action
from .sim import SimConfig, SimState, legal_action_indices

LOG_EPS = 1e-12
PRIORITY_EPS = 0.01


class NoActionError(RuntimeError):
    """Raised when a policy is asked to act in a state with no legal action."""


class TrainingDivergenceError(FloatingPointError):
    pass


# -- features ----------------------------------------------------------------


def n_features(bin: BinSpec, b: int) -> int:
    return (1 + 3 * b) * bin.W * bin.L


def featurize_arrays(hm: np.ndarray, buffer, bin: BinSpec) -> np.ndarray:
    """Height plane then (w, l, h) planes per slot, all divided by H, flattened plane-major."""
    W, L = hm.shape
    planes = np.empty((1 + 3 * len(buffer), W, L))
    planes[0] = hm / bin.H
    for s, d in enumerate(buffer):
        planes[1 + 3 * s] = d.w / bin.H
        planes[2 + 3 * s] = d.l / bin.H
        planes[3 + 3 * s] = d.h / bin.H
    return planes.ravel()


def featurize(s: SimState, cfg: SimConfig) -> np.ndarray:
    return featurize_arrays(s.heightmap, s.buffer, cfg.bin)


# -- parameters ----------------------------------------------------------------


@dataclass
class PolicyParams:
    theta: np.ndarray  # (F, A)
    theta_bias: np.ndarray  # (A,)
    psi: np.ndarray  # (F,)
    psi_bias: float = 0.0

    @classmethod
    def zeros(cls, cfg: SimConfig) -> "PolicyParams":
        F, A = n_features(cfg.bin, cfg.b), cfg.n_actions
        return cls(np.zeros((F, A)), np.zeros(A), np.zeros(F), 0.0)

    @classmethod
    def random(cls, cfg: SimConfig, rng: np.random.Generator, scale: float = 0.1) -> "PolicyParams":
        F, A = n_features(cfg.bin, cfg.b), cfg.n_actions
        return cls(
            rng.normal(0, scale, (F, A)), rng.normal(0, scale, A), rng.normal(0, scale, F), float(rng.normal(0, scale))
        )

    def copy(self) -> "PolicyParams":
        return PolicyParams(self.theta.copy(), self.theta_bias.copy(), self.psi.copy(), float(self.psi_bias))

    def flat(self) -> np.ndarray:
        return np.concatenate([self.theta.ravel(), self.theta_bias, self.psi, [self.psi_bias]])

    def with_flat(self, v: np.ndarray) -> "PolicyParams":
        F, A = self.theta.shape
        i = 0
        theta = v[i : i + F * A].reshape(F, A)
        i += F * A
        tb = v[i : i + A]
        i += A
        psi = v[i : i + F]
        return PolicyParams(theta.copy(), tb.copy(), psi.copy(), float(v[i + F]))

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.flat()).all())


def masked_softmax(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Softmax over ``mask``-true entries along the last axis; exact zeros elsewhere."""
    mask = mask.astype(bool)
    if not mask.any(axis=-1).all():
        raise NoActionError("mask has no legal action")
    z = np.where(mask, logits, -np.inf)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.where(mask, np.exp(z), 0.0)
    return e / e.sum(axis=-1, keepdims=True)


def policy_forward(params: PolicyParams, feats: np.ndarray, mask: np.ndarray) -> np.ndarray:
    logits = feats @ params.theta + params.theta_bias
    return masked_softmax(logits, mask.reshape(logits.shape))


def value_forward(params: PolicyParams, feats: np.ndarray):
    return np.tanh(feats @ params.psi + params.psi_bias)


# -- samples and loss ------------------------------------------------------------


@dataclass
class SearchSample:
    features: np.ndarray
    pi: np.ndarray  # (k+1, b, W, L)
    mask: np.ndarray  # (k+1, b, W, L) bool
    z: float
    priority: float = 1.0
    heightmap: np.ndarray | None = None
    buffer: tuple = ()
    symmetry: Symmetry = IDENTITY


def _stack(batch):
    F = np.stack([s.features for s in batch])
    Pi = np.stack([s.pi.ravel() for s in batch])
    M = np.stack([s.mask.ravel() for s in batch])
    z = np.array([s.z for s in batch], dtype=float)
    return F, Pi, M, z


def loss(params: PolicyParams, batch, lam_p: float = 0.0, lam_v: float = 0.0) -> float:
    """Mean over samples of (v - z)^2 - sum_a pi_a log p_a, plus L2 penalties on all parameters.

    Log-probabilities are clamped at ``LOG_EPS`` so a zero predicted
    probability on a target-positive action gives a large finite loss.
    """
    return loss_and_grad(params, batch, lam_p, lam_v, need_grad=False)[0]


def loss_and_grad(params: PolicyParams, batch, lam_p=0.0, lam_v=0.0, need_grad=True):
    if not batch:
        raise ValueError("empty batch")
    F, Pi, M, z = _stack(batch)
    n = len(batch)
    P = masked_softmax(F @ params.theta + params.theta_bias, M)
    v = np.tanh(F @ params.psi + params.psi_bias)
    ce = -(Pi * np.log(np.maximum(P, LOG_EPS))).sum(axis=1)
    l2_p = float((params.theta**2).sum() + (params.theta_bias**2).sum())
    l2_v = float((params.psi**2).sum() + np.float64(params.psi_bias) ** 2)
    total = float(((v - z) ** 2 + ce).mean() + lam_p * l2_p + lam_v * l2_v)
    if not need_grad:
        return total, None
    # d ce / d logits = p * sum(pi) - pi, restricted to the mask
    dlogits = (P * Pi.sum(axis=1, keepdims=True) - Pi) * M / n
    dpre = 2.0 * (v - z) * (1.0 - v**2) / n
    grads = PolicyParams(
        theta=F.T @ dlogits + 2 * lam_p * params.theta,
        theta_bias=dlogits.sum(axis=0) + 2 * lam_p * params.theta_bias,
        psi=F.T @ dpre + 2 * lam_v * params.psi,
        psi_bias=float(dpre.sum() + 2 * lam_v * params.psi_bias),
    )
    return total, grads


def grad_step(params: PolicyParams, batch, lr: float, lam_p: float = 0.0, lam_v: float = 0.0):
    """One plain gradient-descent update; returns ``(new_params, loss_before)``."""
    if lr < 0:
        raise ValueError("lr must be >= 0")
    with np.errstate(invalid="ignore", over="ignore"):
        value, g = loss_and_grad(params, batch, lam_p, lam_v)
    if not (math.isfinite(value) and g.is_finite()):
        raise TrainingDivergenceError(f"non-finite loss/gradient (loss={value})")
    with np.errstate(over="ignore", invalid="ignore"):
        new = PolicyParams(
            params.theta - lr * g.theta,
            params.theta_bias - lr * g.theta_bias,
            params.psi - lr * g.psi,
            params.psi_bias - lr * g.psi_bias,
        )
    if not new.is_finite():
        raise TrainingDivergenceError(f"update with lr={lr} produced non-finite parameters")
    return new, value


def lr_schedule(update: int, lr0: float = 1e-3, halve_every: int = 200) -> float:
    return lr0 * 0.5 ** (update // halve_every)


# -- policies --------------------------------------------------------------------


def _sample_index(p: np.ndarray, rng: np.random.Generator) -> int:
    c = np.cumsum(p)
    i = int(np.searchsorted(c, rng.random() * c[-1], side="right"))
    return min(i, len(p) - 1)


class Policy:
    name = "policy"

    def prior(self, s: SimState, cfg: SimConfig) -> np.ndarray:
        raise NotImplementedError

    def value(self, s: SimState, cfg: SimConfig) -> float:
        return 0.0

    def greedy(self, s: SimState, cfg: SimConfig) -> int:
        _require_action(s)
        return int(np.argmax(self.prior(s, cfg)))

    def sample(self, s: SimState, cfg: SimConfig, rng: np.random.Generator) -> int:
        _require_action(s)
        return _sample_index(self.prior(s, cfg), rng)

    def __call__(self, s, cfg, rng):
        return self.sample(s, cfg, rng)


def _require_action(s: SimState):
    if s.terminal:
        raise NoActionError("terminal state has no legal action")


class RandomPolicy(Policy):
    """Uniform over legal actions."""

    name = "random"

    def prior(self, s, cfg):
        _require_action(s)
        m = s.mask.ravel()
        return m / m.sum()

    def sample(self, s, cfg, rng):
        idx = legal_action_indices(s)
        if len(idx) == 0:
            raise NoActionError("terminal state has no legal action")
        return int(idx[rng.integers(len(idx))])


class GreedyPolicy(Policy):
    """Always plays the wrapped policy's greedy action."""

    def __init__(self, inner: Policy):
        self.inner = inner
        self.name = f"greedy-{inner.name}"

    def prior(self, s, cfg):
        p = np.zeros(cfg.n_actions)
        p[self.inner.greedy(s, cfg)] = 1.0
        return p

    def value(self, s, cfg):
        return self.inner.value(s, cfg)

    def greedy(self, s, cfg):
        return self.inner.greedy(s, cfg)

    def sample(self, s, cfg, rng):
        return self.inner.greedy(s, cfg)


def _dblf_keys(s: SimState, cfg: SimConfig):
    """Per legal action: (resulting top, y, x, slot, orientation) plus flat indices."""
    idx = legal_action_indices(s)
    k1, b, W, L = s.mask.shape
    o, rest = np.divmod(idx, b * W * L)
    slot, rest = np.divmod(rest, W * L)
    x, y = np.divmod(rest, L)
    h = np.array([d.h for d in s.buffer])[slot]
    top = s.levels.ravel()[idx] + h
    return idx, top, x, y, slot, o


def greedy_heuristic_action(s: SimState, cfg: SimConfig) -> PackAction:
    """Deepest-bottom-left fit: lowest resulting top, then min y, min x, slot, orientation."""
    return decode_action(HeuristicPolicy().greedy(s, cfg), cfg.bin, cfg.b)


class HeuristicPolicy(Policy):
    """Deepest-bottom-left-fit heuristic with a softened prior for search.

    The prior is a softmax of ``-(top + tie_weight * (y*W + x) / (W*L)) / temperature``
    over legal actions, whose ordering agrees with the lexicographic DBLF key
    for ``tie_weight <= 1``; the greedy action is the exact DBLF choice.
    """

    name = "heuristic"

    def __init__(self, temperature: float = 1.0, tie_weight: float = 1.0):
        self.temperature = temperature
        self.tie_weight = tie_weight

    def greedy(self, s, cfg):
        _require_action(s)
        idx, top, x, y, slot, o = _dblf_keys(s, cfg)
        best = np.lexsort((o, slot, x, y, top))[0]
        return int(idx[best])

    def prior(self, s, cfg):
        _require_action(s)
        idx, top, x, y, slot, o = _dblf_keys(s, cfg)
        score = top + self.tie_weight * (y * cfg.bin.W + x) / (cfg.bin.W * cfg.bin.L)
        logits = -(score - score.min()) / max(self.temperature, 1e-9)
        e = np.exp(logits)
        p = np.zeros(cfg.n_actions)
        p[idx] = e / e.sum()
        return p


class LinearPolicy(Policy):
    """Linear softmax policy head plus tanh-linear value head over :func:`featurize`."""

    name = "linear"

    def __init__(self, params: PolicyParams):
        self.params = params

    def prior(self, s, cfg):
        _require_action(s)
        return policy_forward(self.params, featurize(s, cfg), s.mask.ravel())

    def value(self, s, cfg):
        return float(value_forward(self.params, featurize(s, cfg)))

    def greedy(self, s, cfg):
        _require_action(s)
        f = featurize(s, cfg)
        logits = f @ self.params.theta + self.params.theta_bias
        return int(np.argmax(np.where(s.mask.ravel(), logits, -np.inf)))


# -- prioritized replay ------------------------------------------------------------


class ReplayStateError(RuntimeError):
    pass


@dataclass
class ReplayBuffer:
    """Ring buffer with sampling probability proportional to each entry's priority."""

    capacity: int
    entries: list = field(default_factory=list)
    priorities: list = field(default_factory=list)
    _next: int = 0

    def __len__(self):
        return len(self.entries)

    @property
    def total_priority(self) -> float:
        return float(sum(self.priorities))

    def insert(self, sample: SearchSample, priority: float | None = None) -> None:
        p = sample.priority if priority is None else priority
        if not (math.isfinite(p) and p >= 0):
            raise ValueError(f"priority must be finite and >= 0, got {p}")
        if len(self.entries) < self.capacity:
            self.entries.append(sample)
            self.priorities.append(float(p))
        else:
            self.entries[self._next] = sample
            self.priorities[self._next] = float(p)
        self._next = (self._next + 1) % self.capacity

    def sample(self, n: int, rng: np.random.Generator) -> list:
        if not self.entries:
            raise ReplayStateError("cannot sample from an empty replay buffer")
        pr = np.asarray(self.priorities)
        total = pr.sum()
        if total <= 0:
            idx = rng.integers(len(pr), size=n)
        else:
            c = np.cumsum(pr)
            idx = np.minimum(np.searchsorted(c, rng.random(n) * c[-1], side="right"), len(pr) - 1)
        return [self.entries[i] for i in idx]


def initial_priority(params_value: float, z: float) -> float:
    return abs(z - params_value) + PRIORITY_EPS


# -- checkpoints ------------------------------------------------------------------

CHECKPOINT_SCHEMA = "alphabpp.checkpoint"
CHECKPOINT_VERSION = 1


def checkpoint_bytes(params: PolicyParams, cfg: SimConfig) -> bytes:
    """Header line (JSON) + little-endian float64 values: theta (row-major), theta_bias, psi, psi_bias."""
    F, A = params.theta.shape
    header = {
        "schema": CHECKPOINT_SCHEMA,
        "version": CHECKPOINT_VERSION,
        "bin": [cfg.bin.W, cfg.bin.L, cfg.bin.H],
        "b": cfg.b,
        "k": cfg.k,
        "feature_layout": "planes[height/H, (w/H, l/H, h/H) per slot], plane-major W x L",
        "action_layout": "((orientation*b + slot)*W + x)*L + y",
        "order": ["theta", "theta_bias", "psi", "psi_bias"],
        "shapes": [[F, A], [A], [F], []],
        "dtype": "<f8",
    }
    buf = io.BytesIO()
    buf.write(json.dumps(header, separators=(",", ":")).encode() + b"\n")
    buf.write(params.flat().astype("<f8").tobytes())
    return buf.getvalue()


def save_checkpoint(params: PolicyParams, cfg: SimConfig, path) -> None:
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(params, cfg))


class CheckpointError(ValueError):
    pass


def load_checkpoint(path) -> tuple[PolicyParams, SimConfig]:
    with open(path, "rb") as fh:
        data = fh.read()
    head, sep, body = data.partition(b"\n")
    try:
        header = json.loads(head)
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: bad checkpoint header") from exc
    if header.get("schema") != CHECKPOINT_SCHEMA or header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: not a version-{CHECKPOINT_VERSION} checkpoint")
    cfg = SimConfig(BinSpec(*header["bin"]), header["b"], header["k"])
    (F, A), _, _, _ = header["shapes"]
    values = np.frombuffer(body, dtype="<f8").astype(np.float64)
    if values.size != F * A + A + F + 1:
        raise CheckpointError(f"{path}: expected {F * A + A + F + 1} values, found {values.size}")
    template = PolicyParams(np.zeros((F, A)), np.zeros(A), np.zeros(F), 0.0)
    return template.with_flat(values), cfg
