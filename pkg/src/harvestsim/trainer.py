"""PPO-clip training of the actor/critic score networks."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .model import ClusterConfig, ConfigError, InvocationRecord
from .nn import DEFAULT_DIMS, AdamW, Mlp

log = logging.getLogger(__name__)

TRAIN_LOG_HEADER = "episode,cumulative_reward,actor_loss,critic_loss,avg_slowdown,safe_invocation_rate"


@dataclass(frozen=True)
class PpoConfig:
    epochs_per_update: int = 4
    clip: float = 0.2
    gamma: float = 1.0
    lr: float = 1e-3
    episodes: int = 200
    reward_bonus: float = 1.0
    seed: int = 0
    weight_decay: float = 0.01

    def __post_init__(self):
        if not 0 < self.clip < 1:
            raise ConfigError("clip must lie in (0, 1)")
        if not 0 < self.gamma <= 1:
            raise ConfigError("gamma must lie in (0, 1]")
        if self.episodes < 0 or self.epochs_per_update < 1:
            raise ConfigError("episodes must be >= 0 and epochs_per_update >= 1")


def compute_reward(completions: Iterable[InvocationRecord], c: float = 1.0) -> float:
    r = 0.0
    for rec in completions:
        s = rec.slowdown
        r -= s
        if s < 1.0:
            r += c
        elif s > 1.0:
            r -= c
    return r


def returns_to_go(rewards: Sequence[float], gamma: float = 1.0) -> np.ndarray:
    out = np.empty(len(rewards))
    acc = 0.0
    for i in range(len(rewards) - 1, -1, -1):
        acc = rewards[i] + gamma * acc
        out[i] = acc
    return out


@dataclass
class Trajectory:
    """Per-decision data: option states, chosen index, old log-prob,
    return-to-go and the rollout-time critic mean."""

    states: list[np.ndarray]
    actions: np.ndarray
    old_log_probs: np.ndarray
    returns: np.ndarray
    baselines: np.ndarray

    def __len__(self):
        return len(self.states)

    @classmethod
    def from_episode(cls, steps, rewards: Sequence[float], gamma: float = 1.0) -> "Trajectory":
        """``rewards`` is the per-arrival reward stream; safeguard arrivals
        carry rewards but no steps."""
        rtg = returns_to_go(rewards, gamma)
        return cls(
            states=[s.states for s in steps],
            actions=np.array([s.action for s in steps], dtype=int),
            old_log_probs=np.array([s.log_prob for s in steps]),
            returns=np.array([rtg[s.inv_id] for s in steps]),
            baselines=np.array([s.baseline for s in steps]),
        )


def compute_advantages(traj: Trajectory) -> np.ndarray:
    return traj.returns - traj.baselines


def clip_objective(ratio, A, eps: float):
    ratio = np.asarray(ratio, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    g = np.where(A >= 0, (1.0 + eps) * A, (1.0 - eps) * A)
    out = np.minimum(ratio * A, g)
    return float(out) if out.ndim == 0 else out


class _Batch:
    """Concatenated option states with segment bookkeeping."""

    def __init__(self, traj: Trajectory):
        self.X = np.concatenate(traj.states, axis=0)
        sizes = np.array([len(s) for s in traj.states])
        self.starts = np.concatenate([[0], np.cumsum(sizes)[:-1]])
        self.sizes = sizes
        self.seg = np.repeat(np.arange(len(sizes)), sizes)
        self.chosen = self.starts + traj.actions

    def log_softmax(self, q: np.ndarray):
        m = np.maximum.reduceat(q, self.starts)
        e = np.exp(q - m[self.seg])
        z = np.add.reduceat(e, self.starts)
        probs = e / z[self.seg]
        logp = q[self.chosen] - m - np.log(z)
        return logp, probs

    def seg_mean(self, v: np.ndarray):
        return np.add.reduceat(v, self.starts) / self.sizes


def surrogate(actor: Mlp, traj: Trajectory, adv: np.ndarray, eps: float,
              batch: Optional[_Batch] = None) -> float:
    """Mean clipped surrogate of ``actor`` on a trajectory (no gradients)."""
    b = batch or _Batch(traj)
    logp, _ = b.log_softmax(actor.forward_batch(b.X))
    return float(np.mean(clip_objective(np.exp(logp - traj.old_log_probs), adv, eps)))


def actor_gradient(actor: Mlp, traj: Trajectory, adv: np.ndarray, eps: float,
                   batch: Optional[_Batch] = None):
    """(objective, gradients of the mean clipped surrogate w.r.t. actor params)."""
    b = batch or _Batch(traj)
    q, acts = actor.forward_batch(b.X, keep=True)
    logp, probs = b.log_softmax(q)
    ratio = np.exp(logp - traj.old_log_probs)
    unclipped = ratio * adv
    g = np.where(adv >= 0, (1.0 + eps) * adv, (1.0 - eps) * adv)
    obj = np.minimum(unclipped, g)
    T = len(traj)
    # only the ratio branch carries gradient; ties go to the ratio branch
    dobj_dlogp = np.where(unclipped <= g, unclipped, 0.0) / T
    # d logp_t / d q_n = 1[n = chosen] - p_n
    dq = -probs * dobj_dlogp[b.seg]
    dq[b.chosen] += dobj_dlogp
    grads, _ = actor.backward_batch(acts, dq)
    return float(obj.mean()), grads


def critic_gradient(critic: Mlp, traj: Trajectory, batch: Optional[_Batch] = None):
    """(mean squared error of the option-mean critic value, gradients)."""
    b = batch or _Batch(traj)
    v, acts = critic.forward_batch(b.X, keep=True)
    bbar = b.seg_mean(v)
    err = bbar - traj.returns
    T = len(traj)
    dv = (2.0 * err / T / b.sizes)[b.seg]
    grads, _ = critic.backward_batch(acts, dv)
    return float(np.mean(err ** 2)), grads


@dataclass
class Learner:
    actor: Mlp
    critic: Mlp
    cfg: PpoConfig = field(default_factory=PpoConfig)
    actor_opt: AdamW = None
    critic_opt: AdamW = None

    def __post_init__(self):
        if self.actor_opt is None:
            self.actor_opt = AdamW(lr=self.cfg.lr, weight_decay=self.cfg.weight_decay)
        if self.critic_opt is None:
            self.critic_opt = AdamW(lr=self.cfg.lr, weight_decay=self.cfg.weight_decay)


def ppo_update(traj: Trajectory, learner: Learner) -> tuple[float, float]:
    """Run the configured epochs of full-batch updates; returns the mean
    (actor loss, critic loss) over epochs, actor loss being the negated
    surrogate."""
    if len(traj) == 0:
        raise ValueError("cannot update on an empty trajectory")
    cfg = learner.cfg
    batch = _Batch(traj)
    adv = compute_advantages(traj)
    a_losses, c_losses = [], []
    for _ in range(cfg.epochs_per_update):
        obj, ga = actor_gradient(learner.actor, traj, adv, cfg.clip, batch)
        # ascent on the surrogate == descent on its negation
        learner.actor_opt.step(learner.actor.params, [-g for g in ga])
        mse, gc = critic_gradient(learner.critic, traj, batch)
        learner.critic_opt.step(learner.critic.params, gc)
        a_losses.append(-obj)
        c_losses.append(mse)
    return float(np.mean(a_losses)), float(np.mean(c_losses))


@dataclass
class EpisodeLog:
    episode: int
    cumulative_reward: float
    actor_loss: float
    critic_loss: float
    avg_slowdown: float
    safe_invocation_rate: float

    def csv_row(self) -> str:
        return (f"{self.episode},{self.cumulative_reward!r},{self.actor_loss!r},"
                f"{self.critic_loss!r},{self.avg_slowdown!r},{self.safe_invocation_rate!r}")


def train(traces: Sequence, cfg: PpoConfig, cluster: ClusterConfig,
          actor: Optional[Mlp] = None, critic: Optional[Mlp] = None,
          checkpoint_dir: Optional[Path] = None, checkpoint_every: int = 0,
          on_episode: Optional[Callable[[EpisodeLog], None]] = None):
    """Train on ``traces`` in rotation, one PPO update per episode.

    Returns (learner, list of EpisodeLog).
    """
    from . import engine
    from .agent import FreyrManager
    from .metrics import avg_slowdown, safe_rate

    if not traces:
        raise ConfigError("need at least one training trace")
    actor = actor if actor is not None else Mlp.init(DEFAULT_DIMS, cfg.seed)
    critic = critic if critic is not None else Mlp.init(DEFAULT_DIMS, cfg.seed + 1)
    learner = Learner(actor, critic, cfg)
    mgr = FreyrManager(actor, critic, cluster, mode="sample", seed=cfg.seed)
    seeds = np.random.default_rng(cfg.seed).integers(0, 2**31 - 1, size=max(cfg.episodes, 1))
    logs: list[EpisodeLog] = []
    for ep in range(cfg.episodes):
        trace = traces[ep % len(traces)]
        mgr.reset(seed=int(seeds[ep]))
        res = engine.Engine(trace, mgr, cluster, log_events=False).run()
        rewards = res.reward_stream(cfg.reward_bonus)
        a_loss = c_loss = 0.0
        if mgr.steps:
            traj = Trajectory.from_episode(mgr.steps, rewards, cfg.gamma)
            a_loss, c_loss = ppo_update(traj, learner)
        entry = EpisodeLog(ep, float(np.sum(rewards)), a_loss, c_loss,
                           avg_slowdown(res.records) if res.records else 0.0,
                           safe_rate(res.records))
        logs.append(entry)
        log.info("episode %d reward %.3f avg_slowdown %.4f", ep, entry.cumulative_reward,
                 entry.avg_slowdown)
        if on_episode is not None:
            on_episode(entry)
        if checkpoint_dir is not None and checkpoint_every and (ep + 1) % checkpoint_every == 0:
            save_checkpoint(checkpoint_dir, actor, critic)
    if checkpoint_dir is not None:
        save_checkpoint(checkpoint_dir, actor, critic)
    return learner, logs


def save_checkpoint(directory, actor: Mlp, critic: Mlp):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    actor.save(d / "actor.ckpt")
    critic.save(d / "critic.ckpt")


def load_checkpoint(directory) -> tuple[Mlp, Mlp]:
    d = Path(directory)
    if not (d / "actor.ckpt").exists() or not (d / "critic.ckpt").exists():
        raise ConfigError(f"no checkpoint (actor.ckpt, critic.ckpt) in {d}")
    return Mlp.load(d / "actor.ckpt"), Mlp.load(d / "critic.ckpt")
