"""Learning resource manager: enumerate options, embed, score, select."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .managers import AllocationRequest, Grant, PlatformState, ResourceManager
from .model import Allocation, ClusterConfig, ConfigError, FunctionHistory
from .nn import Mlp
from .safeguard import SafeguardOutcome, decide_ranges

STATE_DIM = 11
FEATURES = (
    "avail_cpu", "avail_mem", "inflight_request_num", "avg_cpu_peak", "avg_mem_peak",
    "avg_interval", "avg_execution_time", "baseline", "option_cpu", "option_mem", "option_index",
)
INFLIGHT_SCALE = 100.0
TIME_SCALE_S = 60.0


def enumerate_options(cpu_range: tuple[int, int], mem_range: tuple[int, int],
                      cfg: ClusterConfig) -> list[Allocation]:
    """Cross product of the ranges, cpu-major, both ascending."""
    (c0, c1), (m0, m1) = cpu_range, mem_range
    if c0 > c1 or m0 > m1:
        raise ValueError(f"empty option range cpu={cpu_range} mem={mem_range}")
    cap = cfg.per_function_max
    if c0 < cfg.cpu_unit or c1 > cap.cpu or m0 < cfg.mem_unit_mb or m1 > cap.mem:
        raise ValueError(f"option range outside caps: cpu={cpu_range} mem={mem_range}")
    mems = range(m0, m1 + 1, cfg.mem_unit_mb)
    return [Allocation(c, m) for c in range(c0, c1 + 1, cfg.cpu_unit) for m in mems]


def _context(platform: PlatformState, history: FunctionHistory, cfg: ClusterConfig):
    cap = cfg.per_function_max
    base = history.baseline_latency_s or 0.0
    return np.array([
        platform.avail_cpu / cfg.total_cpu,
        platform.avail_mem / cfg.total_mem,
        platform.inflight_request_num / INFLIGHT_SCALE,
        history.avg_cpu_peak / cap.cpu,
        history.avg_mem_peak / cap.mem,
        history.avg_interval_s / TIME_SCALE_S,
        history.avg_execution_time_s / TIME_SCALE_S,
        base / TIME_SCALE_S,
    ])


def embed_options(platform: PlatformState, history: FunctionHistory,
                  options: list[Allocation], cfg: ClusterConfig) -> np.ndarray:
    """One normalized state row per option, shape (N, 11)."""
    n = len(options)
    cap = cfg.per_function_max
    S = np.empty((n, STATE_DIM))
    S[:, :8] = _context(platform, history, cfg)
    S[:, 8] = [o.cpu / cap.cpu for o in options]
    S[:, 9] = [o.mem / cap.mem for o in options]
    S[:, 10] = np.arange(n) / max(n - 1, 1)
    return S


def embed(platform: PlatformState, history: FunctionHistory, option: Allocation,
          option_index: int, n_options: int, cfg: ClusterConfig) -> np.ndarray:
    cap = cfg.per_function_max
    tail = [option.cpu / cap.cpu, option.mem / cap.mem, option_index / max(n_options - 1, 1)]
    return np.concatenate([_context(platform, history, cfg), tail])


def softmax(scores: np.ndarray) -> np.ndarray:
    z = np.asarray(scores, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


@dataclass(frozen=True)
class Decision:
    index: int
    probs: np.ndarray
    log_prob: float
    critic_values: np.ndarray
    baseline: float  # mean critic value over the options
    allocation: Optional[Allocation] = None


def decide(states: np.ndarray, actor: Mlp, critic: Mlp, mode: str = "sample",
           rng: Optional[np.random.Generator] = None,
           options: Optional[list[Allocation]] = None) -> Decision:
    scores = actor.forward_batch(states)
    probs = softmax(scores)
    values = critic.forward_batch(states)
    if mode == "greedy":
        idx = int(np.argmax(scores))  # first maximum wins ties
    elif mode == "sample":
        if rng is None:
            raise ValueError("sample mode needs an rng")
        idx = int(rng.choice(len(probs), p=probs))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    logp = float(scores[idx] - scores.max() - np.log(np.exp(scores - scores.max()).sum()))
    return Decision(idx, probs, logp, values, float(values.mean()),
                    options[idx] if options is not None else None)


@dataclass
class Step:
    """One policy decision, kept for training."""

    inv_id: int
    states: np.ndarray
    action: int
    log_prob: float
    baseline: float


class FreyrManager(ResourceManager):
    """Safeguarded score-network manager.

    In ``sample`` mode decisions are drawn from the softmax and logged as
    training steps; ``greedy`` mode takes the highest-scoring option.
    """

    name = "freyr"

    def __init__(self, actor: Mlp, critic: Mlp, cfg: ClusterConfig, mode: str = "greedy",
                 seed: int = 0, threshold: Optional[float] = None):
        if actor.dims[0] != STATE_DIM or critic.dims[0] != STATE_DIM:
            raise ConfigError(f"networks must take {STATE_DIM} inputs")
        if mode not in ("sample", "greedy"):
            raise ConfigError(f"freyr.mode must be sample or greedy, got {mode!r}")
        self.actor = actor
        self.critic = critic
        self.cfg = cfg
        self.mode = mode
        self.threshold = threshold
        self.seed = seed
        self.reset()

    def reset(self, seed: Optional[int] = None):
        if seed is not None:
            self.seed = seed
        self.rng = np.random.default_rng(self.seed)
        self.steps: list[Step] = []
        self.outcomes: dict[int, SafeguardOutcome] = {}

    def allocate(self, req: AllocationRequest) -> Grant:
        alloc, decision, outcome = freyr_allocate(req, self.actor, self.critic, self.cfg,
                                                  self.mode, self.rng, self.threshold)
        self.outcomes[req.inv_id] = outcome
        if decision is not None and self.mode == "sample":
            self.steps.append(Step(req.inv_id, decision[1], decision[0].index,
                                   decision[0].log_prob, decision[0].baseline))
        return Grant(alloc, outcome.calibrate_baseline,
                     decision[0] if decision is not None else None)


def freyr_allocate(req: AllocationRequest, actor: Mlp, critic: Mlp, cfg: ClusterConfig,
                   mode: str = "greedy", rng: Optional[np.random.Generator] = None,
                   threshold: Optional[float] = None):
    """Returns (allocation, (Decision, states) or None, safeguard outcome)."""
    outcome = decide_ranges(req.history, req.user_alloc, cfg, threshold)
    if outcome.calibrate_baseline:
        return req.user_alloc, None, outcome
    options = enumerate_options(outcome.cpu_range, outcome.mem_range, cfg)
    states = embed_options(req.platform, req.history, options, cfg)
    d = decide(states, actor, critic, mode, rng, options)
    return d.allocation, (d, states), outcome
