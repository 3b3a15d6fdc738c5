"""The desk-scale benchmark: four functions on a small contended cluster.

Two functions are over-provisioned and two under-provisioned by
construction. The cluster has two invokers so that harvested capacity
actually matters; on a large idle cluster every policy that grants the
maximum is near optimal and there is nothing to learn.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ClusterConfig, ConfigError
from .trainer import PpoConfig, train
from .workload import Trace, desk_catalog, generate_poisson_trace


def train_seeds(seed: int, n: int) -> list[int]:
    """Trace seeds for training; disjoint from ``heldout_seed`` for n < 1000."""
    if not 0 < n < 1000:
        raise ConfigError("number of training traces must lie in [1, 999]")
    return [1000 * seed + k for k in range(n)]


def heldout_seed(seed: int) -> int:
    return 999_999 + seed


@dataclass(frozen=True)
class DeskBenchmark:
    n_invokers: int = 2
    mean_iat_s: float = 2.2
    n_calls: int = 250
    n_train_traces: int = 10
    episodes: int = 200

    def cluster(self, seed: int) -> ClusterConfig:
        return ClusterConfig(n_invokers=self.n_invokers, rng_seed=seed)

    def train_traces(self, seed: int) -> list[Trace]:
        cat = desk_catalog()
        return [generate_poisson_trace(cat, self.mean_iat_s, self.n_calls, s)
                for s in train_seeds(seed, self.n_train_traces)]

    def heldout_trace(self, seed: int) -> Trace:
        return generate_poisson_trace(desk_catalog(), self.mean_iat_s, self.n_calls,
                                      heldout_seed(seed))

    def config_text(self, seed: int) -> str:
        """The equivalent CLI config file."""
        return (f"seed = {seed}\ncluster.n_invokers = {self.n_invokers}\n"
                f"workload.preset = desk\nworkload.calls = {self.n_calls}\n"
                f"workload.mean_iat = {self.mean_iat_s!r}\n"
                f"trainer.n_traces = {self.n_train_traces}\ntrainer.episodes = {self.episodes}\n")

    def train(self, seed: int, **kw):
        """Train from scratch; returns (learner, episode logs)."""
        cfg = PpoConfig(episodes=self.episodes, seed=seed)
        return train(self.train_traces(seed), cfg, self.cluster(seed), **kw)
