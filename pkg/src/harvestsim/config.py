"""Flat ``key=value`` run configuration with dotted keys."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .model import Allocation, ClusterConfig, ConfigError
from .trainer import PpoConfig

# key -> (type, default)
KEYS: dict[str, tuple[type, Any]] = {
    "seed": (int, None),
    "out": (str, None),
    "manager": (str, "fixed"),
    "cluster.n_invokers": (int, 10),
    "cluster.invoker_cpu": (int, 8),
    "cluster.invoker_mem_mb": (int, 32768),
    "cluster.max_cpu": (int, 8),
    "cluster.max_mem_mb": (int, 1024),
    "cluster.mem_unit_mb": (int, 64),
    "slo_threshold": (float, 1.05),
    "safeguard.threshold": (float, 0.8),
    "greedy.over_threshold": (float, 0.8),
    "greedy.under_threshold": (float, 0.95),
    "ensure.degradation_factor": (float, 1.1),
    "freyr.mode": (str, "greedy"),
    "freyr.checkpoint_path": (str, None),
    "workload.trace": (str, None),
    "workload.catalog": (str, None),
    "workload.calls": (int, 268),
    "workload.mean_iat": (float, 2.2),
    "workload.functions": (int, 10),
    "workload.preset": (str, "mixed"),
    "workload.scale_min": (float, 0.5),
    "workload.scale_max": (float, 2.0),
    "workload.time_factor": (float, 1.0),
    "trainer.episodes": (int, 200),
    "trainer.epochs": (int, 4),
    "trainer.clip": (float, 0.2),
    "trainer.gamma": (float, 1.0),
    "trainer.lr": (float, 0.001),
    "trainer.reward_bonus": (float, 1.0),
    "trainer.n_traces": (int, 10),
    "trainer.checkpoint_every": (int, 0),
}

MANAGERS = ("fixed", "greedy", "ensure", "freyr")


def _convert(key: str, raw: str):
    typ, _ = KEYS[key]
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {typ.__name__}") from None
    return raw


def parse_config_text(text: str, source: str = "<config>") -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        values[key] = _convert(key, raw)
    return values


@dataclass
class RunConfig:
    values: dict[str, Any] = field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def load(cls, path: Optional[str | Path] = None, overrides: Optional[dict] = None):
        values: dict[str, Any] = {}
        base = Path(".")
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError(f"config file not found: {p}")
            values = parse_config_text(p.read_text(encoding="utf-8"), str(p))
            base = p.parent
        for k, v in (overrides or {}).items():
            if v is None:
                continue
            if k not in KEYS:
                raise ConfigError(f"unknown config key {k!r}")
            values[k] = _convert(k, v) if isinstance(v, str) else v
        rc = cls(values, base)
        rc.validate()
        return rc

    def get(self, key: str):
        if key in self.values:
            return self.values[key]
        return KEYS[key][1]

    def path(self, key: str) -> Optional[Path]:
        v = self.get(key)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() else self.base_dir / p

    def validate(self):
        if self.get("seed") is None:
            raise ConfigError("config key 'seed' is required (or pass --seed)")
        if self.get("manager") not in MANAGERS:
            raise ConfigError(f"config key 'manager': must be one of {', '.join(MANAGERS)}")
        if self.get("freyr.mode") not in ("sample", "greedy"):
            raise ConfigError("config key 'freyr.mode': must be sample or greedy")
        if self.get("workload.preset") not in ("mixed", "desk"):
            raise ConfigError("config key 'workload.preset': must be mixed or desk")
        for key in ("workload.trace", "workload.catalog"):
            p = self.path(key)
            if p is not None and not p.is_file():
                raise ConfigError(f"config key {key!r}: file not found: {p}")
        if (self.get("workload.trace") is None) != (self.get("workload.catalog") is None):
            raise ConfigError("config keys 'workload.trace' and 'workload.catalog' go together")
        self.cluster()  # surfaces ClusterConfig validation as a config error

    def cluster(self) -> ClusterConfig:
        try:
            return ClusterConfig(
                n_invokers=self.get("cluster.n_invokers"),
                invoker_cpu=self.get("cluster.invoker_cpu"),
                invoker_mem_mb=self.get("cluster.invoker_mem_mb"),
                per_function_max=Allocation(self.get("cluster.max_cpu"),
                                            self.get("cluster.max_mem_mb")),
                mem_unit_mb=self.get("cluster.mem_unit_mb"),
                slo_threshold=self.get("slo_threshold"),
                safeguard_threshold=self.get("safeguard.threshold"),
                rng_seed=self.get("seed"),
            )
        except (ValueError, TypeError) as e:
            raise ConfigError(f"cluster config: {e}") from None

    def ppo(self) -> PpoConfig:
        return PpoConfig(
            epochs_per_update=self.get("trainer.epochs"),
            clip=self.get("trainer.clip"),
            gamma=self.get("trainer.gamma"),
            lr=self.get("trainer.lr"),
            episodes=self.get("trainer.episodes"),
            reward_bonus=self.get("trainer.reward_bonus"),
            seed=self.get("seed"),
        )

    def digest(self) -> str:
        # the output location does not affect results
        blob = "\n".join(f"{k}={self.values[k]!r}" for k in sorted(self.values) if k != "out")
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def provenance(self) -> str:
        return f"seed={self.get('seed')} config={self.digest()}"
