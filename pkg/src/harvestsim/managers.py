"""Resource-manager interface and the baseline managers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .model import Allocation, ClusterConfig, FunctionHistory


@dataclass(frozen=True)
class PlatformState:
    avail_cpu: int
    avail_mem: int
    inflight_request_num: int
    clock_s: float


@dataclass(frozen=True)
class AllocationRequest:
    inv_id: int
    function_id: str
    arrival_time_s: float
    history: FunctionHistory  # read-only snapshot
    platform: PlatformState
    user_alloc: Allocation


@dataclass(frozen=True)
class Grant:
    allocation: Allocation
    calibrate: bool = False
    info: Any = None


class ResourceManager:
    name = "base"

    def reset(self):
        """Drop per-episode state."""

    def allocate(self, req: AllocationRequest) -> Grant:
        raise NotImplementedError


class FixedManager(ResourceManager):
    name = "fixed"

    def allocate(self, req):
        return Grant(req.user_alloc)


def fixed_allocate(req: AllocationRequest) -> Allocation:
    return req.user_alloc


@dataclass
class HarvestPool:
    harvested_cpu: int = 0
    harvested_mem: int = 0

    def __post_init__(self):
        if self.harvested_cpu < 0 or self.harvested_mem < 0:
            raise ValueError("pool must be non-negative")


class GreedyManager(ResourceManager):
    """Steps each function's allocation by one unit per invocation.

    Downward steps credit a cluster-wide pool; upward steps need credit,
    served first-come-first-serve. Decisions use the last completed record
    and only fire once per new record.
    """

    name = "greedy"

    def __init__(self, cfg: ClusterConfig, over_threshold: float = 0.8,
                 under_threshold: float = 0.95):
        if not 0 <= over_threshold <= under_threshold:
            raise ValueError("need 0 <= over_threshold <= under_threshold")
        self.cfg = cfg
        self.over_threshold = over_threshold
        self.under_threshold = under_threshold
        self.reset()

    def reset(self):
        self.pool = HarvestPool()
        self.level: dict[str, list[int]] = {}
        self._seen: dict[str, int] = {}

    def _step(self, cur, util, unit, floor, cap, pool_attr):
        credit = getattr(self.pool, pool_attr)
        if util < self.over_threshold and cur - unit >= floor:
            setattr(self.pool, pool_attr, credit + unit)
            return cur - unit
        if util >= self.under_threshold and cur + unit <= cap and credit >= unit:
            setattr(self.pool, pool_attr, credit - unit)
            return cur + unit
        return cur

    def allocate(self, req):
        fid = req.function_id
        level = self.level.setdefault(fid, [req.user_alloc.cpu, req.user_alloc.mem])
        last = req.history.last_record
        if last is not None and self._seen.get(fid) != last.inv_id:
            self._seen[fid] = last.inv_id
            cap = self.cfg.per_function_max
            level[0] = self._step(level[0], last.peak_cpu / last.allocation.cpu,
                                  self.cfg.cpu_unit, self.cfg.cpu_unit, cap.cpu, "harvested_cpu")
            level[1] = self._step(level[1], last.peak_mem / last.allocation.mem,
                                  self.cfg.mem_unit_mb, self.cfg.mem_unit_mb, cap.mem,
                                  "harvested_mem")
        return Grant(Allocation(level[0], level[1]))


def greedy_allocate(req: AllocationRequest, mgr: GreedyManager) -> Allocation:
    return mgr.allocate(req).allocation


class EnsureManager(ResourceManager):
    """ENSURE-like: memory as requested, CPU nudged on latency degradation."""

    name = "ensure"

    def __init__(self, cfg: ClusterConfig, degradation_factor: float = 1.1,
                 low_util: float = 0.5):
        self.cfg = cfg
        self.degradation_factor = degradation_factor
        self.low_util = low_util
        self.reset()

    def reset(self):
        self.cpu: dict[str, int] = {}
        self._seen: dict[str, int] = {}

    def allocate(self, req):
        fid = req.function_id
        cpu = self.cpu.get(fid, req.user_alloc.cpu)
        h = req.history
        last = h.last_record
        if last is not None and self._seen.get(fid) != last.inv_id:
            self._seen[fid] = last.inv_id
            base: Optional[float] = h.baseline_latency_s
            if base is not None and last.response_latency_s > self.degradation_factor * base:
                cpu = min(cpu + 1, self.cfg.per_function_max.cpu)
            elif last.peak_cpu / last.allocation.cpu < self.low_util:
                cpu = max(cpu - 1, self.cfg.cpu_unit)
        self.cpu[fid] = cpu
        return Grant(Allocation(cpu, req.user_alloc.mem))


def ensure_allocate(req: AllocationRequest, mgr: EnsureManager) -> Allocation:
    return mgr.allocate(req).allocation
