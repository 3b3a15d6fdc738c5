"""Core value types shared across the simulator, managers and agent."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

MEM_UNIT_MB = 64
CPU_UNIT = 1


class ConfigError(ValueError):
    """Raised for invalid configuration or malformed inputs."""


@dataclass(frozen=True, order=True)
class Allocation:
    cpu: int
    mem: int

    def __post_init__(self):
        if not isinstance(self.cpu, int) or not isinstance(self.mem, int):
            raise TypeError(f"allocation components must be integers, got {self!r}")
        if self.cpu < CPU_UNIT:
            raise ValueError(f"cpu must be >= {CPU_UNIT}, got {self.cpu}")
        if self.mem < MEM_UNIT_MB or self.mem % MEM_UNIT_MB:
            raise ValueError(f"mem must be a positive multiple of {MEM_UNIT_MB} MB, got {self.mem}")

    def __str__(self):
        return f"({self.cpu} cores, {self.mem} MB)"


@dataclass(frozen=True)
class SaturationPoint:
    cpu: float
    mem: float

    def __post_init__(self):
        for name in ("cpu", "mem"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"saturation {name} must be finite and > 0, got {v}")


@dataclass(frozen=True)
class FunctionSpec:
    """A deployed function.

    ``user_alloc`` is what the user configured. The remaining fields
    parameterize the synthetic saturation profile: saturation scales
    linearly with an invocation's input scale and is perturbed by a
    uniform relative jitter of at most ``sat_jitter``.
    """

    id: str
    user_alloc: Allocation
    base_latency_s: float
    sat_cpu_base: float
    sat_mem_base: float
    cpu_exponent: float = 1.0
    mem_exponent: float = 1.0
    sat_jitter: float = 0.0

    def __post_init__(self):
        if not self.id:
            raise ValueError("function id must be non-empty")
        if not self.base_latency_s > 0:
            raise ValueError(f"{self.id}: base_latency_s must be > 0")
        if not (self.sat_cpu_base > 0 and self.sat_mem_base > 0):
            raise ValueError(f"{self.id}: saturation bases must be > 0")
        if self.cpu_exponent < 0 or self.mem_exponent < 0:
            raise ValueError(f"{self.id}: exponents must be >= 0")
        if not 0 <= self.sat_jitter < 1:
            raise ValueError(f"{self.id}: sat_jitter must lie in [0, 1)")


class InvocationState(enum.Enum):
    PENDING = "pending"
    RUNNING = "running"
    COMPLETED = "completed"


@dataclass
class Invocation:
    """One arrival and its lifecycle. Mutable; owned by the engine."""

    inv_id: int
    function_id: str
    arrival_time_s: float
    input_scale: float
    saturation: SaturationPoint
    state: InvocationState = InvocationState.PENDING
    allocation: Optional[Allocation] = None
    start_time_s: Optional[float] = None
    finish_time_s: Optional[float] = None
    is_safeguard_invocation: bool = False
    invoker_id: Optional[int] = None

    def __post_init__(self):
        if not self.input_scale > 0:
            raise ValueError("input_scale must be > 0")


@dataclass(frozen=True)
class InvocationRecord:
    inv_id: int
    function_id: str
    allocation: Allocation
    peak_cpu: float
    peak_mem: float
    response_latency_s: float
    slowdown: float
    was_safeguard: bool
    # latency the same invocation would have had at the user allocation
    reference_latency_s: float = 0.0
    arrival_time_s: float = 0.0
    start_time_s: float = 0.0
    finish_time_s: float = 0.0

    def __post_init__(self):
        if self.peak_cpu > self.allocation.cpu or self.peak_mem > self.allocation.mem:
            raise ValueError(f"record {self.inv_id}: peak exceeds allocation")
        if not self.response_latency_s > 0:
            raise ValueError(f"record {self.inv_id}: response latency must be > 0")


@dataclass
class FunctionHistory:
    """Rolling per-function statistics visible to resource managers.

    Averages are cumulative over every completed invocation; the interval
    average is over arrivals.
    """

    baseline_latency_s: Optional[float] = None
    avg_cpu_peak: float = 0.0
    avg_mem_peak: float = 0.0
    avg_interval_s: float = 0.0
    avg_execution_time_s: float = 0.0
    recent_peak_cpu: float = 0.0
    recent_peak_mem: float = 0.0
    last_record: Optional[InvocationRecord] = None
    invocation_count: int = 0
    arrival_count: int = 0
    last_arrival_s: Optional[float] = None

    def observe_arrival(self, t: float):
        if self.last_arrival_s is not None:
            n = self.arrival_count - 1  # intervals seen so far
            gap = t - self.last_arrival_s
            self.avg_interval_s += (gap - self.avg_interval_s) / (n + 1)
        self.last_arrival_s = t
        self.arrival_count += 1

    def observe_completion(self, rec: InvocationRecord, execution_time_s: float):
        n = self.invocation_count + 1
        self.avg_cpu_peak += (rec.peak_cpu - self.avg_cpu_peak) / n
        self.avg_mem_peak += (rec.peak_mem - self.avg_mem_peak) / n
        self.avg_execution_time_s += (execution_time_s - self.avg_execution_time_s) / n
        self.invocation_count = n
        if rec.was_safeguard or self.baseline_latency_s is None:
            self.baseline_latency_s = rec.response_latency_s
            self.recent_peak_cpu = rec.peak_cpu
            self.recent_peak_mem = rec.peak_mem
        else:
            self.recent_peak_cpu = max(self.recent_peak_cpu, rec.peak_cpu)
            self.recent_peak_mem = max(self.recent_peak_mem, rec.peak_mem)
        self.last_record = rec

    def copy(self) -> "FunctionHistory":
        return FunctionHistory(**self.__dict__)


@dataclass(frozen=True)
class ClusterConfig:
    n_invokers: int = 10
    invoker_cpu: int = 8
    invoker_mem_mb: int = 32768
    per_function_max: Allocation = field(default_factory=lambda: Allocation(8, 1024))
    mem_unit_mb: int = MEM_UNIT_MB
    cpu_unit: int = CPU_UNIT
    slo_threshold: float = 1.05
    safeguard_threshold: float = 0.8
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_invokers < 1:
            raise ConfigError("n_invokers must be >= 1")
        if self.per_function_max.cpu > self.invoker_cpu:
            raise ConfigError("per-function cpu cap exceeds invoker capacity")
        if self.per_function_max.mem > self.invoker_mem_mb:
            raise ConfigError("per-function mem cap exceeds invoker capacity")
        if self.mem_unit_mb < 1 or self.mem_unit_mb % MEM_UNIT_MB:
            raise ConfigError(f"mem_unit_mb must be a multiple of {MEM_UNIT_MB}")
        if self.cpu_unit != CPU_UNIT:
            raise ConfigError("only whole-core cpu units are supported")
        if not 0.0 <= self.safeguard_threshold <= 1.0:
            raise ConfigError("safeguard_threshold must lie in [0, 1]")

    @property
    def total_cpu(self) -> int:
        return self.n_invokers * self.invoker_cpu

    @property
    def total_mem(self) -> int:
        return self.n_invokers * self.invoker_mem_mb


def validate_allocation(alloc: Allocation, cfg: ClusterConfig) -> bool:
    cap = cfg.per_function_max
    return (
        cfg.cpu_unit <= alloc.cpu <= cap.cpu
        and cfg.mem_unit_mb <= alloc.mem <= cap.mem
        and alloc.mem % cfg.mem_unit_mb == 0
    )
