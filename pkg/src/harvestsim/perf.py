"""Synthetic ground-truth latency model.

Latency is flat once an allocation reaches the saturation point and grows
as a power of the shortfall below it, independently per resource.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import Allocation, FunctionSpec, SaturationPoint


@dataclass(frozen=True)
class LatencyModelParams:
    cpu_exponent: float = 1.0
    mem_exponent: float = 1.0

    def __post_init__(self):
        for v in (self.cpu_exponent, self.mem_exponent):
            if not (math.isfinite(v) and v >= 0):
                raise ValueError("latency exponents must be finite and >= 0")

    @classmethod
    def of(cls, spec: FunctionSpec) -> "LatencyModelParams":
        return cls(spec.cpu_exponent, spec.mem_exponent)


class Provisioning(enum.Enum):
    HARVESTABLE = "harvestable"
    ACCELERATABLE = "acceleratable"
    DECENT = "decent"


def realize_saturation(spec: FunctionSpec, input_scale: float, rng: np.random.Generator,
                       cap: Allocation | None = None) -> SaturationPoint:
    if not input_scale > 0:
        raise ValueError("input_scale must be > 0")
    j = spec.sat_jitter
    u_c, u_m = (rng.uniform(-j, j, size=2) if j > 0 else (0.0, 0.0))
    cpu = spec.sat_cpu_base * input_scale * (1.0 + u_c)
    mem = spec.sat_mem_base * input_scale * (1.0 + u_m)
    if cap is not None:
        cpu = min(cpu, float(cap.cpu))
        mem = min(mem, float(cap.mem))
    return SaturationPoint(float(cpu), float(mem))


def saturated_latency(base_latency_s: float, input_scale: float) -> float:
    return base_latency_s * input_scale


def execution_latency(sat: SaturationPoint, alloc: Allocation, base_latency_s: float,
                      params: LatencyModelParams = LatencyModelParams()) -> float:
    """Latency of a run at ``alloc``; ``base_latency_s`` is the saturated latency."""
    if not base_latency_s > 0:
        raise ValueError("base_latency_s must be > 0")
    cpu_pen = max(1.0, sat.cpu / alloc.cpu) ** params.cpu_exponent
    mem_pen = max(1.0, sat.mem / alloc.mem) ** params.mem_exponent
    return base_latency_s * cpu_pen * mem_pen


def usage_peak(sat: SaturationPoint, alloc: Allocation) -> tuple[float, float]:
    return min(sat.cpu, float(alloc.cpu)), min(sat.mem, float(alloc.mem))


def _label(sat_r: float, alloc_r: int, unit: int) -> Provisioning:
    # "decent" means the allocation is exactly the saturation rounded up to a unit
    needed = math.ceil(sat_r / unit - 1e-9) * unit
    if needed == alloc_r:
        return Provisioning.DECENT
    return Provisioning.HARVESTABLE if sat_r < alloc_r else Provisioning.ACCELERATABLE


def classify(sat: SaturationPoint, alloc: Allocation, cpu_unit: int = 1,
             mem_unit: int = 64) -> tuple[Provisioning, Provisioning]:
    """Per-resource (cpu, mem) provisioning label of an allocation."""
    return _label(sat.cpu, alloc.cpu, cpu_unit), _label(sat.mem, alloc.mem, mem_unit)
