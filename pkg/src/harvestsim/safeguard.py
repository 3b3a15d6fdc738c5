"""Admissible allocation ranges and safeguard triggering.

Each resource is handled independently: with no history the function runs
at its user configuration and recalibrates its baseline; a function whose
last peak stayed below the user level is treated as over-provisioned and
may be harvested down to one unit above its recent peak, unless the last
peak came close to the last allocation (a usage spike); otherwise the
function is under-provisioned and may be accelerated up to the
per-function maximum. A spike on either resource reverts both.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .model import Allocation, ClusterConfig, FunctionHistory


class Trigger(enum.Enum):
    NONE = "none"
    NO_HISTORY = "no_history"
    SPIKE = "spike"


@dataclass(frozen=True)
class SafeguardOutcome:
    cpu_range: tuple[int, int]
    mem_range: tuple[int, int]
    calibrate_baseline: bool
    triggered_reason: Trigger

    def __post_init__(self):
        for lo, hi in (self.cpu_range, self.mem_range):
            if lo > hi:
                raise ValueError(f"empty range [{lo}, {hi}]")

    @property
    def single_option(self) -> bool:
        return self.cpu_range[0] == self.cpu_range[1] and self.mem_range[0] == self.mem_range[1]


def quantize_up(x: float, unit: int) -> int:
    # tolerate float noise just above an exact multiple
    return int(math.ceil(x / unit - 1e-9)) * unit


def _resource_range(last_peak, last_alloc, recent_peak, user, cap, unit, threshold):
    """Return (range, spiked) for one resource."""
    if last_peak < user:
        if last_peak / last_alloc >= threshold:
            return (user, user), True
        hi = user
    else:
        hi = cap
    lo = min(quantize_up(recent_peak, unit) + unit, hi)
    lo = max(lo, unit)
    return (lo, hi), False


def decide_ranges(history: FunctionHistory | None, user_alloc: Allocation,
                  cfg: ClusterConfig, threshold: float | None = None) -> SafeguardOutcome:
    theta = cfg.safeguard_threshold if threshold is None else threshold
    user_only = ((user_alloc.cpu, user_alloc.cpu), (user_alloc.mem, user_alloc.mem))
    last = history.last_record if history is not None else None
    if last is None:
        return SafeguardOutcome(*user_only, True, Trigger.NO_HISTORY)

    cap = cfg.per_function_max
    cpu_range, cpu_spike = _resource_range(
        last.peak_cpu, last.allocation.cpu, history.recent_peak_cpu,
        user_alloc.cpu, cap.cpu, cfg.cpu_unit, theta)
    mem_range, mem_spike = _resource_range(
        last.peak_mem, last.allocation.mem, history.recent_peak_mem,
        user_alloc.mem, cap.mem, cfg.mem_unit_mb, theta)
    if cpu_spike or mem_spike:
        return SafeguardOutcome(*user_only, True, Trigger.SPIKE)
    return SafeguardOutcome(cpu_range, mem_range, False, Trigger.NONE)
