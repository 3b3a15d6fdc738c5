"""Deterministic discrete-event simulation of a serverless cluster.

Invokers gate admission with integer CPU/memory semaphores. On arrival the
resource manager picks an allocation; the invocation starts on the
lowest-id invoker with room, or waits in a FIFO queue that is retried on
every completion. Allocations never change while an invocation runs.
"""

from __future__ import annotations

import heapq
import io
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .managers import AllocationRequest, Grant, PlatformState, ResourceManager
from .model import (
    Allocation, ClusterConfig, FunctionHistory, Invocation, InvocationRecord, InvocationState,
    validate_allocation,
)
from .perf import LatencyModelParams, execution_latency, realize_saturation, saturated_latency, \
    usage_peak
from .workload import Trace

COMPLETION, ARRIVAL = 0, 1  # completions sort first at equal times
LOG_HEADER = "event_kind,clock_s,inv_id,function_id,cpu,mem"


class InvalidAllocationError(RuntimeError):
    pass


@dataclass
class Invoker:
    id: int
    cpu: int
    mem: int
    available_cpu: int = -1
    available_mem: int = -1

    def __post_init__(self):
        if self.available_cpu < 0:
            self.available_cpu = self.cpu
        if self.available_mem < 0:
            self.available_mem = self.mem

    def fits(self, a: Allocation) -> bool:
        return self.available_cpu >= a.cpu and self.available_mem >= a.mem


@dataclass
class EpisodeResult:
    records: list[InvocationRecord]
    grants: list[Grant]
    # interval_completions[i]: inv_ids completing after arrival i and up to
    # arrival i+1 (the last interval is open-ended)
    interval_completions: list[list[int]]
    events: list[tuple] = field(default_factory=list)

    def by_id(self) -> dict[int, InvocationRecord]:
        return {r.inv_id: r for r in self.records}

    def reward_stream(self, c: float = 1.0) -> list[float]:
        from .trainer import compute_reward

        recs = self.by_id()
        return [compute_reward([recs[i] for i in ids], c) for ids in self.interval_completions]

    def event_log(self) -> str:
        buf = io.StringIO()
        buf.write(LOG_HEADER + "\n")
        for kind, t, inv_id, fid, cpu, mem in self.events:
            buf.write(f"{kind},{t!r},{inv_id},{fid},{cpu},{mem}\n")
        return buf.getvalue()


class Engine:
    def __init__(self, trace: Trace, manager: ResourceManager, cfg: ClusterConfig,
                 observer: Optional[Callable[["Engine"], None]] = None, log_events: bool = True):
        self.trace = trace
        self.manager = manager
        self.cfg = cfg
        self.observer = observer
        self.log_events = log_events
        self.invokers = [Invoker(k, cfg.invoker_cpu, cfg.invoker_mem_mb)
                         for k in range(cfg.n_invokers)]
        self.clock = 0.0
        self.history: dict[str, FunctionHistory] = {}
        self.wait_queue: list[Invocation] = []
        self.running: dict[int, Invocation] = {}
        self.inflight = 0
        self._heap: list[tuple] = []
        self._records: list[InvocationRecord] = []
        self._grants: list[Grant] = []
        self._intervals: list[list[int]] = []
        self._events: list[tuple] = []
        self._exec_s: dict[int, float] = {}

        rng = np.random.default_rng(cfg.rng_seed)
        self.invocations = []
        for i, call in enumerate(trace.calls):
            spec = trace.catalog[call.function_id]
            sat = realize_saturation(spec, call.input_scale, rng, cfg.per_function_max)
            self.invocations.append(
                Invocation(i, call.function_id, call.arrival_time_s, call.input_scale, sat))
            heapq.heappush(self._heap, (call.arrival_time_s, ARRIVAL, i))

    def snapshot(self) -> PlatformState:
        return PlatformState(
            avail_cpu=sum(v.available_cpu for v in self.invokers),
            avail_mem=sum(v.available_mem for v in self.invokers),
            inflight_request_num=self.inflight,
            clock_s=self.clock,
        )

    def _log(self, kind, inv: Invocation):
        if self.log_events:
            a = inv.allocation
            self._events.append((kind, self.clock, inv.inv_id, inv.function_id,
                                 a.cpu if a else "", a.mem if a else ""))

    def schedule(self, inv: Invocation) -> Optional[int]:
        """Place ``inv`` on the lowest-id invoker with room; None means queued."""
        for v in self.invokers:
            if v.fits(inv.allocation):
                v.available_cpu -= inv.allocation.cpu
                v.available_mem -= inv.allocation.mem
                self._start(inv, v.id)
                return v.id
        return None

    def _start(self, inv: Invocation, invoker_id: int):
        spec = self.trace.catalog[inv.function_id]
        inv.state = InvocationState.RUNNING
        inv.invoker_id = invoker_id
        inv.start_time_s = self.clock
        base = saturated_latency(spec.base_latency_s, inv.input_scale)
        run = execution_latency(inv.saturation, inv.allocation, base,
                                LatencyModelParams.of(spec))
        inv.finish_time_s = self.clock + run
        self._exec_s[inv.inv_id] = run
        self.running[inv.inv_id] = inv
        heapq.heappush(self._heap, (inv.finish_time_s, COMPLETION, inv.inv_id))
        self._log("start", inv)

    def _arrive(self, inv: Invocation):
        self._intervals.append([])
        hist = self.history.setdefault(inv.function_id, FunctionHistory())
        hist.observe_arrival(inv.arrival_time_s)
        user = self.trace.catalog[inv.function_id].user_alloc
        req = AllocationRequest(inv.inv_id, inv.function_id, inv.arrival_time_s, hist.copy(),
                                self.snapshot(), user)
        grant = self.manager.allocate(req)
        if not isinstance(grant, Grant):
            grant = Grant(grant)
        if not validate_allocation(grant.allocation, self.cfg):
            raise InvalidAllocationError(
                f"manager {self.manager.name!r} returned {grant.allocation} for invocation "
                f"{inv.inv_id}")
        self._grants.append(grant)
        inv.allocation = grant.allocation
        inv.is_safeguard_invocation = grant.calibrate
        self.inflight += 1
        self._log("arrival", inv)
        if self.wait_queue or self.schedule(inv) is None:
            self.wait_queue.append(inv)

    def complete(self, inv: Invocation) -> InvocationRecord:
        spec = self.trace.catalog[inv.function_id]
        v = self.invokers[inv.invoker_id]
        v.available_cpu += inv.allocation.cpu
        v.available_mem += inv.allocation.mem
        del self.running[inv.inv_id]
        inv.state = InvocationState.COMPLETED
        self.inflight -= 1

        params = LatencyModelParams.of(spec)
        base = saturated_latency(spec.base_latency_s, inv.input_scale)
        # summed rather than differenced so an unqueued run at the user
        # allocation has a slowdown of exactly 1.0
        exec_s = self._exec_s.pop(inv.inv_id)
        response = (inv.start_time_s - inv.arrival_time_s) + exec_s
        reference = execution_latency(inv.saturation, spec.user_alloc, base, params)
        pc, pm = usage_peak(inv.saturation, inv.allocation)
        rec = InvocationRecord(
            inv_id=inv.inv_id, function_id=inv.function_id, allocation=inv.allocation,
            peak_cpu=pc, peak_mem=pm, response_latency_s=response,
            slowdown=response / reference, was_safeguard=inv.is_safeguard_invocation,
            reference_latency_s=reference, arrival_time_s=inv.arrival_time_s,
            start_time_s=inv.start_time_s, finish_time_s=inv.finish_time_s,
        )
        self.history[inv.function_id].observe_completion(rec, exec_s)
        self._records.append(rec)
        self._intervals[-1].append(inv.inv_id)
        self._log("complete", inv)
        return rec

    def _drain_queue(self):
        while self.wait_queue:
            head = self.wait_queue[0]
            if self.schedule(head) is None:
                break
            self.wait_queue.pop(0)

    def step(self) -> bool:
        if not self._heap:
            return False
        t, kind, i = heapq.heappop(self._heap)
        self.clock = t
        inv = self.invocations[i]
        if kind == ARRIVAL:
            self._arrive(inv)
        else:
            self.complete(inv)
            self._drain_queue()
        if self.observer is not None:
            self.observer(self)
        return True

    def run(self) -> EpisodeResult:
        while self.step():
            pass
        if self.wait_queue or self.running:
            raise RuntimeError("simulation ended with unfinished invocations")
        return EpisodeResult(self._records, self._grants, self._intervals, self._events)


def run(trace: Trace, manager: ResourceManager, cfg: ClusterConfig, **kw) -> EpisodeResult:
    manager.reset()
    return Engine(trace, manager, cfg, **kw).run()
