import pytest

from harvestsim.managers import AllocationRequest, PlatformState
from harvestsim.model import Allocation, ClusterConfig, FunctionHistory, FunctionSpec, InvocationRecord
from harvestsim.workload import Call, Trace


@pytest.fixture
def cfg():
    return ClusterConfig()


def make_spec(fid="f", cpu=4, mem=512, base=10.0, sat_cpu=2.0, sat_mem=256.0, jitter=0.0):
    return FunctionSpec(fid, Allocation(cpu, mem), base, sat_cpu, sat_mem, sat_jitter=jitter)


def make_trace(spec_or_specs, arrivals, scale=1.0):
    specs = spec_or_specs if isinstance(spec_or_specs, list) else [spec_or_specs]
    cat = {s.id: s for s in specs}
    calls = []
    for k, t in enumerate(arrivals):
        fid = t[1] if isinstance(t, tuple) else specs[0].id
        at = t[0] if isinstance(t, tuple) else t
        calls.append(Call(fid, float(at), scale))
    return Trace(tuple(calls), cat)


def make_record(inv_id=0, alloc=(4, 512), peak=(2.0, 256.0), latency=10.0, slowdown=1.0,
                safeguard=False, fid="f"):
    return InvocationRecord(inv_id, fid, Allocation(*alloc), peak[0], peak[1], latency, slowdown,
                            safeguard)


def make_request(history=None, user=(4, 512), inv_id=0, platform=None, fid="f"):
    platform = platform or PlatformState(80, 10 * 32768, 0, 0.0)
    return AllocationRequest(inv_id, fid, 0.0, history or FunctionHistory(), platform,
                             Allocation(*user))


def history_with(last, recent=None, baseline=10.0):
    h = FunctionHistory(baseline_latency_s=baseline, last_record=last, invocation_count=1)
    rc, rm = recent if recent is not None else (last.peak_cpu, last.peak_mem)
    h.recent_peak_cpu, h.recent_peak_mem = rc, rm
    return h


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    order = ["1", "2", "3", "4", "5", "6", "7a", "7b", "7c", "8", "9", "10", "11", "12"]
    for k in order:
        if k in RESULTS:
            terminalreporter.write_line(RESULTS[k])
