import numpy as np
import pytest
from hypothesis import given, strategies as st

from harvestsim.model import Allocation, SaturationPoint
from harvestsim.perf import (
    LatencyModelParams, Provisioning, classify, execution_latency, realize_saturation, usage_peak,
)

from conftest import make_spec


def test_realize_saturation_linear_without_jitter():
    spec = make_spec(sat_cpu=2.0, sat_mem=256.0)
    rng = np.random.default_rng(0)
    assert realize_saturation(spec, 1.0, rng) == SaturationPoint(2.0, 256.0)
    assert realize_saturation(spec, 2.0, rng) == SaturationPoint(4.0, 512.0)


def test_realize_saturation_jitter_bound():
    spec = make_spec(sat_cpu=2.0, sat_mem=256.0, jitter=0.2)
    rng = np.random.default_rng(1)
    pts = [realize_saturation(spec, 1.0, rng) for _ in range(1000)]
    cpu = np.array([p.cpu for p in pts])
    mem = np.array([p.mem for p in pts])
    assert cpu.min() >= 2.0 * 0.8 and cpu.max() <= 2.0 * 1.2
    assert mem.min() >= 256 * 0.8 and mem.max() <= 256 * 1.2
    assert cpu.std() > 0


def test_realize_saturation_respects_cap():
    spec = make_spec(sat_cpu=6.0, sat_mem=900.0)
    sat = realize_saturation(spec, 2.0, np.random.default_rng(0), Allocation(8, 1024))
    assert sat == SaturationPoint(8.0, 1024.0)


def test_execution_latency_examples():
    sat = SaturationPoint(4, 512)
    assert execution_latency(sat, Allocation(4, 512), 10.0) == 10.0
    assert execution_latency(sat, Allocation(8, 1024), 10.0) == 10.0
    assert execution_latency(sat, Allocation(2, 512), 10.0, LatencyModelParams(1.0, 1.0)) == 20.0


def test_execution_latency_exponents_combine():
    sat = SaturationPoint(4, 512)
    lat = execution_latency(sat, Allocation(2, 256), 10.0, LatencyModelParams(2.0, 0.5))
    assert lat == pytest.approx(10.0 * 4.0 * 2 ** 0.5)


@given(st.floats(0.1, 8), st.floats(10, 1024), st.integers(1, 8), st.integers(1, 16))
def test_latency_monotone_in_allocation(sc, sm, c, m):
    sat = SaturationPoint(sc, sm)
    a = execution_latency(sat, Allocation(c, 64 * m), 1.0)
    if c < 8:
        assert execution_latency(sat, Allocation(c + 1, 64 * m), 1.0) <= a
    assert execution_latency(sat, Allocation(c, 64 * (m + 1)), 1.0) <= a
    assert a >= 1.0


def test_usage_peak_examples():
    assert usage_peak(SaturationPoint(2, 256), Allocation(4, 512)) == (2, 256)
    assert usage_peak(SaturationPoint(6, 800), Allocation(4, 512)) == (4, 512)
    assert usage_peak(SaturationPoint(4, 512), Allocation(4, 512)) == (4, 512)


def test_classify_examples():
    assert classify(SaturationPoint(2, 512), Allocation(4, 512))[0] is Provisioning.HARVESTABLE
    assert classify(SaturationPoint(6, 512), Allocation(4, 512))[0] is Provisioning.ACCELERATABLE
    assert classify(SaturationPoint(4, 512), Allocation(4, 512)) == (Provisioning.DECENT,) * 2
    # fractional saturation rounds up to the allocated unit
    assert classify(SaturationPoint(3.2, 500), Allocation(4, 512)) == (Provisioning.DECENT,) * 2
