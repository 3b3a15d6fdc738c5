import pytest

from harvestsim.model import Allocation, ClusterConfig, ConfigError, FunctionHistory, validate_allocation

from conftest import make_record


def test_validate_allocation_examples(cfg):
    assert validate_allocation(Allocation(4, 512), cfg)
    assert not validate_allocation(Allocation(9, 512), cfg)
    with pytest.raises(ValueError):
        Allocation(4, 500)  # not a multiple of 64


def test_allocation_rejects_non_integers_and_zero():
    with pytest.raises(TypeError):
        Allocation(1.5, 64)
    with pytest.raises(ValueError):
        Allocation(0, 64)
    with pytest.raises(ValueError):
        Allocation(1, 0)


def test_memory_over_cap_is_invalid(cfg):
    assert not validate_allocation(Allocation(8, 1088), cfg)
    assert validate_allocation(Allocation(8, 1024), cfg)


def test_cluster_config_validation():
    assert ClusterConfig().total_cpu == 80
    with pytest.raises(ConfigError):
        ClusterConfig(n_invokers=0)
    with pytest.raises(ConfigError):
        ClusterConfig(invoker_cpu=4)  # per-function cap of 8 cores does not fit
    with pytest.raises(ConfigError):
        ClusterConfig(safeguard_threshold=1.5)


def test_history_recent_peak_is_max_until_calibration():
    h = FunctionHistory()
    h.observe_completion(make_record(0, peak=(3.0, 400.0), safeguard=True, latency=5.0), 5.0)
    assert h.baseline_latency_s == 5.0
    h.observe_completion(make_record(1, peak=(2.0, 300.0)), 4.0)
    assert (h.recent_peak_cpu, h.recent_peak_mem) == (3.0, 400.0)
    assert h.avg_cpu_peak == pytest.approx(2.5)
    h.observe_completion(make_record(2, peak=(1.0, 128.0), safeguard=True, latency=6.0), 6.0)
    assert (h.recent_peak_cpu, h.recent_peak_mem) == (1.0, 128.0)
    assert h.baseline_latency_s == 6.0


def test_history_interval_average():
    h = FunctionHistory()
    for t in (1.0, 3.0, 7.0):
        h.observe_arrival(t)
    assert h.avg_interval_s == pytest.approx(3.0)
    assert h.arrival_count == 3
