from harvestsim import engine
from harvestsim.managers import (
    EnsureManager, FixedManager, GreedyManager, ensure_allocate, fixed_allocate, greedy_allocate,
)
from harvestsim.model import Allocation, ClusterConfig
from harvestsim.workload import generate_poisson_trace, synthetic_catalog

from conftest import history_with, make_record, make_request


def test_fixed_identity():
    assert fixed_allocate(make_request(user=(4, 512))) == Allocation(4, 512)
    assert fixed_allocate(make_request(user=(8, 1024))) == Allocation(8, 1024)


def test_fixed_run_all_slowdowns_one():
    cfg = ClusterConfig()
    tr = generate_poisson_trace(synthetic_catalog(10, 7), 2.2, 268, 7)
    res = engine.run(tr, FixedManager(), cfg)
    assert all(r.slowdown == 1.0 for r in res.records)


def test_greedy_harvests_one_core(cfg):
    mgr = GreedyManager(cfg)
    h = history_with(make_record(alloc=(4, 512), peak=(2.0, 500.0)))
    assert greedy_allocate(make_request(h), mgr) == Allocation(3, 512)
    assert mgr.pool.harvested_cpu == 1


def test_greedy_accelerates_from_pool(cfg):
    mgr = GreedyManager(cfg)
    mgr.pool.harvested_mem = 64
    h = history_with(make_record(alloc=(4, 512), peak=(3.9, 500.0)))
    assert greedy_allocate(make_request(h), mgr) == Allocation(4, 576)
    assert mgr.pool.harvested_mem == 0


def test_greedy_cannot_accelerate_without_credit(cfg):
    mgr = GreedyManager(cfg)
    h = history_with(make_record(alloc=(4, 512), peak=(3.9, 500.0)))
    assert greedy_allocate(make_request(h), mgr) == Allocation(4, 512)


def test_greedy_no_history_is_user(cfg):
    assert greedy_allocate(make_request(user=(4, 512)), GreedyManager(cfg)) == Allocation(4, 512)


def test_greedy_steps_once_per_record(cfg):
    mgr = GreedyManager(cfg)
    h = history_with(make_record(alloc=(4, 512), peak=(2.0, 500.0)))
    greedy_allocate(make_request(h, inv_id=1), mgr)
    assert greedy_allocate(make_request(h, inv_id=2), mgr) == Allocation(3, 512)


def test_greedy_pool_tracks_harvested_total():
    cfg = ClusterConfig(n_invokers=2)
    cat = synthetic_catalog(6, 2)
    tr = generate_poisson_trace(cat, 1.0, 300, 2)
    mgr = GreedyManager(cfg)
    engine.run(tr, mgr, cfg)
    assert mgr.pool.harvested_cpu == sum(cat[f].user_alloc.cpu - lv[0] for f, lv in mgr.level.items())
    assert mgr.pool.harvested_mem == sum(cat[f].user_alloc.mem - lv[1] for f, lv in mgr.level.items())


def test_ensure_adds_core_on_degradation(cfg):
    h = history_with(make_record(alloc=(4, 512), peak=(4.0, 300.0), latency=12.0), baseline=10.0)
    assert ensure_allocate(make_request(h), EnsureManager(cfg, 1.1)) == Allocation(5, 512)


def test_ensure_removes_core_on_low_util(cfg):
    h = history_with(make_record(alloc=(4, 512), peak=(1.2, 300.0), latency=10.0), baseline=10.0)
    assert ensure_allocate(make_request(h), EnsureManager(cfg)) == Allocation(3, 512)


def test_ensure_memory_always_user():
    cfg = ClusterConfig(n_invokers=2)
    cat = synthetic_catalog(8, 4)
    res = engine.run(generate_poisson_trace(cat, 0.8, 300, 4), EnsureManager(cfg), cfg)
    assert all(r.allocation.mem == cat[r.function_id].user_alloc.mem for r in res.records)
