import numpy as np
import pytest

from harvestsim.agent import (
    STATE_DIM, FreyrManager, decide, embed, embed_options, enumerate_options, freyr_allocate,
    softmax,
)
from harvestsim.managers import PlatformState
from harvestsim.model import Allocation, FunctionHistory
from harvestsim.nn import DEFAULT_DIMS, Mlp

from conftest import history_with, make_record, make_request


def const_net(values):
    """A net whose output on option row i is values[i], keyed on the index feature."""
    n = len(values)
    w = np.zeros((STATE_DIM, 1))
    # outputs are linear in the option-index feature i/(n-1)
    assert n >= 2 and np.allclose(np.diff(values), values[1] - values[0])
    w[10, 0] = (values[-1] - values[0])
    return Mlp([w], [np.array([values[0]], dtype=float)])


def test_enumerate_examples(cfg):
    opts = enumerate_options((3, 4), (448, 512), cfg)
    assert opts == [Allocation(3, 448), Allocation(3, 512), Allocation(4, 448), Allocation(4, 512)]
    assert enumerate_options((4, 4), (512, 512), cfg) == [Allocation(4, 512)]
    assert len(enumerate_options((1, 8), (64, 1024), cfg)) == 128


def test_enumerate_rejects_out_of_caps(cfg):
    with pytest.raises(ValueError):
        enumerate_options((1, 9), (64, 64), cfg)
    with pytest.raises(ValueError):
        enumerate_options((4, 3), (64, 64), cfg)


def test_embed_examples(cfg):
    plat = PlatformState(80, 10 * 32768, 0, 0.0)
    v = embed(plat, FunctionHistory(), Allocation(4, 512), 0, 1, cfg)
    assert v.shape == (STATE_DIM,)
    assert v[0] == 1.0 and v[1] == 1.0
    assert v[10] == 0.0
    assert v[8] == 0.5 and v[9] == 0.5


def test_embed_options_rows_match_single_embed(cfg):
    plat = PlatformState(40, 5 * 32768, 3, 1.0)
    h = history_with(make_record(), baseline=12.0)
    opts = enumerate_options((2, 4), (256, 384), cfg)
    S = embed_options(plat, h, opts, cfg)
    assert S.shape == (len(opts), STATE_DIM)
    for i, o in enumerate(opts):
        np.testing.assert_array_equal(S[i], embed(plat, h, o, i, len(opts), cfg))


def test_softmax_examples():
    np.testing.assert_allclose(softmax(np.zeros(4)), [0.25] * 4)
    np.testing.assert_allclose(softmax(np.array([0.0, np.log(2.0)])), [1 / 3, 2 / 3])
    big = softmax(np.array([1000.0, 1000.0]))
    np.testing.assert_allclose(big, [0.5, 0.5])


def test_decide_baseline_is_critic_mean():
    states = np.zeros((3, STATE_DIM))
    states[:, 10] = [0.0, 0.5, 1.0]
    critic = const_net([1.0, 2.0, 3.0])
    d = decide(states, Mlp.zeros(DEFAULT_DIMS), critic, "greedy")
    np.testing.assert_allclose(d.critic_values, [1.0, 2.0, 3.0])
    assert d.baseline == 2.0
    assert d.index == 0  # equal scores: first option wins
    assert d.log_prob == pytest.approx(np.log(1 / 3))


def test_decide_sample_needs_rng_and_is_seeded():
    states = np.random.default_rng(0).normal(size=(6, STATE_DIM))
    net = Mlp.init(DEFAULT_DIMS, 0)
    with pytest.raises(ValueError):
        decide(states, net, net, "sample")
    a = [decide(states, net, net, "sample", np.random.default_rng(1)).index for _ in range(3)]
    assert len(set(a)) == 1


def test_first_invocation_is_safeguarded(cfg):
    net = Mlp.init(DEFAULT_DIMS, 0)
    alloc, dec, out = freyr_allocate(make_request(), net, net, cfg)
    assert alloc == Allocation(4, 512) and dec is None and out.calibrate_baseline


def test_single_option_selected_with_probability_one(cfg):
    net = Mlp.init(DEFAULT_DIMS, 0)
    # recent peak right under user: both ranges collapse to the user level
    h = history_with(make_record(peak=(2.0, 256.0)), recent=(3.5, 480.0))
    alloc, (d, states), out = freyr_allocate(make_request(h), net, net, cfg, "sample",
                                             np.random.default_rng(0))
    assert alloc == Allocation(4, 512) and not out.calibrate_baseline
    assert d.probs.tolist() == [1.0] and d.log_prob == 0.0


def test_greedy_mode_deterministic(cfg):
    net = Mlp.init(DEFAULT_DIMS, 2)
    h = history_with(make_record(peak=(1.0, 128.0)))
    req = make_request(h)
    picks = {freyr_allocate(req, net, net, cfg)[0] for _ in range(3)}
    assert len(picks) == 1


def test_manager_logs_steps_only_in_sample_mode(cfg):
    net = Mlp.init(DEFAULT_DIMS, 0)
    h = history_with(make_record(peak=(1.0, 128.0)))
    for mode, n in (("sample", 1), ("greedy", 0)):
        m = FreyrManager(net, net, cfg, mode)
        m.allocate(make_request())
        m.allocate(make_request(h, inv_id=1))
        assert len(m.steps) == n
        m.reset()
        assert m.steps == []
