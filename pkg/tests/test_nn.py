import numpy as np
import pytest

from harvestsim.nn import DEFAULT_DIMS, AdamW, CheckpointFormatError, Mlp, parameter_count

from gradcheck import max_rel_error, numeric_grads


def test_parameter_count():
    assert parameter_count(DEFAULT_DIMS) == 929
    assert Mlp.init(DEFAULT_DIMS, 0).parameter_count == 929
    assert parameter_count([1, 1]) == 2


def test_zero_net_outputs_zero():
    net = Mlp.zeros(DEFAULT_DIMS)
    x = np.random.default_rng(0).normal(size=11)
    assert net.forward(x) == 0.0


def test_linear_net():
    net = Mlp([np.array([[3.0]])], [np.array([0.5])])
    assert net.forward([2.0]) == 6.5
    grads, gx = net.backward([2.0], 1.0)
    assert grads[0][0, 0] == 2.0 and grads[1][0] == 1.0 and gx[0] == 3.0


def test_zero_upstream_gives_zero_gradients():
    net = Mlp.init(DEFAULT_DIMS, 1)
    grads, gx = net.backward(np.ones(11), 0.0)
    assert all(not g.any() for g in grads) and not gx.any()


@pytest.mark.parametrize("seed", range(5))
def test_backward_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    net = Mlp.init((4, 6, 3, 1), seed)
    x = rng.normal(size=4)
    up = rng.normal()
    grads, gx = net.backward(x, up)
    num = numeric_grads(lambda: up * net.forward(x), net.params)
    assert max_rel_error(grads, num) < 1e-4
    xv = x.copy()
    num_x = numeric_grads(lambda: up * net.forward(xv), [xv])
    assert max_rel_error([gx], num_x) < 1e-4


def test_batched_backward_sums_rows():
    rng = np.random.default_rng(3)
    net = Mlp.init(DEFAULT_DIMS, 3)
    X = rng.normal(size=(5, 11))
    up = rng.normal(size=5)
    _, acts = net.forward_batch(X, keep=True)
    batch, _ = net.backward_batch(acts, up)
    single = [net.backward(X[i], up[i])[0] for i in range(5)]
    for k, g in enumerate(batch):
        np.testing.assert_allclose(g, sum(s[k] for s in single), rtol=1e-12, atol=1e-14)


def test_adamw_one_step_hand_oracle():
    p = np.array([1.0])
    opt = AdamW()  # lr 1e-3, betas (0.9, 0.999), eps 1e-8, weight decay 0.01
    opt.step([p], [np.array([1.0])])
    lr, wd, eps = 1e-3, 0.01, 1e-8
    m_hat = (0.1 * 1.0) / (1 - 0.9)
    v_hat = (0.001 * 1.0) / (1 - 0.999)
    expected = 1.0 * (1 - lr * wd) - lr * m_hat / (v_hat ** 0.5 + eps)
    assert abs(p[0] - expected) < 1e-12


def test_adamw_zero_grad_no_decay_is_identity():
    p = np.array([0.3, -2.0])
    opt = AdamW(weight_decay=0.0)
    for _ in range(3):
        opt.step([p], [np.zeros(2)])
    np.testing.assert_array_equal(p, [0.3, -2.0])


def test_adamw_deterministic():
    a, b = np.array([0.5, 1.5]), np.array([0.5, 1.5])
    oa, ob = AdamW(), AdamW()
    for g in ([0.1, -0.2], [0.3, 0.0]):
        oa.step([a], [np.array(g)])
        ob.step([b], [np.array(g)])
    np.testing.assert_array_equal(a, b)


def test_adamw_rejects_shape_mismatch():
    with pytest.raises(ValueError):
        AdamW().step([np.zeros(2)], [np.zeros(3)])


def test_init_deterministic_per_seed():
    a, b, c = Mlp.init(DEFAULT_DIMS, 4), Mlp.init(DEFAULT_DIMS, 4), Mlp.init(DEFAULT_DIMS, 5)
    assert all(np.array_equal(x, y) for x, y in zip(a.params, b.params))
    assert not np.array_equal(a.params[0], c.params[0])


def test_save_load_round_trip(tmp_path):
    net = Mlp.init(DEFAULT_DIMS, 9)
    net.save(tmp_path / "n.ckpt")
    back = Mlp.load(tmp_path / "n.ckpt")
    X = np.random.default_rng(0).normal(size=(100, 11))
    np.testing.assert_array_equal(net.forward_batch(X), back.forward_batch(X))


def test_load_truncated_file(tmp_path):
    Mlp.init(DEFAULT_DIMS, 0).save(tmp_path / "n.ckpt")
    lines = (tmp_path / "n.ckpt").read_text().splitlines()
    (tmp_path / "bad.ckpt").write_text("\n".join(lines[:100]) + "\n")
    with pytest.raises(CheckpointFormatError):
        Mlp.load(tmp_path / "bad.ckpt")
    (tmp_path / "junk.ckpt").write_text("hello\n")
    with pytest.raises(CheckpointFormatError):
        Mlp.load(tmp_path / "junk.ckpt")
