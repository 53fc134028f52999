import numpy as np
import pytest

from multigait import autodiff as ad
from multigait.autodiff import Tensor
from multigait.nn import Adam, Mlp, MlpSpec, adam_step
from oracles import central_difference, rel_error


def _set_params(net, flat):
    k = 0
    for p in net.parameters:
        n = p.size
        p.data = flat[k : k + n].reshape(p.shape).copy()
        k += n


def _flat_params(net):
    return np.concatenate([p.data.reshape(-1) for p in net.parameters])


def _flat_grads(net):
    return np.concatenate(
        [(p.grad if p.grad is not None else np.zeros(p.shape)).reshape(-1) for p in net.parameters]
    )


def test_scalar_product_gradient():
    w = Tensor(np.array(2.0), requires_grad=True)
    loss = w * 3.0
    loss.backward()
    assert w.grad == 3.0


def test_backward_rejects_non_scalar():
    w = Tensor(np.ones(3), requires_grad=True)
    with pytest.raises(ValueError):
        (w * 2.0).backward()


def test_input_gradient_examples():
    x = Tensor(np.array(3.0), requires_grad=True)
    (g,) = ad.grad(ad.square(x), [x])
    assert g.item() == 6.0
    x = Tensor(np.array(0.0), requires_grad=True)
    (g,) = ad.grad(ad.tanh(x), [x])
    assert g.item() == 1.0


def test_detached_input_rejected():
    x = Tensor(np.ones(3), requires_grad=True)
    y = Tensor(np.ones(3), requires_grad=True)
    out = (x * 2.0).sum()
    with pytest.raises(ValueError):
        ad.grad(out, [y])


def test_mlp_init_deterministic_and_count():
    spec = MlpSpec(8, (64, 32), 16)
    a, b = Mlp(spec, seed=7), Mlp(spec, seed=7)
    for pa, pb in zip(a.parameters, b.parameters):
        assert np.array_equal(pa.data, pb.data)
    assert MlpSpec(42 * 5, (256, 128), 32).n_params == 91_040
    net = Mlp(MlpSpec(42 * 5, (256, 128), 32), seed=0)
    assert sum(p.size for p in net.parameters) == 91_040


def test_degenerate_depth_is_affine():
    net = Mlp(MlpSpec(3, (), 2), seed=1)
    x = np.array([0.3, -0.2, 1.0])
    expected = x @ net.weights[0].data + net.biases[0].data
    np.testing.assert_allclose(net(x).data, expected)


def test_zero_dims_rejected():
    with pytest.raises(ValueError):
        MlpSpec(0, (4,), 2)
    with pytest.raises(ValueError):
        MlpSpec(3, (0,), 2)


def test_forward_examples():
    net = Mlp(MlpSpec(5, (4,), 3), seed=0)
    for p in net.parameters:
        p.data[...] = 0.0
    np.testing.assert_array_equal(net(np.ones(5)).data, np.zeros(3))

    one = Mlp(MlpSpec(1, (), 1, output_activation="tanh"), seed=0)
    one.weights[0].data[...] = 1.0
    assert one(np.zeros(1)).data[0] == 0.0

    rnd = Mlp(MlpSpec(6, (8, 8), 2), seed=3)
    x = np.random.default_rng(0).normal(size=(4, 6))
    assert np.array_equal(rnd(x).data, rnd(x).data)

    with pytest.raises(ValueError):
        rnd(np.ones(5))


def test_two_layer_sum_of_squares_matches_finite_differences():
    rng = np.random.default_rng(11)
    net = Mlp(MlpSpec(4, (6,), 3), seed=5)
    x = rng.normal(size=(5, 4))
    theta = _flat_params(net)

    def loss_of(flat):
        _set_params(net, flat)
        with ad.no_grad():
            return float(ad.square(net(x)).sum().data)

    fd = central_difference(loss_of, theta)
    _set_params(net, theta)
    ad.square(net(x)).sum().backward()
    assert rel_error(_flat_grads(net), fd) < 1e-4


def test_sequential_losses_with_reset_match():
    net = Mlp(MlpSpec(3, (4,), 2), seed=2)
    x = np.random.default_rng(1).normal(size=(3, 3))
    net(x).sum().backward()
    g1 = [p.grad.copy() for p in net.parameters]
    for p in net.parameters:
        p.zero_grad()
    net(x).sum().backward()
    for a, p in zip(g1, net.parameters):
        assert np.array_equal(a, p.grad)


def test_mlp_input_gradient_finite_differences():
    net = Mlp(MlpSpec(7, (16, 8), 1), seed=4)
    x0 = np.random.default_rng(2).normal(size=(1, 7))
    x = Tensor(x0, requires_grad=True)
    (g,) = ad.grad(net(x).sum(), [x])

    def f(v):
        with ad.no_grad():
            return float(net(v).sum().data)

    assert rel_error(g.data, central_difference(f, x0)) < 1e-4


def test_gradient_penalty_parameter_gradient_matches_finite_differences():
    # ||d D / d x|| for a toy 3-unit discriminator, differentiated w.r.t. its parameters
    rng = np.random.default_rng(9)
    net = Mlp(MlpSpec(4, (3,), 1), seed=8)
    x0 = rng.normal(size=(6, 4))

    def penalty(build_graph: bool):
        x = Tensor(x0, requires_grad=True)
        d = net(x)
        (gx,) = ad.grad(d.sum(), [x], create_graph=build_graph)
        return ad.norm(gx, axis=-1).mean()

    theta = _flat_params(net)

    def f(flat):
        _set_params(net, flat)
        return float(penalty(False).data)

    fd = central_difference(f, theta)
    _set_params(net, theta)
    for p in net.parameters:
        p.zero_grad()
    penalty(True).backward()
    assert rel_error(_flat_grads(net), fd) < 1e-3


def test_elementwise_ops_second_order():
    # d2/dx2 of sum(elu(x)^3 + exp(tanh(x)) / (1 + x^2)) against nested finite differences
    x0 = np.array([-1.3, -0.2, 0.4, 1.7])

    def f_tensor(x):
        return (ad.elu(x) ** 3 + ad.exp(ad.tanh(x)) / (1.0 + ad.square(x))).sum()

    def first(v):
        x = Tensor(v, requires_grad=True)
        (g,) = ad.grad(f_tensor(x), [x])
        return g.data

    x = Tensor(x0, requires_grad=True)
    (g,) = ad.grad(f_tensor(x), [x], create_graph=True)
    (h,) = ad.grad(g.sum(), [x])
    fd = central_difference(lambda v: first(v).sum(), x0)
    assert rel_error(h.data, fd) < 1e-5


def test_shape_ops_gradients():
    rng = np.random.default_rng(3)
    a0 = rng.normal(size=(3, 4))
    b0 = rng.normal(size=(3, 2))

    def f_tensor(a, b):
        c = ad.concat([a, b], axis=-1)
        return (ad.sqrt(ad.square(c[:, 1:5]).sum(axis=1) + 1.0) * ad.maximum(c[:, 0], 0.1)).mean()

    a, b = Tensor(a0, requires_grad=True), Tensor(b0, requires_grad=True)
    ga, gb = ad.grad(f_tensor(a, b), [a, b])

    def fa(v):
        return float(f_tensor(Tensor(v), Tensor(b0)).data)

    def fb(v):
        return float(f_tensor(Tensor(a0), Tensor(v)).data)

    assert rel_error(ga.data, central_difference(fa, a0)) < 1e-6
    assert rel_error(gb.data, central_difference(fb, b0)) < 1e-6


def test_activations_finite_on_wide_range():
    x = Tensor(np.linspace(-50, 50, 1001), requires_grad=True)
    for fn in (ad.elu, ad.tanh):
        y = fn(x)
        (g,) = ad.grad(y.sum(), [x])
        assert np.all(np.isfinite(y.data)) and np.all(np.isfinite(g.data))


def test_rebuilt_tape_same_gradients():
    net = Mlp(MlpSpec(3, (5,), 1), seed=6)
    x = np.random.default_rng(4).normal(size=(4, 3))
    g1 = [g.data for g in ad.grad(net(x).sum(), net.parameters)]
    g2 = [g.data for g in ad.grad(net(x).sum(), net.parameters)]
    for a, b in zip(g1, g2):
        assert np.array_equal(a, b)


def test_adam_examples():
    p = np.array([1.0, -2.0])
    new, m, v = adam_step(p, np.zeros(2), np.zeros(2), np.zeros(2), 1, 1e-3)
    np.testing.assert_array_equal(new, p)
    for g in (0.7, -3.0):
        new, _, _ = adam_step(np.array([0.5]), np.array([g]), np.zeros(1), np.zeros(1), 1, 1e-2)
        assert new[0] - 0.5 == pytest.approx(-1e-2 * np.sign(g), rel=1e-6)
    with pytest.raises(ValueError):
        adam_step(p, p, p, p, 1, 0.0)


def test_adam_deterministic():
    def run():
        w = Tensor(np.array([0.3, -0.1]), requires_grad=True)
        opt = Adam([w], lr=0.05)
        for k in range(5):
            opt.zero_grad()
            ad.square(w - k).sum().backward()
            opt.step()
        return w.data

    assert np.array_equal(run(), run())
