import numpy as np
import pytest

from curiosity_critic import tensor_nn as nn


def rel_err(a, b):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)


def scalar_net(w=0.0):
    return nn.DenseNet([nn.Layer(np.array([[w]]), np.zeros(1), nn.IDENTITY)])


class TestConstruction:
    def test_world_model_parameter_count(self):
        net = nn.net_new([60, 1024, 200], [nn.RELU, nn.IDENTITY], np.random.default_rng(0))
        assert net.num_parameters() == 60 * 1024 + 1024 + 1024 * 200 + 200

    def test_critic_shape(self):
        net = nn.net_new([60, 128, 1], [nn.RELU, nn.IDENTITY], np.random.default_rng(0))
        assert [ly.weights.shape for ly in net.layers] == [(128, 60), (1, 128)]
        assert net.output_size == 1

    def test_same_seed_same_parameters(self):
        a = nn.net_new([5, 7, 3], [nn.RELU, nn.IDENTITY], np.random.default_rng(11))
        b = nn.net_new([5, 7, 3], [nn.RELU, nn.IDENTITY], np.random.default_rng(11))
        for p, q in zip(a.parameters(), b.parameters()):
            assert np.array_equal(p, q)

    def test_glorot_bounds_and_zero_bias(self):
        net = nn.net_new([60, 1024, 200], [nn.RELU, nn.IDENTITY], np.random.default_rng(1))
        for layer in net.layers:
            bound = np.sqrt(6.0 / (layer.fan_in + layer.fan_out))
            assert np.abs(layer.weights).max() <= bound
            assert np.abs(layer.weights).max() > 0.9 * bound
            assert not layer.biases.any()

    @pytest.mark.parametrize(
        "sizes, acts",
        [([], []), ([4], []), ([4, 0, 2], [nn.RELU, nn.IDENTITY]), ([4, 3], []), ([4, 3], ["tanh"])],
    )
    def test_bad_configuration(self, sizes, acts):
        with pytest.raises(nn.ConfigurationError):
            nn.net_new(sizes, acts, np.random.default_rng(0))


class TestForward:
    def test_zero_net_gives_zero(self):
        net = nn.net_new([6, 4, 3], [nn.RELU, nn.IDENTITY], np.random.default_rng(0))
        for p in net.parameters():
            p[...] = 0.0
        assert not nn.net_forward(net, np.arange(6.0)).any()

    def test_identity_layer(self):
        net = nn.DenseNet([nn.Layer(np.eye(3), np.zeros(3), nn.IDENTITY)])
        x = np.array([1.5, -2.0, 0.25])
        assert np.array_equal(nn.net_forward(net, x), x)

    def test_relu(self):
        net = nn.DenseNet([nn.Layer(np.eye(2), np.zeros(2), nn.RELU)])
        assert np.array_equal(nn.net_forward(net, [-1.0, 2.0]), [0.0, 2.0])

    def test_pure(self):
        net = nn.net_new([5, 8, 2], [nn.RELU, nn.IDENTITY], np.random.default_rng(3))
        x = np.random.default_rng(4).normal(size=5)
        assert np.array_equal(nn.net_forward(net, x), nn.net_forward(net, x))

    def test_batch_rows_match_single(self):
        net = nn.net_new([5, 8, 2], [nn.RELU, nn.IDENTITY], np.random.default_rng(3))
        X = np.random.default_rng(4).normal(size=(6, 5))
        batch = nn.net_forward(net, X)
        for row, out in zip(X, batch):
            np.testing.assert_allclose(nn.net_forward(net, row), out, rtol=1e-13, atol=1e-15)

    def test_shape_mismatch(self):
        net = nn.net_new([5, 2], [nn.IDENTITY], np.random.default_rng(0))
        with pytest.raises(nn.ShapeError):
            nn.net_forward(net, np.zeros(4))


class TestGradients:
    def test_scalar_net_hand_gradient(self):
        loss, grads = nn.gradients(scalar_net(), [1.0], [1.0])
        assert loss == 1.0
        assert grads[0][0, 0] == -2.0
        fd = nn.finite_diff_grads(scalar_net(), [1.0], [1.0], h=1e-5)
        assert abs(fd[0][0, 0] + 2.0) < 1e-6

    def test_zero_residual_has_zero_gradient(self):
        net = nn.net_new([4, 6, 3], [nn.RELU, nn.IDENTITY], np.random.default_rng(2))
        x = np.random.default_rng(5).normal(size=4)
        y = nn.net_forward(net, x)
        _, grads = nn.gradients(net, x, y)
        fd = nn.finite_diff_grads(net, x, y, h=1e-5)
        for g, f in zip(grads, fd):
            assert not g.any()
            assert np.abs(f).max() < 1e-8

    def test_finite_diff_rejects_bad_step(self):
        with pytest.raises(ValueError):
            nn.finite_diff_grads(scalar_net(), [1.0], [1.0], h=0.0)

    @pytest.mark.parametrize("seed", range(20))
    def test_small_random_nets_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        net = nn.net_new([4, 8, 3], [nn.RELU, nn.IDENTITY], rng)
        for layer in net.layers:
            layer.biases[:] = rng.normal(scale=0.3, size=layer.biases.shape)
        x, y = rng.normal(size=4), rng.normal(size=3)
        _, grads = nn.gradients(net, x, y)
        fd = nn.finite_diff_grads(net, x, y, h=1e-5)
        for g, f in zip(grads, fd):
            assert rel_err(g, f).max() < 1e-4


class TestTraining:
    def test_first_adam_step_is_lr_times_sign(self):
        net = scalar_net()
        adam = nn.adam_new(net, lr=0.001)
        loss = nn.net_train_step(net, adam, [1.0], [1.0])
        assert loss == 1.0
        assert net.layers[0].weights[0, 0] == pytest.approx(0.001, rel=1e-6)
        assert adam.step_count == 1

    def test_zero_gradient_leaves_parameters(self):
        net = nn.net_new([4, 6, 3], [nn.RELU, nn.IDENTITY], np.random.default_rng(7))
        adam = nn.adam_new(net)
        x = np.random.default_rng(8).normal(size=4)
        y = nn.net_forward(net, x)
        before = [p.copy() for p in net.parameters()]
        assert nn.net_train_step(net, adam, x, y) == 0.0
        for p, q in zip(before, net.parameters()):
            assert np.array_equal(p, q)

    def test_fifty_steps_reduce_loss(self):
        rng = np.random.default_rng(9)
        net = nn.net_new([5, 16, 4], [nn.RELU, nn.IDENTITY], rng)
        adam = nn.adam_new(net)
        x, y = rng.normal(size=5), rng.normal(size=4)
        first = nn.net_train_step(net, adam, x, y)
        for _ in range(49):
            nn.net_train_step(net, adam, x, y)
        assert nn.mse(nn.net_forward(net, x), y) < first

    @pytest.mark.parametrize("seed", range(10))
    def test_single_small_step_decreases_loss(self, seed):
        rng = np.random.default_rng(100 + seed)
        net = nn.net_new([5, 16, 4], [nn.RELU, nn.IDENTITY], rng)
        adam = nn.adam_new(net, lr=1e-4)
        x, y = rng.normal(size=5), rng.normal(size=4)
        before = nn.net_train_step(net, adam, x, y)
        assert nn.mse(nn.net_forward(net, x), y) < before

    def test_fused_update_matches_reference_adam(self):
        rng = np.random.default_rng(12)
        net = nn.net_new([60, 64, 20], [nn.RELU, nn.IDENTITY], rng)
        ref = net.copy()
        adam, ref_adam = nn.adam_new(net), nn.adam_new(ref)
        for _ in range(25):
            x = (rng.random(60) < 0.1).astype(float)
            y = (rng.random(20) < 0.5).astype(float)
            nn.net_train_step(net, adam, x, y)
            _, grads = nn.gradients(ref, x, y)
            nn.adam_apply(ref, ref_adam, grads)
        for p, q in zip(net.parameters(), ref.parameters()):
            np.testing.assert_allclose(p, q, rtol=1e-10, atol=1e-13)
        for m, mr in zip(adam.v, ref_adam.v):
            assert (m >= 0).all()
            np.testing.assert_allclose(m, mr, rtol=1e-10, atol=1e-18)

    def test_decayed_moments_flush_to_zero(self):
        net = scalar_net()
        adam = nn.adam_new(net)
        for m in adam.m:
            m[...] = 1e-200
        nn.net_train_step(net, adam, [1.0], [nn.net_forward(net, [1.0])[0]])
        # zero residual: m decays by 0.9 into the flush range, v stays 0
        for m, v in zip(adam.m, adam.v):
            assert (m == 0.0).all() and (v == 0.0).all()

    def test_non_finite_target_aborts(self):
        net = scalar_net()
        with pytest.raises(nn.NumericalError):
            nn.net_train_step(net, nn.adam_new(net), [1.0], [np.inf])

    def test_target_shape_checked(self):
        net = scalar_net()
        with pytest.raises(nn.ShapeError):
            nn.net_train_step(net, nn.adam_new(net), [1.0], [1.0, 2.0])
