"""Tensor-primitive tests: frozen hand cases, the direct-loop convolution
oracle, and finite-difference gradient checks in the float64 shadow."""

import numpy as np
import pytest

from spectranet import ops
from spectranet.errors import ShapeError
from spectranet.ops import ConvKernel

from helpers import max_rel_err, naive_conv2d, numeric_grad_inplace


def kernel(weights, bias=None, stride=1, dtype=np.float64):
    weights = np.asarray(weights, dtype=dtype)
    if bias is None:
        bias = np.zeros(weights.shape[3], dtype=dtype)
    return ConvKernel(weights, np.asarray(bias, dtype=dtype), stride)


def random_kernel(rng, k, cin, cout, stride):
    return kernel(rng.normal(size=(k, k, cin, cout)), rng.normal(size=cout), stride)


class TestConvForward:
    def test_identity_1x1(self):
        x = np.random.default_rng(0).normal(size=(2, 5, 4, 1))
        k = kernel(np.ones((1, 1, 1, 1)))
        np.testing.assert_array_equal(ops.conv2d_forward(x, k), x)

    def test_ones_3x3_on_constant_image(self):
        # 4x4 image of ones, 3x3 all-ones kernel, stride 1, zero padding:
        # corners see 4 pixels, edges 6, interior 9.
        x = np.ones((1, 4, 4, 1))
        y = ops.conv2d_forward(x, kernel(np.ones((3, 3, 1, 1))))[0, :, :, 0]
        expected = np.array([
            [4.0, 6.0, 6.0, 4.0],
            [6.0, 9.0, 9.0, 6.0],
            [6.0, 9.0, 9.0, 6.0],
            [4.0, 6.0, 6.0, 4.0],
        ])
        np.testing.assert_array_equal(y, expected)

    def test_stride2_output_dims_176(self):
        x = np.zeros((1, 176, 176, 11), dtype=np.float32)
        k = kernel(np.zeros((3, 3, 11, 4), dtype=np.float32),
                   np.zeros(4, dtype=np.float32), stride=2)
        assert ops.conv2d_forward(x, k).shape == (1, 88, 88, 4)

    def test_stride1_preserves_dims(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(2, 7, 9, 3))
        y = ops.conv2d_forward(x, random_kernel(rng, 3, 3, 5, 1))
        assert y.shape == (2, 7, 9, 5)

    def test_stride2_ceil_dims(self):
        rng = np.random.default_rng(2)
        for h, w in [(5, 7), (6, 8), (9, 4)]:
            x = rng.normal(size=(1, h, w, 2))
            y = ops.conv2d_forward(x, random_kernel(rng, 3, 2, 3, 2))
            assert y.shape == (1, -(-h // 2), -(-w // 2), 3)

    @pytest.mark.parametrize("case", range(8))
    def test_matches_direct_loop_oracle(self, case):
        rng = np.random.default_rng(100 + case)
        k_size = int(rng.choice([1, 3]))
        stride = int(rng.choice([1, 2]))
        h, w = rng.integers(3, 9, size=2)
        cin, cout = rng.integers(1, 4, size=2)
        x = rng.normal(size=(2, h, w, cin))
        k = random_kernel(rng, k_size, cin, cout, stride)
        got = ops.conv2d_forward(x, k)
        want = naive_conv2d(x, k.weights, k.bias, stride)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_channel_mismatch_raises(self):
        x = np.zeros((1, 4, 4, 3))
        with pytest.raises(ShapeError):
            ops.conv2d_forward(x, kernel(np.zeros((3, 3, 2, 1))))

    def test_finite_on_finite_input(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 6, 6, 3)) * 1e3
        y = ops.conv2d_forward(x, random_kernel(rng, 3, 3, 4, 2))
        assert np.all(np.isfinite(y))


class TestConvBackward:
    def test_zero_upstream_gives_zero_grads(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(1, 5, 5, 2))
        k = random_kernel(rng, 3, 2, 3, 2)
        gy = np.zeros((1, 3, 3, 3))
        gx, gw, gb = ops.conv2d_backward(x, k, gy)
        assert not gx.any() and not gw.any() and not gb.any()

    def test_identity_kernel_passes_grad_through(self):
        x = np.zeros((1, 4, 4, 1))
        k = kernel(np.ones((1, 1, 1, 1)))
        gy = np.ones((1, 4, 4, 1))
        gx, _, _ = ops.conv2d_backward(x, k, gy)
        np.testing.assert_array_equal(gx, gy)

    def test_upstream_shape_mismatch_raises(self):
        x = np.zeros((1, 4, 4, 1))
        with pytest.raises(ShapeError):
            ops.conv2d_backward(x, kernel(np.ones((1, 1, 1, 1))), np.zeros((1, 3, 4, 1)))

    @pytest.mark.parametrize("seed", range(20))
    def test_gradients_match_finite_differences(self, seed):
        rng = np.random.default_rng(200 + seed)
        stride = int(rng.choice([1, 2]))
        x = rng.normal(size=(1, 5, 5, 2))
        k = random_kernel(rng, 3, 2, 2, stride)
        gy_shape = ops.conv2d_forward(x, k).shape
        gy = rng.normal(size=gy_shape)

        def f():
            return float(np.sum(ops.conv2d_forward(x, k) * gy))

        num = numeric_grad_inplace(f, [x, k.weights, k.bias], h=1e-3)
        gx, gw, gb = ops.conv2d_backward(x, k, gy)
        assert max_rel_err([gx, gw, gb], num) < 1e-4


class TestGap:
    def test_constant_channel(self):
        x = np.full((1, 3, 5, 2), 7.5)
        np.testing.assert_array_equal(ops.gap_forward(x), [[7.5, 7.5]])

    def test_hand_mean(self):
        x = np.array([1.0, 2.0, 3.0, 4.0]).reshape(1, 2, 2, 1)
        assert ops.gap_forward(x)[0, 0] == 2.5

    def test_zero_tensor(self):
        assert not ops.gap_forward(np.zeros((2, 4, 4, 3))).any()

    def test_permutation_invariant_over_spatial_positions(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(1, 4, 4, 3))
        flat = x.reshape(1, 16, 3)[:, rng.permutation(16), :].reshape(1, 4, 4, 3)
        np.testing.assert_allclose(ops.gap_forward(x), ops.gap_forward(flat), rtol=1e-12)

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(2, 3, 3, 2))
        gy = rng.normal(size=(2, 2))

        def f():
            return float(np.sum(ops.gap_forward(x) * gy))

        num = numeric_grad_inplace(f, [x], h=1e-3)
        assert max_rel_err([ops.gap_backward(x.shape, gy)], num) < 1e-4


class TestFc:
    def test_identity(self):
        x = np.random.default_rng(7).normal(size=(3, 4))
        y = ops.fc_forward(x, np.eye(4), np.zeros(4))
        np.testing.assert_allclose(y, x, rtol=1e-15)

    def test_hand_dot_product(self):
        y = ops.fc_forward(np.array([[1.0, 1.0]]), np.array([[1.0, 2.0]]), np.array([0.5]))
        assert y[0, 0] == 3.5

    @pytest.mark.parametrize("seed", range(20))
    def test_gradients_match_finite_differences(self, seed):
        rng = np.random.default_rng(300 + seed)
        x = rng.normal(size=(3, 4))
        w = rng.normal(size=(2, 4))
        b = rng.normal(size=2)
        gy = rng.normal(size=(3, 2))

        def f():
            return float(np.sum(ops.fc_forward(x, w, b) * gy))

        num = numeric_grad_inplace(f, [x, w, b], h=1e-3)
        assert max_rel_err(list(ops.fc_backward(x, w, gy)), num) < 1e-4


class TestActivations:
    def test_relu_values(self):
        np.testing.assert_array_equal(ops.relu(np.array([-1.0, 2.0])), [0.0, 2.0])

    def test_sigmoid_values(self):
        assert ops.sigmoid(np.array([0.0]))[0] == 0.5
        assert ops.sigmoid(np.array([np.log(3.0)]))[0] == pytest.approx(0.75, abs=1e-12)

    def test_sigmoid_strictly_inside_unit_interval(self):
        x = np.linspace(-30.0, 30.0, 101)
        s = ops.sigmoid(x)
        assert np.all(s > 0) and np.all(s < 1)

    def test_sigmoid_extremes_saturate_without_overflow(self):
        s = ops.sigmoid(np.array([-1e4, 1e4]))
        assert np.all(np.isfinite(s))
        np.testing.assert_array_equal(s, [0.0, 1.0])

    @pytest.mark.parametrize("seed", range(20))
    def test_backwards_match_finite_differences(self, seed):
        rng = np.random.default_rng(400 + seed)
        # Keep relu inputs away from the kink.
        x = rng.normal(size=12)
        x = np.where(np.abs(x) < 0.05, 0.3, x)
        gy = rng.normal(size=12)

        def f_relu():
            return float(np.sum(ops.relu(x) * gy))

        def f_sig():
            return float(np.sum(ops.sigmoid(x) * gy))

        assert max_rel_err([ops.relu_backward(x, gy)],
                           numeric_grad_inplace(f_relu, [x], h=1e-3)) < 1e-4
        assert max_rel_err([ops.sigmoid_backward(x, gy)],
                           numeric_grad_inplace(f_sig, [x], h=1e-3)) < 1e-4


class TestXavier:
    def test_limit_and_bounds(self):
        rng = np.random.default_rng(8)
        t = ops.xavier_uniform((1000,), 3, 3, rng)  # L = sqrt(6/6) = 1
        assert np.all(t >= -1.0) and np.all(t <= 1.0)
        assert t.max() > 0.9 and t.min() < -0.9  # actually fills the range

    def test_same_seed_identical(self):
        a = ops.xavier_uniform((4, 5), 4, 5, np.random.default_rng(42))
        b = ops.xavier_uniform((4, 5), 4, 5, np.random.default_rng(42))
        np.testing.assert_array_equal(a, b)

    def test_empirical_mean_near_zero(self):
        n = 10 ** 5
        fan_in = fan_out = 8
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        t = ops.xavier_uniform((n,), fan_in, fan_out, np.random.default_rng(9000))
        assert abs(t.mean(dtype=np.float64)) < 3.0 * limit / np.sqrt(12.0 * n)

    def test_float32(self):
        assert ops.xavier_uniform((2, 2), 2, 2, np.random.default_rng(0)).dtype == np.float32


class TestL2Penalty:
    def test_lambda_zero(self):
        p, g = ops.l2_penalty([np.array([1.0, -2.0])], 0.0)
        assert p == 0.0 and not g[0].any()

    def test_single_weight_closed_form(self):
        p, g = ops.l2_penalty([np.array([3.0])], 0.01)
        assert p == pytest.approx(0.09, abs=1e-12)
        assert g[0][0] == pytest.approx(0.06, abs=1e-12)

    def test_sign_flip_invariant(self):
        w = np.random.default_rng(10).normal(size=7)
        assert ops.l2_penalty([w], 0.3)[0] == ops.l2_penalty([-w], 0.3)[0]
