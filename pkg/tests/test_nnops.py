"""
Unit tests for convolutions, activations and normalization.

Tests verify:
- Submanifold convolution equals dense convolution on full grids
- Outputs of submanifold convolution stay on the input sites
- Gradients pass central-difference checks
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from macp.autodiff import Param, Tensor, grad_check
from macp.autodiff.functional import mul, total
from macp.errors import ContractError, ShapeMismatchError
from macp.geom import DenseGrid, SparseTensor
from macp.nnops import (ConvKernel, channel_norm, dense_conv2d, gelu, pointwise_conv, residual_add,
                        scale_shift, sigmoid, subm_conv)

TOL = 1e-4


def readout(t, seed=11):
    w = Tensor(np.random.RandomState(seed).randn(*t.shape))
    return total(mul(t, w))


def full_grid(height, width, channels, seed=0):
    values = np.random.RandomState(seed).randn(height, width, channels)
    coords = np.array([(i, j) for i in range(height) for j in range(width)])
    st = SparseTensor(coords, Tensor(values.reshape(-1, channels), requires_grad=True))
    return st, DenseGrid(Tensor(values.copy(), requires_grad=True))


def sparse_sites(n=12, size=6, channels=3, seed=1):
    rng = np.random.RandomState(seed)
    flat = rng.choice(size * size, size=n, replace=False)
    coords = np.stack([flat // size, flat % size], axis=1)
    return SparseTensor(coords, Tensor(rng.randn(n, channels), requires_grad=True))


class TestSubmanifoldConv:
    """Test sparse convolution."""

    def test_matches_dense_on_full_grid(self):
        """Test sparse and dense convolution agree on a fully occupied grid."""
        st, grid = full_grid(5, 6, 3)
        kernel = ConvKernel.create("k", 3, 3, 4, np.random.RandomState(2))
        kernel.bias.value = np.random.RandomState(3).randn(4)
        sparse = subm_conv(st, kernel).feats.value
        dense = dense_conv2d(grid, kernel).numpy().reshape(-1, 4)
        np.testing.assert_allclose(sparse, dense, atol=1e-12)

    def test_sites_preserved(self):
        """Test outputs exist only at the input sites."""
        st = sparse_sites()
        out = subm_conv(st, ConvKernel.create("k", 3, 3, 5, np.random.RandomState(0)))
        np.testing.assert_array_equal(out.coords, st.coords)
        assert out.channels == 5

    def test_isolated_site_sees_center_only(self):
        """Test a lone site only uses the kernel center."""
        st = SparseTensor(np.array([[2, 2]]), Tensor(np.array([[1.0, 2.0]])))
        kernel = ConvKernel.create("k", 3, 2, 1, np.random.RandomState(0))
        out = subm_conv(st, kernel).feats.value
        expected = np.array([[1.0, 2.0]]) @ kernel.weight.value[1, 1]
        np.testing.assert_allclose(out, expected)

    def test_gradients(self):
        """Test sparse conv gradients against finite differences."""
        st = sparse_sites()
        kernel = ConvKernel.create("k", 3, 3, 2, np.random.RandomState(4))
        err = grad_check(lambda: readout(subm_conv(st, kernel).feats),
                         [st.feats, kernel.weight, kernel.bias])
        assert err < TOL

    def test_channel_mismatch(self):
        """Test a kernel with the wrong input channels raises."""
        with pytest.raises(ShapeMismatchError):
            subm_conv(sparse_sites(channels=3), ConvKernel.create("k", 3, 4, 2, np.random.RandomState(0)))

    def test_even_kernel_rejected(self):
        """Test an even kernel size is rejected."""
        with pytest.raises(ContractError):
            ConvKernel(Param("w", np.zeros((2, 2, 1, 1))), Param("b", np.zeros(1)))


class TestDenseConv:
    """Test dense convolution."""

    def test_gradients(self):
        """Test dense conv gradients against finite differences."""
        _, grid = full_grid(4, 5, 2, seed=5)
        kernel = ConvKernel.create("k", 3, 2, 3, np.random.RandomState(6))
        err = grad_check(lambda: readout(dense_conv2d(grid, kernel).values),
                         [grid.values, kernel.weight, kernel.bias])
        assert err < TOL

    def test_zero_padding(self):
        """Test a corner cell with an all-ones kernel sums its 2x2 neighbourhood."""
        grid = DenseGrid(Tensor(np.ones((3, 3, 1))))
        kernel = ConvKernel(Param("w", np.ones((3, 3, 1, 1))), Param("b", np.zeros(1)))
        out = dense_conv2d(grid, kernel).numpy()[..., 0]
        assert out[0, 0] == 4.0
        assert out[1, 1] == 9.0


class TestPointwiseConv:
    """Test 1x1 convolution."""

    def test_requires_k1(self):
        """Test pointwise conv refuses kernels larger than 1x1."""
        with pytest.raises(ContractError):
            pointwise_conv(sparse_sites(), ConvKernel.create("k", 3, 3, 2, np.random.RandomState(0)))

    def test_sparse_and_dense_gradients(self):
        """Test pointwise conv gradients on sparse and dense inputs."""
        st = sparse_sites()
        kernel = ConvKernel.create("p", 1, 3, 2, np.random.RandomState(7))
        assert grad_check(lambda: readout(pointwise_conv(st, kernel).feats),
                          [st.feats, kernel.weight, kernel.bias]) < TOL
        _, grid = full_grid(3, 4, 3)
        assert grad_check(lambda: readout(pointwise_conv(grid, kernel).values),
                          [grid.values, kernel.weight]) < TOL

    def test_matches_subm_conv_at_k1(self):
        """Test a 1x1 kernel gives bitwise the same features through both convolutions."""
        st = sparse_sites(n=20, size=8, channels=3, seed=4)
        kernel = ConvKernel.create("p", 1, 3, 5, np.random.RandomState(5))
        kernel.bias.value = np.random.RandomState(6).randn(5)
        np.testing.assert_array_equal(pointwise_conv(st, kernel).feats.value, subm_conv(st, kernel).feats.value)


class TestElementwise:
    """Test activations, scale-shift, residual add and channel norm."""

    def test_gelu_values(self):
        """Test GELU at zero and in both tails."""
        out = gelu(Tensor(np.array([0.0, 10.0, -10.0]))).value
        np.testing.assert_allclose(out, [0.0, 10.0, 0.0], atol=1e-5)

    def test_sigmoid_finite_at_extremes(self):
        """Test large logits stay finite and strictly inside (0, 1)."""
        out = sigmoid(Tensor(np.array([-800.0, -40.0, 0.0, 40.0, 800.0]))).value
        np.testing.assert_allclose(out, [0.0, 0.0, 0.5, 1.0, 1.0], atol=1e-15)
        assert np.all(out > 0.0) and np.all(out < 1.0)

    def test_activation_gradients(self):
        """Test GELU and sigmoid gradients."""
        x = Tensor(np.random.RandomState(8).randn(6, 3), requires_grad=True)
        assert grad_check(lambda: readout(gelu(x)), [x]) < TOL
        assert grad_check(lambda: readout(sigmoid(x)), [x]) < TOL

    def test_scale_shift_identity(self):
        """Test unit scale and zero shift leave features unchanged."""
        st = sparse_sites()
        out = scale_shift(st, Tensor(np.ones(3)), Tensor(np.zeros(3)))
        np.testing.assert_array_equal(out.feats.value, st.feats.value)

    def test_scale_shift_gradients(self):
        """Test scale-shift gradients."""
        st = sparse_sites()
        gamma = Param("g", np.random.RandomState(9).randn(3))
        beta = Param("b", np.random.RandomState(10).randn(3))
        assert grad_check(lambda: readout(scale_shift(st, gamma, beta).feats), [st.feats, gamma, beta]) < TOL

    def test_scale_shift_commutes_with_permutation(self):
        """Test permuting cells before or after scale-shift gives the same features."""
        _, grid = full_grid(4, 5, 3, seed=15)
        gamma = Tensor(np.random.RandomState(16).randn(3))
        beta = Tensor(np.random.RandomState(17).randn(3))
        perm = np.random.RandomState(18).permutation(20)
        flat = grid.values.value.reshape(20, 3)
        shuffled = DenseGrid(Tensor(flat[perm].reshape(4, 5, 3)))
        before = scale_shift(shuffled, gamma, beta).numpy().reshape(20, 3)
        after = scale_shift(grid, gamma, beta).numpy().reshape(20, 3)[perm]
        np.testing.assert_array_equal(before, after)

    def test_scale_shift_length_checked(self):
        """Test scale and shift lengths must match the channels."""
        with pytest.raises(ShapeMismatchError):
            scale_shift(sparse_sites(), Tensor(np.ones(2)), Tensor(np.zeros(2)))

    def test_residual_needs_same_sites(self):
        """Test residual add refuses tensors on different sites."""
        with pytest.raises(ShapeMismatchError):
            residual_add(sparse_sites(seed=1), sparse_sites(seed=2))

    def test_channel_norm_standardizes(self):
        """Test channel norm gives zero mean and unit variance per channel."""
        _, grid = full_grid(4, 4, 3)
        out = channel_norm(grid, Param("g", np.ones(3)), Param("b", np.zeros(3))).numpy().reshape(-1, 3)
        np.testing.assert_allclose(out.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.std(axis=0), 1.0, atol=1e-4)

    def test_channel_norm_gradients(self):
        """Test channel norm gradients."""
        _, grid = full_grid(3, 4, 2, seed=12)
        gamma = Param("g", np.random.RandomState(13).randn(2))
        beta = Param("b", np.random.RandomState(14).randn(2))
        assert grad_check(lambda: readout(channel_norm(grid, gamma, beta).values),
                          [grid.values, gamma, beta]) < TOL
