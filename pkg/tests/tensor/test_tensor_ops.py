"""Tests for the convolution and interpolation primitives."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kse_toolkit.errors import InvalidGeometryError, ShapeError
from kse_toolkit.tensor import (
    ConvGeometry,
    FeatureStack,
    WeightTensor,
    bilinear_upscale,
    conv2d_dense,
    conv2d_single,
    conv_dense_f64,
    flatten_kernel,
    input_grad_f64,
    kernel_grad_f64,
    unflatten_kernel,
)


def naive_conv(x: np.ndarray, w: np.ndarray, stride: int, pad: int) -> np.ndarray:
    """Triple-loop reference cross-correlation."""
    c_in, height, width = x.shape
    n, _, kh, kw = w.shape
    padded = np.pad(x.astype(np.float64), ((0, 0), (pad, pad), (pad, pad)))
    out_h = (height + 2 * pad - kh) // stride + 1
    out_w = (width + 2 * pad - kw) // stride + 1
    out = np.zeros((n, out_h, out_w))
    for f in range(n):
        for i in range(out_h):
            for j in range(out_w):
                window = padded[:, i * stride : i * stride + kh, j * stride : j * stride + kw]
                out[f, i, j] = np.sum(window * w[f])
    return out


class TestConv2dSingle:
    def test_scalar_product(self) -> None:
        """A 1x1 correlation is a product."""
        np.testing.assert_array_equal(
            conv2d_single(np.array([[2.0]]), np.array([[3.0]]), ConvGeometry()), [[6.0]]
        )

    def test_zero_kernel(self, rng) -> None:
        """A zero kernel gives a zero map of the padded size."""
        out = conv2d_single(rng.normal(size=(5, 6)), np.zeros((3, 3)), ConvGeometry.square(1, 1))
        assert out.shape == (5, 6)
        assert not out.any()

    def test_padded_ones(self) -> None:
        """Zero padding lowers the sums along the border."""
        out = conv2d_single(np.ones((3, 3)), np.ones((3, 3)), ConvGeometry.square(1, 1))
        assert out[1, 1] == 9.0
        assert out[0, 0] == out[0, 2] == out[2, 0] == out[2, 2] == 4.0
        assert out[0, 1] == 6.0

    def test_accepts_single_channel_stack(self) -> None:
        """A one-channel stack is accepted as a map."""
        out = conv2d_single(FeatureStack(np.ones((1, 2, 2))), np.ones((2, 2)), ConvGeometry())
        np.testing.assert_array_equal(out, [[4.0]])

    def test_rejects_multi_channel_stack(self) -> None:
        """A stack with several channels is rejected."""
        with pytest.raises(ShapeError):
            conv2d_single(FeatureStack(np.ones((2, 2, 2))), np.ones((1, 1)), ConvGeometry())

    def test_invalid_geometry(self) -> None:
        """A kernel larger than the padded input is invalid."""
        with pytest.raises(InvalidGeometryError):
            conv2d_single(np.ones((2, 2)), np.ones((3, 3)), ConvGeometry())


class TestConv2dDense:
    def test_matches_naive_oracle(self, rng) -> None:
        """The dense convolution matches a triple-loop reference."""
        x = rng.normal(size=(2, 5, 5))
        w = rng.normal(size=(2, 2, 3, 3))
        out = conv2d_dense(FeatureStack(x), WeightTensor(w), ConvGeometry())
        expected = naive_conv(x.astype(np.float32), w.astype(np.float32), 1, 0)
        np.testing.assert_allclose(out.data, expected, rtol=1e-5, atol=1e-5)

    @pytest.mark.parametrize(("stride", "pad"), [(2, 1), (1, 2), (3, 0)])
    def test_stride_and_padding(self, rng, stride: int, pad: int) -> None:
        """Strides and padding match the reference, non-square kernels included."""
        x = rng.normal(size=(3, 8, 7))
        w = rng.normal(size=(4, 3, 3, 2))
        out = conv_dense_f64(x, w, ConvGeometry.square(stride, pad))
        np.testing.assert_allclose(out, naive_conv(x, w, stride, pad), rtol=1e-10, atol=1e-12)

    def test_single_channel_reduces_to_conv2d_single(self, rng) -> None:
        """One channel and one filter reduce to the single-map case."""
        x = rng.normal(size=(1, 4, 4))
        k = rng.normal(size=(1, 1, 2, 2))
        dense = conv2d_dense(FeatureStack(x), WeightTensor(k), ConvGeometry())
        single = conv2d_single(FeatureStack(x), k[0, 0], ConvGeometry())
        np.testing.assert_array_equal(dense.data[0], single)

    def test_identity_kernels(self, rng) -> None:
        """Identity 1x1 kernels copy the input."""
        x = rng.normal(size=(3, 4, 4)).astype(np.float32)
        w = np.eye(3).reshape(3, 3, 1, 1)
        out = conv2d_dense(FeatureStack(x), WeightTensor(w), ConvGeometry())
        np.testing.assert_array_equal(out.data, x)

    def test_channel_mismatch(self) -> None:
        """Input and weight channel counts must agree."""
        with pytest.raises(ShapeError, match="channels"):
            conv2d_dense(FeatureStack(np.ones((2, 3, 3))), WeightTensor(np.ones((1, 3, 1, 1))), ConvGeometry())

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_linear_in_input(self, seed: int) -> None:
        """Convolution is additive in the input."""
        rng = np.random.default_rng(seed)
        x1, x2 = rng.normal(size=(2, 2, 5, 5))
        w = rng.normal(size=(3, 2, 3, 3))
        g = ConvGeometry.square(1, 1)
        lhs = conv_dense_f64(x1 + x2, w, g)
        rhs = conv_dense_f64(x1, w, g) + conv_dense_f64(x2, w, g)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-5, atol=1e-9)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_linear_in_weights(self, seed: int) -> None:
        """Convolution is additive in the weights."""
        rng = np.random.default_rng(seed)
        x = rng.normal(size=(2, 5, 5))
        w1, w2 = rng.normal(size=(2, 3, 2, 3, 3))
        g = ConvGeometry()
        lhs = conv_dense_f64(x, w1 + w2, g)
        rhs = conv_dense_f64(x, w1, g) + conv_dense_f64(x, w2, g)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-5, atol=1e-9)


class TestGradientPrimitives:
    """Adjoint identities: <G, conv(x, K)> = <grad_K, K> = <grad_x, x>."""

    @pytest.mark.parametrize(("stride", "pad"), [(1, 0), (1, 1), (2, 1)])
    def test_adjoints(self, rng, stride: int, pad: int) -> None:
        """Kernel and input gradients are adjoint to the forward map."""
        g = ConvGeometry.square(stride, pad)
        x = rng.normal(size=(6, 7))
        kernels = rng.normal(size=(3, 3, 3))
        out = conv_dense_f64(x[None], kernels[:, None], g)
        grad_maps = rng.normal(size=out.shape)
        inner = float(np.sum(grad_maps * out))
        grad_k = kernel_grad_f64(x, grad_maps, 3, 3, g)
        grad_x = input_grad_f64(grad_maps, kernels, 6, 7, g)
        assert grad_k.shape == kernels.shape
        assert grad_x.shape == x.shape
        assert np.isclose(np.sum(grad_k * kernels), inner, rtol=1e-10)
        assert np.isclose(np.sum(grad_x * x), inner, rtol=1e-10)


class TestKernelFlattening:
    def test_one_by_one(self) -> None:
        """A 1x1 kernel flattens to one value."""
        w = WeightTensor(np.full((1, 1, 1, 1), 7.0))
        np.testing.assert_array_equal(flatten_kernel(w, 0, 0), [7.0])

    def test_row_major(self) -> None:
        """Kernels flatten row by row."""
        w = WeightTensor(np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2))
        np.testing.assert_array_equal(flatten_kernel(w, 0, 0), [1.0, 2.0, 3.0, 4.0])

    def test_inverse(self, rng) -> None:
        """Unflattening restores the kernel."""
        w = WeightTensor(rng.normal(size=(2, 3, 3, 2)))
        np.testing.assert_array_equal(unflatten_kernel(flatten_kernel(w, 1, 2), 3, 2), w.data[1, 2])

    def test_out_of_range(self) -> None:
        """Filter or channel indices out of range are rejected."""
        from kse_toolkit.errors import InputValidationError

        with pytest.raises(InputValidationError):
            flatten_kernel(WeightTensor(np.ones((1, 1, 1, 1))), 1, 0)

    def test_unflatten_size_mismatch(self) -> None:
        """A vector of the wrong length cannot be unflattened."""
        with pytest.raises(ShapeError):
            unflatten_kernel(np.ones(5), 2, 2)


class TestBilinearUpscale:
    def test_constant_map_stays_constant(self) -> None:
        """Upscaling a constant map keeps it constant."""
        out = bilinear_upscale(np.full((3, 2), 2.5), 7, 11)
        assert out.shape == (7, 11)
        np.testing.assert_array_equal(out, 2.5)

    def test_same_size_is_identity(self, rng) -> None:
        """Resizing to the same size returns the map."""
        m = rng.normal(size=(4, 5))
        np.testing.assert_allclose(bilinear_upscale(m, 4, 5), m, rtol=0, atol=1e-12)

    def test_align_corners_middle_column(self) -> None:
        """The middle column is the mean of its neighbours."""
        out = bilinear_upscale(np.array([[0.0, 1.0], [0.0, 1.0]]), 2, 3)
        np.testing.assert_allclose(out, [[0.0, 0.5, 1.0], [0.0, 0.5, 1.0]])

    def test_corners_are_preserved(self, rng) -> None:
        """Corner values land on the output corners."""
        m = rng.normal(size=(3, 4))
        out = bilinear_upscale(m, 9, 13)
        for (i, j), (oi, oj) in {(0, 0): (0, 0), (0, 3): (0, 12), (2, 0): (8, 0), (2, 3): (8, 12)}.items():
            assert np.isclose(out[oi, oj], m[i, j])

    def test_single_pixel(self) -> None:
        """A single pixel spreads everywhere."""
        np.testing.assert_array_equal(bilinear_upscale(np.array([[3.0]]), 2, 2), 3.0)

    def test_rejects_bad_target(self) -> None:
        """A zero target size is rejected."""
        from kse_toolkit.errors import InputValidationError

        with pytest.raises(InputValidationError):
            bilinear_upscale(np.ones((2, 2)), 0, 3)
