"""The verification paths themselves: finite differences, the direct
convolution reference and the whole-network gradient check."""

import dataclasses
import math

import numpy as np
import pytest

from gabornet import kernels as gk
from gabornet.kernels import GaborParams, coordinate_grid, evaluate_kernel, kernel_gradients
from gabornet.layers import conv2d_forward
from gabornet.network import CvBlockConfig, NetworkConfig, count_parameters
from gabornet.oracle import (
    direct_conv,
    finite_diff,
    grad_check_network,
    relative_error,
)


def tiny_config(mode="gabor"):
    return NetworkConfig(
        mode=mode,
        blocks=[CvBlockConfig(1, 1, 3)],
        n_classes=2,
        input_bands=2,
        patch_size=4,
        batch_size=4,
        seed=3,
    )


class TestFiniteDiff:
    def test_quadratic(self):
        assert finite_diff(lambda x: x * x, 3.0, 1e-6) == pytest.approx(6.0, abs=1e-8)

    def test_sine_at_zero(self):
        assert finite_diff(math.sin, 0.0, 1e-6) == pytest.approx(1.0, abs=1e-10)

    def test_kernel_element_omega_gradient(self):
        # d/domega of element (0, 1) against the analytic matrix
        grid = coordinate_grid(3)
        p = GaborParams(theta=0.8, omega=1.1, sigma=0.7, phase=0.5)

        def element(omega):
            return evaluate_kernel(dataclasses.replace(p, omega=omega), grid)[0, 1]

        numeric = finite_diff(element, p.omega)
        analytic = kernel_gradients(p, grid).d_omega[0, 1]
        assert relative_error(analytic, numeric) < 1e-5

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            finite_diff(lambda x: math.inf, 1.0)


class TestDirectConv:
    def test_delta_identity(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((1, 1, 4, 4))
        kernel = np.zeros((1, 1, 3, 3))
        kernel[0, 0, 1, 1] = 1.0
        np.testing.assert_allclose(direct_conv(x, kernel, padding="same"), x, atol=0)

    def test_hand_summed_fixture(self):
        # 2x2 input [[1,2],[3,4]] under an all-ones 3x3 kernel, same padding:
        # every window covers the whole image, so each output element is 10
        x = np.array([[[[1.0, 2.0], [3.0, 4.0]]]])
        kernel = np.ones((1, 1, 3, 3))
        out = direct_conv(x, kernel, padding="same")
        np.testing.assert_array_equal(out, np.full((1, 1, 2, 2), 10.0))

    def test_matches_production_conv(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            n, ci, co = rng.integers(1, 4, 3)
            h, w = rng.integers(4, 9, 2)
            k = int(rng.choice([3, 5]))
            padding = str(rng.choice(["same", "valid"]))
            if padding == "valid" and (h < k or w < k):
                continue
            x = rng.standard_normal((n, ci, h, w))
            kernels = rng.standard_normal((co, ci, k, k))
            bias = rng.standard_normal(co)
            assert np.abs(
                direct_conv(x, kernels, bias, padding) - conv2d_forward(x, kernels, bias, padding)
            ).max() < 1e-10

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            direct_conv(np.zeros((1, 2, 4, 4)), np.zeros((1, 3, 3, 3)))


class TestGradCheckNetwork:
    def test_tiny_gabor_passes(self):
        reports = grad_check_network(tiny_config(), tolerance=1e-4)
        assert reports and all(r.passed for r in reports)

    def test_tiny_regular_passes(self):
        reports = grad_check_network(tiny_config("regular"), tolerance=1e-4)
        assert reports and all(r.passed for r in reports)

    def test_coverage_equals_parameter_count(self):
        for mode in ("gabor", "regular", "gabor_no_p"):
            cfg = tiny_config(mode)
            assert len(grad_check_network(cfg, tolerance=1e-4)) == count_parameters(cfg)

    def test_corrupted_theta_gradient_fails(self, monkeypatch):
        original = gk.kernel_gradient_stack

        def corrupted(theta, omega, sigma, phase, grid):
            g = original(theta, omega, sigma, phase, grid)
            return gk.KernelGradients(g.d_phase, -g.d_theta, g.d_omega, g.d_sigma)

        monkeypatch.setattr(gk, "kernel_gradient_stack", corrupted)
        reports = grad_check_network(tiny_config(), tolerance=1e-4)
        theta_reports = [r for r in reports if ".theta" in r.name]
        other_reports = [r for r in reports if ".theta" not in r.name]
        assert theta_reports and all(not r.passed for r in theta_reports)
        assert all(r.passed for r in other_reports)

    def test_requires_f64(self):
        cfg = tiny_config()
        cfg.precision = "f32"
        with pytest.raises(ValueError, match="64-bit"):
            grad_check_network(cfg)


def test_relative_error_floor():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1e-15, 0.0) < 1e-2
    assert relative_error(2.0, 1.0) == 0.5
