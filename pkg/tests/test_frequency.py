"""Frequency-response closed forms and the discrete transform cross-check."""

import cmath
import math

import numpy as np
import pytest

from gabornet.frequency import (
    dc_response,
    frequency_axis,
    numeric_transform_check,
    response_cos,
    response_sin,
    squared_magnitude,
)
from gabornet.kernels import GaborParams, coordinate_grid, separable_decomposition


def oracle_response(omega, omega0, sigma, phase, kind):
    """Independent evaluation: the transform written as a sum of two shifted
    Gaussian lobes with complex phase factors (not the cos/sin split)."""
    a = math.exp(-(sigma**2) * (omega - omega0) ** 2 / 2)
    b = math.exp(-(sigma**2) * (omega + omega0) ** 2 / 2)
    if kind == "cos":
        return 0.5 * cmath.exp(1j * phase) * a + 0.5 * cmath.exp(-1j * phase) * b
    return (0.5 * cmath.exp(1j * phase) * a - 0.5 * cmath.exp(-1j * phase) * b) / 1j


class TestResponses:
    def test_cos_zero_phase_at_center_frequency(self):
        sigma, omega0 = 5 / 8, math.pi / 2
        got = response_cos(omega0, omega0, sigma, 0.0)
        expected = 0.5 * (1.0 + math.exp(-2 * sigma**2 * omega0**2))
        assert got == pytest.approx(expected, abs=1e-15)
        assert got.imag == 0.0

    def test_cos_at_dc_is_real(self):
        got = response_cos(0.0, 1.3, 0.9, 0.7)
        a = math.exp(-(0.9**2) * 1.3**2 / 2)
        assert got == pytest.approx(a * math.cos(0.7), abs=1e-15)

    def test_cos_matches_oracle(self):
        got = response_cos(math.pi / 4, math.pi / 2, 5 / 8, 1.0)
        assert got == pytest.approx(oracle_response(math.pi / 4, math.pi / 2, 5 / 8, 1.0, "cos"), abs=1e-15)

    def test_sin_zero_phase_is_purely_imaginary(self):
        for omega in (0.2, 0.9, 2.5):
            got = response_sin(omega, 1.1, 0.8, 0.0)
            assert got.real == 0.0

    def test_sin_at_dc(self):
        got = response_sin(0.0, 1.1, 0.8, 0.4)
        a = math.exp(-(0.8**2) * 1.1**2 / 2)
        assert got == pytest.approx(a * math.sin(0.4), abs=1e-15)
        assert got.imag == 0.0

    def test_sin_matches_oracle(self):
        got = response_sin(math.pi / 8, math.pi / 2, 5 / 8, 0.3)
        assert got == pytest.approx(oracle_response(math.pi / 8, math.pi / 2, 5 / 8, 0.3, "sin"), abs=1e-15)

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            response_cos(0.1, 0.5, 0.0, 0.0)


class TestSquaredMagnitude:
    def test_cos_at_center_frequency_zero_phase(self):
        # frozen from the closed form: 1/4 + exp(-4 s2 w2)/4 + exp(-2 s2 w2)/2
        sigma, omega0 = 5 / 8, math.pi / 2
        s2, w2 = sigma**2, omega0**2
        expected = 0.25 + 0.25 * math.exp(-4 * s2 * w2) + 0.5 * math.exp(-2 * s2 * w2)
        got = squared_magnitude("cos", omega0, omega0, sigma, 0.0)
        assert got == pytest.approx(expected, abs=1e-15)
        assert got == pytest.approx(0.32803606954405723, abs=1e-12)

    def test_cos_sin_sum_cancels_phase_term(self):
        rng = np.random.default_rng(3)
        for _ in range(30):
            omega, omega0 = rng.uniform(-3, 3, 2)
            sigma = rng.uniform(0.2, 2.0)
            phase = rng.uniform(0, 2 * math.pi)
            total = squared_magnitude("cos", omega, omega0, sigma, phase) + squared_magnitude(
                "sin", omega, omega0, sigma, phase
            )
            expected = 0.5 * math.exp(-(sigma**2) * (omega - omega0) ** 2) + 0.5 * math.exp(
                -(sigma**2) * (omega + omega0) ** 2
            )
            assert total == pytest.approx(expected, abs=1e-13)

    def test_sin_zero_phase_has_no_dc(self):
        assert squared_magnitude("sin", 0.0, 1.3, 0.7, 0.0) == pytest.approx(0.0, abs=1e-16)

    def test_equals_squared_response(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            omega, omega0 = rng.uniform(-math.pi, math.pi, 2)
            sigma = rng.uniform(0.2, 2.5)
            phase = rng.uniform(-math.pi, 2 * math.pi)
            for kind, resp in (("cos", response_cos), ("sin", response_sin)):
                sq = squared_magnitude(kind, omega, omega0, sigma, phase)
                assert abs(sq - abs(resp(omega, omega0, sigma, phase)) ** 2) < 1e-12

    def test_even_in_omega(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            omega = rng.uniform(0, math.pi)
            args = (rng.uniform(0, math.pi), rng.uniform(0.2, 2.0), rng.uniform(0, math.pi))
            for kind in ("cos", "sin"):
                assert squared_magnitude(kind, omega, *args) == pytest.approx(
                    squared_magnitude(kind, -omega, *args), abs=1e-15
                )

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            squared_magnitude("tan", 0.1, 0.5, 0.7, 0.0)


class TestDcResponse:
    def test_cos_blocked_at_quarter_turn(self):
        assert dc_response("cos", math.pi / 2, 5 / 8, math.pi / 2) == 0.0

    def test_sin_blocked_at_zero_phase(self):
        assert dc_response("sin", math.pi / 2, 5 / 8, 0.0) == 0.0

    def test_cos_at_eighth_turn(self):
        # cos(2P) = 0, so exactly half the envelope attenuation remains
        got = dc_response("cos", math.pi / 2, 5 / 8, math.pi / 4)
        expected = 0.5 * math.exp(-((5 / 8) ** 2) * (math.pi / 2) ** 2)
        assert got == pytest.approx(expected, abs=1e-15)
        assert got == pytest.approx(0.19071488109646917, abs=1e-12)

    def test_matches_squared_magnitude_at_zero(self):
        rng = np.random.default_rng(19)
        for _ in range(50):
            omega0 = rng.uniform(0, math.pi)
            sigma = rng.uniform(0.2, 2.0)
            phase = rng.uniform(-math.pi, 2 * math.pi)
            for kind in ("cos", "sin"):
                assert abs(
                    dc_response(kind, omega0, sigma, phase)
                    - squared_magnitude(kind, 0.0, omega0, sigma, phase)
                ) < 1e-12

    def test_sum_invariant(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            omega0 = rng.uniform(0, math.pi)
            sigma = rng.uniform(0.2, 2.0)
            phase = rng.uniform(0, 2 * math.pi)
            total = dc_response("cos", omega0, sigma, phase) + dc_response(
                "sin", omega0, sigma, phase
            )
            assert total == pytest.approx(math.exp(-(sigma**2) * omega0**2), abs=1e-12)

    def test_monotone_tradeoff(self):
        phases = np.linspace(0.0, math.pi / 2, 40)
        cos_vals = [dc_response("cos", 1.2, 0.8, p) for p in phases]
        sin_vals = [dc_response("sin", 1.2, 0.8, p) for p in phases]
        assert all(a > b for a, b in zip(cos_vals, cos_vals[1:]))
        assert all(a < b for a, b in zip(sin_vals, sin_vals[1:]))


class TestNumericTransform:
    def test_dc_sum_of_constant(self):
        got = numeric_transform_check(np.ones(3), [0.0])
        assert got[0] == pytest.approx(3.0 + 0.0j, abs=1e-15)

    def test_odd_component_has_no_dc(self):
        p = GaborParams(theta=0.0, omega=1.1, sigma=1.5, phase=0.0)
        _, _, g_sp_x, _ = separable_decomposition(p, coordinate_grid(11))
        got = numeric_transform_check(g_sp_x, [0.0])
        assert abs(got[0]) < 1e-15

    def test_against_closed_form_within_discretization_error(self):
        # tolerance 2e-2 frozen from a pre-build sweep of this configuration
        # (observed max deviation 0.013 for k=15, sigma=15/8)
        k, sigma, phase = 15, 15 / 8, 0.3
        omega0 = math.pi / 2
        p = GaborParams(theta=0.0, omega=omega0, sigma=sigma, phase=phase)
        g_cp_x, _, _, _ = separable_decomposition(p, coordinate_grid(k))
        axis = frequency_axis(257)
        discrete = np.abs(numeric_transform_check(g_cp_x, axis))
        closed = np.abs(response_cos(axis, omega0, sigma, phase))
        discrete /= discrete.max()
        closed /= closed.max()
        assert np.abs(discrete - closed).max() < 2e-2

    def test_rejects_even_length(self):
        with pytest.raises(ValueError):
            numeric_transform_check(np.ones(4), [0.0])


def test_frequency_axis_contains_zero():
    axis = frequency_axis(257)
    assert axis[0] == -math.pi and axis[-1] == math.pi
    assert axis[128] == 0.0
    assert np.all(np.diff(axis) > 0)
