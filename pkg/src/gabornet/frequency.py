"""Closed-form frequency responses of the Gaussian-enveloped 1-D harmonics.

For a unit-normalized Gaussian envelope with scale sigma carrying a cosine or
sine harmonic at frequency omega0 with phase offset P, the continuous Fourier
transforms are

    g_cos(omega) = (A + B)/2 * cos(P) + j (A - B)/2 * sin(P)
    g_sin(omega) = (A + B)/2 * sin(P) - j (A - B)/2 * cos(P)

with A = exp(-sigma^2 (omega - omega0)^2 / 2) and
     B = exp(-sigma^2 (omega + omega0)^2 / 2).

The phase P trades DC (zero-frequency) response between the two harmonics:
at P = 0 the cosine component is fully low-pass and the sine fully
low-frequency resistant; at P = pi/2 the roles swap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FreqResponse:
    """Sampled response: values (complex or squared-magnitude real) on a
    strictly increasing frequency axis in radians/pixel."""

    omega_axis: np.ndarray
    values: np.ndarray


def frequency_axis(n: int = 257) -> np.ndarray:
    """Uniform frequency samples over [-pi, pi]; odd n places a sample at 0."""
    return np.linspace(-np.pi, np.pi, n)


def _a_b(omega, omega0: float, sigma: float):
    omega = np.asarray(omega, dtype=np.float64)
    a = np.exp(-(sigma**2) * (omega - omega0) ** 2 / 2.0)
    b = np.exp(-(sigma**2) * (omega + omega0) ** 2 / 2.0)
    return a, b


def response_cos(omega, omega0: float, sigma: float, phase: float):
    """Transform of the enveloped cosine harmonic; vectorized over omega."""
    _check_sigma(sigma)
    a, b = _a_b(omega, omega0, sigma)
    return 0.5 * (a + b) * np.cos(phase) + 0.5j * (a - b) * np.sin(phase)


def response_sin(omega, omega0: float, sigma: float, phase: float):
    """Transform of the enveloped sine harmonic; vectorized over omega."""
    _check_sigma(sigma)
    a, b = _a_b(omega, omega0, sigma)
    return 0.5 * (a + b) * np.sin(phase) - 0.5j * (a - b) * np.cos(phase)


def squared_magnitude(kind: str, omega, omega0: float, sigma: float, phase: float):
    """Squared frequency magnitude |g_kind(omega)|^2 in closed form.

    kind is "cos" or "sin"; the two differ only in the sign of the
    cos(2P) cross term, so their sum is independent of the phase.
    """
    _check_sigma(sigma)
    sign = _cross_sign(kind)
    omega = np.asarray(omega, dtype=np.float64)
    t1 = 0.25 * np.exp(-(sigma**2) * (omega - omega0) ** 2)
    t2 = 0.25 * np.exp(-(sigma**2) * (omega + omega0) ** 2)
    cross = 0.5 * np.cos(2.0 * phase) * np.exp(-(sigma**2) * (omega**2 + omega0**2))
    return t1 + t2 + sign * cross


def dc_response(kind: str, omega0: float, sigma: float, phase: float):
    """Squared magnitude at omega = 0: (1 -+ cos(2P))/2 * exp(-sigma^2 omega0^2).

    Zero DC response means the component passes no constant (low-frequency)
    signal; the cosine component loses it exactly at P = pi/2 and the sine
    component at P = 0.
    """
    _check_sigma(sigma)
    sign = _cross_sign(kind)
    return 0.5 * (1.0 + sign * np.cos(2.0 * phase)) * np.exp(-(sigma**2) * omega0**2)


def sample_squared_magnitudes(
    omega0: float, sigma: float, phase: float, n: int = 257
) -> tuple[FreqResponse, FreqResponse]:
    """Squared magnitudes of both harmonics sampled on the standard axis,
    as (cosine response, sine response)."""
    axis = frequency_axis(n)
    cos_sq = squared_magnitude("cos", axis, omega0, sigma, phase)
    sin_sq = squared_magnitude("sin", axis, omega0, sigma, phase)
    if not (np.all(np.isfinite(cos_sq)) and np.all(np.isfinite(sin_sq))):
        raise ValueError("non-finite response values; check the parameters")
    return FreqResponse(axis, cos_sq), FreqResponse(axis, sin_sq)


def numeric_transform_check(g1d: np.ndarray, omega_axis) -> np.ndarray:
    """Discrete-sum transform sum_x g(x) exp(-j omega x) of a 1-D component
    sampled on the centered integer grid.  Cross-validates the continuous
    closed forms up to discretization (truncation + aliasing) error."""
    g1d = np.asarray(g1d, dtype=np.float64)
    if g1d.ndim != 1 or g1d.size % 2 == 0:
        raise ValueError(f"expected an odd-length 1-D sample vector, got shape {g1d.shape}")
    xs = np.arange(g1d.size, dtype=np.float64) - (g1d.size - 1) / 2
    omega_axis = np.asarray(omega_axis, dtype=np.float64)
    return np.exp(-1j * np.outer(omega_axis, xs)) @ g1d


def _cross_sign(kind: str) -> float:
    if kind == "cos":
        return 1.0
    if kind == "sin":
        return -1.0
    raise ValueError(f"kind must be 'cos' or 'sin', got {kind!r}")


def _check_sigma(sigma: float) -> None:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
